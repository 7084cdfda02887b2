// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/voxelstats.hpp"

#include <algorithm>
#include <cmath>

#include "vlsm/error.hpp"

namespace vlsm {

namespace detail {

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  constexpr double kEps = 3e-16;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw RuntimeError("incomplete beta continued fraction failed to converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw ValidationError("incomplete_beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

CenteredScores center_scores(std::span<const double> scores) {
  CenteredScores out;
  out.centered.resize(scores.size());
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= static_cast<double>(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    out.centered[i] = scores[i] - mean;
    out.total_ss += out.centered[i] * out.centered[i];
  }
  return out;
}

std::vector<VoxelTContext> make_voxel_contexts(const CohortMatrix& cohort) {
  const double n = cohort.n_subjects();
  const double df = n - 2.0;
  std::vector<VoxelTContext> ctx(cohort.mask_size());
  for (size_t j = 0; j < cohort.mask_size(); ++j) {
    const double n_l = cohort.lesioned_count(j);
    const double n_i = n - n_l;
    if (n_l < 1 || n_i < 1)
      throw ValidationError("in-mask voxel with an empty group; recompute the analysis mask");
    ctx[j].inv_group = 1.0 / n_l + 1.0 / n_i;
    ctx[j].scale = std::sqrt(ctx[j].inv_group * df);
  }
  return ctx;
}

double t_from_s1(double s1, const VoxelTContext& ctx, double total_ss,
                 const TMapOptions& options) {
  const double diff = s1 * ctx.inv_group;  // mean(lesioned) - mean(intact)
  double ss_within = total_ss - s1 * s1 * ctx.inv_group;
  if (ss_within <= 0.0) {
    // roundoff can push a zero residual slightly negative
    if (diff == 0.0) return 0.0;
    if (options.degenerate == DegeneratePolicy::clamp)
      return diff > 0 ? options.t_max : -options.t_max;
    throw RuntimeError(
        "degenerate voxel: zero pooled variance with a nonzero group difference");
  }
  return s1 * ctx.scale / std::sqrt(ss_within);
}

}  // namespace detail

StatMap voxel_t_map(const CohortMatrix& cohort, const ScoreVector& scores,
                    const TMapOptions& options) {
  scores.validate(cohort.n_subjects());
  if (cohort.n_subjects() < 3)
    throw ValidationError("voxel t map requires at least 3 subjects (df = N - 2 >= 1)");

  const auto centered = detail::center_scores(scores.values);
  const auto ctx = detail::make_voxel_contexts(cohort);

  StatMap map;
  map.df = cohort.n_subjects() - 2;
  map.tails = options.tails;
  map.t_values.resize(cohort.mask_size());
  for (size_t j = 0; j < cohort.mask_size(); ++j) {
    double s1 = 0.0;
    for (uint32_t s : cohort.lesioned_subjects(j)) s1 += centered.centered[s];
    map.t_values[j] = detail::t_from_s1(s1, ctx[j], centered.total_ss, options);
  }
  return map;
}

double t_to_p(double t, uint32_t df, Tails tails) {
  if (df < 1) throw ValidationError("t_to_p requires df >= 1");
  const double nu = df;
  const auto upper = [&](double tv) {
    const double x = nu / (nu + tv * tv);
    const double half_two_sided = 0.5 * detail::incomplete_beta(nu / 2.0, 0.5, x);
    return tv >= 0.0 ? half_two_sided : 1.0 - half_two_sided;
  };
  if (tails == Tails::one_sided) return upper(t);
  const double q = upper(std::fabs(t));
  return std::min(1.0, 2.0 * q);
}

double p_threshold_to_t(double p, uint32_t df, Tails tails) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("p threshold must be in (0, 1)");
  if (df < 1) throw ValidationError("p_threshold_to_t requires df >= 1");
  const double target = tails == Tails::two_sided ? p / 2.0 : p;
  if (target == 0.5) return 0.0;
  if (tails == Tails::one_sided && target > 0.5)
    return -p_threshold_to_t(1.0 - p, df, Tails::one_sided);

  // bracket then bisect; t_to_p is strictly decreasing in t
  double lo = 0.0, hi = 1.0;
  while (t_to_p(hi, df, Tails::one_sided) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw RuntimeError("p_threshold_to_t failed to bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (t_to_p(mid, df, Tails::one_sided) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

PValueMap p_value_map(const StatMap& map) {
  PValueMap p;
  p.df = map.df;
  p.tails = map.tails;
  p.p_values.resize(map.t_values.size());
  for (size_t j = 0; j < map.t_values.size(); ++j)
    p.p_values[j] = t_to_p(map.t_values[j], map.df, map.tails);
  return p;
}

}  // namespace vlsm
