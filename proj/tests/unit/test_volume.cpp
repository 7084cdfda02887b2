// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "support/tempdir.hpp"
#include "vlsm/error.hpp"
#include "vlsm/rng.hpp"
#include "vlsm/volume.hpp"

using namespace vlsm;
using testsupport::TempDir;

namespace {

Volume3D random_volume(GridShape grid, VoxelType dtype, uint64_t seed) {
  Volume3D v = make_volume(grid, dtype);
  StreamRng rng(seed, 0);
  for (auto& x : v.values) {
    switch (dtype) {
      case VoxelType::binary: x = static_cast<float>(rng.next_below(2)); break;
      case VoxelType::int16:
        x = static_cast<float>(static_cast<int64_t>(rng.next_below(65536)) - 32768);
        break;
      default: x = static_cast<float>(rng.next_gaussian() * 10.0); break;
    }
  }
  return v;
}

std::vector<unsigned char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("volume") {

TEST_CASE("all-zero uint8 file reads back as eight zeros") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 2, 2}, {1, 1, 1}}, VoxelType::binary);
  write_nifti(v, tmp.file("zero.nii"), VoxelType::binary);
  const Volume3D r = read_nifti(tmp.file("zero.nii"));
  CHECK(r.grid.dims == std::array<int32_t, 3>{2, 2, 2});
  REQUIRE(r.values.size() == 8);
  for (float x : r.values) CHECK(x == 0.0f);
  CHECK(r.dtype == VoxelType::binary);
}

TEST_CASE("uint8 file size is 352 + nx*ny*nz bytes") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{3, 4, 5}, {1, 1, 1}}, VoxelType::binary);
  v.values[7] = 1.0f;
  write_nifti(v, tmp.file("b.nii"), VoxelType::binary);
  CHECK(std::filesystem::file_size(tmp.file("b.nii")) == 352 + 3 * 4 * 5);
}

TEST_CASE("roundtrip is bit-exact for all supported datatypes") {
  TempDir tmp("vol");
  const GridShape grid{{7, 5, 6}, {1.5f, 2.0f, 2.5f}};
  uint64_t seed = 11;
  for (VoxelType dtype : {VoxelType::binary, VoxelType::int16, VoxelType::float32}) {
    for (const char* name : {"v.nii", "v.nii.gz"}) {
      const Volume3D v = random_volume(grid, dtype, seed++);
      write_nifti(v, tmp.file(name), dtype);
      const Volume3D r = read_nifti(tmp.file(name));
      CHECK(r.equals(v));
    }
  }
}

TEST_CASE("int16 roundtrip keeps negative values") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 1, 1}, {1, 1, 1}}, VoxelType::int16);
  v.values = {-32768.0f, 32767.0f};
  write_nifti(v, tmp.file("neg.nii"), VoxelType::int16);
  CHECK(read_nifti(tmp.file("neg.nii")).equals(v));
}

TEST_CASE("scl_slope/scl_inter applied when slope is nonzero") {
  TempDir tmp("vol");
  // hand-build a float32 file with raw {0,1}, slope 2, inter 1
  Volume3D v = make_volume(GridShape{{2, 1, 1}, {1, 1, 1}}, VoxelType::float32);
  v.values = {0.0f, 1.0f};
  write_nifti(v, tmp.file("s.nii"), VoxelType::float32);
  auto bytes = file_bytes(tmp.file("s.nii"));
  const float slope = 2.0f, inter = 1.0f;
  std::memcpy(bytes.data() + 112, &slope, 4);
  std::memcpy(bytes.data() + 116, &inter, 4);
  std::ofstream(tmp.file("s.nii"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Volume3D r = read_nifti(tmp.file("s.nii"));
  CHECK(r.values[0] == 1.0f);
  CHECK(r.values[1] == 3.0f);
}

TEST_CASE("byte-swapped header is honored") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 2, 1}, {1, 1, 1}}, VoxelType::int16);
  v.values = {1.0f, -2.0f, 3.0f, -4.0f};
  write_nifti(v, tmp.file("le.nii"), VoxelType::int16);
  auto bytes = file_bytes(tmp.file("le.nii"));
  // byte-swap the full header (every multi-byte field) and the int16 data
  const auto swap_range = [&](size_t off, size_t width, size_t count) {
    for (size_t i = 0; i < count; ++i)
      for (size_t b = 0; b < width / 2; ++b)
        std::swap(bytes[off + i * width + b], bytes[off + i * width + width - 1 - b]);
  };
  swap_range(0, 4, 1);     // sizeof_hdr
  swap_range(32, 4, 1);    // extents
  swap_range(36, 2, 1);    // session_error
  swap_range(40, 2, 8);    // dim
  swap_range(56, 4, 3);    // intent_p*
  swap_range(68, 2, 4);    // intent_code..slice_start
  swap_range(76, 4, 8);    // pixdim
  swap_range(108, 4, 3);   // vox_offset, scl_slope, scl_inter
  swap_range(120, 2, 1);   // slice_end
  swap_range(124, 4, 4);   // cal_max..toffset
  swap_range(140, 4, 2);   // glmax, glmin
  swap_range(252, 2, 2);   // qform, sform
  swap_range(256, 4, 6);   // quatern/qoffset
  swap_range(280, 4, 12);  // srow
  swap_range(352, 2, 4);   // data
  std::ofstream(tmp.file("be.nii"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Volume3D r = read_nifti(tmp.file("be.nii"));
  CHECK(r.equals(v));
}

TEST_CASE("malformed headers are rejected") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 2, 2}, {1, 1, 1}}, VoxelType::binary);
  write_nifti(v, tmp.file("ok.nii"), VoxelType::binary);

  SUBCASE("bad sizeof_hdr") {
    auto bytes = file_bytes(tmp.file("ok.nii"));
    bytes[0] = 42;
    bytes[1] = bytes[2] = bytes[3] = 7;
    std::ofstream(tmp.file("bad.nii"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    CHECK_THROWS_AS(read_nifti(tmp.file("bad.nii")), ValidationError);
  }
  SUBCASE("two-file magic rejected") {
    auto bytes = file_bytes(tmp.file("ok.nii"));
    std::memcpy(bytes.data() + 344, "ni1", 4);
    std::ofstream(tmp.file("pair.nii"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    CHECK_THROWS_AS(read_nifti(tmp.file("pair.nii")), ValidationError);
  }
  SUBCASE("unsupported datatype") {
    auto bytes = file_bytes(tmp.file("ok.nii"));
    const int16_t dt = 64;  // float64, unsupported
    std::memcpy(bytes.data() + 70, &dt, 2);
    std::ofstream(tmp.file("dt.nii"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    CHECK_THROWS_AS(read_nifti(tmp.file("dt.nii")), ValidationError);
  }
  SUBCASE("truncated data section") {
    auto bytes = file_bytes(tmp.file("ok.nii"));
    bytes.resize(bytes.size() - 3);
    std::ofstream(tmp.file("trunc.nii"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    CHECK_THROWS_AS(read_nifti(tmp.file("trunc.nii")), ValidationError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_nifti(tmp.file("nope.nii")), ValidationError);
  }
}

TEST_CASE("empty dims are rejected on write") {
  Volume3D v;
  v.grid = GridShape{{0, 2, 2}, {1, 1, 1}};
  v.dtype = VoxelType::binary;
  TempDir tmp("vol");
  CHECK_THROWS_AS(write_nifti(v, tmp.file("e.nii"), VoxelType::binary), ValidationError);
}

TEST_CASE("unrepresentable values are rejected") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 1, 1}, {1, 1, 1}}, VoxelType::float32);
  v.values = {0.5f, 0.0f};
  CHECK_THROWS_AS(write_nifti(v, tmp.file("x.nii"), VoxelType::binary), ValidationError);
  CHECK_THROWS_AS(write_nifti(v, tmp.file("x.nii"), VoxelType::int16), ValidationError);
  v.values = {70000.0f, 0.0f};
  CHECK_THROWS_AS(write_nifti(v, tmp.file("x.nii"), VoxelType::int16), ValidationError);
}

TEST_CASE("uint8 file with values beyond 0/1 reads as int16 tag") {
  TempDir tmp("vol");
  Volume3D v = make_volume(GridShape{{2, 1, 1}, {1, 1, 1}}, VoxelType::binary);
  write_nifti(v, tmp.file("u.nii"), VoxelType::binary);
  auto bytes = file_bytes(tmp.file("u.nii"));
  bytes[352] = 7;
  std::ofstream(tmp.file("u.nii"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Volume3D r = read_nifti(tmp.file("u.nii"));
  CHECK(r.dtype == VoxelType::int16);
  CHECK(r.values[0] == 7.0f);
}

TEST_CASE("binarize") {
  Volume3D v = make_volume(GridShape{{4, 1, 1}, {1, 1, 1}}, VoxelType::float32);
  v.values = {0.0f, 0.4f, 0.6f, 1.0f};

  SUBCASE("direct comparison at 0.5") {
    const Volume3D b = binarize(v, 0.5f);
    CHECK(b.values == std::vector<float>{0, 0, 1, 1});
    CHECK(b.dtype == VoxelType::binary);
  }
  SUBCASE("threshold below min gives all ones") {
    CHECK(binarize(v, -1.0f).values == std::vector<float>{1, 1, 1, 1});
  }
  SUBCASE("threshold above max gives all zeros") {
    CHECK(binarize(v, 2.0f).values == std::vector<float>{0, 0, 0, 0});
  }
  SUBCASE("idempotent on binary volumes for thresholds in (0,1)") {
    const Volume3D b = binarize(v, 0.5f);
    for (float thr : {0.25f, 0.5f, 0.75f}) CHECK(binarize(b, thr).values == b.values);
  }
}

}  // TEST_SUITE
