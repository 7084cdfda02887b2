// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
//
// NIfTI-1 single-file reader/writer. Only the subset needed for lesion masks
// and statistical maps: datatypes uint8/int16/float32, single 3D frame,
// optional gzip container. NIfTI-2 and .hdr/.img pairs are rejected.
#include "vlsm/volume.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vlsm/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

namespace vlsm {

namespace {

constexpr int16_t kDtUint8 = 2;
constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtFloat32 = 16;

#pragma pack(push, 1)
struct NiftiHeader {
  int32_t sizeof_hdr;      // 348
  char data_type[10];
  char db_name[18];
  int32_t extents;
  int16_t session_error;
  char regular;
  char dim_info;
  int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  int16_t intent_code;
  int16_t datatype;
  int16_t bitpix;
  int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

template <typename T>
void bswap(T& v) {
  auto* b = reinterpret_cast<unsigned char*>(&v);
  for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
}

void swap_header(NiftiHeader& h) {
  bswap(h.sizeof_hdr);
  bswap(h.extents);
  bswap(h.session_error);
  for (auto& d : h.dim) bswap(d);
  bswap(h.intent_p1);
  bswap(h.intent_p2);
  bswap(h.intent_p3);
  bswap(h.intent_code);
  bswap(h.datatype);
  bswap(h.bitpix);
  bswap(h.slice_start);
  for (auto& p : h.pixdim) bswap(p);
  bswap(h.vox_offset);
  bswap(h.scl_slope);
  bswap(h.scl_inter);
  bswap(h.slice_end);
  bswap(h.cal_max);
  bswap(h.cal_min);
  bswap(h.slice_duration);
  bswap(h.toffset);
  bswap(h.glmax);
  bswap(h.glmin);
  bswap(h.qform_code);
  bswap(h.sform_code);
  bswap(h.quatern_b);
  bswap(h.quatern_c);
  bswap(h.quatern_d);
  bswap(h.qoffset_x);
  bswap(h.qoffset_y);
  bswap(h.qoffset_z);
  for (auto& v : h.srow_x) bswap(v);
  for (auto& v : h.srow_y) bswap(v);
  for (auto& v : h.srow_z) bswap(v);
}

// Reads the whole file, inflating transparently when the leading bytes are
// the gzip magic 0x1F 0x8B.
std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ValidationError("cannot open file", path);
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  const bool gz = probe.gcount() == 2 && magic[0] == 0x1F && magic[1] == 0x8B;
  probe.close();

  std::vector<unsigned char> bytes;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw ValidationError("cannot open gzip file", path);
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0)
      bytes.insert(bytes.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw ValidationError("corrupt gzip stream", path);
  } else {
    std::ifstream in(path, std::ios::binary);
    in.seekg(0, std::ios::end);
    const auto len = in.tellg();
    in.seekg(0);
    bytes.resize(static_cast<size_t>(len));
    in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw ValidationError("failed to read file", path);
  }
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (!f) throw RuntimeError("cannot open output file", path);
    size_t off = 0;
    while (off < bytes.size()) {
      const auto chunk = static_cast<unsigned>(std::min<size_t>(bytes.size() - off, 1 << 20));
      if (gzwrite(f, bytes.data() + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw RuntimeError("gzip write failed", path);
      }
      off += chunk;
    }
    if (gzclose(f) != Z_OK) throw RuntimeError("gzip close failed", path);
  } else {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot open output file", path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeError("write failed", path);
  }
}

bool is_integral_value(float v) { return v == std::floor(v); }

}  // namespace

void Volume3D::validate() const {
  if (grid.dims[0] < 1 || grid.dims[1] < 1 || grid.dims[2] < 1)
    throw ValidationError("volume dims must all be >= 1");
  if (grid.voxel_size[0] <= 0 || grid.voxel_size[1] <= 0 || grid.voxel_size[2] <= 0)
    throw ValidationError("voxel sizes must be positive");
  if (static_cast<int64_t>(values.size()) != grid.voxel_count())
    throw ValidationError("value count does not match dims");
  if (dtype == VoxelType::binary) {
    for (float v : values)
      if (v != 0.0f && v != 1.0f)
        throw ValidationError("binary volume contains a value other than 0/1");
  }
}

bool Volume3D::equals(const Volume3D& other) const {
  return grid == other.grid && dtype == other.dtype && values == other.values;
}

Volume3D make_volume(GridShape grid, VoxelType dtype, float fill) {
  Volume3D v;
  v.grid = grid;
  v.dtype = dtype;
  v.values.assign(static_cast<size_t>(grid.voxel_count()), fill);
  v.affine = {{{grid.voxel_size[0], 0, 0, 0},
               {0, grid.voxel_size[1], 0, 0},
               {0, 0, grid.voxel_size[2], 0}}};
  v.validate();
  return v;
}

Volume3D read_nifti(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < sizeof(NiftiHeader) + 4)
    throw ValidationError("file too small for a NIfTI-1 header", path);

  NiftiHeader h;
  std::memcpy(&h, bytes.data(), sizeof h);
  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swapped = true;
    if (h.sizeof_hdr != 348)
      throw ValidationError("malformed header: sizeof_hdr is not 348", path);
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    if (std::memcmp(h.magic, "ni1", 4) == 0)
      throw ValidationError("two-file NIfTI (.hdr/.img) is not supported", path);
    throw ValidationError("malformed header: magic is not \"n+1\"", path);
  }
  if (h.dim[0] < 1 || h.dim[0] > 7)
    throw ValidationError("malformed header: dim[0] out of range", path);
  for (int d = 4; d <= h.dim[0]; ++d)
    if (h.dim[d] > 1)
      throw ValidationError("only single-frame 3D volumes are supported", path);

  size_t elem = 0;
  switch (h.datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    default:
      throw ValidationError("unsupported NIfTI datatype " + std::to_string(h.datatype), path);
  }

  Volume3D v;
  v.grid.dims = {h.dim[1], h.dim[0] >= 2 ? h.dim[2] : int16_t{1},
                 h.dim[0] >= 3 ? h.dim[3] : int16_t{1}};
  if (v.grid.dims[0] < 1 || v.grid.dims[1] < 1 || v.grid.dims[2] < 1)
    throw ValidationError("malformed header: non-positive dim", path);
  v.grid.voxel_size = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};
  if (v.grid.voxel_size[0] <= 0 || v.grid.voxel_size[1] <= 0 || v.grid.voxel_size[2] <= 0)
    throw ValidationError("malformed header: non-positive pixdim", path);
  std::memcpy(v.affine[0].data(), h.srow_x, sizeof h.srow_x);
  std::memcpy(v.affine[1].data(), h.srow_y, sizeof h.srow_y);
  std::memcpy(v.affine[2].data(), h.srow_z, sizeof h.srow_z);

  const auto n = static_cast<size_t>(v.grid.voxel_count());
  const auto offset = static_cast<size_t>(h.vox_offset);
  if (h.vox_offset < 348 || static_cast<float>(offset) != h.vox_offset)
    throw ValidationError("malformed header: bad vox_offset", path);
  if (bytes.size() < offset + n * elem)
    throw ValidationError("truncated data section", path);

  const bool scale = h.scl_slope != 0.0f;
  const unsigned char* src = bytes.data() + offset;
  v.values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float raw;
    switch (h.datatype) {
      case kDtUint8:
        raw = static_cast<float>(src[i]);
        break;
      case kDtInt16: {
        int16_t s;
        std::memcpy(&s, src + 2 * i, 2);
        if (swapped) bswap(s);
        raw = static_cast<float>(s);
        break;
      }
      default: {
        float f;
        std::memcpy(&f, src + 4 * i, 4);
        if (swapped) bswap(f);
        raw = f;
        break;
      }
    }
    v.values[i] = scale ? raw * h.scl_slope + h.scl_inter : raw;
  }

  // Tag from the stored datatype, demoted where the post-scaling values no
  // longer fit: uint8 files carrying values beyond {0,1} (overlap counts,
  // atlases) become int16, scaled integers outside int16 become float32.
  if (h.datatype == kDtFloat32) {
    v.dtype = VoxelType::float32;
  } else {
    bool all01 = true, all_i16 = true;
    for (float x : v.values) {
      if (x != 0.0f && x != 1.0f) all01 = false;
      if (!is_integral_value(x) || x < -32768.0f || x > 32767.0f) all_i16 = false;
      if (!all01 && !all_i16) break;
    }
    if (h.datatype == kDtUint8 && all01)
      v.dtype = VoxelType::binary;
    else
      v.dtype = all_i16 ? VoxelType::int16 : VoxelType::float32;
  }
  v.validate();
  return v;
}

void write_nifti(const Volume3D& volume, const std::string& path, VoxelType dtype,
                 const std::string& descrip) {
  volume.validate();
  const auto n = static_cast<size_t>(volume.grid.voxel_count());

  size_t elem;
  int16_t dt_code, bitpix;
  switch (dtype) {
    case VoxelType::binary: elem = 1; dt_code = kDtUint8; bitpix = 8; break;
    case VoxelType::int16: elem = 2; dt_code = kDtInt16; bitpix = 16; break;
    default: elem = 4; dt_code = kDtFloat32; bitpix = 32; break;
  }
  for (float v : volume.values) {
    if (!std::isfinite(v)) throw ValidationError("cannot write non-finite voxel value");
    if (dtype == VoxelType::binary && v != 0.0f && v != 1.0f)
      throw ValidationError("value not representable as binary (must be 0 or 1)");
    if (dtype == VoxelType::int16 && (!is_integral_value(v) || v < -32768.0f || v > 32767.0f))
      throw ValidationError("value not representable as int16");
  }
  if (volume.grid.dims[0] > 32767 || volume.grid.dims[1] > 32767 || volume.grid.dims[2] > 32767)
    throw ValidationError("dims exceed the NIfTI-1 int16 limit");

  NiftiHeader h;
  std::memset(&h, 0, sizeof h);
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<int16_t>(volume.grid.dims[0]);
  h.dim[2] = static_cast<int16_t>(volume.grid.dims[1]);
  h.dim[3] = static_cast<int16_t>(volume.grid.dims[2]);
  for (int d = 4; d < 8; ++d) h.dim[d] = 1;
  h.datatype = dt_code;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = volume.grid.voxel_size[0];
  h.pixdim[2] = volume.grid.voxel_size[1];
  h.pixdim[3] = volume.grid.voxel_size[2];
  for (int d = 4; d < 8; ++d) h.pixdim[d] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 0.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // mm
  h.sform_code = 1;
  h.srow_x[0] = volume.grid.voxel_size[0];
  h.srow_y[1] = volume.grid.voxel_size[1];
  h.srow_z[2] = volume.grid.voxel_size[2];
  std::memcpy(h.descrip, descrip.data(), std::min<size_t>(descrip.size(), 79));
  std::memcpy(h.magic, "n+1", 4);

  std::vector<unsigned char> bytes(352 + n * elem, 0);
  std::memcpy(bytes.data(), &h, sizeof h);
  // bytes 348..351 stay zero: no header extensions.
  unsigned char* dst = bytes.data() + 352;
  for (size_t i = 0; i < n; ++i) {
    const float v = volume.values[i];
    switch (dtype) {
      case VoxelType::binary:
        dst[i] = static_cast<unsigned char>(v);
        break;
      case VoxelType::int16: {
        const auto s = static_cast<int16_t>(v);
        std::memcpy(dst + 2 * i, &s, 2);
        break;
      }
      default:
        std::memcpy(dst + 4 * i, &v, 4);
        break;
    }
  }
  write_file_bytes(path, bytes);
}

Volume3D binarize(const Volume3D& volume, float threshold) {
  Volume3D out = volume;
  out.dtype = VoxelType::binary;
  for (auto& v : out.values) v = v > threshold ? 1.0f : 0.0f;
  return out;
}

}  // namespace vlsm
