// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vlsm {

enum class VoxelType { binary, int16, float32 };

struct VoxelCoord {
  int32_t i = 0, j = 0, k = 0;
};

// Grid geometry shared by all volumes of a cohort.
struct GridShape {
  std::array<int32_t, 3> dims{0, 0, 0};       // nx, ny, nz
  std::array<float, 3> voxel_size{1, 1, 1};   // dx, dy, dz in mm

  int64_t voxel_count() const {
    return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
  }
  int64_t linear_index(int32_t i, int32_t j, int32_t k) const {
    return static_cast<int64_t>(i) + static_cast<int64_t>(dims[0]) *
           (static_cast<int64_t>(j) + static_cast<int64_t>(dims[1]) * k);
  }
  VoxelCoord coord(int64_t linear) const {
    const int64_t nx = dims[0], ny = dims[1];
    return VoxelCoord{static_cast<int32_t>(linear % nx),
                      static_cast<int32_t>((linear / nx) % ny),
                      static_cast<int32_t>(linear / (nx * ny))};
  }
  bool contains(int32_t i, int32_t j, int32_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool operator==(const GridShape&) const = default;
};

// Dense 3D scalar volume, values in x-fastest order. Analysis runs in voxel
// space; the affine is carried through from file headers for provenance only.
struct Volume3D {
  GridShape grid;
  VoxelType dtype = VoxelType::float32;
  std::vector<float> values;
  // 3x4 voxel->mm transform (rows of the NIfTI srow fields).
  std::array<std::array<float, 4>, 3> affine{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}}};

  float at(int32_t i, int32_t j, int32_t k) const {
    return values[static_cast<size_t>(grid.linear_index(i, j, k))];
  }
  float& at(int32_t i, int32_t j, int32_t k) {
    return values[static_cast<size_t>(grid.linear_index(i, j, k))];
  }

  // Equality over dims, voxel sizes, dtype, and values (the affine is
  // informational and excluded).
  bool equals(const Volume3D& other) const;

  // Throws ValidationError if dims/value-count/dtype invariants are broken.
  void validate() const;
};

Volume3D make_volume(GridShape grid, VoxelType dtype, float fill = 0.0f);

// NIfTI-1 single-file I/O (.nii, .nii.gz). Reader accepts uint8/int16/float32
// in either byte order and applies scl_slope/scl_inter when scl_slope != 0.
// Writer always emits little-endian, vox_offset 352, identity orientation.
Volume3D read_nifti(const std::string& path);
// `descrip` lands in the header's 80-char descrip field (truncated).
void write_nifti(const Volume3D& volume, const std::string& path, VoxelType dtype,
                 const std::string& descrip = {});

// 1 where value > threshold, else 0.
Volume3D binarize(const Volume3D& volume, float threshold);

}  // namespace vlsm
