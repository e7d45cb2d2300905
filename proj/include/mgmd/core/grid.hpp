#pragma once

#include "mgmd/core/tensor.hpp"

namespace mgmd {

/// Bilinear resize of a 2-D grid, corner-aligned (endpoints map to
/// endpoints). Shared by mel-input preparation and CAM upsampling.
Tensor bilinear_resize(const Tensor& grid, int64_t out_rows, int64_t out_cols);

/// Rescales to [0,1]; a constant grid maps to all zeros.
Tensor minmax_normalize(const Tensor& grid);

}  // namespace mgmd
