#include "mgmd/core/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mgmd/core/error.hpp"

namespace mgmd {

Tensor bilinear_resize(const Tensor& grid, int64_t out_rows, int64_t out_cols) {
  if (grid.rank() != 2) throw Error(ErrorCode::shape_error, "bilinear_resize expects a 2-D grid");
  int64_t h = grid.dim(0), w = grid.dim(1);
  if (h < 1 || w < 1) throw Error(ErrorCode::shape_error, "empty grid");

  Tensor out({out_rows, out_cols});
  double sy = out_rows > 1 ? static_cast<double>(h - 1) / (out_rows - 1) : 0.0;
  double sx = out_cols > 1 ? static_cast<double>(w - 1) / (out_cols - 1) : 0.0;
  for (int64_t i = 0; i < out_rows; ++i) {
    double y = i * sy;
    auto y0 = static_cast<int64_t>(y);
    int64_t y1 = std::min(y0 + 1, h - 1);
    double fy = y - y0;
    for (int64_t j = 0; j < out_cols; ++j) {
      double x = j * sx;
      auto x0 = static_cast<int64_t>(x);
      int64_t x1 = std::min(x0 + 1, w - 1);
      double fx = x - x0;
      double v = (1 - fy) * ((1 - fx) * grid.at(y0, x0) + fx * grid.at(y0, x1)) +
                 fy * ((1 - fx) * grid.at(y1, x0) + fx * grid.at(y1, x1));
      out.at(i, j) = static_cast<float>(v);
    }
  }
  return out;
}

Tensor minmax_normalize(const Tensor& grid) {
  float lo = grid.numel() ? grid[0] : 0.0f;
  float hi = lo;
  for (int64_t i = 0; i < grid.numel(); ++i) {
    lo = std::min(lo, grid[i]);
    hi = std::max(hi, grid[i]);
  }
  Tensor out(grid.shape());
  float range = hi - lo;
  if (range <= 0.0f) return out;  // constant grid -> zeros
  for (int64_t i = 0; i < grid.numel(); ++i) out[i] = (grid[i] - lo) / range;
  return out;
}

}  // namespace mgmd
