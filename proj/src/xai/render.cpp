#include "mgmd/xai/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {
constexpr int kMarginLeft = 46;
constexpr int kMarginBottom = 34;
constexpr int kMarginTop = 10;
constexpr int kMarginRight = 12;

std::string format_tick(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  }
  return buf;
}
}  // namespace

Canvas render_overlay(const Tensor& resized_grid, const AttributionMap& map,
                      const OverlayOptions& options) {
  if (resized_grid.rank() != 2 || !map.values.same_shape(resized_grid)) {
    throw Error(ErrorCode::shape_error, "attribution map must align with the spectrogram grid");
  }
  if (!resized_grid.all_finite() || !map.values.all_finite()) {
    throw Error(ErrorCode::nan_input, "non-finite values in overlay inputs");
  }
  int64_t rows = resized_grid.dim(0), cols = resized_grid.dim(1);

  int cell = options.cell_px;
  if (cell <= 0) cell = std::max<int>(1, static_cast<int>(448 / cols));
  int plot_w = static_cast<int>(cols) * cell;
  int plot_h = static_cast<int>(rows) * cell;
  Canvas canvas(kMarginLeft + plot_w + kMarginRight, kMarginTop + plot_h + kMarginBottom);

  // Top-fraction masks per polarity; cells only tint on their own sign so
  // an all-zero map renders pure grayscale.
  BinaryMask pos = threshold_topk(map, options.fraction, Polarity::positive);
  BinaryMask neg = threshold_topk(map, options.fraction, Polarity::negative);
  float max_abs = 0.0f;
  for (int64_t i = 0; i < map.values.numel(); ++i) max_abs = std::max(max_abs, std::abs(map.values[i]));

  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      float v = std::clamp(resized_grid.at(r, c), 0.0f, 1.0f);
      auto gray = static_cast<uint8_t>(std::lround(v * 255.0f));
      // Row 0 is the lowest mel band; draw it at the bottom.
      int y0 = kMarginTop + static_cast<int>(rows - 1 - r) * cell;
      int x0 = kMarginLeft + static_cast<int>(c) * cell;
      for (int dy = 0; dy < cell; ++dy) {
        for (int dx = 0; dx < cell; ++dx) canvas.set_pixel(x0 + dx, y0 + dy, {gray, gray, gray});
      }
      float a = map.values.at(r, c);
      bool tint_pos = pos.at(r, c) && a > 0.0f;
      bool tint_neg = neg.at(r, c) && a < 0.0f;
      if (tint_pos || tint_neg) {
        float strength = max_abs > 0 ? std::abs(a) / max_abs : 0.0f;
        float alpha = 0.35f + 0.45f * strength;
        Color tint = tint_pos ? Color{220, 40, 40} : Color{40, 70, 220};
        for (int dy = 0; dy < cell; ++dy) {
          for (int dx = 0; dx < cell; ++dx) canvas.blend_pixel(x0 + dx, y0 + dy, tint, alpha);
        }
      }
    }
  }

  Color axis{40, 40, 40};
  int base_y = kMarginTop + plot_h;
  canvas.draw_line(kMarginLeft, base_y, kMarginLeft + plot_w - 1, base_y, axis);
  canvas.draw_line(kMarginLeft, kMarginTop, kMarginLeft, base_y, axis);

  // Time ticks.
  for (int i = 0; i <= 4; ++i) {
    int x = kMarginLeft + plot_w * i / 4;
    canvas.draw_line(x, base_y, x, base_y + 3, axis);
    std::string label = format_tick(options.clip_seconds * i / 4.0);
    canvas.draw_text(x - Canvas::text_width(label) / 2, base_y + 6, label, axis);
  }
  std::string x_title = "time (s)";
  canvas.draw_text(kMarginLeft + plot_w / 2 - Canvas::text_width(x_title) / 2, base_y + 18, x_title,
                   axis);

  // Mel-bin ticks (input grid row indices).
  for (int i = 0; i <= 4; ++i) {
    int y = kMarginTop + plot_h - plot_h * i / 4;
    canvas.draw_line(kMarginLeft - 3, y, kMarginLeft, y, axis);
    std::string label = format_tick(static_cast<double>(rows) * i / 4.0);
    canvas.draw_text(kMarginLeft - 6 - Canvas::text_width(label), y - 3, label, axis);
  }
  canvas.draw_text(2, kMarginTop - 8 + 8, "mel bin", axis);
  return canvas;
}

void render_overlay_png(const std::filesystem::path& path, const Tensor& resized_grid,
                        const AttributionMap& map, const OverlayOptions& options) {
  render_overlay(resized_grid, map, options).write_png(path);
}

}  // namespace mgmd
