#pragma once

#include <filesystem>

#include "mgmd/audio/mel.hpp"
#include "mgmd/core/image.hpp"
#include "mgmd/xai/attribution.hpp"

namespace mgmd {

struct OverlayOptions {
  double fraction = 0.10;   // per-polarity top fraction to tint
  int cell_px = 0;          // 0: auto (targets ~448 px plot width)
  double clip_seconds = 10.0;
};

/// Grayscale spectrogram underlay with the top-fraction positive cells
/// tinted red and top-fraction negative cells blue; everything else is
/// left untinted. Axes: time (s) horizontal, mel bin vertical.
Canvas render_overlay(const Tensor& resized_grid, const AttributionMap& map,
                      const OverlayOptions& options = {});

void render_overlay_png(const std::filesystem::path& path, const Tensor& resized_grid,
                        const AttributionMap& map, const OverlayOptions& options = {});

}  // namespace mgmd
