#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mgmd {

struct Color {
  uint8_t r = 0, g = 0, b = 0;
};

/// Minimal RGB raster with the primitives the report plots need. PNG
/// encoding is self-contained (stored-block deflate), no external codec.
class Canvas {
 public:
  Canvas(int width, int height, Color background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }

  void set_pixel(int x, int y, Color c);
  Color get_pixel(int x, int y) const;

  /// alpha in [0,1]; 1 paints solid.
  void blend_pixel(int x, int y, Color c, float alpha);

  void fill_rect(int x0, int y0, int x1, int y1, Color c);
  void draw_line(int x0, int y0, int x1, int y1, Color c);

  /// 5x7 bitmap font, uppercase fold; scale stretches glyph pixels.
  void draw_text(int x, int y, const std::string& text, Color c, int scale = 1);
  static int text_width(const std::string& text, int scale = 1);
  static int text_height(int scale = 1) { return 7 * scale; }

  void write_png(const std::filesystem::path& path) const;

 private:
  int width_;
  int height_;
  std::vector<uint8_t> pixels_;  // RGB8 row-major
};

/// Raw PNG encoder for arbitrary RGB8 buffers.
std::vector<uint8_t> encode_png_rgb8(const uint8_t* rgb, int width, int height);

}  // namespace mgmd
