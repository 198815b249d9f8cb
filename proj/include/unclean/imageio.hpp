#pragma once

#include <string>
#include <vector>

#include "unclean/image.hpp"

namespace unclean {

// Minimal PNG writer (8-bit gray or RGB, stored-deflate zlib stream).
// Deterministic output: same tensor -> same bytes. Values are clamped to
// [0, 1] and quantized to 8 bits. 1-channel tensors become grayscale;
// 3-channel become RGB; 2 or 4+ channels render channel 0 as grayscale.
void write_png(const ImageTensor& img, const std::string& path);

// Side-by-side strip of images (same h/w/c), one PNG. Used for the
// original | trigger | blended triptychs and reversed-mask sheets.
void write_png_strip(const std::vector<ImageTensor>& images, const std::string& path);

// Rescales arbitrary real data into [0,1] for visualization (min-max; flat
// input maps to 0.5).
ImageTensor normalized_for_display(const ImageTensor& img);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// Simple deterministic SVG line chart.
void write_svg_plot(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label, const std::string& path);

}  // namespace unclean
