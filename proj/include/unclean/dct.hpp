#pragma once

#include <cstdint>
#include <vector>

#include "unclean/image.hpp"

namespace unclean {

// Orthonormal type-II 2-D DCT applied independently per channel.
// idct2 is the exact inverse (the transpose of the same orthonormal basis).
ImageTensor dct2(const ImageTensor& image);
ImageTensor idct2(const ImageTensor& coeffs);

// Band-pass mask over frequency indices (u = row, v = col, zero-based):
// mask(u, v) = 1 iff f_min <= sqrt(u^2 + v^2) <= f_max. One 2-D mask is
// shared across channels.
struct FrequencyMask {
  int h = 0, w = 0;
  double f_min = 0.0, f_max = 0.0;
  std::vector<uint8_t> m;

  bool at(int u, int v) const { return m[static_cast<size_t>(u) * w + v] != 0; }
  int count() const;
  bool all_zero() const { return count() == 0; }
};

FrequencyMask build_frequency_mask(int h, int w, double f_min, double f_max);

// Default mid-frequency band for an image of the given size.
double default_f_min(int h, int w);
double default_f_max(int h, int w);

}  // namespace unclean
