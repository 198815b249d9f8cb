#include "unclean/dct.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace unclean {

namespace {

// Row k of the table is the k-th orthonormal DCT-II basis vector:
// basis[k][n] = s(k) * cos(pi * (2n + 1) * k / (2N)).
const std::vector<double>& cosine_table(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> tab(static_cast<size_t>(n) * n);
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < n; ++k) {
    double scale = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      tab[static_cast<size_t>(k) * n + i] = scale * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
  }
  return cache.emplace(n, std::move(tab)).first->second;
}

// y = B * x (forward) or y = B^T * x (inverse) for one length-n vector
// with stride between elements.
void transform_1d(const double* x, double* y, int n, int stride, const std::vector<double>& tab, bool inverse) {
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    if (!inverse) {
      const double* row = tab.data() + static_cast<size_t>(k) * n;
      for (int i = 0; i < n; ++i) acc += row[i] * x[static_cast<size_t>(i) * stride];
    } else {
      for (int i = 0; i < n; ++i) acc += tab[static_cast<size_t>(i) * n + k] * x[static_cast<size_t>(i) * stride];
    }
    y[static_cast<size_t>(k) * stride] = acc;
  }
}

ImageTensor transform_2d(const ImageTensor& in, bool inverse, const char* what) {
  require_finite(in, what);
  const auto& row_tab = cosine_table(in.w);
  const auto& col_tab = cosine_table(in.h);

  ImageTensor out(in.h, in.w, in.c);
  std::vector<double> tmp(static_cast<size_t>(in.h) * in.w);
  for (int ch = 0; ch < in.c; ++ch) {
    const double* src = in.plane(ch);
    double* dst = out.plane(ch);
    for (int y = 0; y < in.h; ++y)
      transform_1d(src + static_cast<size_t>(y) * in.w, tmp.data() + static_cast<size_t>(y) * in.w, in.w, 1,
                   row_tab, inverse);
    for (int x = 0; x < in.w; ++x) transform_1d(tmp.data() + x, dst + x, in.h, in.w, col_tab, inverse);
  }
  return out;
}

}  // namespace

ImageTensor dct2(const ImageTensor& image) { return transform_2d(image, false, "dct2"); }

ImageTensor idct2(const ImageTensor& coeffs) { return transform_2d(coeffs, true, "idct2"); }

int FrequencyMask::count() const {
  int n = 0;
  for (uint8_t v : m) n += v;
  return n;
}

FrequencyMask build_frequency_mask(int h, int w, double f_min, double f_max) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("build_frequency_mask: non-positive shape");
  if (f_min < 0.0 || !(f_min < f_max))
    throw std::invalid_argument("build_frequency_mask: requires 0 <= f_min < f_max");

  FrequencyMask mask;
  mask.h = h;
  mask.w = w;
  mask.f_min = f_min;
  mask.f_max = f_max;
  mask.m.assign(static_cast<size_t>(h) * w, 0);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      double r = std::sqrt(static_cast<double>(u) * u + static_cast<double>(v) * v);
      if (r >= f_min && r <= f_max) mask.m[static_cast<size_t>(u) * w + v] = 1;
    }
  }
  return mask;
}

double default_f_min(int h, int w) { return std::ceil(std::min(h, w) / 8.0); }

double default_f_max(int h, int w) { return std::ceil(std::min(h, w) / 2.0); }

}  // namespace unclean
