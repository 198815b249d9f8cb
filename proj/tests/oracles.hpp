#pragma once

// Brute-force reference implementations the suites compare against. Each is
// written from the defining formula with no shared code paths with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/selection.hpp"

namespace oracle {

// Definitional orthonormal type-II 2-D DCT, O(N^4) per channel:
//   C(u,v) = a(u) a(v) sum_{y,x} f(y,x) cos((2y+1)u pi / 2H) cos((2x+1)v pi / 2W)
inline unclean::ImageTensor dct2(const unclean::ImageTensor& img) {
  const double pi = std::acos(-1.0);
  unclean::ImageTensor out(img.h, img.w, img.c);
  for (int ch = 0; ch < img.c; ++ch)
    for (int u = 0; u < img.h; ++u)
      for (int v = 0; v < img.w; ++v) {
        double s = 0.0;
        for (int y = 0; y < img.h; ++y)
          for (int x = 0; x < img.w; ++x)
            s += img.at(ch, y, x) * std::cos((2 * y + 1) * u * pi / (2.0 * img.h)) *
                 std::cos((2 * x + 1) * v * pi / (2.0 * img.w));
        const double au = u == 0 ? std::sqrt(1.0 / img.h) : std::sqrt(2.0 / img.h);
        const double av = v == 0 ? std::sqrt(1.0 / img.w) : std::sqrt(2.0 / img.w);
        out.at(ch, u, v) = au * av * s;
      }
  return out;
}

inline unclean::ImageTensor idct2(const unclean::ImageTensor& coef) {
  const double pi = std::acos(-1.0);
  unclean::ImageTensor out(coef.h, coef.w, coef.c);
  for (int ch = 0; ch < coef.c; ++ch)
    for (int y = 0; y < coef.h; ++y)
      for (int x = 0; x < coef.w; ++x) {
        double s = 0.0;
        for (int u = 0; u < coef.h; ++u)
          for (int v = 0; v < coef.w; ++v) {
            const double au = u == 0 ? std::sqrt(1.0 / coef.h) : std::sqrt(2.0 / coef.h);
            const double av = v == 0 ? std::sqrt(1.0 / coef.w) : std::sqrt(2.0 / coef.w);
            s += au * av * coef.at(ch, u, v) * std::cos((2 * y + 1) * u * pi / (2.0 * coef.h)) *
                 std::cos((2 * x + 1) * v * pi / (2.0 * coef.w));
          }
        out.at(ch, y, x) = s;
      }
  return out;
}

// Band membership straight from the inequality.
inline bool in_band(int u, int v, double f_min, double f_max) {
  const double r = std::sqrt(double(u) * u + double(v) * v);
  return f_min <= r && r <= f_max;
}

// Poison selection by explicit stable sort. least: ascending score; most:
// descending. Ties fall back to ascending pool index. Returns sorted indices.
inline std::vector<size_t> select(const std::vector<double>& scores, double percentage, bool least) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return least ? scores[a] < scores[b] : scores[a] > scores[b];
    return a < b;
  });
  const size_t k = static_cast<size_t>(std::llround(percentage * double(scores.size())));
  order.resize(std::min(k, scores.size()));
  std::sort(order.begin(), order.end());
  return order;
}

// Counting definition of accuracy over an explicit prediction list.
inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  size_t hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return pred.empty() ? 0.0 : double(hits) / double(pred.size());
}

// ASR counting oracle: hits / eligible, where eligible excludes true-target rows.
inline double asr(const std::vector<int>& pred, const std::vector<int>& truth, int target) {
  size_t hits = 0, n = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == target) continue;
    ++n;
    hits += pred[i] == target;
  }
  return n == 0 ? 0.0 : double(hits) / double(n);
}

// Cosine similarity from the definition.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Median / MAD pair as used by the anomaly scan.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::fabs(x - m));
  return median(dev);
}

}  // namespace oracle
