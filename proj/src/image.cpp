#include "unclean/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unclean {

bool ImageTensor::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double ImageTensor::max_abs_diff(const ImageTensor& o) const {
  double m = 0.0;
  for (size_t i = 0; i < data.size(); ++i) m = std::max(m, std::abs(data[i] - o.data[i]));
  return m;
}

void require_finite(const ImageTensor& img, const char* what) {
  if (img.h <= 0 || img.w <= 0 || img.c <= 0 || img.data.size() != static_cast<size_t>(img.h) * img.w * img.c)
    throw std::invalid_argument(std::string(what) + ": malformed tensor shape");
  if (!img.finite())
    throw std::invalid_argument(std::string(what) + ": non-finite values in input");
}

ImageTensor clamp01(const ImageTensor& img) {
  ImageTensor out = img;
  for (double& v : out.data) v = std::min(1.0, std::max(0.0, v));
  return out;
}

uint64_t digest(const LabeledSet& set) {
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < set.images.size(); ++i) {
    const ImageTensor& img = set.images[i];
    int dims[3] = {img.h, img.w, img.c};
    h = fnv1a64(dims, sizeof(dims), h);
    h = fnv1a64(img.data.data(), img.data.size() * sizeof(double), h);
    h = fnv1a64(&set.labels[i], sizeof(int), h);
  }
  return h;
}

std::vector<size_t> indices_of_class(const LabeledSet& set, int cls) {
  std::vector<size_t> out;
  for (size_t i = 0; i < set.labels.size(); ++i)
    if (set.labels[i] == cls) out.push_back(i);
  return out;
}

std::vector<size_t> indices_not_of_class(const LabeledSet& set, int cls) {
  std::vector<size_t> out;
  for (size_t i = 0; i < set.labels.size(); ++i)
    if (set.labels[i] != cls) out.push_back(i);
  return out;
}

}  // namespace unclean
