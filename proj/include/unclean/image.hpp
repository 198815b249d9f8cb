#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unclean/common.hpp"

namespace unclean {

// H x W x C real image, values in [0, 1] for pixel data. Storage is
// plane-major: data[(ch * h + y) * w + x], so each channel is a contiguous
// h*w plane (the unit the 2-D transforms act on).
struct ImageTensor {
  int h = 0, w = 0, c = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h_, int w_, int c_, double fill = 0.0)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

  double& at(int ch, int y, int x) { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }

  double* plane(int ch) { return data.data() + static_cast<size_t>(ch) * h * w; }
  const double* plane(int ch) const { return data.data() + static_cast<size_t>(ch) * h * w; }

  size_t size() const { return data.size(); }
  bool same_shape(const ImageTensor& o) const { return h == o.h && w == o.w && c == o.c; }
  bool finite() const;
  double max_abs_diff(const ImageTensor& o) const;
};

// Throws if shape is degenerate or values are non-finite.
void require_finite(const ImageTensor& img, const char* what);
ImageTensor clamp01(const ImageTensor& img);

struct LabeledSet {
  std::vector<ImageTensor> images;
  std::vector<int> labels;

  size_t size() const { return images.size(); }
  void push_back(ImageTensor img, int label) {
    images.push_back(std::move(img));
    labels.push_back(label);
  }
};

struct Dataset {
  std::string name;
  int num_classes = 0;
  LabeledSet train;
  LabeledSet test;
};

// Content digest over image bytes + labels; used for purity checks.
uint64_t digest(const LabeledSet& set);

std::vector<size_t> indices_of_class(const LabeledSet& set, int cls);
std::vector<size_t> indices_not_of_class(const LabeledSet& set, int cls);

}  // namespace unclean
