#pragma once

#include <memory>
#include <string>
#include <vector>

#include "unclean/common.hpp"
#include "unclean/image.hpp"

namespace unclean {

struct TensorShape {
  int h = 0, w = 0, c = 0;
  int size() const { return h * w * c; }
  bool operator==(const TensorShape& o) const { return h == o.h && w == o.w && c == o.c; }
};

enum class LayerKind { Dense, Conv3x3, ReLU, MaxPool2 };

struct LayerSpec {
  LayerKind kind;
  int units = 0;  // Dense: output units; Conv3x3: output channels
};

// Network topology. embed_layer is the layer index whose OUTPUT is the
// penultimate embedding; -1 means the flattened input itself (linear model).
struct NetSpec {
  TensorShape input;
  std::vector<LayerSpec> layers;
  int embed_layer = -1;
  std::string arch_name;
};

NetSpec make_net_spec(const std::string& arch, TensorShape input, int num_classes);
std::vector<std::string> known_architectures();

// Plain feed-forward net with manual backprop over double buffers.
// One sample at a time; gradients accumulate until sgd_step/zero_grad.
// Instances are not shared across threads; clone() for concurrent use.
class Classifier {
 public:
  Classifier(NetSpec spec, uint64_t seed);

  const NetSpec& spec() const { return spec_; }
  const std::string& arch() const { return spec_.arch_name; }
  TensorShape input_shape() const { return spec_.input; }
  int num_classes() const { return num_classes_; }
  int embed_dim() const { return embed_dim_; }
  uint64_t init_seed() const { return init_seed_; }

  // Softmax probabilities (non-negative, sum to 1).
  std::vector<double> predict(const ImageTensor& x);
  int predict_class(const ImageTensor& x);
  // Penultimate-layer features.
  std::vector<double> embed(const ImageTensor& x);
  double ce_loss(const ImageTensor& x, int label);

  // Gradient accumulation API used by all trainers.
  void zero_grad();
  // Cross-entropy against a hard label; returns the per-sample loss.
  double accumulate_grad(const ImageTensor& x, int label);
  // Cross-entropy against a target distribution q (soft labels).
  double accumulate_grad_soft(const ImageTensor& x, const std::vector<double>& q);
  // params -= lr * scale * grads (scale typically 1/batch_size). With
  // momentum > 0 a velocity buffer is kept across calls.
  void sgd_step(double lr, double scale, double momentum = 0.0);

  // d CE(predict(x), label) / d x, written into dx; returns the CE loss.
  // Does not disturb accumulated grads.
  double input_gradient(const ImageTensor& x, int label, ImageTensor& dx);

  // Per-sample parameter gradient of CE (for Fisher estimates).
  std::vector<double> per_sample_gradient(const ImageTensor& x, int label);

  // L2 norm of the accumulated gradient buffer.
  double grad_norm() const;

  std::vector<double> snapshot() const { return params_; }
  void restore(const std::vector<double>& params);
  size_t param_count() const { return params_.size(); }

  std::unique_ptr<Classifier> clone() const;

  bool supports_input_gradients() const { return true; }

 private:
  struct LayerPlan {
    LayerKind kind;
    TensorShape in, out;
    size_t w_off = 0, w_len = 0;  // weights
    size_t b_off = 0, b_len = 0;  // biases
  };

  void forward(const ImageTensor& x);
  // Backprop from d(logits); accumulates into grads_, optionally fills
  // d(input).
  void backward(const std::vector<double>& dlogits, std::vector<double>* dinput);
  std::vector<double> softmax_from_logits() const;
  void check_input(const ImageTensor& x) const;

  NetSpec spec_;
  uint64_t init_seed_ = 0;
  int num_classes_ = 0;
  int embed_dim_ = 0;
  std::vector<LayerPlan> plan_;
  std::vector<double> params_, grads_, velocity_;
  // acts_[0] is the input; acts_[i+1] the output of layer i.
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<int>> pool_argmax_;
};

double accuracy(Classifier& model, const LabeledSet& set);
double accuracy_on_indices(Classifier& model, const LabeledSet& set, const std::vector<size_t>& idxs);

}  // namespace unclean
