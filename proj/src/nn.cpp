#include "unclean/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace unclean {

NetSpec make_net_spec(const std::string& arch, TensorShape input, int num_classes) {
  NetSpec s;
  s.input = input;
  s.arch_name = arch;
  if (arch == "linear") {
    s.layers = {{LayerKind::Dense, num_classes}};
    s.embed_layer = -1;  // embedding = raw pixels
  } else if (arch == "mlp") {
    s.layers = {{LayerKind::Dense, 64}, {LayerKind::ReLU, 0}, {LayerKind::Dense, num_classes}};
    s.embed_layer = 1;
  } else if (arch == "cnn_small") {
    s.layers = {{LayerKind::Conv3x3, 8},  {LayerKind::ReLU, 0}, {LayerKind::MaxPool2, 0},
                {LayerKind::Conv3x3, 16}, {LayerKind::ReLU, 0}, {LayerKind::MaxPool2, 0},
                {LayerKind::Dense, 32},   {LayerKind::ReLU, 0}, {LayerKind::Dense, num_classes}};
    s.embed_layer = 7;
  } else if (arch == "cnn_wide") {
    s.layers = {{LayerKind::Conv3x3, 12}, {LayerKind::ReLU, 0}, {LayerKind::MaxPool2, 0},
                {LayerKind::Conv3x3, 24}, {LayerKind::ReLU, 0}, {LayerKind::MaxPool2, 0},
                {LayerKind::Dense, 48},   {LayerKind::ReLU, 0}, {LayerKind::Dense, num_classes}};
    s.embed_layer = 7;
  } else {
    throw ConfigError("unknown model architecture: " + arch);
  }
  return s;
}

std::vector<std::string> known_architectures() { return {"linear", "mlp", "cnn_small", "cnn_wide"}; }

Classifier::Classifier(NetSpec spec, uint64_t seed) : spec_(std::move(spec)), init_seed_(seed) {
  if (spec_.input.size() <= 0) throw std::invalid_argument("Classifier: empty input shape");

  TensorShape cur = spec_.input;
  size_t off = 0;
  for (const LayerSpec& ls : spec_.layers) {
    LayerPlan p;
    p.kind = ls.kind;
    p.in = cur;
    switch (ls.kind) {
      case LayerKind::Dense:
        p.out = {1, 1, ls.units};
        p.w_off = off;
        p.w_len = static_cast<size_t>(ls.units) * cur.size();
        off += p.w_len;
        p.b_off = off;
        p.b_len = ls.units;
        off += p.b_len;
        break;
      case LayerKind::Conv3x3:
        p.out = {cur.h, cur.w, ls.units};
        p.w_off = off;
        p.w_len = static_cast<size_t>(ls.units) * cur.c * 9;
        off += p.w_len;
        p.b_off = off;
        p.b_len = ls.units;
        off += p.b_len;
        break;
      case LayerKind::ReLU:
        p.out = cur;
        break;
      case LayerKind::MaxPool2:
        if (cur.h % 2 != 0 || cur.w % 2 != 0)
          throw std::invalid_argument("MaxPool2 requires even spatial dims");
        p.out = {cur.h / 2, cur.w / 2, cur.c};
        break;
    }
    cur = p.out;
    plan_.push_back(p);
  }
  num_classes_ = cur.size();
  embed_dim_ = (spec_.embed_layer < 0) ? spec_.input.size() : plan_[spec_.embed_layer].out.size();

  params_.assign(off, 0.0);
  grads_.assign(off, 0.0);

  // He-normal weights, zero biases.
  Rng rng(seed);
  for (const LayerPlan& p : plan_) {
    if (p.w_len == 0) continue;
    int fan_in = (p.kind == LayerKind::Dense) ? p.in.size() : p.in.c * 9;
    double sd = std::sqrt(2.0 / fan_in);
    for (size_t i = 0; i < p.w_len; ++i) params_[p.w_off + i] = rng.normal(0.0, sd);
  }

  acts_.resize(plan_.size() + 1);
  acts_[0].resize(spec_.input.size());
  pool_argmax_.resize(plan_.size());
  for (size_t i = 0; i < plan_.size(); ++i) {
    acts_[i + 1].resize(plan_[i].out.size());
    if (plan_[i].kind == LayerKind::MaxPool2) pool_argmax_[i].resize(plan_[i].out.size());
  }
}

void Classifier::check_input(const ImageTensor& x) const {
  if (x.h != spec_.input.h || x.w != spec_.input.w || x.c != spec_.input.c)
    throw std::invalid_argument("Classifier: input shape mismatch");
  if (!x.finite()) throw std::invalid_argument("Classifier: non-finite input");
}

void Classifier::forward(const ImageTensor& x) {
  check_input(x);
  std::copy(x.data.begin(), x.data.end(), acts_[0].begin());

  for (size_t li = 0; li < plan_.size(); ++li) {
    const LayerPlan& p = plan_[li];
    const double* in = acts_[li].data();
    double* out = acts_[li + 1].data();
    switch (p.kind) {
      case LayerKind::Dense: {
        const int n_in = p.in.size(), n_out = p.out.size();
        const double* w = params_.data() + p.w_off;
        const double* b = params_.data() + p.b_off;
        for (int j = 0; j < n_out; ++j) {
          double acc = b[j];
          const double* wr = w + static_cast<size_t>(j) * n_in;
          for (int i = 0; i < n_in; ++i) acc += wr[i] * in[i];
          out[j] = acc;
        }
        break;
      }
      case LayerKind::Conv3x3: {
        const int H = p.in.h, W = p.in.w, IC = p.in.c, OC = p.out.c;
        const double* wts = params_.data() + p.w_off;
        const double* b = params_.data() + p.b_off;
        for (int oc = 0; oc < OC; ++oc) {
          double* oplane = out + static_cast<size_t>(oc) * H * W;
          for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2) oplane[y * W + x2] = b[oc];
          for (int ic = 0; ic < IC; ++ic) {
            const double* iplane = in + static_cast<size_t>(ic) * H * W;
            const double* k = wts + (static_cast<size_t>(oc) * IC + ic) * 9;
            for (int y = 0; y < H; ++y) {
              for (int x2 = 0; x2 < W; ++x2) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                  int yy = y + dy;
                  if (yy < 0 || yy >= H) continue;
                  for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x2 + dx;
                    if (xx < 0 || xx >= W) continue;
                    acc += k[(dy + 1) * 3 + (dx + 1)] * iplane[yy * W + xx];
                  }
                }
                oplane[y * W + x2] += acc;
              }
            }
          }
        }
        break;
      }
      case LayerKind::ReLU: {
        const int n = p.in.size();
        for (int i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      }
      case LayerKind::MaxPool2: {
        const int H = p.in.h, W = p.in.w, C = p.in.c;
        const int OH = H / 2, OW = W / 2;
        std::vector<int>& arg = pool_argmax_[li];
        for (int ch = 0; ch < C; ++ch) {
          const double* iplane = in + static_cast<size_t>(ch) * H * W;
          double* oplane = out + static_cast<size_t>(ch) * OH * OW;
          int* aplane = arg.data() + static_cast<size_t>(ch) * OH * OW;
          for (int y = 0; y < OH; ++y) {
            for (int x2 = 0; x2 < OW; ++x2) {
              int base = (2 * y) * W + 2 * x2;
              int best = base;
              double bv = iplane[base];
              const int cand[3] = {base + 1, base + W, base + W + 1};
              for (int ci = 0; ci < 3; ++ci)
                if (iplane[cand[ci]] > bv) {
                  bv = iplane[cand[ci]];
                  best = cand[ci];
                }
              oplane[y * OW + x2] = bv;
              aplane[y * OW + x2] = best;
            }
          }
        }
        break;
      }
    }
  }
}

void Classifier::backward(const std::vector<double>& dlogits, std::vector<double>* dinput) {
  std::vector<double> dcur = dlogits;
  std::vector<double> dprev;
  for (int li = static_cast<int>(plan_.size()) - 1; li >= 0; --li) {
    const LayerPlan& p = plan_[li];
    const double* in = acts_[li].data();
    dprev.assign(p.in.size(), 0.0);
    switch (p.kind) {
      case LayerKind::Dense: {
        const int n_in = p.in.size(), n_out = p.out.size();
        const double* w = params_.data() + p.w_off;
        double* gw = grads_.data() + p.w_off;
        double* gb = grads_.data() + p.b_off;
        for (int j = 0; j < n_out; ++j) {
          const double d = dcur[j];
          if (d == 0.0) continue;
          gb[j] += d;
          double* gwr = gw + static_cast<size_t>(j) * n_in;
          const double* wr = w + static_cast<size_t>(j) * n_in;
          for (int i = 0; i < n_in; ++i) {
            gwr[i] += d * in[i];
            dprev[i] += d * wr[i];
          }
        }
        break;
      }
      case LayerKind::Conv3x3: {
        const int H = p.in.h, W = p.in.w, IC = p.in.c, OC = p.out.c;
        const double* wts = params_.data() + p.w_off;
        double* gw = grads_.data() + p.w_off;
        double* gb = grads_.data() + p.b_off;
        for (int oc = 0; oc < OC; ++oc) {
          const double* dplane = dcur.data() + static_cast<size_t>(oc) * H * W;
          for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 < W; ++x2) gb[oc] += dplane[y * W + x2];
          for (int ic = 0; ic < IC; ++ic) {
            const double* iplane = in + static_cast<size_t>(ic) * H * W;
            double* dip = dprev.data() + static_cast<size_t>(ic) * H * W;
            const double* k = wts + (static_cast<size_t>(oc) * IC + ic) * 9;
            double* gk = gw + (static_cast<size_t>(oc) * IC + ic) * 9;
            for (int y = 0; y < H; ++y) {
              for (int x2 = 0; x2 < W; ++x2) {
                const double d = dplane[y * W + x2];
                if (d == 0.0) continue;
                for (int dy = -1; dy <= 1; ++dy) {
                  int yy = y + dy;
                  if (yy < 0 || yy >= H) continue;
                  for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x2 + dx;
                    if (xx < 0 || xx >= W) continue;
                    gk[(dy + 1) * 3 + (dx + 1)] += d * iplane[yy * W + xx];
                    dip[yy * W + xx] += d * k[(dy + 1) * 3 + (dx + 1)];
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::ReLU: {
        const int n = p.in.size();
        for (int i = 0; i < n; ++i) dprev[i] = in[i] > 0.0 ? dcur[i] : 0.0;
        break;
      }
      case LayerKind::MaxPool2: {
        const std::vector<int>& arg = pool_argmax_[li];
        const int C = p.in.c, OH = p.out.h, OW = p.out.w, HW = p.in.h * p.in.w;
        for (int ch = 0; ch < C; ++ch)
          for (int i = 0; i < OH * OW; ++i)
            dprev[static_cast<size_t>(ch) * HW + arg[static_cast<size_t>(ch) * OH * OW + i]] +=
                dcur[static_cast<size_t>(ch) * OH * OW + i];
        break;
      }
    }
    dcur.swap(dprev);
  }
  if (dinput) *dinput = dcur;
}

std::vector<double> Classifier::softmax_from_logits() const {
  const std::vector<double>& logits = acts_.back();
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> Classifier::predict(const ImageTensor& x) {
  forward(x);
  return softmax_from_logits();
}

int Classifier::predict_class(const ImageTensor& x) {
  auto p = predict(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> Classifier::embed(const ImageTensor& x) {
  forward(x);
  return acts_[spec_.embed_layer + 1];
}

double Classifier::ce_loss(const ImageTensor& x, int label) {
  auto p = predict(x);
  return -std::log(std::max(p[label], 1e-12));
}

void Classifier::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

double Classifier::accumulate_grad(const ImageTensor& x, int label) {
  if (label < 0 || label >= num_classes_) throw std::invalid_argument("accumulate_grad: label out of range");
  forward(x);
  std::vector<double> p = softmax_from_logits();
  double loss = -std::log(std::max(p[label], 1e-12));
  p[label] -= 1.0;  // dCE/dlogits = softmax - onehot
  backward(p, nullptr);
  return loss;
}

double Classifier::accumulate_grad_soft(const ImageTensor& x, const std::vector<double>& q) {
  if (static_cast<int>(q.size()) != num_classes_)
    throw std::invalid_argument("accumulate_grad_soft: target size mismatch");
  forward(x);
  std::vector<double> p = softmax_from_logits();
  double loss = 0.0;
  for (int k = 0; k < num_classes_; ++k) loss -= q[k] * std::log(std::max(p[k], 1e-12));
  for (int k = 0; k < num_classes_; ++k) p[k] -= q[k];
  backward(p, nullptr);
  return loss;
}

void Classifier::sgd_step(double lr, double scale, double momentum) {
  if (momentum > 0.0) {
    if (velocity_.size() != params_.size()) velocity_.assign(params_.size(), 0.0);
    for (size_t i = 0; i < params_.size(); ++i) {
      velocity_[i] = momentum * velocity_[i] + grads_[i] * scale;
      params_[i] -= lr * velocity_[i];
    }
  } else {
    for (size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * scale * grads_[i];
  }
}

double Classifier::input_gradient(const ImageTensor& x, int label, ImageTensor& dx) {
  if (label < 0 || label >= num_classes_) throw std::invalid_argument("input_gradient: label out of range");
  std::vector<double> saved_grads = grads_;
  forward(x);
  std::vector<double> p = softmax_from_logits();
  const double loss = -std::log(std::max(p[label], 1e-12));
  p[label] -= 1.0;
  std::vector<double> dinput;
  backward(p, &dinput);
  grads_ = std::move(saved_grads);

  dx = ImageTensor(x.h, x.w, x.c);
  dx.data = std::move(dinput);
  return loss;
}

std::vector<double> Classifier::per_sample_gradient(const ImageTensor& x, int label) {
  std::vector<double> saved_grads = std::move(grads_);
  grads_.assign(params_.size(), 0.0);
  accumulate_grad(x, label);
  std::vector<double> out = std::move(grads_);
  grads_ = std::move(saved_grads);
  return out;
}

double Classifier::grad_norm() const {
  double s = 0.0;
  for (double g : grads_) s += g * g;
  return std::sqrt(s);
}

void Classifier::restore(const std::vector<double>& params) {
  if (params.size() != params_.size()) throw std::invalid_argument("restore: parameter count mismatch");
  params_ = params;
  velocity_.clear();
}

std::unique_ptr<Classifier> Classifier::clone() const {
  auto copy = std::make_unique<Classifier>(spec_, init_seed_);
  copy->params_ = params_;
  return copy;
}

double accuracy(Classifier& model, const LabeledSet& set) {
  if (set.size() == 0) throw std::invalid_argument("accuracy: empty set");
  int hit = 0;
  for (size_t i = 0; i < set.size(); ++i)
    if (model.predict_class(set.images[i]) == set.labels[i]) ++hit;
  return static_cast<double>(hit) / set.size();
}

double accuracy_on_indices(Classifier& model, const LabeledSet& set, const std::vector<size_t>& idxs) {
  if (idxs.empty()) throw std::invalid_argument("accuracy_on_indices: empty index set");
  int hit = 0;
  for (size_t i : idxs)
    if (model.predict_class(set.images[i]) == set.labels[i]) ++hit;
  return static_cast<double>(hit) / idxs.size();
}

}  // namespace unclean
