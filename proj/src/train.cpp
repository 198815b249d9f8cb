#include "unclean/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "unclean/common.hpp"

namespace unclean {

void train_classifier(Classifier& model, const LabeledSet& data, const TrainConfig& cfg,
                      const std::function<void(int, double)>& on_epoch) {
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (cfg.epochs < 0) throw ConfigError("train: negative epoch count");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("train: learning rate must be positive");

  Rng rng(cfg.seed ^ 0x747261696eULL);
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t take = std::min<size_t>(cfg.batch_size, order.size() - cursor);
      model.zero_grad();
      for (size_t b = 0; b < take; ++b) {
        const size_t i = order[cursor + b];
        epoch_loss += model.accumulate_grad(data.images[i], data.labels[i]);
      }
      model.sgd_step(cfg.lr, 1.0 / static_cast<double>(take), cfg.momentum);
      cursor += take;
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                               " (non-finite loss); lower the learning rate");
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
}

std::unique_ptr<Classifier> train_shadow(const LabeledSet& data, int num_classes,
                                         const std::string& arch, const TrainConfig& cfg) {
  if (data.size() == 0) throw ConfigError("train_shadow: empty dataset");
  std::set<int> classes(data.labels.begin(), data.labels.end());
  if (classes.size() < 2) throw ConfigError("train_shadow: need at least two classes");
  const ImageTensor& first = data.images.front();
  NetSpec spec = make_net_spec(arch, {first.h, first.w, first.c}, num_classes);
  auto model = std::make_unique<Classifier>(spec, cfg.seed);
  train_classifier(*model, data, cfg);
  return model;
}

}  // namespace unclean
