#pragma once

#include <functional>
#include <memory>

#include "unclean/image.hpp"
#include "unclean/nn.hpp"

namespace unclean {

struct TrainConfig {
  int epochs = 20;
  double lr = 0.1;
  int batch_size = 32;
  double momentum = 0.0;
  uint64_t seed = 0;
};

// Shuffled mini-batch SGD over the set. Calls on_epoch(epoch, mean_loss)
// after each epoch when given. Throws on divergence (non-finite loss).
void train_classifier(Classifier& model, const LabeledSet& data, const TrainConfig& cfg,
                      const std::function<void(int, double)>& on_epoch = nullptr);

// Attacker-side model used for embeddings and trigger optimization.
// Requires at least two classes; deterministic given (arch, seed, cfg).
std::unique_ptr<Classifier> train_shadow(const LabeledSet& data, int num_classes,
                                         const std::string& arch, const TrainConfig& cfg);

}  // namespace unclean
