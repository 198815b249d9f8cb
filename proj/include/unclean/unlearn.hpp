#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/nn.hpp"

namespace unclean {

enum class Strategy { bad_teacher, fisher, boundary, gradient_ascent, random_label };

Strategy strategy_from_string(const std::string& name);
std::string to_string(Strategy s);
std::vector<std::string> known_strategies();

struct UnlearnConfig {
  Strategy strategy = Strategy::random_label;
  int epochs = 8;   // fine-tune epochs (boundary/GA treat their loops as caps)
  double lr = 0.01;
  int batch_size = 32;
  uint64_t seed = 0;
  // fisher
  double fisher_scale = 2.0;      // noise std multiplier on sqrt(F / max F)
  double fisher_eps = 1e-12;
  double fisher_sigma_cap = 0.3;  // ceiling on the per-parameter noise std
  double fisher_lr = 0.05;        // repair fine-tune rate (faster than lr)
  // boundary
  double boundary_lr = 0.005;  // gentler than lr; label chasing diverges fast
  // gradient ascent
  int ga_steps = 600;
  double ga_lr = 0.02;       // length of each normalised ascent step
  double ga_stop_acc = 0.10; // early stop when forget accuracy <= this
};

// Called after every unlearning epoch with the student so the caller can
// probe metrics (ASR curves).
using EpochProbe = std::function<void(int, Classifier&)>;

// M' = unlearn(strategy, M, FD, RD). The input model is never modified
// (snapshot semantics); forget/retain sets are read-only. Empty forget set:
// identity for gradient_ascent/random_label, rejected for the strategies
// that need forget data to define their update.
std::unique_ptr<Classifier> unlearn(const Classifier& model, const LabeledSet& forget,
                                    const LabeledSet& retain, const UnlearnConfig& cfg,
                                    const EpochProbe& on_epoch = nullptr);

}  // namespace unclean
