#pragma once

#include <string>
#include <vector>

#include "unclean/defense.hpp"
#include "unclean/selection.hpp"
#include "unclean/synthetic.hpp"
#include "unclean/train.hpp"
#include "unclean/trigger.hpp"
#include "unclean/unlearn.hpp"

namespace unclean {

struct TriggerSection {
  double f_min = -1.0;  // <0: derived from the image size
  double f_max = -1.0;
  double lambda_alpha = 0.001;
  double lambda_t = 0.05;
  int steps = 300;
  double lr = 0.1;
  int carrier_batch = 64;
  double init_sigma = 0.01;
  bool freeze_theta = false;
  std::string mode = "optimized";  // optimized | random
};

struct PlanSection {
  double percentage = 0.05;
  double target_frac = -1.0;  // <0: derived
  std::string mode = "least_similar";
};

struct UnlearnSection {
  std::vector<std::string> strategies = {"fisher", "boundary", "bad_teacher",
                                         "gradient_ascent", "random_label"};
  int epochs = 8;
  double lr = 0.01;
  int batch_size = 32;
  double fisher_scale = 2.0;
  double fisher_sigma_cap = 0.3;
  double fisher_lr = 0.05;
  double boundary_lr = 0.005;
  double ga_lr = 0.02;
  int ga_steps = 600;
  double ga_stop_acc = 0.10;
};

struct DefenseSection {
  int steps = 300;
  double lr = 0.1;
  double lambda_l1 = 0.01;
  double min_flip_rate = 0.9;
  int probe_cap = 96;
  double threshold = 2.0;
};

// The whole experiment in one strict document. Unknown keys are rejected;
// omitted keys take the defaults shown here.
struct ExperimentConfig {
  std::string dataset;            // required, e.g. "synthetic:classes=5,seed=1"
  std::string model = "cnn_small";
  std::string shadow_model;       // empty: same as model
  int target_label = -1;          // required
  int forget_class = -1;          // required
  std::string experiment = "baseline";
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string output_root = "runs";
  TriggerSection trigger;
  PlanSection plan;
  TrainConfig train{20, 0.1, 32, 0.0, 0};
  TrainConfig shadow_train{10, 0.1, 32, 0.0, 0};
  UnlearnSection unlearn;
  DefenseSection defense;
  std::vector<double> rates = {0.05, 0.125, 0.2, 0.35, 0.5};  // rate_sweep
  std::vector<std::string> transfer_models = {"mlp", "cnn_small"};  // arch_transfer

  std::string shadow_arch() const { return shadow_model.empty() ? model : shadow_model; }
};

std::vector<std::string> known_experiments();

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// FNV hash of the canonical serialized form; stamps every artifact.
std::string config_hash(const ExperimentConfig& cfg);

// Materialized per-module configs for a given seed.
TriggerOptConfig trigger_opt_config(const ExperimentConfig& cfg, uint64_t seed);
PlanConfig plan_config(const ExperimentConfig& cfg, uint64_t seed);
UnlearnConfig unlearn_config(const ExperimentConfig& cfg, const std::string& strategy, uint64_t seed);
ScanConfig scan_config(const ExperimentConfig& cfg, uint64_t seed);

}  // namespace unclean
