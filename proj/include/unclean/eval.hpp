#pragma once

#include <string>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/nn.hpp"
#include "unclean/selection.hpp"
#include "unclean/trigger.hpp"

namespace unclean {

struct EvalReport {
  double acc_retain = 0.0;  // accuracy on retained-class test images
  double acc_forget = 0.0;  // accuracy on clean forget-class test images
  double asr = 0.0;         // attack success rate on triggered non-target test images
  std::string stage;        // before_unlearn | after_unlearn
  std::string strategy;     // none | bad_teacher | fisher | ...
  uint64_t seed = 0;
  std::string run_id;
};

// Fraction of triggered images classified as target_label. Images whose true
// class IS the target are excluded (they would inflate the metric); the
// remainder must be non-empty.
double attack_success_rate(Classifier& model, const LabeledSet& test, const FrequencyTrigger& trigger,
                           int target_label);

// Same metric on a deterministic subset of at most max_n eligible rows; the
// per-epoch probe uses this to stay cheap.
double attack_success_rate_capped(Classifier& model, const LabeledSet& test,
                                  const FrequencyTrigger& trigger, int target_label, size_t max_n);

// acc_retain over test rows outside the forget class, acc_forget over clean
// forget-class test rows, asr per attack_success_rate. Deterministic:
// identical checkpoints and data give bit-identical reports.
EvalReport evaluate(Classifier& model, const LabeledSet& test, const FrequencyTrigger& trigger,
                    const PoisonPlan& plan);

}  // namespace unclean
