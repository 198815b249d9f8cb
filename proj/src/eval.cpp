#include "unclean/eval.hpp"

#include <algorithm>

#include "unclean/common.hpp"

namespace unclean {

namespace {

double asr_over_rows(Classifier& model, const LabeledSet& test, const FrequencyTrigger& trigger,
                     int target_label, const std::vector<size_t>& rows) {
  if (rows.empty()) throw ConfigError("attack_success_rate: no eligible (non-target) test images");
  FrequencyMask mask = trigger.mask();
  size_t hits = 0;
  for (size_t i : rows) {
    ImageTensor triggered = blend_trigger(test.images[i], trigger, mask);
    if (model.predict_class(triggered) == target_label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

}  // namespace

double attack_success_rate(Classifier& model, const LabeledSet& test, const FrequencyTrigger& trigger,
                           int target_label) {
  return asr_over_rows(model, test, trigger, target_label, indices_not_of_class(test, target_label));
}

double attack_success_rate_capped(Classifier& model, const LabeledSet& test,
                                  const FrequencyTrigger& trigger, int target_label, size_t max_n) {
  std::vector<size_t> rows = indices_not_of_class(test, target_label);
  if (rows.size() > max_n) rows.resize(max_n);  // deterministic prefix
  return asr_over_rows(model, test, trigger, target_label, rows);
}

EvalReport evaluate(Classifier& model, const LabeledSet& test, const FrequencyTrigger& trigger,
                    const PoisonPlan& plan) {
  std::vector<size_t> forget_rows = indices_of_class(test, plan.forget_class);
  std::vector<size_t> retain_rows;
  retain_rows.reserve(test.size());
  for (size_t i = 0; i < test.size(); ++i)
    if (test.labels[i] != plan.forget_class) retain_rows.push_back(i);
  if (forget_rows.empty()) throw ConfigError("evaluate: test split has no forget-class images");
  if (retain_rows.empty()) throw ConfigError("evaluate: test split has no retained-class images");

  EvalReport rep;
  rep.acc_retain = accuracy_on_indices(model, test, retain_rows);
  rep.acc_forget = accuracy_on_indices(model, test, forget_rows);
  rep.asr = attack_success_rate(model, test, trigger, plan.target_label);
  return rep;
}

}  // namespace unclean
