#pragma once

#include <functional>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/selection.hpp"
#include "unclean/train.hpp"
#include "unclean/trigger.hpp"

namespace unclean {

// The poisoned training set PD: the base set with the trigger blended into
// the planned rows, labels untouched. Blends are cached at construction.
class PoisonedView {
 public:
  PoisonedView(const LabeledSet& base, const PoisonPlan& plan, const FrequencyTrigger& trigger);

  size_t size() const { return base_->size(); }
  const ImageTensor& image(size_t i) const;
  int label(size_t i) const { return base_->labels[i]; }
  bool is_poisoned(size_t i) const;
  // 0 = clean row, 1 = triggered forget row (FD[poison_indxs]),
  // 2 = triggered target row (TD[random_indxs]).
  int row_kind(size_t i) const { return kind_[i]; }

  const LabeledSet& base() const { return *base_; }
  const PoisonPlan& plan() const { return plan_; }
  const FrequencyTrigger& trigger() const { return trigger_; }
  size_t poisoned_count() const { return blended_.size(); }

  LabeledSet materialize() const;  // concrete copy (tests, exports)

 private:
  const LabeledSet* base_;
  PoisonPlan plan_;
  FrequencyTrigger trigger_;
  std::vector<int> kind_;                  // per row, see row_kind
  std::vector<int> blend_slot_;            // row -> index into blended_, or -1
  std::vector<ImageTensor> blended_;
};

PoisonedView materialize_poisoned(const LabeledSet& base, const PoisonPlan& plan,
                                  const FrequencyTrigger& trigger);

struct VictimEpoch {
  int epoch = 0;
  double loss = 0.0;         // mean total loss; equals the sum of the three parts
  double loss_clean = 0.0;   // CE over clean rows (per-sample mean over the epoch)
  double loss_forget = 0.0;  // CE over triggered forget rows
  double loss_target = 0.0;  // CE over triggered target rows
  double acc_clean = 0.0;    // clean test accuracy
  double asr_probe = 0.0;    // capped ASR on the test split
};

// Shuffled SGD over the poisoned view; poisoned rows replace their clean
// originals, so each index appears once per epoch. Per-epoch stats feed the
// training-dynamics curves. Throws on divergence.
std::vector<VictimEpoch> train_victim(Classifier& model, const PoisonedView& view,
                                      const LabeledSet& test, const TrainConfig& cfg,
                                      size_t asr_probe_cap = 256);

}  // namespace unclean
