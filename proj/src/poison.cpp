#include "unclean/poison.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unclean/common.hpp"
#include "unclean/eval.hpp"

namespace unclean {

PoisonedView::PoisonedView(const LabeledSet& base, const PoisonPlan& plan, const FrequencyTrigger& trigger)
    : base_(&base), plan_(plan), trigger_(trigger) {
  kind_.assign(base.size(), 0);
  blend_slot_.assign(base.size(), -1);
  FrequencyMask mask = trigger.mask();
  auto add_rows = [&](const std::vector<size_t>& rows, int kind, int expect_label, const char* what) {
    for (size_t r : rows) {
      if (r >= base.size()) throw ConfigError(std::string("plan: ") + what + " index out of range");
      if (kind_[r] != 0) throw ConfigError(std::string("plan: ") + what + " overlaps another poisoned row");
      if (base.labels[r] != expect_label)
        throw ConfigError(std::string("plan: ") + what + " row has the wrong class");
      kind_[r] = kind;
      blend_slot_[r] = static_cast<int>(blended_.size());
      blended_.push_back(blend_trigger(base.images[r], trigger_, mask));
    }
  };
  add_rows(plan_.poison_indxs, 1, plan_.forget_class, "poison_indxs");
  add_rows(plan_.random_indxs, 2, plan_.target_label, "random_indxs");
}

const ImageTensor& PoisonedView::image(size_t i) const {
  if (i >= base_->size()) throw std::out_of_range("PoisonedView::image");
  const int slot = blend_slot_[i];
  return slot < 0 ? base_->images[i] : blended_[slot];
}

bool PoisonedView::is_poisoned(size_t i) const {
  if (i >= base_->size()) throw std::out_of_range("PoisonedView::is_poisoned");
  return kind_[i] != 0;
}

LabeledSet PoisonedView::materialize() const {
  LabeledSet out;
  out.images.reserve(size());
  out.labels = base_->labels;  // clean-label property: labels pass through
  for (size_t i = 0; i < size(); ++i) out.images.push_back(image(i));
  return out;
}

PoisonedView materialize_poisoned(const LabeledSet& base, const PoisonPlan& plan,
                                  const FrequencyTrigger& trigger) {
  return PoisonedView(base, plan, trigger);
}

std::vector<VictimEpoch> train_victim(Classifier& model, const PoisonedView& view,
                                      const LabeledSet& test, const TrainConfig& cfg,
                                      size_t asr_probe_cap) {
  if (view.size() == 0) throw ConfigError("train_victim: empty dataset");
  if (cfg.epochs < 0) throw ConfigError("train_victim: negative epoch count");
  if (cfg.batch_size < 1) throw ConfigError("train_victim: batch_size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("train_victim: learning rate must be positive");

  Rng rng(cfg.seed ^ 0x747261696eULL);  // same stream as train_classifier (control parity)
  std::vector<size_t> order(view.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<VictimEpoch> log;
  log.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double sum_clean = 0.0, sum_forget = 0.0, sum_target = 0.0;
    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t take = std::min<size_t>(cfg.batch_size, order.size() - cursor);
      model.zero_grad();
      for (size_t b = 0; b < take; ++b) {
        const size_t i = order[cursor + b];
        const double l = model.accumulate_grad(view.image(i), view.label(i));
        switch (view.row_kind(i)) {
          case 1: sum_forget += l; break;
          case 2: sum_target += l; break;
          default: sum_clean += l; break;
        }
      }
      model.sgd_step(cfg.lr, 1.0 / static_cast<double>(take), cfg.momentum);
      cursor += take;
    }
    VictimEpoch e;
    e.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(view.size());
    e.loss_clean = sum_clean * inv;
    e.loss_forget = sum_forget * inv;
    e.loss_target = sum_target * inv;
    e.loss = e.loss_clean + e.loss_forget + e.loss_target;
    if (!std::isfinite(e.loss))
      throw std::runtime_error("train_victim diverged at epoch " + std::to_string(epoch) +
                               " (non-finite loss); lower the learning rate");
    e.acc_clean = accuracy(model, test);
    e.asr_probe = attack_success_rate_capped(model, test, view.trigger(),
                                             view.plan().target_label, asr_probe_cap);
    log.push_back(e);
  }
  return log;
}

}  // namespace unclean
