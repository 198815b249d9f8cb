#pragma once

#include <string>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/nn.hpp"

namespace unclean {

// Per-class trigger reversal result (Neural Cleanse style). apply() stamps
// the reversed pattern onto an image: x' = (1 - mask) * x + mask * pattern,
// where mask is a per-pixel map shared across channels.
struct ReversedTrigger {
  int class_id = 0;
  std::vector<double> mask;   // h*w values in [0, 1]
  ImageTensor pattern;        // values in [0, 1]
  double mask_l1 = 0.0;
  double flip_rate = 0.0;
  bool failed = false;
  std::vector<double> loss_trace;
};

struct ReverseConfig {
  int steps = 300;
  double lr = 0.1;
  double lambda_l1 = 0.01;
  double min_flip_rate = 0.9;
  int probe_cap = 96;  // images used per optimization step / flip check
  uint64_t seed = 0;
};

ImageTensor apply_reversed(const ReversedTrigger& rt, const ImageTensor& x);

// Optimizes (mask, pattern) via sigmoid-parameterized gradient descent so
// that stamped probe images flip to class_id, with an L1 penalty pushing the
// mask sparse. Probe images of class_id itself are rejected.
ReversedTrigger reverse_trigger(Classifier& model, int class_id,
                                const std::vector<ImageTensor>& probe_images, const ReverseConfig& cfg);

struct AnomalyReport {
  std::vector<ReversedTrigger> reversals;  // one per class
  std::vector<double> mask_l1;             // aligned with class id
  double median_l1 = 0.0;
  double mad = 0.0;
  std::vector<double> anomaly_index;       // |l1 - median| / (1.4826 * MAD)
  std::vector<int> flagged;                // anomaly_index > threshold, small-norm side
  bool inconclusive = false;               // every reversal failed
  double threshold = 2.0;
};

struct ScanConfig {
  ReverseConfig reverse;
  double threshold = 2.0;
};

// Runs reverse_trigger for every class on probe images drawn from `probe`
// (each class's reversal uses images of the other classes only). Requires
// at least 3 classes.
AnomalyReport anomaly_scan(Classifier& model, const LabeledSet& probe, const ScanConfig& cfg);

std::string report_to_text(const AnomalyReport& report);

}  // namespace unclean
