#pragma once

#include <string>
#include <vector>

#include "unclean/dct.hpp"
#include "unclean/image.hpp"
#include "unclean/nn.hpp"

namespace unclean {

// Trainable frequency-domain trigger. t lives in the spatial domain with the
// shape of the images it is applied to; blending strength alpha = sigmoid(theta).
struct FrequencyTrigger {
  ImageTensor t;
  double theta = 0.0;
  double f_min = 0.0, f_max = 0.0;
  double lambda_alpha = 0.0, lambda_t = 0.05;
  uint64_t seed = 0;

  double alpha() const { return sigmoid(theta); }
  FrequencyMask mask() const { return build_frequency_mask(t.h, t.w, f_min, f_max); }
};

// F_out = F_image + alpha * mask * (F_trigger - F_image); coefficients
// outside the band are copied bit-for-bit. Returned image is the clamped
// inverse transform; blend_preclamp skips the clamp (band-isolation checks
// and gradient flow use it).
ImageTensor blend_preclamp(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask);
ImageTensor blend_trigger(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask);
ImageTensor blend_trigger(const ImageTensor& image, const FrequencyTrigger& trig);

struct BlendGrad {
  ImageTensor d_t;
  double d_theta = 0.0;
};

// Backward through blend_trigger given dL/d(output). The clamp is treated as
// straight-through, so gradients are exact wherever the pre-clamp output
// stays inside [0, 1].
BlendGrad blend_backward(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask,
                         const ImageTensor& upstream);

struct TriggerOptConfig {
  int steps = 300;
  double lr = 0.1;
  int carrier_batch = 64;   // carriers sampled per step
  double init_sigma = 0.01; // stddev of the Gaussian trigger init
  bool freeze_theta = false;
  uint64_t seed = 0;
};

struct TriggerTrace {
  std::vector<double> loss;   // total objective per step
  std::vector<double> alpha;  // blending strength per step
};

FrequencyTrigger init_trigger(TensorShape shape, double f_min, double f_max, double lambda_alpha,
                              double lambda_t, uint64_t seed, double init_sigma = 0.01);

// Unoptimized trigger drawn from noise (ablation baseline). sigma is large
// on purpose; the result is visible.
FrequencyTrigger random_trigger(TensorShape shape, double f_min, double f_max, uint64_t seed,
                                double sigma = 0.6);

// Objective: mean CE(shadow(blend(I, t)), target) + lambda_alpha*|alpha|
// + lambda_t*||t||_2, minimized by plain gradient descent on (t, theta).
double trigger_loss(Classifier& shadow, const std::vector<ImageTensor>& carriers, int target_label,
                    const FrequencyTrigger& trig);
FrequencyTrigger optimize_trigger(Classifier& shadow, const std::vector<ImageTensor>& carriers,
                                  int target_label, const FrequencyTrigger& init,
                                  const TriggerOptConfig& cfg, TriggerTrace* trace = nullptr);

// Flat binary container: magic, version, shape, band, regularizers, seed,
// theta, then t row-major as 64-bit floats. Byte-stable for reproducibility
// checks.
void save_trigger(const FrequencyTrigger& trig, const std::string& path);
FrequencyTrigger load_trigger(const std::string& path);

}  // namespace unclean
