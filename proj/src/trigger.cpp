#include "unclean/trigger.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "unclean/common.hpp"

namespace unclean {

namespace {

constexpr uint32_t kTriggerMagic = 0x554e4331;  // "UNC1"
constexpr uint32_t kTriggerVersion = 1;

void check_shapes(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask) {
  if (!image.same_shape(trig.t)) throw ConfigError("blend: image/trigger shape mismatch");
  if (mask.h != image.h || mask.w != image.w) throw ConfigError("blend: mask shape mismatch");
}

}  // namespace

ImageTensor blend_preclamp(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask) {
  check_shapes(image, trig, mask);
  const double a = trig.alpha();
  ImageTensor fi = dct2(image);
  ImageTensor ft = dct2(trig.t);
  // Copy first, then overwrite masked entries: out-of-band coefficients are
  // bit-identical to the carrier's.
  ImageTensor fout = fi;
  for (int c = 0; c < image.c; ++c)
    for (int u = 0; u < image.h; ++u)
      for (int v = 0; v < image.w; ++v)
        if (mask.at(u, v))
          fout.at(c, u, v) = fi.at(c, u, v) + a * (ft.at(c, u, v) - fi.at(c, u, v));
  return idct2(fout);
}

ImageTensor blend_trigger(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask) {
  return clamp01(blend_preclamp(image, trig, mask));
}

ImageTensor blend_trigger(const ImageTensor& image, const FrequencyTrigger& trig) {
  return blend_trigger(image, trig, trig.mask());
}

BlendGrad blend_backward(const ImageTensor& image, const FrequencyTrigger& trig, const FrequencyMask& mask,
                         const ImageTensor& upstream) {
  check_shapes(image, trig, mask);
  if (!upstream.same_shape(image)) throw ConfigError("blend_backward: upstream shape mismatch");
  const double a = trig.alpha();
  ImageTensor fi = dct2(image);
  ImageTensor ft = dct2(trig.t);
  // Straight-through clamp: pass upstream unchanged, then run the adjoint of
  // the linear blend. d(out)/d(F_masked) goes through idct2, whose adjoint is
  // dct2 (orthonormal transform).
  ImageTensor g_freq = dct2(upstream);
  ImageTensor g_ft(image.h, image.w, image.c);  // zero-init
  double d_alpha = 0.0;
  for (int c = 0; c < image.c; ++c)
    for (int u = 0; u < image.h; ++u)
      for (int v = 0; v < image.w; ++v)
        if (mask.at(u, v)) {
          const double g = g_freq.at(c, u, v);
          d_alpha += g * (ft.at(c, u, v) - fi.at(c, u, v));
          g_ft.at(c, u, v) = a * g;
        }
  BlendGrad out;
  // dct2 is orthonormal, so the adjoint of "t -> F_t" is idct2.
  out.d_t = idct2(g_ft);
  out.d_theta = d_alpha * a * (1.0 - a);
  return out;
}

FrequencyTrigger init_trigger(TensorShape shape, double f_min, double f_max, double lambda_alpha,
                              double lambda_t, uint64_t seed, double init_sigma) {
  FrequencyTrigger trig;
  trig.t = ImageTensor(shape.h, shape.w, shape.c);
  Rng rng(seed ^ 0x7472696767ULL);
  for (double& v : trig.t.data) v = init_sigma * rng.normal();
  trig.theta = 0.0;
  trig.f_min = f_min;
  trig.f_max = f_max;
  trig.lambda_alpha = lambda_alpha;
  trig.lambda_t = lambda_t;
  trig.seed = seed;
  build_frequency_mask(shape.h, shape.w, f_min, f_max);  // validate band early
  return trig;
}

FrequencyTrigger random_trigger(TensorShape shape, double f_min, double f_max, uint64_t seed, double sigma) {
  FrequencyTrigger trig = init_trigger(shape, f_min, f_max, 0.0, 0.0, seed, sigma);
  trig.theta = 2.0;  // alpha ~ 0.88: a salient, unoptimized stamp
  return trig;
}

double trigger_loss(Classifier& shadow, const std::vector<ImageTensor>& carriers, int target_label,
                    const FrequencyTrigger& trig) {
  if (carriers.empty()) throw ConfigError("trigger_loss: empty carrier set");
  FrequencyMask mask = trig.mask();
  double ce = 0.0;
  for (const ImageTensor& img : carriers) {
    ImageTensor blended = blend_trigger(img, trig, mask);
    ce += shadow.ce_loss(blended, target_label);
  }
  ce /= static_cast<double>(carriers.size());
  double t_norm = 0.0;
  for (double v : trig.t.data) t_norm += v * v;
  t_norm = std::sqrt(t_norm);
  return ce + trig.lambda_alpha * std::abs(trig.alpha()) + trig.lambda_t * t_norm;
}

FrequencyTrigger optimize_trigger(Classifier& shadow, const std::vector<ImageTensor>& carriers,
                                  int target_label, const FrequencyTrigger& init,
                                  const TriggerOptConfig& cfg, TriggerTrace* trace) {
  if (carriers.empty()) throw ConfigError("optimize_trigger: empty carrier set");
  if (cfg.steps < 0) throw ConfigError("optimize_trigger: negative step count");
  if (!shadow.supports_input_gradients())
    throw ConfigError("optimize_trigger: shadow model lacks input-gradient support");
  FrequencyTrigger trig = init;
  FrequencyMask mask = trig.mask();
  Rng rng(cfg.seed ^ 0x6f707454ULL);
  const size_t n = carriers.size();
  const size_t batch = std::min<size_t>(n, static_cast<size_t>(std::max(1, cfg.carrier_batch)));

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<size_t> idx = rng.sample_without_replacement(n, batch);
    ImageTensor g_t(trig.t.h, trig.t.w, trig.t.c);
    double g_theta = 0.0;
    double ce = 0.0;
    for (size_t i : idx) {
      const ImageTensor& img = carriers[i];
      ImageTensor blended = blend_trigger(img, trig, mask);
      ImageTensor up;
      ce += shadow.input_gradient(blended, target_label, up);
      BlendGrad bg = blend_backward(img, trig, mask, up);
      for (size_t k = 0; k < g_t.data.size(); ++k) g_t.data[k] += bg.d_t.data[k];
      g_theta += bg.d_theta;
    }
    const double inv = 1.0 / static_cast<double>(batch);
    ce *= inv;
    for (double& v : g_t.data) v *= inv;
    g_theta *= inv;

    // Regularizers: lambda_alpha*|alpha| (alpha > 0 always) and lambda_t*||t||_2.
    const double a = trig.alpha();
    g_theta += trig.lambda_alpha * a * (1.0 - a);
    double t_norm = 0.0;
    for (double v : trig.t.data) t_norm += v * v;
    t_norm = std::sqrt(t_norm);
    if (t_norm > 1e-12) {
      const double s = trig.lambda_t / t_norm;
      for (size_t k = 0; k < g_t.data.size(); ++k) g_t.data[k] += s * trig.t.data[k];
    }

    if (trace) {
      trace->loss.push_back(ce + trig.lambda_alpha * a + trig.lambda_t * t_norm);
      trace->alpha.push_back(a);
    }

    for (size_t k = 0; k < trig.t.data.size(); ++k) trig.t.data[k] -= cfg.lr * g_t.data[k];
    if (!cfg.freeze_theta) trig.theta -= cfg.lr * g_theta;
    require_finite(trig.t, "optimize_trigger: trigger diverged");
    if (!std::isfinite(trig.theta)) throw ConfigError("optimize_trigger: theta diverged");
  }
  return trig;
}

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("trigger file truncated");
  return v;
}

}  // namespace

void save_trigger(const FrequencyTrigger& trig, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write trigger file: " + path);
  put(os, kTriggerMagic);
  put(os, kTriggerVersion);
  put(os, static_cast<int32_t>(trig.t.c));
  put(os, static_cast<int32_t>(trig.t.h));
  put(os, static_cast<int32_t>(trig.t.w));
  put(os, trig.f_min);
  put(os, trig.f_max);
  put(os, trig.lambda_alpha);
  put(os, trig.lambda_t);
  put(os, trig.seed);
  put(os, trig.theta);
  for (double v : trig.t.data) put(os, v);
  if (!os) throw ConfigError("short write on trigger file: " + path);
}

FrequencyTrigger load_trigger(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open trigger file: " + path);
  if (get<uint32_t>(is) != kTriggerMagic) throw ConfigError("not a trigger file: " + path);
  const uint32_t version = get<uint32_t>(is);
  if (version != kTriggerVersion)
    throw ConfigError("unsupported trigger version " + std::to_string(version));
  const int c = get<int32_t>(is);
  const int h = get<int32_t>(is);
  const int w = get<int32_t>(is);
  if (c <= 0 || h <= 0 || w <= 0 || c > 16 || h > 4096 || w > 4096)
    throw ConfigError("trigger file has implausible shape");
  FrequencyTrigger trig;
  trig.f_min = get<double>(is);
  trig.f_max = get<double>(is);
  trig.lambda_alpha = get<double>(is);
  trig.lambda_t = get<double>(is);
  trig.seed = get<uint64_t>(is);
  trig.theta = get<double>(is);
  trig.t = ImageTensor(h, w, c);
  for (double& v : trig.t.data) v = get<double>(is);
  require_finite(trig.t, "trigger file contains non-finite values");
  if (!std::isfinite(trig.theta)) throw ConfigError("trigger file contains non-finite theta");
  build_frequency_mask(h, w, trig.f_min, trig.f_max);
  return trig;
}

}  // namespace unclean
