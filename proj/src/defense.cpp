#include "unclean/defense.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unclean/common.hpp"

namespace unclean {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ImageTensor apply_reversed(const ReversedTrigger& rt, const ImageTensor& x) {
  if (rt.pattern.h != x.h || rt.pattern.w != x.w || rt.pattern.c != x.c)
    throw ConfigError("apply_reversed: pattern/image shape mismatch");
  ImageTensor out = x;
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        const double m = rt.mask[static_cast<size_t>(y) * x.w + xx];
        out.at(c, y, xx) = (1.0 - m) * x.at(c, y, xx) + m * rt.pattern.at(c, y, xx);
      }
  return out;
}

ReversedTrigger reverse_trigger(Classifier& model, int class_id,
                                const std::vector<ImageTensor>& probe_images, const ReverseConfig& cfg) {
  if (probe_images.empty()) throw ConfigError("reverse_trigger: no probe images");
  if (class_id < 0 || class_id >= model.num_classes())
    throw ConfigError("reverse_trigger: class_id out of range");
  const ImageTensor& first = probe_images.front();
  const int h = first.h, w = first.w, ch = first.c;
  for (const ImageTensor& img : probe_images)
    if (img.h != h || img.w != w || img.c != ch)
      throw ConfigError("reverse_trigger: probe images must share one shape");

  // Raw (pre-sigmoid) parameters; slight seeded jitter keeps distinct seeds
  // from walking identical paths.
  Rng rng(cfg.seed ^ (0x6e63ULL + static_cast<uint64_t>(class_id) * 0x9e3779b97f4a7c15ULL));
  std::vector<double> m_raw(static_cast<size_t>(h) * w);
  ImageTensor p_raw(h, w, ch);
  for (double& v : m_raw) v = -3.0 + 0.05 * rng.normal();
  for (double& v : p_raw.data) v = 0.05 * rng.normal();

  const size_t n_probe = std::min<size_t>(probe_images.size(),
                                          static_cast<size_t>(std::max(1, cfg.probe_cap)));

  ReversedTrigger rt;
  rt.class_id = class_id;
  rt.pattern = ImageTensor(h, w, ch);
  rt.mask.assign(m_raw.size(), 0.0);

  auto refresh = [&]() {
    for (size_t i = 0; i < m_raw.size(); ++i) rt.mask[i] = sigmoid(m_raw[i]);
    for (size_t i = 0; i < p_raw.data.size(); ++i) rt.pattern.data[i] = sigmoid(p_raw.data[i]);
  };
  refresh();

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<double> g_m(m_raw.size(), 0.0);
    ImageTensor g_p(h, w, ch);
    double ce = 0.0;
    for (size_t i = 0; i < n_probe; ++i) {
      const ImageTensor& x = probe_images[i];
      ImageTensor stamped = apply_reversed(rt, x);
      ImageTensor up;
      ce += model.input_gradient(stamped, class_id, up);
      for (int c = 0; c < ch; ++c)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            const size_t mi = static_cast<size_t>(y) * w + xx;
            const double g = up.at(c, y, xx);
            g_p.at(c, y, xx) += g * rt.mask[mi];
            g_m[mi] += g * (rt.pattern.at(c, y, xx) - x.at(c, y, xx));
          }
    }
    const double inv = 1.0 / static_cast<double>(n_probe);
    ce *= inv;
    double l1 = 0.0;
    for (double m : rt.mask) l1 += m;
    rt.loss_trace.push_back(ce + cfg.lambda_l1 * l1);

    for (size_t i = 0; i < m_raw.size(); ++i) {
      const double m = rt.mask[i];
      // CE term (averaged) plus the L1 penalty, both through d mask/d raw.
      const double dm = g_m[i] * inv + cfg.lambda_l1;
      m_raw[i] -= cfg.lr * dm * m * (1.0 - m);
    }
    for (size_t i = 0; i < p_raw.data.size(); ++i) {
      const double p = rt.pattern.data[i];
      p_raw.data[i] -= cfg.lr * g_p.data[i] * inv * p * (1.0 - p);
    }
    refresh();
  }

  size_t flips = 0;
  for (size_t i = 0; i < n_probe; ++i)
    if (model.predict_class(apply_reversed(rt, probe_images[i])) == class_id) ++flips;
  rt.flip_rate = static_cast<double>(flips) / static_cast<double>(n_probe);
  for (double m : rt.mask) rt.mask_l1 += m;
  rt.failed = cfg.steps == 0 || rt.flip_rate < cfg.min_flip_rate;
  return rt;
}

AnomalyReport anomaly_scan(Classifier& model, const LabeledSet& probe, const ScanConfig& cfg) {
  const int classes = model.num_classes();
  if (classes < 3) throw ConfigError("anomaly_scan: need at least 3 classes for MAD statistics");
  if (probe.size() == 0) throw ConfigError("anomaly_scan: empty probe set");

  AnomalyReport report;
  report.threshold = cfg.threshold;
  for (int cls = 0; cls < classes; ++cls) {
    std::vector<ImageTensor> others;
    for (size_t i = 0; i < probe.size(); ++i)
      if (probe.labels[i] != cls) others.push_back(probe.images[i]);
    if (others.empty()) throw ConfigError("anomaly_scan: no probe images outside class " +
                                          std::to_string(cls));
    report.reversals.push_back(reverse_trigger(model, cls, others, cfg.reverse));
    report.mask_l1.push_back(report.reversals.back().mask_l1);
  }

  std::vector<double> usable;
  for (const ReversedTrigger& rt : report.reversals)
    if (!rt.failed) usable.push_back(rt.mask_l1);
  if (usable.empty()) {
    report.inconclusive = true;
    report.anomaly_index.assign(classes, 0.0);
    return report;
  }

  report.median_l1 = median_of(usable);
  std::vector<double> dev;
  dev.reserve(usable.size());
  for (double v : usable) dev.push_back(std::abs(v - report.median_l1));
  report.mad = median_of(dev);

  const double denom = 1.4826 * std::max(report.mad, 1e-12);
  for (int cls = 0; cls < classes; ++cls) {
    const ReversedTrigger& rt = report.reversals[cls];
    double idx = 0.0;
    if (!rt.failed) idx = std::abs(rt.mask_l1 - report.median_l1) / denom;
    report.anomaly_index.push_back(idx);
    // Backdoor signature: abnormally SMALL reversed mask.
    if (!rt.failed && idx > cfg.threshold && rt.mask_l1 < report.median_l1)
      report.flagged.push_back(cls);
  }
  return report;
}

std::string report_to_text(const AnomalyReport& report) {
  std::ostringstream os;
  os << "anomaly_scan threshold=" << format_double(report.threshold)
     << " median_l1=" << format_double(report.median_l1) << " mad=" << format_double(report.mad)
     << (report.inconclusive ? " INCONCLUSIVE" : "") << "\n";
  for (size_t cls = 0; cls < report.reversals.size(); ++cls) {
    const ReversedTrigger& rt = report.reversals[cls];
    os << "class " << cls << ": mask_l1=" << format_double(rt.mask_l1)
       << " flip_rate=" << format_double(rt.flip_rate)
       << " anomaly_index=" << format_double(report.anomaly_index[cls])
       << (rt.failed ? " failed" : "")
       << (std::find(report.flagged.begin(), report.flagged.end(), static_cast<int>(cls)) !=
                   report.flagged.end()
               ? " FLAGGED"
               : "")
       << "\n";
  }
  return os.str();
}

}  // namespace unclean
