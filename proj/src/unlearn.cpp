#include "unclean/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unclean/common.hpp"

namespace unclean {

Strategy strategy_from_string(const std::string& name) {
  if (name == "bad_teacher") return Strategy::bad_teacher;
  if (name == "fisher") return Strategy::fisher;
  if (name == "boundary") return Strategy::boundary;
  if (name == "gradient_ascent") return Strategy::gradient_ascent;
  if (name == "random_label") return Strategy::random_label;
  throw ConfigError("unknown unlearning strategy '" + name + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::bad_teacher: return "bad_teacher";
    case Strategy::fisher: return "fisher";
    case Strategy::boundary: return "boundary";
    case Strategy::gradient_ascent: return "gradient_ascent";
    case Strategy::random_label: return "random_label";
  }
  return "random_label";
}

std::vector<std::string> known_strategies() {
  return {"bad_teacher", "fisher", "boundary", "gradient_ascent", "random_label"};
}

namespace {

// One pass of shuffled mini-batch SGD over (images[i], labels[i]) pairs.
void sgd_epoch(Classifier& model, const std::vector<const ImageTensor*>& images,
               const std::vector<int>& labels, double lr, int batch_size, Rng& rng) {
  std::vector<size_t> order(images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;
  while (cursor < order.size()) {
    const size_t take = std::min<size_t>(batch_size, order.size() - cursor);
    model.zero_grad();
    for (size_t b = 0; b < take; ++b) {
      const size_t i = order[cursor + b];
      model.accumulate_grad(*images[i], labels[i]);
    }
    model.sgd_step(lr, 1.0 / static_cast<double>(take));
    cursor += take;
  }
}

void run_bad_teacher(Classifier& student, const Classifier& trained, const LabeledSet& forget,
                     const LabeledSet& retain, const UnlearnConfig& cfg, const EpochProbe& on_epoch) {
  if (retain.size() == 0) throw ConfigError("bad_teacher: empty retain set");
  // Competent teacher = the trained model; incompetent teacher = a fresh
  // random init of the same architecture.
  std::unique_ptr<Classifier> competent = trained.clone();
  Classifier incompetent(trained.spec(), cfg.seed ^ 0x6261645445ULL);

  // Precompute teacher targets once; teachers are frozen.
  std::vector<std::vector<double>> targets;
  std::vector<const ImageTensor*> images;
  targets.reserve(forget.size() + retain.size());
  images.reserve(forget.size() + retain.size());
  for (size_t i = 0; i < retain.size(); ++i) {
    images.push_back(&retain.images[i]);
    targets.push_back(competent->predict(retain.images[i]));
  }
  for (size_t i = 0; i < forget.size(); ++i) {
    images.push_back(&forget.images[i]);
    targets.push_back(incompetent.predict(forget.images[i]));
  }

  Rng rng(cfg.seed ^ 0x756e6c6561726eULL);
  std::vector<size_t> order(images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t take = std::min<size_t>(cfg.batch_size, order.size() - cursor);
      student.zero_grad();
      for (size_t b = 0; b < take; ++b) {
        const size_t i = order[cursor + b];
        student.accumulate_grad_soft(*images[i], targets[i]);
      }
      student.sgd_step(cfg.lr, 1.0 / static_cast<double>(take));
      cursor += take;
    }
    if (on_epoch) on_epoch(epoch, student);
  }
}

void run_fisher(Classifier& student, const LabeledSet& forget, const LabeledSet& retain,
                const UnlearnConfig& cfg, const EpochProbe& on_epoch) {
  if (forget.size() == 0) throw ConfigError("fisher: empty forget set");

  // Diagonal empirical Fisher: mean squared per-sample gradient on the forget set.
  std::vector<double> fisher(student.param_count(), 0.0);
  for (size_t i = 0; i < forget.size(); ++i) {
    std::vector<double> g = student.per_sample_gradient(forget.images[i], forget.labels[i]);
    for (size_t k = 0; k < fisher.size(); ++k) fisher[k] += g[k] * g[k];
  }
  double peak = 0.0;
  const double inv = 1.0 / static_cast<double>(forget.size());
  for (double& f : fisher) {
    f *= inv;
    if (!std::isfinite(f)) throw ConfigError("fisher: non-finite Fisher estimate");
    peak = std::max(peak, f);
  }
  if (peak <= 0.0) throw ConfigError("fisher: Fisher estimate vanished on the forget set");

  // Impair: noise std per parameter ~ scale * sqrt(F / max F), capped, so
  // parameters carrying forget-set information get scrambled while the rest
  // stay quiet.
  std::vector<double> params = student.snapshot();
  Rng rng(cfg.seed ^ 0x666973686572ULL);
  for (size_t k = 0; k < params.size(); ++k) {
    double sigma = cfg.fisher_scale * std::sqrt((fisher[k] + cfg.fisher_eps) / peak);
    sigma = std::min(sigma, cfg.fisher_sigma_cap);
    params[k] += sigma * rng.normal();
  }
  student.restore(params);
  if (on_epoch) on_epoch(0, student);

  // Repair: brief fine-tune on the retain set to recover utility the noise
  // destroyed; the forget class is absent, so nothing pulls it back.
  std::vector<const ImageTensor*> images(retain.size());
  std::vector<int> labels(retain.labels);
  for (size_t i = 0; i < retain.size(); ++i) images[i] = &retain.images[i];
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sgd_epoch(student, images, labels, cfg.fisher_lr, cfg.batch_size, rng);
    if (on_epoch) on_epoch(epoch + 1, student);
  }
}

void run_boundary(Classifier& student, const LabeledSet& forget, const UnlearnConfig& cfg,
                  const EpochProbe& on_epoch) {
  Rng rng(cfg.seed ^ 0x626f756e64ULL);
  std::vector<const ImageTensor*> images(forget.size());
  for (size_t i = 0; i < forget.size(); ++i) images[i] = &forget.images[i];
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Nearest incorrect class per sample, recomputed against the current model.
    std::vector<int> nearest(forget.size());
    for (size_t i = 0; i < forget.size(); ++i) {
      std::vector<double> p = student.predict(forget.images[i]);
      p[forget.labels[i]] = -1.0;
      nearest[i] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    sgd_epoch(student, images, nearest, cfg.boundary_lr, cfg.batch_size, rng);
    if (on_epoch) on_epoch(epoch, student);
    // epochs is a cap: once every forget sample is misclassified, further
    // chasing only drags the decision boundary through the retain classes.
    if (accuracy(student, forget) == 0.0) break;
  }
}

void run_gradient_ascent(Classifier& student, const LabeledSet& forget, const UnlearnConfig& cfg,
                         const EpochProbe& on_epoch) {
  Rng rng(cfg.seed ^ 0x617363656e64ULL);
  std::vector<size_t> order(forget.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;
  // ga_steps budgets mini-batch ascent steps; each step is normalised to
  // length ga_lr in parameter space so the walk off the confidence plateau
  // stays gradual, and the stop condition is checked after every step so the
  // ascent halts as soon as the class is forgotten.
  for (int step = 0; step < cfg.ga_steps; ++step) {
    if (cursor >= order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    const size_t take = std::min<size_t>(cfg.batch_size, order.size() - cursor);
    student.zero_grad();
    for (size_t b = 0; b < take; ++b) {
      const size_t i = order[cursor + b];
      student.accumulate_grad(forget.images[i], forget.labels[i]);
    }
    const double norm = student.grad_norm();
    if (norm > 1e-12) student.sgd_step(-cfg.ga_lr / norm, 1.0);  // ascend
    cursor += take;
    if (on_epoch) on_epoch(step, student);
    if (accuracy(student, forget) <= cfg.ga_stop_acc) break;
  }
}

void run_random_label(Classifier& student, const LabeledSet& forget, const LabeledSet& retain,
                      const UnlearnConfig& cfg, const EpochProbe& on_epoch) {
  const int classes = student.num_classes();
  if (classes < 2) throw ConfigError("random_label: need at least two classes");
  Rng rng(cfg.seed ^ 0x72616e646cULL);
  std::vector<const ImageTensor*> images;
  images.reserve(forget.size() + retain.size());
  for (size_t i = 0; i < forget.size(); ++i) images.push_back(&forget.images[i]);
  for (size_t i = 0; i < retain.size(); ++i) images.push_back(&retain.images[i]);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Forget labels re-drawn each epoch, uniform over the wrong classes;
    // retain rows keep their true labels (the "refresh" half).
    std::vector<int> labels;
    labels.reserve(images.size());
    for (size_t i = 0; i < forget.size(); ++i) {
      int wrong = rng.uniform_int(classes - 1);
      if (wrong >= forget.labels[i]) ++wrong;
      labels.push_back(wrong);
    }
    for (size_t i = 0; i < retain.size(); ++i) labels.push_back(retain.labels[i]);
    sgd_epoch(student, images, labels, cfg.lr, cfg.batch_size, rng);
    if (on_epoch) on_epoch(epoch, student);
  }
}

}  // namespace

std::unique_ptr<Classifier> unlearn(const Classifier& model, const LabeledSet& forget,
                                    const LabeledSet& retain, const UnlearnConfig& cfg,
                                    const EpochProbe& on_epoch) {
  if (cfg.epochs < 0) throw ConfigError("unlearn: negative epoch count");
  if (cfg.batch_size < 1) throw ConfigError("unlearn: batch_size must be positive");
  std::unique_ptr<Classifier> student = model.clone();

  if (forget.size() == 0) {
    switch (cfg.strategy) {
      case Strategy::gradient_ascent:
      case Strategy::random_label:
        return student;  // identity transformation
      default:
        throw ConfigError("unlearn: " + to_string(cfg.strategy) + " requires a non-empty forget set");
    }
  }

  switch (cfg.strategy) {
    case Strategy::bad_teacher: run_bad_teacher(*student, model, forget, retain, cfg, on_epoch); break;
    case Strategy::fisher: run_fisher(*student, forget, retain, cfg, on_epoch); break;
    case Strategy::boundary: run_boundary(*student, forget, cfg, on_epoch); break;
    case Strategy::gradient_ascent: run_gradient_ascent(*student, forget, cfg, on_epoch); break;
    case Strategy::random_label: run_random_label(*student, forget, retain, cfg, on_epoch); break;
  }
  const std::vector<double>& p = student->snapshot();
  for (double v : p)
    if (!std::isfinite(v)) throw std::runtime_error("unlearn: " + to_string(cfg.strategy) +
                                                    " produced non-finite parameters");
  return student;
}

}  // namespace unclean
