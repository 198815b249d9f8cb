// pybind11 surface for the core operations: transforms, triggers, planning,
// training, unlearning, evaluation, defense. Arrays cross the boundary as
// float64 numpy arrays shaped (H, W), (H, W, C) or (N, H, W[, C]).
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

#include "unclean/common.hpp"
#include "unclean/defense.hpp"
#include "unclean/eval.hpp"
#include "unclean/experiments.hpp"
#include "unclean/poison.hpp"
#include "unclean/synthetic.hpp"
#include "unclean/train.hpp"
#include "unclean/unlearn.hpp"

namespace py = pybind11;
using namespace unclean;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArr = py::array_t<int64_t, py::array::c_style | py::array::forcecast>;

ImageTensor tensor_from(const Arr& a) {
  py::buffer_info info = a.request();
  int h = 0, w = 0, c = 1;
  if (info.ndim == 2) {
    h = int(info.shape[0]);
    w = int(info.shape[1]);
  } else if (info.ndim == 3) {
    h = int(info.shape[0]);
    w = int(info.shape[1]);
    c = int(info.shape[2]);
  } else {
    throw ConfigError("expected a (H, W) or (H, W, C) array");
  }
  ImageTensor img(h, w, c);
  const double* src = static_cast<const double*>(info.ptr);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(ch, y, x) = info.ndim == 2 ? src[y * w + x] : src[(y * size_t(w) + x) * c + ch];
  return img;
}

Arr tensor_to(const ImageTensor& img, bool squeeze = true) {
  if (img.c == 1 && squeeze) {
    Arr out({img.h, img.w});
    double* dst = out.mutable_data();
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) dst[y * img.w + x] = img.at(0, y, x);
    return out;
  }
  Arr out({img.h, img.w, img.c});
  double* dst = out.mutable_data();
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) dst[(y * size_t(img.w) + x) * img.c + ch] = img.at(ch, y, x);
  return out;
}

std::vector<ImageTensor> batch_from(const Arr& a) {
  py::buffer_info info = a.request();
  if (info.ndim != 3 && info.ndim != 4) throw ConfigError("expected a (N, H, W[, C]) array");
  const int n = int(info.shape[0]);
  const int h = int(info.shape[1]);
  const int w = int(info.shape[2]);
  const int c = info.ndim == 4 ? int(info.shape[3]) : 1;
  const double* src = static_cast<const double*>(info.ptr);
  std::vector<ImageTensor> out;
  out.reserve(n);
  const size_t stride = size_t(h) * w * c;
  for (int i = 0; i < n; ++i) {
    ImageTensor img(h, w, c);
    const double* base = src + i * stride;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) img.at(ch, y, x) = base[(y * size_t(w) + x) * c + ch];
    out.push_back(std::move(img));
  }
  return out;
}

Arr batch_to(const std::vector<ImageTensor>& batch) {
  if (batch.empty()) throw ConfigError("empty batch");
  const ImageTensor& first = batch.front();
  Arr out({int(batch.size()), first.h, first.w, first.c});
  double* dst = out.mutable_data();
  const size_t stride = first.size();
  for (size_t i = 0; i < batch.size(); ++i)
    for (int y = 0; y < first.h; ++y)
      for (int x = 0; x < first.w; ++x)
        for (int ch = 0; ch < first.c; ++ch)
          dst[i * stride + (y * size_t(first.w) + x) * first.c + ch] = batch[i].at(ch, y, x);
  return out;
}

LabeledSet set_from(const Arr& x, const IntArr& y) {
  LabeledSet set;
  set.images = batch_from(x);
  py::buffer_info info = y.request();
  if (info.ndim != 1 || size_t(info.shape[0]) != set.images.size())
    throw ConfigError("labels must be a 1-D array matching the image count");
  const int64_t* src = static_cast<const int64_t*>(info.ptr);
  set.labels.assign(src, src + info.shape[0]);
  return set;
}

py::dict plan_to_dict(const PoisonPlan& plan) {
  py::dict d;
  d["seed"] = plan.seed;
  d["target_label"] = plan.target_label;
  d["forget_class"] = plan.forget_class;
  d["percentage"] = plan.percentage;
  d["target_frac"] = plan.target_frac;
  d["poison_indxs"] = plan.poison_indxs;
  d["random_indxs"] = plan.random_indxs;
  d["score_digest"] = plan.score_digest;
  return d;
}

py::dict report_to_dict(const EvalReport& rep) {
  py::dict d;
  d["acc_retain"] = rep.acc_retain;
  d["acc_forget"] = rep.acc_forget;
  d["asr"] = rep.asr;
  return d;
}

}  // namespace

PYBIND11_MODULE(_unclean, m) {
  m.doc() = "frequency-trigger backdoor research core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DependencyError>(m, "DependencyError", PyExc_RuntimeError);

  m.def("dct2", [](const Arr& a) { return tensor_to(dct2(tensor_from(a)), a.request().ndim == 2); },
        py::arg("image"), "orthonormal 2-D DCT-II per channel");
  m.def("idct2", [](const Arr& a) { return tensor_to(idct2(tensor_from(a)), a.request().ndim == 2); },
        py::arg("image"), "inverse of dct2");
  m.def("default_band", [](int h, int w) { return py::make_tuple(default_f_min(h, w), default_f_max(h, w)); },
        py::arg("h"), py::arg("w"));
  m.def("frequency_mask",
        [](int h, int w, double f_min, double f_max) {
          FrequencyMask mask = build_frequency_mask(h, w, f_min, f_max);
          Arr out({h, w});
          double* dst = out.mutable_data();
          for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v) dst[u * w + v] = mask.at(u, v);
          return out;
        },
        py::arg("h"), py::arg("w"), py::arg("f_min"), py::arg("f_max"));

  py::class_<FrequencyTrigger>(m, "Trigger")
      .def_property_readonly("t", [](const FrequencyTrigger& t) { return tensor_to(t.t, false); })
      .def_readwrite("theta", &FrequencyTrigger::theta)
      .def_readonly("f_min", &FrequencyTrigger::f_min)
      .def_readonly("f_max", &FrequencyTrigger::f_max)
      .def_readonly("seed", &FrequencyTrigger::seed)
      .def_property_readonly("alpha", &FrequencyTrigger::alpha)
      .def("blend", [](const FrequencyTrigger& t, const Arr& img) {
        return tensor_to(blend_trigger(tensor_from(img), t), img.request().ndim == 2);
      }, py::arg("image"))
      .def("save", [](const FrequencyTrigger& t, const std::string& path) { save_trigger(t, path); },
           py::arg("path"))
      .def_static("load", [](const std::string& path) { return load_trigger(path); }, py::arg("path"));

  m.def("init_trigger",
        [](int h, int w, int c, double f_min, double f_max, uint64_t seed, double lambda_alpha,
           double lambda_t, double init_sigma) {
          return init_trigger({h, w, c}, f_min, f_max, lambda_alpha, lambda_t, seed, init_sigma);
        },
        py::arg("h"), py::arg("w"), py::arg("c"), py::arg("f_min"), py::arg("f_max"),
        py::arg("seed") = 1, py::arg("lambda_alpha") = 0.001, py::arg("lambda_t") = 0.05,
        py::arg("init_sigma") = 0.01);
  m.def("random_trigger",
        [](int h, int w, int c, double f_min, double f_max, uint64_t seed, double sigma) {
          return random_trigger({h, w, c}, f_min, f_max, seed, sigma);
        },
        py::arg("h"), py::arg("w"), py::arg("c"), py::arg("f_min"), py::arg("f_max"),
        py::arg("seed") = 1, py::arg("sigma") = 0.6);

  py::class_<Classifier>(m, "Classifier")
      .def(py::init([](const std::string& arch, int h, int w, int c, int num_classes, uint64_t seed) {
             return new Classifier(make_net_spec(arch, {h, w, c}, num_classes), seed);
           }),
           py::arg("arch"), py::arg("h"), py::arg("w"), py::arg("c"), py::arg("num_classes"),
           py::arg("seed") = 1)
      .def_property_readonly("arch", &Classifier::arch)
      .def_property_readonly("num_classes", &Classifier::num_classes)
      .def_property_readonly("param_count", &Classifier::param_count)
      .def("clone", [](const Classifier& c) { return c.clone().release(); })
      .def("predict",
           [](Classifier& c, const Arr& x) {
             std::vector<ImageTensor> batch = batch_from(x);
             Arr out({int(batch.size()), c.num_classes()});
             double* dst = out.mutable_data();
             for (size_t i = 0; i < batch.size(); ++i) {
               std::vector<double> p = c.predict(batch[i]);
               std::copy(p.begin(), p.end(), dst + i * c.num_classes());
             }
             return out;
           },
           py::arg("x"))
      .def("embed",
           [](Classifier& c, const Arr& x) {
             std::vector<ImageTensor> batch = batch_from(x);
             Arr out({int(batch.size()), c.embed_dim()});
             double* dst = out.mutable_data();
             for (size_t i = 0; i < batch.size(); ++i) {
               std::vector<double> e = c.embed(batch[i]);
               std::copy(e.begin(), e.end(), dst + i * c.embed_dim());
             }
             return out;
           },
           py::arg("x"))
      .def("accuracy",
           [](Classifier& c, const Arr& x, const IntArr& y) { return accuracy(c, set_from(x, y)); },
           py::arg("x"), py::arg("y"))
      .def("train",
           [](Classifier& c, const Arr& x, const IntArr& y, int epochs, double lr, int batch_size,
              double momentum, uint64_t seed) {
             train_classifier(c, set_from(x, y), {epochs, lr, batch_size, momentum, seed});
           },
           py::arg("x"), py::arg("y"), py::arg("epochs") = 10, py::arg("lr") = 0.1,
           py::arg("batch_size") = 32, py::arg("momentum") = 0.0, py::arg("seed") = 1);

  m.def("architectures", &known_architectures);
  m.def("strategies", &known_strategies);

  m.def("load_dataset",
        [](const std::string& spec) {
          Dataset d = ingest_dataset(parse_dataset_spec(spec));
          py::dict out;
          out["name"] = d.name;
          out["num_classes"] = d.num_classes;
          out["train_x"] = batch_to(d.train.images);
          out["train_y"] = py::cast(d.train.labels);
          out["test_x"] = batch_to(d.test.images);
          out["test_y"] = py::cast(d.test.labels);
          return out;
        },
        py::arg("spec"), "e.g. 'synthetic:classes=4,h=16,w=16,per_class=50,seed=1'");

  m.def("optimize_trigger",
        [](Classifier& shadow, const Arr& carriers, int target_label, const FrequencyTrigger& init,
           int steps, double lr, int carrier_batch, bool freeze_theta, uint64_t seed) {
          TriggerOptConfig cfg;
          cfg.steps = steps;
          cfg.lr = lr;
          cfg.carrier_batch = carrier_batch;
          cfg.freeze_theta = freeze_theta;
          cfg.seed = seed;
          return optimize_trigger(shadow, batch_from(carriers), target_label, init, cfg);
        },
        py::arg("shadow"), py::arg("carriers"), py::arg("target_label"), py::arg("init"),
        py::arg("steps") = 300, py::arg("lr") = 0.1, py::arg("carrier_batch") = 64,
        py::arg("freeze_theta") = false, py::arg("seed") = 1);

  m.def("build_plan",
        [](Classifier& shadow, const Arr& x, const IntArr& y, int target_label, int forget_class,
           double percentage, const std::string& mode, double target_frac, uint64_t seed) {
          PlanConfig cfg;
          cfg.target_label = target_label;
          cfg.forget_class = forget_class;
          cfg.percentage = percentage;
          cfg.target_frac = target_frac;
          cfg.mode = select_mode_from_string(mode);
          cfg.seed = seed;
          return plan_to_dict(build_poison_plan(shadow, set_from(x, y), cfg));
        },
        py::arg("shadow"), py::arg("x"), py::arg("y"), py::arg("target_label"),
        py::arg("forget_class"), py::arg("percentage") = 0.05, py::arg("mode") = "least_similar",
        py::arg("target_frac") = -1.0, py::arg("seed") = 1);

  m.def("poison_images",
        [](const Arr& x, const IntArr& y, const py::dict& plan, const FrequencyTrigger& trigger) {
          LabeledSet base = set_from(x, y);
          PoisonPlan p;
          p.seed = plan["seed"].cast<uint64_t>();
          p.target_label = plan["target_label"].cast<int>();
          p.forget_class = plan["forget_class"].cast<int>();
          p.percentage = plan["percentage"].cast<double>();
          p.target_frac = plan["target_frac"].cast<double>();
          p.poison_indxs = plan["poison_indxs"].cast<std::vector<size_t>>();
          p.random_indxs = plan["random_indxs"].cast<std::vector<size_t>>();
          PoisonedView view(base, p, trigger);
          return batch_to(view.materialize().images);
        },
        py::arg("x"), py::arg("y"), py::arg("plan"), py::arg("trigger"),
        "materialized poisoned copy of x (labels are unchanged by design)");

  m.def("unlearn",
        [](const Classifier& model, const Arr& fx, const IntArr& fy, const Arr& rx, const IntArr& ry,
           const std::string& strategy, int epochs, double lr, int batch_size, uint64_t seed,
           double fisher_scale, double fisher_sigma_cap, double fisher_lr, double boundary_lr,
           double ga_lr, int ga_steps, double ga_stop_acc) {
          UnlearnConfig cfg;
          cfg.strategy = strategy_from_string(strategy);
          cfg.epochs = epochs;
          cfg.lr = lr;
          cfg.batch_size = batch_size;
          cfg.seed = seed;
          cfg.fisher_scale = fisher_scale;
          cfg.fisher_sigma_cap = fisher_sigma_cap;
          cfg.fisher_lr = fisher_lr;
          cfg.boundary_lr = boundary_lr;
          cfg.ga_lr = ga_lr;
          cfg.ga_steps = ga_steps;
          cfg.ga_stop_acc = ga_stop_acc;
          return unlearn(model, set_from(fx, fy), set_from(rx, ry), cfg).release();
        },
        py::arg("model"), py::arg("forget_x"), py::arg("forget_y"), py::arg("retain_x"),
        py::arg("retain_y"), py::arg("strategy"), py::arg("epochs") = 8, py::arg("lr") = 0.01,
        py::arg("batch_size") = 32, py::arg("seed") = 1, py::arg("fisher_scale") = 2.0,
        py::arg("fisher_sigma_cap") = 0.3, py::arg("fisher_lr") = 0.05,
        py::arg("boundary_lr") = 0.005, py::arg("ga_lr") = 0.02,
        py::arg("ga_steps") = 600, py::arg("ga_stop_acc") = 0.10);

  m.def("attack_success_rate",
        [](Classifier& model, const Arr& x, const IntArr& y, const FrequencyTrigger& trigger,
           int target_label) {
          return attack_success_rate(model, set_from(x, y), trigger, target_label);
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("trigger"), py::arg("target_label"));

  m.def("evaluate",
        [](Classifier& model, const Arr& x, const IntArr& y, const FrequencyTrigger& trigger,
           int target_label, int forget_class) {
          PoisonPlan plan;
          plan.target_label = target_label;
          plan.forget_class = forget_class;
          return report_to_dict(evaluate(model, set_from(x, y), trigger, plan));
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("trigger"), py::arg("target_label"),
        py::arg("forget_class"));

  m.def("anomaly_scan",
        [](Classifier& model, const Arr& x, const IntArr& y, int steps, double lr, double lambda_l1,
           double min_flip_rate, int probe_cap, double threshold, uint64_t seed) {
          ScanConfig cfg;
          cfg.reverse.steps = steps;
          cfg.reverse.lr = lr;
          cfg.reverse.lambda_l1 = lambda_l1;
          cfg.reverse.min_flip_rate = min_flip_rate;
          cfg.reverse.probe_cap = probe_cap;
          cfg.reverse.seed = seed;
          cfg.threshold = threshold;
          AnomalyReport rep = anomaly_scan(model, set_from(x, y), cfg);
          py::dict out;
          out["inconclusive"] = rep.inconclusive;
          out["flagged"] = rep.flagged;
          out["median_l1"] = rep.median_l1;
          py::list classes;
          for (const ReversedTrigger& rt : rep.reversals) {
            py::dict c;
            c["class_id"] = rt.class_id;
            c["mask_l1"] = rt.mask_l1;
            c["flip_rate"] = rt.flip_rate;
            c["failed"] = rt.failed;
            classes.append(c);
          }
          out["classes"] = classes;
          py::list idx;
          for (double v : rep.anomaly_index) idx.append(v);
          out["anomaly_index"] = idx;
          return out;
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("steps") = 120, py::arg("lr") = 0.1,
        py::arg("lambda_l1") = 0.01, py::arg("min_flip_rate") = 0.9, py::arg("probe_cap") = 64,
        py::arg("threshold") = 2.0, py::arg("seed") = 1);
}
