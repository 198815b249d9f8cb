#include "unclean/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "unclean/common.hpp"
#include "unclean/defense.hpp"
#include "unclean/imageio.hpp"
#include "unclean/unlearn.hpp"

namespace unclean {

namespace {

constexpr size_t kProbeCap = 256;

std::string seed_tag(uint64_t seed) { return "seed" + std::to_string(seed); }

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '/' || c == ' ') c = '_';
  return s;
}

Dataset load_data(const ExperimentConfig& cfg) { return ingest_dataset(parse_dataset_spec(cfg.dataset)); }

TensorShape shape_of(const Dataset& data) {
  const ImageTensor& img = data.train.images.front();
  return {img.h, img.w, img.c};
}

void band_for(const ExperimentConfig& cfg, const Dataset& data, double& f_min, double& f_max) {
  const TensorShape s = shape_of(data);
  f_min = cfg.trigger.f_min >= 0.0 ? cfg.trigger.f_min : default_f_min(s.h, s.w);
  f_max = cfg.trigger.f_max >= 0.0 ? cfg.trigger.f_max : default_f_max(s.h, s.w);
}

TrainConfig seeded(TrainConfig base, uint64_t seed) {
  base.seed = seed;
  return base;
}

std::unique_ptr<Classifier> make_shadow(const ExperimentConfig& cfg, const Dataset& data,
                                        uint64_t seed) {
  return train_shadow(data.train, data.num_classes, cfg.shadow_arch(),
                      seeded(cfg.shadow_train, seed ^ 0x73686164ULL));
}

FrequencyTrigger make_trigger(const ExperimentConfig& cfg, const Dataset& data, Classifier& shadow,
                              const std::string& mode, uint64_t seed, TriggerTrace* trace = nullptr) {
  double f_min = 0.0, f_max = 0.0;
  band_for(cfg, data, f_min, f_max);
  const TensorShape s = shape_of(data);
  // The random control is a generic visible stamp: loud, and drawn from the
  // image's default band rather than the attack's stealth tuning.
  if (mode == "random")
    return random_trigger(s, default_f_min(s.h, s.w), default_f_max(s.h, s.w), seed, 1.2);
  if (mode != "optimized") throw ConfigError("unknown trigger mode '" + mode + "'");
  FrequencyTrigger init = init_trigger(s, f_min, f_max, cfg.trigger.lambda_alpha,
                                       cfg.trigger.lambda_t, seed, cfg.trigger.init_sigma);
  // Carriers: the attacker-held forget-class pool.
  std::vector<ImageTensor> carriers;
  for (size_t r : indices_of_class(data.train, cfg.forget_class))
    carriers.push_back(data.train.images[r]);
  if (carriers.empty()) throw ConfigError("trigger: forget class has no samples");
  return optimize_trigger(shadow, carriers, cfg.target_label, init, trigger_opt_config(cfg, seed),
                          trace);
}

// Partitions handed to the unlearning suite. Forget data is always the clean
// originals; the retain side keeps whatever the training set held (triggered
// target rows included, for the poisoned pipeline).
struct UnlearnSplit {
  LabeledSet forget, retain;
};

UnlearnSplit split_for_unlearning(const LabeledSet& clean_train, const PoisonedView* view,
                                  int forget_class) {
  UnlearnSplit out;
  for (size_t i = 0; i < clean_train.size(); ++i) {
    if (clean_train.labels[i] == forget_class) {
      out.forget.push_back(clean_train.images[i], forget_class);
    } else if (view) {
      out.retain.push_back(view->image(i), view->label(i));
    } else {
      out.retain.push_back(clean_train.images[i], clean_train.labels[i]);
    }
  }
  return out;
}

ResultRow base_row(const Dataset& data, const std::string& tag,
                   const std::string& arch, uint64_t seed) {
  ResultRow row;
  row.experiment = tag;
  row.dataset = data.name;
  row.model = arch;
  row.seed = seed;
  return row;
}

}  // namespace

std::string results_csv_header() {
  return "run_id,experiment,dataset,model,strategy,stage,seed,acc_retain,acc_forget,asr";
}

std::vector<std::string> result_row_cells(const ResultRow& row) {
  return {row.run_id,           row.experiment,
          row.dataset,          row.model,
          row.strategy,         row.stage,
          std::to_string(row.seed), format_double(row.acc_retain),
          format_double(row.acc_forget), format_double(row.asr)};
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("missing results CSV: " + path + "; run 'evaluate' first");
  std::string line;
  if (!std::getline(is, line)) throw DependencyError("empty results CSV: " + path);
  if (line != results_csv_header())
    throw DependencyError("unexpected results CSV header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw DependencyError("malformed row in " + path + ": " + line);
    ResultRow row;
    row.run_id = cells[0];
    row.experiment = cells[1];
    row.dataset = cells[2];
    row.model = cells[3];
    row.strategy = cells[4];
    row.stage = cells[5];
    row.seed = std::stoull(cells[6]);
    row.acc_retain = std::stod(cells[7]);
    row.acc_forget = std::stod(cells[8]);
    row.asr = std::stod(cells[9]);
    rows.push_back(std::move(row));
  }
  return rows;
}

CellResult run_cell(const ExperimentConfig& cfg, const Dataset& data, const CellSpec& cell) {
  CellResult out;
  std::unique_ptr<Classifier> shadow = make_shadow(cfg, data, cell.seed);
  out.trigger = make_trigger(cfg, data, *shadow, cell.trigger_mode, cell.seed);

  PlanConfig pc = plan_config(cfg, cell.seed);
  pc.percentage = cell.percentage;
  pc.mode = cell.select_mode;
  out.plan = build_poison_plan(*shadow, data.train, pc);

  PoisonedView view(data.train, out.plan, out.trigger);
  NetSpec vspec = make_net_spec(cell.victim_arch, shape_of(data), data.num_classes);
  Classifier victim(vspec, cell.seed ^ 0x76696374ULL);
  out.train_log = train_victim(victim, view, data.test, seeded(cfg.train, cell.seed), kProbeCap);

  ResultRow before = base_row(data, cell.experiment_tag, cell.victim_arch, cell.seed);
  before.strategy = "none";
  before.stage = "before_unlearn";
  EvalReport rep = evaluate(victim, data.test, out.trigger, out.plan);
  before.acc_retain = rep.acc_retain;
  before.acc_forget = rep.acc_forget;
  before.asr = rep.asr;
  out.rows.push_back(before);

  if (!cell.with_unlearn) return out;
  UnlearnSplit split = split_for_unlearning(data.train, &view, cfg.forget_class);
  for (const std::string& strat : cfg.unlearn.strategies) {
    std::unique_ptr<Classifier> after =
        unlearn(victim, split.forget, split.retain, unlearn_config(cfg, strat, cell.seed));
    ResultRow row = base_row(data, cell.experiment_tag, cell.victim_arch, cell.seed);
    row.strategy = strat;
    row.stage = "after_unlearn";
    rep = evaluate(*after, data.test, out.trigger, out.plan);
    row.acc_retain = rep.acc_retain;
    row.acc_forget = rep.acc_forget;
    row.asr = rep.asr;
    out.rows.push_back(row);
  }
  return out;
}

namespace {

void require_stage(const RunStore& store, const std::string& stage) {
  if (!store.stage_done(stage))
    throw DependencyError("stage '" + stage + "' has not completed in run " + store.run_id() +
                          "; run it first");
}

bool skip_if_done(RunStore& store, const std::string& stage, bool force) {
  if (store.stage_done(stage)) {
    if (!force) return true;
    store.clear_stage(stage);
  }
  return false;
}

void check_baseline_kind(const RunStore& store, const std::string& stage) {
  if (store.config().experiment != "baseline")
    throw ConfigError("stage '" + stage + "' applies to the baseline experiment; use 'run' for kind '" +
                      store.config().experiment + "'");
}

}  // namespace

void stage_gen_trigger(RunStore& store, bool force) {
  check_baseline_kind(store, "gen-trigger");
  if (skip_if_done(store, "gen-trigger", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<std::string> files;
  for (uint64_t seed : cfg.seeds) {
    std::unique_ptr<Classifier> shadow = make_shadow(cfg, data, seed);
    store.save_checkpoint(*shadow, "shadow", seed);
    files.push_back(store.checkpoint_rel("shadow", seed));

    TriggerTrace trace;
    FrequencyTrigger trig = make_trigger(cfg, data, *shadow, cfg.trigger.mode, seed, &trace);
    const std::string trig_rel = "triggers/trigger_" + seed_tag(seed) + ".bin";
    save_trigger(trig, store.path(trig_rel));
    files.push_back(trig_rel);

    // Stealth triptych: clean | triggered | 10x amplified difference.
    const ImageTensor& sample = data.train.images[indices_of_class(data.train, cfg.forget_class)[0]];
    ImageTensor blended = blend_trigger(sample, trig);
    ImageTensor diff(sample.h, sample.w, sample.c);
    for (size_t i = 0; i < diff.data.size(); ++i)
      diff.data[i] = 0.5 + 10.0 * (blended.data[i] - sample.data[i]);
    const std::string trip_rel = "plots/triptych_" + seed_tag(seed) + ".png";
    write_png_strip({sample, blended, clamp01(diff)}, store.path(trip_rel));
    files.push_back(trip_rel);

    if (!trace.loss.empty()) {
      Series s;
      s.label = "loss";
      for (size_t i = 0; i < trace.loss.size(); ++i) {
        s.x.push_back(double(i));
        s.y.push_back(trace.loss[i]);
      }
      const std::string svg_rel = "plots/trigger_loss_" + seed_tag(seed) + ".svg";
      write_svg_plot({s}, "trigger optimization (" + seed_tag(seed) + ")", "step", "loss",
                     store.path(svg_rel));
      files.push_back(svg_rel);
    }
  }
  store.mark_stage_done("gen-trigger", files);
}

void stage_plan(RunStore& store, bool force) {
  check_baseline_kind(store, "plan");
  require_stage(store, "gen-trigger");
  if (skip_if_done(store, "plan", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<std::string> files;
  for (uint64_t seed : cfg.seeds) {
    std::unique_ptr<Classifier> shadow = store.load_checkpoint("shadow", seed);
    PoisonPlan plan = build_poison_plan(*shadow, data.train, plan_config(cfg, seed));
    const std::string rel = "plans/plan_" + seed_tag(seed) + ".json";
    save_plan(plan, store.path(rel));
    files.push_back(rel);
  }
  store.mark_stage_done("plan", files);
}

void stage_train(RunStore& store, bool force) {
  check_baseline_kind(store, "train");
  require_stage(store, "plan");
  if (skip_if_done(store, "train", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<std::string> files;
  for (uint64_t seed : cfg.seeds) {
    FrequencyTrigger trig = load_trigger(store.path("triggers/trigger_" + seed_tag(seed) + ".bin"));
    PoisonPlan plan = load_plan(store.path("plans/plan_" + seed_tag(seed) + ".json"));
    PoisonedView view(data.train, plan, trig);

    NetSpec vspec = make_net_spec(cfg.model, shape_of(data), data.num_classes);
    Classifier victim(vspec, seed ^ 0x76696374ULL);
    std::vector<VictimEpoch> log = train_victim(victim, view, data.test, seeded(cfg.train, seed),
                                                kProbeCap);
    store.save_checkpoint(victim, "victim", seed);
    files.push_back(store.checkpoint_rel("victim", seed));

    const std::string epochs_rel = "reports/epochs_" + seed_tag(seed) + ".csv";
    CsvWriter epochs(store.path(epochs_rel), "run_id,epoch,loss,acc_clean,asr_probe");
    for (const VictimEpoch& e : log)
      epochs.row({store.run_id(), std::to_string(e.epoch), format_double(e.loss),
                  format_double(e.acc_clean), format_double(e.asr_probe)});
    epochs.close();
    files.push_back(epochs_rel);

    // Clean control: same architecture and schedule on the untouched data.
    Classifier control(vspec, seed ^ 0x76696374ULL);
    train_classifier(control, data.train, seeded(cfg.train, seed));
    store.save_checkpoint(control, "clean", seed);
    files.push_back(store.checkpoint_rel("clean", seed));
  }
  store.mark_stage_done("train", files);
}

void stage_unlearn(RunStore& store, bool force) {
  check_baseline_kind(store, "unlearn");
  require_stage(store, "train");
  if (skip_if_done(store, "unlearn", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<std::string> files;
  for (uint64_t seed : cfg.seeds) {
    FrequencyTrigger trig = load_trigger(store.path("triggers/trigger_" + seed_tag(seed) + ".bin"));
    PoisonPlan plan = load_plan(store.path("plans/plan_" + seed_tag(seed) + ".json"));
    PoisonedView view(data.train, plan, trig);
    std::unique_ptr<Classifier> victim = store.load_checkpoint("victim", seed);
    std::unique_ptr<Classifier> control = store.load_checkpoint("clean", seed);

    const std::string curves_rel = "reports/curves_" + seed_tag(seed) + ".csv";
    CsvWriter curves(store.path(curves_rel), "epoch,phase,asr");
    {
      std::ifstream epochs(store.path("reports/epochs_" + seed_tag(seed) + ".csv"));
      std::string line;
      std::getline(epochs, line);  // header
      while (std::getline(epochs, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string run, epoch, loss, acc, asr;
        std::getline(ss, run, ',');
        std::getline(ss, epoch, ',');
        std::getline(ss, loss, ',');
        std::getline(ss, acc, ',');
        std::getline(ss, asr, ',');
        curves.row({epoch, "train", asr});
      }
    }

    UnlearnSplit poisoned_split = split_for_unlearning(data.train, &view, cfg.forget_class);
    UnlearnSplit clean_split = split_for_unlearning(data.train, nullptr, cfg.forget_class);
    for (const std::string& strat : cfg.unlearn.strategies) {
      UnlearnConfig ucfg = unlearn_config(cfg, strat, seed);
      EpochProbe probe = [&](int epoch, Classifier& student) {
        const double asr = attack_success_rate_capped(student, data.test, trig,
                                                      plan.target_label, kProbeCap);
        curves.row({std::to_string(epoch), "unlearn/" + strat, format_double(asr)});
      };
      std::unique_ptr<Classifier> after =
          unlearn(*victim, poisoned_split.forget, poisoned_split.retain, ucfg, probe);
      store.save_checkpoint(*after, "after_unlearn/" + strat, seed);
      files.push_back(store.checkpoint_rel("after_unlearn/" + strat, seed));

      std::unique_ptr<Classifier> control_after =
          unlearn(*control, clean_split.forget, clean_split.retain, ucfg);
      store.save_checkpoint(*control_after, "clean_after/" + strat, seed);
      files.push_back(store.checkpoint_rel("clean_after/" + strat, seed));
    }
    curves.close();
    files.push_back(curves_rel);
  }
  store.mark_stage_done("unlearn", files);
}

void stage_evaluate(RunStore& store, bool force) {
  check_baseline_kind(store, "evaluate");
  require_stage(store, "train");
  require_stage(store, "unlearn");
  if (skip_if_done(store, "evaluate", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<ResultRow> rows;
  for (uint64_t seed : cfg.seeds) {
    FrequencyTrigger trig = load_trigger(store.path("triggers/trigger_" + seed_tag(seed) + ".bin"));
    PoisonPlan plan = load_plan(store.path("plans/plan_" + seed_tag(seed) + ".json"));

    auto eval_to_row = [&](Classifier& model, const std::string& tag, const std::string& strat,
                           const std::string& stage) {
      ResultRow row = base_row(data, tag, cfg.model, seed);
      row.run_id = store.run_id();
      row.strategy = strat;
      row.stage = stage;
      EvalReport rep = evaluate(model, data.test, trig, plan);
      row.acc_retain = rep.acc_retain;
      row.acc_forget = rep.acc_forget;
      row.asr = rep.asr;
      rows.push_back(row);
    };

    std::unique_ptr<Classifier> victim = store.load_checkpoint("victim", seed);
    eval_to_row(*victim, cfg.experiment, "none", "before_unlearn");
    std::unique_ptr<Classifier> control = store.load_checkpoint("clean", seed);
    eval_to_row(*control, "clean_control", "none", "before_unlearn");
    for (const std::string& strat : cfg.unlearn.strategies) {
      std::unique_ptr<Classifier> after = store.load_checkpoint("after_unlearn/" + strat, seed);
      eval_to_row(*after, cfg.experiment, strat, "after_unlearn");
      std::unique_ptr<Classifier> control_after = store.load_checkpoint("clean_after/" + strat, seed);
      eval_to_row(*control_after, "clean_control", strat, "after_unlearn");
    }
  }

  CsvWriter csv(store.path("reports/results.csv"), results_csv_header());
  for (const ResultRow& row : rows) csv.row(result_row_cells(row));
  csv.close();

  // ASR curve plot per seed from the persisted curves CSVs.
  std::vector<std::string> files = {"reports/results.csv"};
  for (uint64_t seed : cfg.seeds) {
    std::ifstream is(store.path("reports/curves_" + seed_tag(seed) + ".csv"));
    if (!is) continue;
    std::map<std::string, Series> by_phase;
    std::string line;
    std::getline(is, line);
    double unlearn_offset = 0.0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string epoch, phase, asr;
      std::getline(ss, epoch, ',');
      std::getline(ss, phase, ',');
      std::getline(ss, asr, ',');
      Series& s = by_phase[phase];
      s.label = phase;
      double x = std::stod(epoch);
      if (phase == "train") unlearn_offset = std::max(unlearn_offset, x + 1.0);
      else x += unlearn_offset;
      s.x.push_back(x);
      s.y.push_back(std::stod(asr));
    }
    std::vector<Series> series;
    for (auto& [_, s] : by_phase) series.push_back(s);
    if (series.empty()) continue;
    const std::string rel = "plots/asr_curve_" + seed_tag(seed) + ".svg";
    write_svg_plot(series, "ASR across training and unlearning (" + seed_tag(seed) + ")", "epoch",
                   "asr", store.path(rel));
    files.push_back(rel);
  }
  store.mark_stage_done("evaluate", files);
}

void stage_defend(RunStore& store, bool force) {
  check_baseline_kind(store, "defend");
  require_stage(store, "train");
  if (skip_if_done(store, "defend", force)) return;
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<std::string> files;
  std::ostringstream all;
  for (uint64_t seed : cfg.seeds) {
    std::unique_ptr<Classifier> victim = store.load_checkpoint("victim", seed);
    AnomalyReport rep = anomaly_scan(*victim, data.test, scan_config(cfg, seed));
    all << "== " << seed_tag(seed) << " ==\n" << report_to_text(rep);
    for (size_t cls = 0; cls < rep.reversals.size(); ++cls) {
      const ReversedTrigger& rt = rep.reversals[cls];
      ImageTensor mask_img(victim->input_shape().h, victim->input_shape().w, 1);
      mask_img.data = rt.mask;
      const std::string rel = "plots/nc_mask_class" + std::to_string(cls) + "_" + seed_tag(seed) +
                              ".png";
      write_png(mask_img, store.path(rel));
      files.push_back(rel);
    }
  }
  const std::string rel = "reports/defense.txt";
  std::ofstream os(store.path(rel), std::ios::trunc);
  if (!os) throw ConfigError("cannot write defense report");
  os << all.str();
  os.close();
  files.push_back(rel);
  store.mark_stage_done("defend", files);
}

namespace {

void write_grid_results(RunStore& store, const std::vector<ResultRow>& rows,
                        std::vector<std::string> extra_files) {
  CsvWriter csv(store.path("reports/results.csv"), results_csv_header());
  for (const ResultRow& row : rows) csv.row(result_row_cells(row));
  csv.close();
  extra_files.insert(extra_files.begin(), "reports/results.csv");
  store.mark_stage_done("evaluate", extra_files);
}

std::vector<ResultRow> grid_cells(RunStore& store, const std::vector<CellSpec>& cells) {
  const ExperimentConfig& cfg = store.config();
  Dataset data = load_data(cfg);
  std::vector<ResultRow> rows;
  std::vector<std::string> files;
  for (const CellSpec& cell : cells) {
    CellResult res = run_cell(cfg, data, cell);
    const std::string tag = sanitize(cell.experiment_tag) + "_" + seed_tag(cell.seed);
    const std::string trig_rel = "triggers/trigger_" + tag + ".bin";
    const std::string plan_rel = "plans/plan_" + tag + ".json";
    save_trigger(res.trigger, store.path(trig_rel));
    save_plan(res.plan, store.path(plan_rel));
    files.push_back(trig_rel);
    files.push_back(plan_rel);
    for (ResultRow row : res.rows) {
      row.run_id = store.run_id();
      rows.push_back(row);
    }
  }
  write_grid_results(store, rows, files);
  return rows;
}

}  // namespace

void run_all(RunStore& store, bool force) {
  const ExperimentConfig& cfg = store.config();
  const std::string kind = cfg.experiment;
  if (kind == "baseline") {
    stage_gen_trigger(store, force);
    stage_plan(store, force);
    stage_train(store, force);
    stage_unlearn(store, force);
    stage_evaluate(store, force);
    stage_defend(store, force);
    return;
  }
  if (skip_if_done(store, "evaluate", force)) return;

  std::vector<CellSpec> cells;
  if (kind == "selection_compare") {
    for (const char* mode : {"least_similar", "most_similar", "random"})
      for (uint64_t seed : cfg.seeds) {
        CellSpec c;
        c.experiment_tag = std::string("selection_compare/") + mode;
        c.victim_arch = cfg.model;
        c.select_mode = select_mode_from_string(mode);
        c.percentage = cfg.plan.percentage;
        c.seed = seed;
        cells.push_back(c);
      }
  } else if (kind == "rate_sweep") {
    for (double rate : cfg.rates)
      for (uint64_t seed : cfg.seeds) {
        CellSpec c;
        c.experiment_tag = "rate_sweep/" + format_double(rate);
        c.victim_arch = cfg.model;
        c.percentage = rate;
        c.seed = seed;
        cells.push_back(c);
      }
  } else if (kind == "arch_transfer") {
    for (const std::string& arch : cfg.transfer_models)
      for (uint64_t seed : cfg.seeds) {
        CellSpec c;
        c.experiment_tag = "arch_transfer/" + arch;
        c.victim_arch = arch;
        c.percentage = cfg.plan.percentage;
        c.seed = seed;
        cells.push_back(c);
      }
  } else if (kind == "ablation") {
    struct Scenario {
      const char* id;
      const char* trigger_mode;
      SelectMode select;
    };
    for (const Scenario& sc : {Scenario{"RTS", "random", SelectMode::random},
                               Scenario{"RT", "random", SelectMode::least_similar},
                               Scenario{"RS", "optimized", SelectMode::random},
                               Scenario{"UNCLEAN", "optimized", SelectMode::least_similar}})
      for (uint64_t seed : cfg.seeds) {
        CellSpec c;
        c.experiment_tag = std::string("ablation/") + sc.id;
        c.victim_arch = cfg.model;
        c.trigger_mode = sc.trigger_mode;
        c.select_mode = sc.select;
        c.percentage = cfg.plan.percentage;
        c.seed = seed;
        cells.push_back(c);
      }
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  grid_cells(store, cells);
}

std::string stage_report(RunStore& store) {
  std::vector<ResultRow> rows = read_results_csv(store.path("reports/results.csv"));
  // (experiment, strategy, stage) -> mean over seeds.
  struct Agg {
    double retain = 0.0, forget = 0.0, asr = 0.0;
    int n = 0;
  };
  std::map<std::string, Agg> agg;
  std::vector<std::string> order;
  for (const ResultRow& row : rows) {
    const std::string key = row.experiment + "|" + row.strategy + "|" + row.stage;
    if (!agg.count(key)) order.push_back(key);
    Agg& a = agg[key];
    a.retain += row.acc_retain;
    a.forget += row.acc_forget;
    a.asr += row.asr;
    a.n += 1;
  }
  std::ostringstream os;
  os << "experiment                     strategy         stage            "
     << "acc_retain acc_forget   asr    seeds\n";
  for (const std::string& key : order) {
    const Agg& a = agg[key];
    std::istringstream ks(key);
    std::string experiment, strategy, stage;
    std::getline(ks, experiment, '|');
    std::getline(ks, strategy, '|');
    std::getline(ks, stage, '|');
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-30s %-16s %-16s %9.4f %10.4f %7.4f %6d\n",
                  experiment.c_str(), strategy.c_str(), stage.c_str(), a.retain / a.n,
                  a.forget / a.n, a.asr / a.n, a.n);
    os << buf;
  }
  const std::string text = os.str();
  std::ofstream f(store.path("reports/summary.txt"), std::ios::trunc);
  if (!f) throw ConfigError("cannot write summary");
  f << text;
  f.close();
  store.mark_stage_done("report", {"reports/summary.txt"});
  return text;
}

}  // namespace unclean
