#include "unclean/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unclean/common.hpp"

namespace unclean {

using nlohmann::json;

std::vector<std::string> known_experiments() {
  return {"baseline", "selection_compare", "rate_sweep", "arch_transfer", "ablation"};
}

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& why) {
  throw ConfigError("config: " + path + ": " + why);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) bad_key(path + key, "unknown key");
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_key(path + key, "malformed value");
  }
}

void parse_trigger(const json& j, TriggerSection& t, const std::string& path) {
  reject_unknown(j, {"f_min", "f_max", "lambda_alpha", "lambda_t", "steps", "lr", "carrier_batch",
                     "init_sigma", "freeze_theta", "mode"},
                 path);
  read_field(j, "f_min", t.f_min, path);
  read_field(j, "f_max", t.f_max, path);
  read_field(j, "lambda_alpha", t.lambda_alpha, path);
  read_field(j, "lambda_t", t.lambda_t, path);
  read_field(j, "steps", t.steps, path);
  read_field(j, "lr", t.lr, path);
  read_field(j, "carrier_batch", t.carrier_batch, path);
  read_field(j, "init_sigma", t.init_sigma, path);
  read_field(j, "freeze_theta", t.freeze_theta, path);
  read_field(j, "mode", t.mode, path);
  if (t.mode != "optimized" && t.mode != "random")
    bad_key(path + "mode", "must be 'optimized' or 'random'");
  if (t.steps < 0) bad_key(path + "steps", "must be non-negative");
}

void parse_plan(const json& j, PlanSection& p, const std::string& path) {
  reject_unknown(j, {"percentage", "target_frac", "mode"}, path);
  read_field(j, "percentage", p.percentage, path);
  read_field(j, "target_frac", p.target_frac, path);
  read_field(j, "mode", p.mode, path);
  select_mode_from_string(p.mode);  // validates
  if (!(p.percentage > 0.0) || p.percentage > 1.0) bad_key(path + "percentage", "must lie in (0, 1]");
}

void parse_train(const json& j, TrainConfig& t, const std::string& path) {
  reject_unknown(j, {"epochs", "lr", "batch_size", "momentum"}, path);
  read_field(j, "epochs", t.epochs, path);
  read_field(j, "lr", t.lr, path);
  read_field(j, "batch_size", t.batch_size, path);
  read_field(j, "momentum", t.momentum, path);
  if (t.epochs < 0) bad_key(path + "epochs", "must be non-negative");
  if (t.batch_size < 1) bad_key(path + "batch_size", "must be positive");
  if (!(t.lr > 0.0)) bad_key(path + "lr", "must be positive");
}

void parse_unlearn(const json& j, UnlearnSection& u, const std::string& path) {
  reject_unknown(j, {"strategies", "epochs", "lr", "batch_size", "fisher_scale",
                     "fisher_sigma_cap", "fisher_lr", "boundary_lr", "ga_steps", "ga_lr", "ga_stop_acc"},
                 path);
  read_field(j, "strategies", u.strategies, path);
  read_field(j, "epochs", u.epochs, path);
  read_field(j, "lr", u.lr, path);
  read_field(j, "batch_size", u.batch_size, path);
  read_field(j, "fisher_scale", u.fisher_scale, path);
  read_field(j, "fisher_sigma_cap", u.fisher_sigma_cap, path);
  read_field(j, "fisher_lr", u.fisher_lr, path);
  read_field(j, "boundary_lr", u.boundary_lr, path);
  read_field(j, "ga_lr", u.ga_lr, path);
  read_field(j, "ga_steps", u.ga_steps, path);
  read_field(j, "ga_stop_acc", u.ga_stop_acc, path);
  if (u.strategies.empty()) bad_key(path + "strategies", "must not be empty");
  for (const std::string& s : u.strategies) strategy_from_string(s);  // validates
}

void parse_defense(const json& j, DefenseSection& d, const std::string& path) {
  reject_unknown(j, {"steps", "lr", "lambda_l1", "min_flip_rate", "probe_cap", "threshold"}, path);
  read_field(j, "steps", d.steps, path);
  read_field(j, "lr", d.lr, path);
  read_field(j, "lambda_l1", d.lambda_l1, path);
  read_field(j, "min_flip_rate", d.min_flip_rate, path);
  read_field(j, "probe_cap", d.probe_cap, path);
  read_field(j, "threshold", d.threshold, path);
  if (d.steps < 0) bad_key(path + "steps", "must be non-negative");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j,
                 {"dataset", "model", "shadow_model", "target_label", "forget_class", "experiment",
                  "seeds", "output_root", "trigger", "plan", "train", "shadow_train", "unlearn",
                  "defense", "rates", "transfer_models"},
                 "");

  ExperimentConfig cfg;
  if (!j.contains("dataset")) bad_key("dataset", "required key missing");
  if (!j.contains("target_label")) bad_key("target_label", "required key missing");
  if (!j.contains("forget_class")) bad_key("forget_class", "required key missing");
  read_field(j, "dataset", cfg.dataset, "");
  read_field(j, "model", cfg.model, "");
  read_field(j, "shadow_model", cfg.shadow_model, "");
  read_field(j, "target_label", cfg.target_label, "");
  read_field(j, "forget_class", cfg.forget_class, "");
  read_field(j, "experiment", cfg.experiment, "");
  read_field(j, "seeds", cfg.seeds, "");
  read_field(j, "output_root", cfg.output_root, "");
  read_field(j, "rates", cfg.rates, "");
  read_field(j, "transfer_models", cfg.transfer_models, "");
  if (j.contains("trigger")) parse_trigger(j.at("trigger"), cfg.trigger, "trigger.");
  if (j.contains("plan")) parse_plan(j.at("plan"), cfg.plan, "plan.");
  if (j.contains("train")) parse_train(j.at("train"), cfg.train, "train.");
  if (j.contains("shadow_train")) parse_train(j.at("shadow_train"), cfg.shadow_train, "shadow_train.");
  if (j.contains("unlearn")) parse_unlearn(j.at("unlearn"), cfg.unlearn, "unlearn.");
  if (j.contains("defense")) parse_defense(j.at("defense"), cfg.defense, "defense.");

  parse_dataset_spec(cfg.dataset);  // validates the spec string
  const std::vector<std::string> archs = known_architectures();
  auto known_arch = [&](const std::string& a) {
    return std::find(archs.begin(), archs.end(), a) != archs.end();
  };
  if (!known_arch(cfg.model)) bad_key("model", "unknown architecture '" + cfg.model + "'");
  if (!cfg.shadow_model.empty() && !known_arch(cfg.shadow_model))
    bad_key("shadow_model", "unknown architecture '" + cfg.shadow_model + "'");
  for (const std::string& a : cfg.transfer_models)
    if (!known_arch(a)) bad_key("transfer_models", "unknown architecture '" + a + "'");
  const std::vector<std::string> kinds = known_experiments();
  if (std::find(kinds.begin(), kinds.end(), cfg.experiment) == kinds.end())
    bad_key("experiment", "unknown kind '" + cfg.experiment + "'");
  if (cfg.target_label < 0) bad_key("target_label", "must be non-negative");
  if (cfg.forget_class < 0) bad_key("forget_class", "must be non-negative");
  if (cfg.target_label == cfg.forget_class)
    bad_key("forget_class", "must differ from target_label");
  if (cfg.seeds.empty()) bad_key("seeds", "must not be empty");
  if (cfg.rates.empty()) bad_key("rates", "must not be empty");
  for (double r : cfg.rates)
    if (!(r > 0.0) || r > 1.0) bad_key("rates", "entries must lie in (0, 1]");
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["model"] = cfg.model;
  j["shadow_model"] = cfg.shadow_model;
  j["target_label"] = cfg.target_label;
  j["forget_class"] = cfg.forget_class;
  j["experiment"] = cfg.experiment;
  j["seeds"] = cfg.seeds;
  j["output_root"] = cfg.output_root;
  j["trigger"] = {{"f_min", cfg.trigger.f_min},
                  {"f_max", cfg.trigger.f_max},
                  {"lambda_alpha", cfg.trigger.lambda_alpha},
                  {"lambda_t", cfg.trigger.lambda_t},
                  {"steps", cfg.trigger.steps},
                  {"lr", cfg.trigger.lr},
                  {"carrier_batch", cfg.trigger.carrier_batch},
                  {"init_sigma", cfg.trigger.init_sigma},
                  {"freeze_theta", cfg.trigger.freeze_theta},
                  {"mode", cfg.trigger.mode}};
  j["plan"] = {{"percentage", cfg.plan.percentage},
               {"target_frac", cfg.plan.target_frac},
               {"mode", cfg.plan.mode}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"lr", cfg.train.lr},
                {"batch_size", cfg.train.batch_size},
                {"momentum", cfg.train.momentum}};
  j["shadow_train"] = {{"epochs", cfg.shadow_train.epochs},
                       {"lr", cfg.shadow_train.lr},
                       {"batch_size", cfg.shadow_train.batch_size},
                       {"momentum", cfg.shadow_train.momentum}};
  j["unlearn"] = {{"strategies", cfg.unlearn.strategies},
                  {"epochs", cfg.unlearn.epochs},
                  {"lr", cfg.unlearn.lr},
                  {"batch_size", cfg.unlearn.batch_size},
                  {"fisher_scale", cfg.unlearn.fisher_scale},
                  {"fisher_sigma_cap", cfg.unlearn.fisher_sigma_cap},
                  {"fisher_lr", cfg.unlearn.fisher_lr},
                  {"boundary_lr", cfg.unlearn.boundary_lr},
                  {"ga_lr", cfg.unlearn.ga_lr},
                  {"ga_steps", cfg.unlearn.ga_steps},
                  {"ga_stop_acc", cfg.unlearn.ga_stop_acc}};
  j["defense"] = {{"steps", cfg.defense.steps},
                  {"lr", cfg.defense.lr},
                  {"lambda_l1", cfg.defense.lambda_l1},
                  {"min_flip_rate", cfg.defense.min_flip_rate},
                  {"probe_cap", cfg.defense.probe_cap},
                  {"threshold", cfg.defense.threshold}};
  j["rates"] = cfg.rates;
  j["transfer_models"] = cfg.transfer_models;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write config file: " + path);
  os << config_to_json(cfg);
  if (!os) throw ConfigError("short write on config file: " + path);
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(config_to_json(cfg))); }

TriggerOptConfig trigger_opt_config(const ExperimentConfig& cfg, uint64_t seed) {
  TriggerOptConfig t;
  t.steps = cfg.trigger.steps;
  t.lr = cfg.trigger.lr;
  t.carrier_batch = cfg.trigger.carrier_batch;
  t.init_sigma = cfg.trigger.init_sigma;
  t.freeze_theta = cfg.trigger.freeze_theta;
  t.seed = seed;
  return t;
}

PlanConfig plan_config(const ExperimentConfig& cfg, uint64_t seed) {
  PlanConfig p;
  p.target_label = cfg.target_label;
  p.forget_class = cfg.forget_class;
  p.percentage = cfg.plan.percentage;
  p.target_frac = cfg.plan.target_frac;
  p.mode = select_mode_from_string(cfg.plan.mode);
  p.seed = seed;
  return p;
}

UnlearnConfig unlearn_config(const ExperimentConfig& cfg, const std::string& strategy, uint64_t seed) {
  UnlearnConfig u;
  u.strategy = strategy_from_string(strategy);
  u.epochs = cfg.unlearn.epochs;
  u.lr = cfg.unlearn.lr;
  u.batch_size = cfg.unlearn.batch_size;
  u.seed = seed;
  u.fisher_scale = cfg.unlearn.fisher_scale;
  u.fisher_sigma_cap = cfg.unlearn.fisher_sigma_cap;
  u.fisher_lr = cfg.unlearn.fisher_lr;
  u.boundary_lr = cfg.unlearn.boundary_lr;
  u.ga_lr = cfg.unlearn.ga_lr;
  u.ga_steps = cfg.unlearn.ga_steps;
  u.ga_stop_acc = cfg.unlearn.ga_stop_acc;
  return u;
}

ScanConfig scan_config(const ExperimentConfig& cfg, uint64_t seed) {
  ScanConfig s;
  s.reverse.steps = cfg.defense.steps;
  s.reverse.lr = cfg.defense.lr;
  s.reverse.lambda_l1 = cfg.defense.lambda_l1;
  s.reverse.min_flip_rate = cfg.defense.min_flip_rate;
  s.reverse.probe_cap = cfg.defense.probe_cap;
  s.reverse.seed = seed;
  s.threshold = cfg.defense.threshold;
  return s;
}

}  // namespace unclean
