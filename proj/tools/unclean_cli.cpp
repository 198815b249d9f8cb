// Command-line front end: stage-wise or end-to-end experiment execution
// against a persistent run directory.
#include <cstdio>
#include <functional>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "unclean/common.hpp"
#include "unclean/experiments.hpp"

namespace {

using unclean::ConfigError;
using unclean::DependencyError;
using unclean::ExperimentConfig;
using unclean::RunLock;
using unclean::RunStore;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDependency = 3;
constexpr int kExitRuntime = 4;

struct CommonArgs {
  std::string config_path;
  std::string run_id;
  std::string output_root;  // overrides the config when set
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "experiment config JSON");
  if (config_required) opt->required();
  cmd->add_option("--run-id", args.run_id, "run directory name (default: derived)");
  cmd->add_option("--output-root", args.output_root, "override the config's output_root");
  cmd->add_flag("--force", args.force, "redo stages that are already done");
}

// Opens the run when it exists, creates it otherwise. A config file given
// alongside an existing run must hash to the stored config.
RunStore open_or_create(const CommonArgs& args) {
  ExperimentConfig cfg;
  bool have_cfg = false;
  if (!args.config_path.empty()) {
    cfg = unclean::load_config(args.config_path);
    if (!args.output_root.empty()) cfg.output_root = args.output_root;
    have_cfg = true;
  }
  if (!args.run_id.empty()) {
    const std::string root = have_cfg ? cfg.output_root
                                      : (args.output_root.empty() ? "runs" : args.output_root);
    try {
      RunStore store = RunStore::open(root, args.run_id);
      if (have_cfg && store.config_hash() != unclean::config_hash(cfg))
        throw ConfigError("config file does not match the config stored in run " + args.run_id);
      return store;
    } catch (const DependencyError&) {
      if (!have_cfg) throw;
      return RunStore::create(cfg, args.run_id);
    }
  }
  if (!have_cfg) throw ConfigError("--config is required when --run-id names no existing run");
  return RunStore::create(cfg, args.run_id);
}

RunStore open_existing(const CommonArgs& args) {
  if (args.run_id.empty()) throw ConfigError("--run-id is required");
  std::string root = args.output_root;
  if (root.empty()) {
    if (!args.config_path.empty()) root = unclean::load_config(args.config_path).output_root;
    else root = "runs";
  }
  return RunStore::open(root, args.run_id);
}

void emit_ok(const RunStore& store, const std::string& command) {
  nlohmann::json rec{{"status", "ok"},
                     {"command", command},
                     {"run_id", store.run_id()},
                     {"run_dir", store.dir()},
                     {"config_hash", store.config_hash()}};
  std::printf("%s\n", rec.dump().c_str());
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    nlohmann::json rec{{"status", "error"}, {"kind", "config"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", rec.dump().c_str());
    return kExitConfig;
  } catch (const DependencyError& e) {
    nlohmann::json rec{{"status", "error"}, {"kind", "dependency"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", rec.dump().c_str());
    return kExitDependency;
  } catch (const std::exception& e) {
    nlohmann::json rec{{"status", "error"}, {"kind", "runtime"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", rec.dump().c_str());
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unlearning-activated clean-label backdoor experiments"};
  app.require_subcommand(1);

  struct StageCmd {
    const char* name;
    const char* help;
    void (*fn)(RunStore&, bool);
  };
  const StageCmd stages[] = {
      {"gen-trigger", "train the shadow model and optimize the trigger", unclean::stage_gen_trigger},
      {"plan", "score the forget pool and build the poison plan", unclean::stage_plan},
      {"train", "train victim and clean-control models on the poisoned view", unclean::stage_train},
      {"unlearn", "apply every configured unlearning strategy", unclean::stage_unlearn},
      {"evaluate", "measure accuracy and attack success before/after", unclean::stage_evaluate},
      {"defend", "run the trigger-reversal anomaly scan", unclean::stage_defend},
  };

  CommonArgs stage_args[6];
  for (size_t i = 0; i < 6; ++i) {
    CLI::App* cmd = app.add_subcommand(stages[i].name, stages[i].help);
    add_common(cmd, stage_args[i], false);
  }

  CommonArgs run_args;
  CLI::App* cmd_run = app.add_subcommand("run", "execute every stage end to end");
  add_common(cmd_run, run_args, false);

  CommonArgs ablate_args;
  CLI::App* cmd_ablate =
      app.add_subcommand("ablate", "run the trigger/selection ablation grid");
  add_common(cmd_ablate, ablate_args, true);

  CommonArgs report_args;
  CLI::App* cmd_report = app.add_subcommand("report", "print the summary table for a run");
  add_common(cmd_report, report_args, false);

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < 6; ++i) {
    if (!app.got_subcommand(stages[i].name)) continue;
    const StageCmd& sc = stages[i];
    CommonArgs& args = stage_args[i];
    return run_guarded([&] {
      RunStore store = open_or_create(args);
      RunLock lock(store.dir());
      sc.fn(store, args.force);
      emit_ok(store, sc.name);
    });
  }

  if (app.got_subcommand("run")) {
    return run_guarded([&] {
      RunStore store = open_or_create(run_args);
      RunLock lock(store.dir());
      unclean::run_all(store, run_args.force);
      unclean::stage_report(store);
      emit_ok(store, "run");
    });
  }

  if (app.got_subcommand("ablate")) {
    return run_guarded([&] {
      ExperimentConfig cfg = unclean::load_config(ablate_args.config_path);
      if (!ablate_args.output_root.empty()) cfg.output_root = ablate_args.output_root;
      cfg.experiment = "ablation";
      RunStore store = ablate_args.run_id.empty()
                           ? RunStore::create(cfg)
                           : RunStore::create(cfg, ablate_args.run_id);
      RunLock lock(store.dir());
      unclean::run_all(store, ablate_args.force);
      unclean::stage_report(store);
      emit_ok(store, "ablate");
    });
  }

  if (app.got_subcommand("report")) {
    return run_guarded([&] {
      RunStore store = open_existing(report_args);
      std::string text = unclean::stage_report(store);
      std::fputs(text.c_str(), stdout);
    });
  }

  return kExitConfig;
}
