#pragma once

#include <string>
#include <vector>

#include "unclean/config.hpp"
#include "unclean/eval.hpp"
#include "unclean/poison.hpp"
#include "unclean/runstore.hpp"
#include "unclean/synthetic.hpp"

namespace unclean {

struct ResultRow {
  std::string run_id, experiment, dataset, model, strategy, stage;
  uint64_t seed = 0;
  double acc_retain = 0.0, acc_forget = 0.0, asr = 0.0;
};

std::string results_csv_header();
std::vector<std::string> result_row_cells(const ResultRow& row);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Baseline pipeline stages. Each enforces its upstream dependency, loops over
// cfg.seeds, persists artifacts into the run dir, and is a no-op when already
// done unless force. Stage-wise execution applies to the baseline experiment;
// other kinds run end-to-end via run_all.
void stage_gen_trigger(RunStore& store, bool force);
void stage_plan(RunStore& store, bool force);
void stage_train(RunStore& store, bool force);
void stage_unlearn(RunStore& store, bool force);
void stage_evaluate(RunStore& store, bool force);
void stage_defend(RunStore& store, bool force);

// Chains every stage for the configured experiment kind. Non-baseline kinds
// (selection_compare, rate_sweep, arch_transfer, ablation) execute their grid
// here and persist per-cell artifacts plus reports/results.csv.
void run_all(RunStore& store, bool force);

// Regenerates the summary table purely from persisted CSVs (no recomputation).
std::string stage_report(RunStore& store);

// One pipeline cell run fully in memory; the building block of the
// experiment grids and of the acceptance suite.
struct CellSpec {
  std::string experiment_tag;          // value for the results CSV column
  std::string victim_arch;             // architecture trained as the victim
  std::string trigger_mode = "optimized";  // optimized | random
  SelectMode select_mode = SelectMode::least_similar;
  double percentage = 0.05;
  uint64_t seed = 1;
  bool with_unlearn = true;
};

struct CellResult {
  std::vector<ResultRow> rows;   // before + per-strategy after
  FrequencyTrigger trigger;
  PoisonPlan plan;
  std::vector<VictimEpoch> train_log;
};

CellResult run_cell(const ExperimentConfig& cfg, const Dataset& data, const CellSpec& cell);

}  // namespace unclean
