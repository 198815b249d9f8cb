#pragma once

#include <string>
#include <vector>

#include "unclean/image.hpp"
#include "unclean/nn.hpp"

namespace unclean {

// Penultimate-layer embeddings from the shadow model.
std::vector<std::vector<double>> embed_batch(Classifier& shadow, const std::vector<ImageTensor>& images);

// Mean embedding of the given images (the target-class prototype).
std::vector<double> centroid(const std::vector<std::vector<double>>& embeddings);

struct ScoredIndex {
  size_t index = 0;     // position in the forget pool
  double score = 0.0;   // cosine similarity to the target centroid
};

// Cosine similarity of each forget-pool embedding against the centroid.
// Zero-norm embeddings score 0 and are counted in *zero_norm_count if given;
// a zero centroid violates the precondition and is rejected.
std::vector<ScoredIndex> score_forget_pool(const std::vector<std::vector<double>>& embeddings,
                                           const std::vector<double>& target_centroid,
                                           size_t* zero_norm_count = nullptr);

enum class SelectMode { least_similar, most_similar, random };
SelectMode select_mode_from_string(const std::string& name);
std::string to_string(SelectMode mode);

// round(percentage * N) pool positions, sorted ascending. least/most_similar
// order by score with ties broken by ascending index; random ignores scores
// and samples uniformly under the seed.
std::vector<size_t> select_poison_indices(const std::vector<ScoredIndex>& scored, double percentage,
                                          SelectMode mode, uint64_t seed = 0);

// Everything downstream needs to rebuild the poisoned view deterministically.
// Indices are rows of the full training set (poison_indxs stay inside the
// forget class, random_indxs inside the target class).
struct PoisonPlan {
  int version = 1;
  uint64_t seed = 0;
  int target_label = 0;
  int forget_class = 0;
  double percentage = 0.0;    // fraction of the forget class poisoned
  double target_frac = 0.0;   // fraction of the target class triggered
  std::vector<size_t> poison_indxs;   // forget-class rows that get the trigger
  std::vector<size_t> random_indxs;   // target-class rows that get the trigger
  std::string score_digest;           // hash of the similarity scores used
};

std::string plan_to_json(const PoisonPlan& plan);
PoisonPlan plan_from_json(const std::string& text);
void save_plan(const PoisonPlan& plan, const std::string& path);
PoisonPlan load_plan(const std::string& path);

struct PlanConfig {
  int target_label = 0;
  int forget_class = 0;
  double percentage = 0.05;   // fraction of forget class to poison, (0, 1]
  double target_frac = -1.0;  // (0, 1]; <0 derives it so total poisoned ~= percentage of train
  SelectMode mode = SelectMode::least_similar;
  uint64_t seed = 0;
};

// Scores the forget class against the target centroid with the shadow model
// and picks poisoned rows on both sides. Throws ConfigError when the classes
// coincide, either class is empty, or fractions are out of range.
PoisonPlan build_poison_plan(Classifier& shadow, const LabeledSet& train, const PlanConfig& cfg);

}  // namespace unclean
