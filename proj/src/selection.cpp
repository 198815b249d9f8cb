#include "unclean/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unclean/common.hpp"

namespace unclean {

using nlohmann::json;

std::vector<std::vector<double>> embed_batch(Classifier& shadow, const std::vector<ImageTensor>& images) {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  for (const ImageTensor& img : images) out.push_back(shadow.embed(img));
  return out;
}

std::vector<double> centroid(const std::vector<std::vector<double>>& embeddings) {
  if (embeddings.empty()) throw ConfigError("centroid: no embeddings");
  std::vector<double> mean(embeddings.front().size(), 0.0);
  for (const auto& e : embeddings) {
    if (e.size() != mean.size()) throw ConfigError("centroid: ragged embeddings");
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
  }
  const double inv = 1.0 / static_cast<double>(embeddings.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::vector<ScoredIndex> score_forget_pool(const std::vector<std::vector<double>>& embeddings,
                                           const std::vector<double>& target_centroid,
                                           size_t* zero_norm_count) {
  double c_norm = 0.0;
  for (double v : target_centroid) c_norm += v * v;
  c_norm = std::sqrt(c_norm);
  if (c_norm < 1e-12) throw ConfigError("score_forget_pool: zero-norm centroid");
  size_t zeros = 0;
  std::vector<ScoredIndex> out;
  out.reserve(embeddings.size());
  for (size_t i = 0; i < embeddings.size(); ++i) {
    const auto& e = embeddings[i];
    if (e.size() != target_centroid.size()) throw ConfigError("score_forget_pool: ragged embeddings");
    double dot = 0.0, e_norm = 0.0;
    for (size_t k = 0; k < e.size(); ++k) {
      dot += e[k] * target_centroid[k];
      e_norm += e[k] * e[k];
    }
    e_norm = std::sqrt(e_norm);
    double score = 0.0;
    if (e_norm < 1e-12) {
      ++zeros;  // degenerate embedding: similarity defined as 0
    } else {
      score = dot / (e_norm * c_norm);
    }
    out.push_back({i, score});
  }
  if (zero_norm_count) *zero_norm_count = zeros;
  return out;
}

SelectMode select_mode_from_string(const std::string& name) {
  if (name == "least_similar") return SelectMode::least_similar;
  if (name == "most_similar") return SelectMode::most_similar;
  if (name == "random") return SelectMode::random;
  throw ConfigError("unknown selection mode '" + name + "'");
}

std::string to_string(SelectMode mode) {
  switch (mode) {
    case SelectMode::least_similar: return "least_similar";
    case SelectMode::most_similar: return "most_similar";
    case SelectMode::random: return "random";
  }
  return "least_similar";
}

std::vector<size_t> select_poison_indices(const std::vector<ScoredIndex>& scored, double percentage,
                                          SelectMode mode, uint64_t seed) {
  if (!(percentage > 0.0) || percentage > 1.0)
    throw ConfigError("select_poison_indices: percentage must lie in (0, 1]");
  const size_t n = scored.size();
  const size_t k = std::min<size_t>(
      n, static_cast<size_t>(std::llround(percentage * static_cast<double>(n))));

  std::vector<size_t> out;
  if (mode == SelectMode::random) {
    Rng rng(seed ^ 0x73656c656374ULL);
    out = rng.sample_without_replacement(n, k);
  } else {
    std::vector<ScoredIndex> order = scored;
    const bool most = mode == SelectMode::most_similar;
    std::stable_sort(order.begin(), order.end(), [most](const ScoredIndex& a, const ScoredIndex& b) {
      if (a.score != b.score) return most ? a.score > b.score : a.score < b.score;
      return a.index < b.index;  // deterministic tie rule
    });
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) out.push_back(order[i].index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

json indices_to_json(const std::vector<size_t>& v) {
  json arr = json::array();
  for (size_t i : v) arr.push_back(i);
  return arr;
}

std::vector<size_t> indices_from_json(const json& arr, const char* field) {
  if (!arr.is_array()) throw ConfigError(std::string("plan: ") + field + " must be an array");
  std::vector<size_t> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_unsigned()) throw ConfigError(std::string("plan: ") + field + " must hold unsigned ints");
    out.push_back(v.get<size_t>());
  }
  return out;
}

}  // namespace

std::string plan_to_json(const PoisonPlan& plan) {
  json j;
  j["version"] = plan.version;
  j["seed"] = plan.seed;
  j["target_label"] = plan.target_label;
  j["forget_class"] = plan.forget_class;
  j["percentage"] = plan.percentage;
  j["target_frac"] = plan.target_frac;
  j["poison_indxs"] = indices_to_json(plan.poison_indxs);
  j["random_indxs"] = indices_to_json(plan.random_indxs);
  j["score_digest"] = plan.score_digest;
  return j.dump(2) + "\n";
}

PoisonPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: invalid JSON: ") + e.what());
  }
  PoisonPlan plan;
  try {
    plan.version = j.at("version").get<int>();
    if (plan.version != 1) throw ConfigError("plan: unsupported version");
    plan.seed = j.at("seed").get<uint64_t>();
    plan.target_label = j.at("target_label").get<int>();
    plan.forget_class = j.at("forget_class").get<int>();
    plan.percentage = j.at("percentage").get<double>();
    plan.target_frac = j.at("target_frac").get<double>();
    plan.poison_indxs = indices_from_json(j.at("poison_indxs"), "poison_indxs");
    plan.random_indxs = indices_from_json(j.at("random_indxs"), "random_indxs");
    plan.score_digest = j.at("score_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: missing or mistyped field: ") + e.what());
  }
  return plan;
}

void save_plan(const PoisonPlan& plan, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write plan file: " + path);
  os << plan_to_json(plan);
  if (!os) throw ConfigError("short write on plan file: " + path);
}

PoisonPlan load_plan(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open plan file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return plan_from_json(ss.str());
}

PoisonPlan build_poison_plan(Classifier& shadow, const LabeledSet& train, const PlanConfig& cfg) {
  if (cfg.target_label == cfg.forget_class)
    throw ConfigError("plan: target_label must differ from forget_class");
  if (!(cfg.percentage > 0.0) || cfg.percentage > 1.0)
    throw ConfigError("plan: percentage must lie in (0, 1]");
  if (cfg.target_frac >= 0.0 && (!(cfg.target_frac > 0.0) || cfg.target_frac > 1.0))
    throw ConfigError("plan: target_frac must lie in (0, 1]");
  std::vector<size_t> forget_rows = indices_of_class(train, cfg.forget_class);
  std::vector<size_t> target_rows = indices_of_class(train, cfg.target_label);
  if (forget_rows.empty()) throw ConfigError("plan: forget class has no samples");
  if (target_rows.empty()) throw ConfigError("plan: target class has no samples");

  std::vector<ImageTensor> target_imgs, forget_imgs;
  target_imgs.reserve(target_rows.size());
  for (size_t r : target_rows) target_imgs.push_back(train.images[r]);
  forget_imgs.reserve(forget_rows.size());
  for (size_t r : forget_rows) forget_imgs.push_back(train.images[r]);

  std::vector<double> proto = centroid(embed_batch(shadow, target_imgs));
  size_t zero_norms = 0;
  std::vector<ScoredIndex> scored =
      score_forget_pool(embed_batch(shadow, forget_imgs), proto, &zero_norms);

  std::vector<size_t> picked = select_poison_indices(scored, cfg.percentage, cfg.mode, cfg.seed);

  PoisonPlan plan;
  plan.seed = cfg.seed;
  plan.target_label = cfg.target_label;
  plan.forget_class = cfg.forget_class;
  plan.percentage = cfg.percentage;

  // Default target fraction: make the overall triggered share of the training
  // set come out near `percentage`, with a small floor so some target rows
  // always carry the trigger (the plan must bind the trigger to the target).
  double tf = cfg.target_frac;
  if (tf < 0.0) {
    const double total = cfg.percentage * static_cast<double>(train.size());
    const double from_forget = static_cast<double>(picked.size());
    tf = (total - from_forget) / static_cast<double>(target_rows.size());
    tf = std::max(0.05, std::min(1.0, tf));
  }
  plan.target_frac = tf;

  plan.poison_indxs.reserve(picked.size());
  for (size_t p : picked) plan.poison_indxs.push_back(forget_rows[p]);

  size_t n_target = static_cast<size_t>(std::llround(tf * static_cast<double>(target_rows.size())));
  n_target = std::min(std::max<size_t>(n_target, 1), target_rows.size());
  Rng rng(cfg.seed ^ 0x706c616eULL);
  std::vector<size_t> t_pick = rng.sample_without_replacement(target_rows.size(), n_target);
  std::sort(t_pick.begin(), t_pick.end());
  plan.random_indxs.reserve(t_pick.size());
  for (size_t p : t_pick) plan.random_indxs.push_back(target_rows[p]);

  uint64_t h = 1469598103934665603ULL;
  for (const ScoredIndex& s : scored) {
    h = fnv1a64(&s.index, sizeof(s.index), h);
    h = fnv1a64(&s.score, sizeof(s.score), h);
  }
  plan.score_digest = hex64(h);
  return plan;
}

}  // namespace unclean
