#include "unclean/runstore.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unclean/common.hpp"

namespace unclean {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

RunStore RunStore::create(const ExperimentConfig& cfg, std::string run_id) {
  RunStore store;
  store.cfg_ = cfg;
  store.hash_ = unclean::config_hash(cfg);
  store.root_ = cfg.output_root;
  store.created_at_ = utc_timestamp();
  if (run_id.empty()) run_id = store.created_at_ + "-" + store.hash_.substr(0, 8);
  store.run_id_ = run_id;
  store.dir_ = (fs::path(store.root_) / run_id).string();
  if (fs::exists(store.dir_))
    throw ConfigError("run directory already exists: " + store.dir_ +
                      " (open it instead, or pick another --run-id)");
  for (const char* sub : {"", "checkpoints", "triggers", "plans", "reports", "plots"})
    fs::create_directories(fs::path(store.dir_) / sub);
  save_config(cfg, store.path("config.json"));
  store.write_manifest();
  return store;
}

RunStore RunStore::open(const std::string& root, const std::string& run_id) {
  RunStore store;
  store.root_ = root;
  store.run_id_ = run_id;
  store.dir_ = (fs::path(root) / run_id).string();
  if (!fs::exists(store.dir_))
    throw DependencyError("run directory not found: " + store.dir_ +
                          "; create it first (e.g. via the 'plan' or 'run' subcommand)");
  store.cfg_ = load_config(store.path("config.json"));
  store.hash_ = unclean::config_hash(store.cfg_);
  store.read_manifest();
  return store;
}

std::string RunStore::path(const std::string& rel) const {
  return (fs::path(dir_) / rel).string();
}

bool RunStore::stage_done(const std::string& stage) const {
  return std::find(done_stages_.begin(), done_stages_.end(), stage) != done_stages_.end();
}

void RunStore::mark_stage_done(const std::string& stage, const std::vector<std::string>& files) {
  if (!stage_done(stage)) done_stages_.push_back(stage);
  for (const std::string& f : files)
    if (std::find(artifacts_.begin(), artifacts_.end(), f) == artifacts_.end())
      artifacts_.push_back(f);
  write_manifest();
}

void RunStore::clear_stage(const std::string& stage) {
  done_stages_.erase(std::remove(done_stages_.begin(), done_stages_.end(), stage),
                     done_stages_.end());
  write_manifest();
}

std::vector<std::string> RunStore::artifacts() const { return artifacts_; }

void RunStore::write_manifest() const {
  json j;
  j["run_id"] = run_id_;
  j["config_hash"] = hash_;
  j["code_version"] = "0.1.0";
  j["created_at"] = created_at_;
  j["config_file"] = "config.json";
  j["stages_done"] = done_stages_;
  j["artifacts"] = artifacts_;
  std::ofstream os(path("manifest.json"), std::ios::trunc);
  if (!os) throw ConfigError("cannot write manifest in " + dir_);
  os << j.dump(2) << "\n";
}

void RunStore::read_manifest() {
  std::ifstream is(path("manifest.json"));
  if (!is) throw DependencyError("manifest.json missing in " + dir_ + "; the run is corrupt");
  json j;
  try {
    is >> j;
    created_at_ = j.value("created_at", "");
    done_stages_ = j.value("stages_done", std::vector<std::string>{});
    artifacts_ = j.value("artifacts", std::vector<std::string>{});
    const std::string recorded = j.value("config_hash", "");
    if (!recorded.empty() && recorded != hash_)
      throw DependencyError("config.json was edited after the run was created (hash " + hash_ +
                            " != manifest " + recorded + "); start a fresh run");
  } catch (const json::exception& e) {
    throw DependencyError(std::string("manifest.json malformed: ") + e.what());
  }
}

std::string RunStore::checkpoint_rel(const std::string& stage, uint64_t seed) const {
  std::string safe = stage;
  std::replace(safe.begin(), safe.end(), '/', '_');
  return "checkpoints/" + safe + "_seed" + std::to_string(seed) + ".bin";
}

namespace {
constexpr uint32_t kCkptMagic = 0x554e434bu;  // "UNCK"
constexpr uint32_t kCkptVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DependencyError("checkpoint truncated: " + path);
  return v;
}
}  // namespace

void RunStore::save_checkpoint(Classifier& model, const std::string& stage, uint64_t seed) const {
  const std::string p = path(checkpoint_rel(stage, seed));
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write checkpoint: " + p);
  put(os, kCkptMagic);
  put(os, kCkptVersion);
  const std::string& arch = model.arch();
  put(os, uint32_t(arch.size()));
  os.write(arch.data(), std::streamsize(arch.size()));
  const TensorShape in = model.input_shape();
  put(os, int32_t(in.h));
  put(os, int32_t(in.w));
  put(os, int32_t(in.c));
  put(os, int32_t(model.num_classes()));
  put(os, uint64_t(model.init_seed()));
  const std::vector<double> params = model.snapshot();
  put(os, uint64_t(params.size()));
  for (double v : params) put(os, v);
  if (!os) throw ConfigError("short write on checkpoint: " + p);
}

bool RunStore::has_checkpoint(const std::string& stage, uint64_t seed) const {
  return fs::exists(path(checkpoint_rel(stage, seed)));
}

std::unique_ptr<Classifier> RunStore::load_checkpoint(const std::string& stage, uint64_t seed) const {
  const std::string p = path(checkpoint_rel(stage, seed));
  std::ifstream is(p, std::ios::binary);
  if (!is)
    throw DependencyError("missing checkpoint '" + checkpoint_rel(stage, seed) +
                          "'; run the earlier stage first");
  if (get<uint32_t>(is, p) != kCkptMagic) throw DependencyError("not a checkpoint file: " + p);
  if (get<uint32_t>(is, p) != kCkptVersion)
    throw DependencyError("unsupported checkpoint version in " + p);
  const uint32_t arch_len = get<uint32_t>(is, p);
  if (arch_len > 64) throw DependencyError("checkpoint arch name implausible in " + p);
  std::string arch(arch_len, '\0');
  is.read(arch.data(), arch_len);
  const int h = get<int32_t>(is, p);
  const int w = get<int32_t>(is, p);
  const int c = get<int32_t>(is, p);
  const int classes = get<int32_t>(is, p);
  const uint64_t init_seed = get<uint64_t>(is, p);
  const uint64_t count = get<uint64_t>(is, p);
  NetSpec spec = make_net_spec(arch, {h, w, c}, classes);
  auto model = std::make_unique<Classifier>(spec, init_seed);
  if (model->param_count() != count)
    throw DependencyError("checkpoint parameter count mismatch in " + p);
  std::vector<double> params(count);
  for (double& v : params) v = get<double>(is, p);
  model->restore(params);
  return model;
}

RunLock::RunLock(const std::string& run_dir) {
  lock_path_ = (fs::path(run_dir) / ".lock").string();
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw DependencyError("run directory is locked by another process (" + lock_path_ +
                            "); wait for it or delete the stale lock");
    throw DependencyError("cannot create lock file " + lock_path_ + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() { ::unlink(lock_path_.c_str()); }

CsvWriter::CsvWriter(const std::string& path, const std::string& header) : path_(path) {
  buffer_ = header + "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ += ",";
    buffer_ += cells[i];
  }
  buffer_ += "\n";
}

void CsvWriter::close() {
  if (closed_) return;
  std::ofstream os(path_, std::ios::trunc);
  if (!os) throw ConfigError("cannot write CSV: " + path_);
  os << buffer_;
  if (!os) throw ConfigError("short write on CSV: " + path_);
  closed_ = true;
}

}  // namespace unclean
