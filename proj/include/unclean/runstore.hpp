#pragma once

#include <memory>
#include <string>
#include <vector>

#include "unclean/config.hpp"
#include "unclean/nn.hpp"

namespace unclean {

// One run directory: runs/<run_id>/{manifest.json, config.json, checkpoints/,
// triggers/, plans/, reports/, plots/}. The manifest lists every artifact and
// the completion state of each stage.
class RunStore {
 public:
  // Creates the directory tree, writes config.json and a fresh manifest.
  // run_id defaults to <utc-timestamp>-<config-hash-prefix>.
  static RunStore create(const ExperimentConfig& cfg, std::string run_id = "");
  // Opens an existing run; throws DependencyError when absent/malformed.
  static RunStore open(const std::string& root, const std::string& run_id);

  const std::string& run_id() const { return run_id_; }
  const std::string& dir() const { return dir_; }
  std::string path(const std::string& rel) const;
  const ExperimentConfig& config() const { return cfg_; }
  const std::string& config_hash() const { return hash_; }

  bool stage_done(const std::string& stage) const;
  // Marks the stage complete and registers its artifact files (paths relative
  // to the run dir).
  void mark_stage_done(const std::string& stage, const std::vector<std::string>& artifacts);
  void clear_stage(const std::string& stage);
  std::vector<std::string> artifacts() const;

  void save_checkpoint(Classifier& model, const std::string& stage, uint64_t seed) const;
  std::unique_ptr<Classifier> load_checkpoint(const std::string& stage, uint64_t seed) const;
  bool has_checkpoint(const std::string& stage, uint64_t seed) const;
  std::string checkpoint_rel(const std::string& stage, uint64_t seed) const;

 private:
  RunStore() = default;
  void write_manifest() const;
  void read_manifest();

  std::string root_, run_id_, dir_, hash_;
  ExperimentConfig cfg_;
  std::vector<std::string> done_stages_;
  std::vector<std::string> artifacts_;
  std::string created_at_;
};

// Exclusive lock on a run directory; a second concurrent holder is rejected
// with DependencyError. Released on destruction.
class RunLock {
 public:
  explicit RunLock(const std::string& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string lock_path_;
};

// Deterministic CSV emission (format_double everywhere).
struct CsvWriter {
  explicit CsvWriter(const std::string& path, const std::string& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::string buffer_;
  bool closed_ = false;
};

std::string utc_timestamp();

}  // namespace unclean
