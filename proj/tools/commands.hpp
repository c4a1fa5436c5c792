#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnma/corpus.hpp"
#include "nnma/trainer.hpp"

namespace nnma::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

// Bad flags, invalid configuration, unreadable or malformed inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Verification or metric failure (exit code 1).
class CommandFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> embeddings_path;
  std::filesystem::path output_dir = "run";
  TaskSpec task;
  Hyperparams hp;

  // Applies one `key=value` setting; unknown keys and bad values throw
  // UsageError. Relative paths are resolved against `base`.
  void set(const std::string& key, const std::string& value,
           const std::filesystem::path& base = {});
  // data_dir/train.tsv and dev.tsv exist, embeddings file exists, hp valid.
  void validate() const;
};

// Flat `key = value` lines; `#` starts a comment line. Keys:
//   data_dir, embeddings_path, output_dir, task, momentum, learning_rate,
//   embedding_learning_rate, dropout, hidden_dim (d), memory_dim (d_m),
//   embedding_dim (D_e), levels (K), max_epochs, patience, seed
RunConfig read_run_config(std::istream& in, const std::filesystem::path& base = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct TrainResult {
  TrainingReport report;
  double train_accuracy = 0.0;
  double train_macro_f1 = 0.0;
  std::filesystem::path checkpoint;
};

// Writes model.ckpt, train.log and report.json into config.output_dir.
TrainResult cmd_train(const RunConfig& config, std::ostream& log);

struct EvalResult {
  std::vector<std::string> labels;
  ClassificationMetrics metrics;
};

EvalResult cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& data,
                    const TaskSpec& task, const std::optional<std::filesystem::path>& out_path,
                    std::ostream& out);

struct AnalyzeOptions {
  std::vector<std::size_t> ids;
  std::filesystem::path out_dir = "analysis";
  bool reverse_kl = false;
};

struct AnalyzeResult {
  bool kl_computed = false;
  std::vector<std::filesystem::path> files;
};

// Writes kl_report.txt (or a notice for single-level models) plus
// heatmap_<id>.csv / heatmap_<id>.ppm for every selected instance index.
AnalyzeResult cmd_analyze(const std::filesystem::path& model_path,
                          const std::filesystem::path& data, const AnalyzeOptions& options,
                          std::ostream& out);

struct GradcheckOptions {
  std::size_t hidden_dim = 3;
  std::size_t memory_dim = 4;
  std::size_t embedding_dim = 3;
  std::size_t levels = 3;
  std::size_t max_len = 5;
  std::size_t vocab_size = 20;
  std::size_t classes = 4;
  std::size_t instances = 2;
  std::uint64_t seed = 7;
  double step = 1e-4;
  double threshold = 1e-4;
  bool inject_fault = false;

  // Comma-separated `key=value` list: d, d_m, D_e, K, L, V, n, N, seed.
  void parse_dims(const std::string& spec);
};

struct GroupError {
  std::string group;
  double max_relative_error = 0.0;
  std::size_t entries = 0;
};

struct GradcheckResult {
  std::vector<GroupError> groups;
  double worst = 0.0;
  bool passed = false;
};

GradcheckResult cmd_gradcheck(const GradcheckOptions& options, std::ostream& out);

struct SynthResult {
  std::size_t train = 0, dev = 0, test = 0;
};

SynthResult cmd_synth(const SynthOptions& options, const std::filesystem::path& out_dir,
                      std::ostream& out);

// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nnma::cli
