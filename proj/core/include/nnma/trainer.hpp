#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnma/corpus.hpp"
#include "nnma/metrics.hpp"
#include "nnma/model.hpp"
#include "nnma/optimizer.hpp"
#include "nnma/rng.hpp"

namespace nnma {

struct Hyperparams {
  double momentum = 0.9;                  // delta
  double learning_rate = 0.01;            // lambda
  double embedding_learning_rate = 0.002; // lambda_e
  double dropout = 0.1;                   // q
  std::size_t hidden_dim = 50;            // d
  std::size_t memory_dim = 200;           // d_m
  std::size_t embedding_dim = 50;         // D_e
  std::size_t levels = 2;                 // K
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
  ModelDims dims(std::size_t classes) const {
    return {embedding_dim, hidden_dim, memory_dim, levels, classes};
  }
};

// Seed of the training stream (shuffling, dropout). Model initialization
// uses Rng(seed) directly; the training stream is Rng(training_seed(seed)).
constexpr std::uint64_t training_seed(std::uint64_t seed) { return seed ^ 0xd1b54a32d192ed03ULL; }

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-instance weights. Binary tasks use N / (C * N_c) for an instance of
// class c (C = 2); four-way training uses weight 1 everywhere. Labels must
// already be mapped by apply_task.
std::vector<double> reweight(const Dataset& train, const TaskSpec& task);

struct LabeledPair {
  EncodedPair pair;
  std::size_t label = 0;
};

std::vector<LabeledPair> encode_dataset(const NnmaModel& model, const Dataset& ds);

struct Evaluation {
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> golds;
  ClassificationMetrics metrics;
};

// Evaluation-mode forward pass (no dropout) over every instance.
Evaluation evaluate(const NnmaModel& model, const std::vector<LabeledPair>& data);
Evaluation evaluate(const NnmaModel& model, const Dataset& ds);

// Optimizer velocities plus the training stream, i.e. everything besides the
// parameters that determines how training continues.
struct TrainerState {
  OptimizerState optimizer;
  Rng rng;
  std::uint64_t steps = 0;
};

// Per-instance SGD with momentum over two parameter groups.
class Trainer {
 public:
  Trainer(NnmaModel& model, const Hyperparams& hp);
  Trainer(NnmaModel& model, const Hyperparams& hp, TrainerState state);

  // Fresh dropout mask, forward, weighted loss, backward, finiteness check,
  // one momentum step per group. Returns the loss. Throws TrainingError on a
  // non-finite loss or gradient.
  double step(const LabeledPair& example, double weight);

  const TrainerState& state() const { return state_; }
  TrainerState& state() { return state_; }

 private:
  NnmaModel& model_;
  Hyperparams hp_;
  std::vector<Tensor> network_;
  std::vector<Tensor> embedding_;
  TrainerState state_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean weighted loss over the epoch
  double dev_macro_f1 = 0.0;
  double dev_accuracy = 0.0;
  bool improved = false;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_macro_f1 = 0.0;
  double best_dev_accuracy = 0.0;
  std::uint64_t steps = 0;

  std::string to_log() const;  // one line per epoch
};

// Epoch loop: shuffle, one Trainer::step per instance, dev macro-F1 after
// every epoch. Stops once `patience` consecutive epochs fail to improve on
// the best dev macro-F1 or after max_epochs, then restores the best
// parameters. `train` and `dev` must already be mapped by apply_task. If
// `log` is set, each epoch line is written to it as it completes.
TrainingReport fit(NnmaModel& model, const Dataset& train, const Dataset& dev,
                   const Hyperparams& hp, const TaskSpec& task, std::ostream* log = nullptr);

std::string format_epoch(const EpochRecord& r);

}  // namespace nnma
