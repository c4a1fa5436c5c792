#include "nnma/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace nnma {

namespace {

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::vector<std::vector<double>> snapshot_values(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

void restore_values(std::vector<Tensor>& params, const std::vector<std::vector<double>>& saved) {
  for (std::size_t k = 0; k < params.size(); ++k)
    std::copy(saved[k].begin(), saved[k].end(), params[k].mutable_values().begin());
}

}  // namespace

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("hyperparameters: " + what); };
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(embedding_learning_rate > 0.0)) fail("embedding_learning_rate must be positive");
  if (levels < 1) fail("levels must be >= 1");
  if (hidden_dim < 1 || memory_dim < 1 || embedding_dim < 1) fail("dimensions must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
}

std::vector<double> reweight(const Dataset& train, const TaskSpec& task) {
  if (train.empty()) throw std::invalid_argument("reweight: empty training set");
  const std::size_t N = train.size();
  if (task.mode != TaskMode::binary) return std::vector<double>(N, 1.0);

  const auto labels = task.label_set(train);
  auto counts = train.label_counts();
  for (const auto& l : labels)
    if (counts[l] == 0)
      throw std::invalid_argument("reweight: class '" + l + "' has no training instances");
  const double C = static_cast<double>(labels.size());
  std::vector<double> w;
  w.reserve(N);
  for (const auto& inst : train.instances) {
    auto it = counts.find(inst.label);
    if (std::find(labels.begin(), labels.end(), inst.label) == labels.end())
      throw std::invalid_argument("reweight: label '" + inst.label + "' is not part of the task");
    w.push_back(static_cast<double>(N) / (C * static_cast<double>(it->second)));
  }
  return w;
}

std::vector<LabeledPair> encode_dataset(const NnmaModel& model, const Dataset& ds) {
  std::vector<LabeledPair> out;
  out.reserve(ds.size());
  for (const auto& inst : ds.instances) out.push_back({model.encode(inst), model.label_index(inst.label)});
  return out;
}

Evaluation evaluate(const NnmaModel& model, const std::vector<LabeledPair>& data) {
  Evaluation ev;
  ev.predictions.reserve(data.size());
  ev.golds.reserve(data.size());
  for (const auto& ex : data) {
    ev.predictions.push_back(forward(model, ex.pair).predicted_label);
    ev.golds.push_back(ex.label);
  }
  ev.metrics = macro_f1(ev.predictions, ev.golds, model.dims.classes);
  return ev;
}

Evaluation evaluate(const NnmaModel& model, const Dataset& ds) {
  return evaluate(model, encode_dataset(model, ds));
}

// ---- Trainer ------------------------------------------------------------------

Trainer::Trainer(NnmaModel& model, const Hyperparams& hp)
    : Trainer(model, hp, TrainerState{{}, Rng(training_seed(hp.seed)), 0}) {}

Trainer::Trainer(NnmaModel& model, const Hyperparams& hp, TrainerState state)
    : model_(model),
      hp_(hp),
      network_(model.network_parameters()),
      embedding_{model.embeddings.weights},
      state_(std::move(state)) {
  hp_.validate();
  if (state_.optimizer.network.buffers.empty())
    state_.optimizer.network = VelocityBuffers::for_parameters(network_);
  if (state_.optimizer.embeddings.buffers.empty())
    state_.optimizer.embeddings = VelocityBuffers::for_parameters(embedding_);
}

double Trainer::step(const LabeledPair& example, double weight) {
  model_.zero_grad();
  const Tensor mask = dropout_mask(6 * model_.dims.hidden_dim, hp_.dropout, state_.rng);
  const Prediction pred = forward(model_, example.pair, &mask);
  const Tensor l = loss(pred, example.label, weight);
  const double value = l.item();
  if (!std::isfinite(value)) throw TrainingError("non-finite loss");
  l.backward();
  for (const auto& p : model_.parameters())
    if (!all_finite(p.grad())) throw TrainingError("non-finite gradient");
  sgd_momentum_step(network_, state_.optimizer.network, hp_.learning_rate, hp_.momentum);
  sgd_momentum_step(embedding_, state_.optimizer.embeddings, hp_.embedding_learning_rate,
                    hp_.momentum);
  ++state_.steps;
  return value;
}

// ---- fit ------------------------------------------------------------------------

std::string format_epoch(const EpochRecord& r) {
  return "epoch=" + std::to_string(r.epoch) + " train_loss=" + num(r.train_loss) +
         " dev_macro_f1=" + num(r.dev_macro_f1) + " dev_accuracy=" + num(r.dev_accuracy) +
         (r.improved ? " best" : "");
}

std::string TrainingReport::to_log() const {
  std::string out;
  for (const auto& r : epochs) out += format_epoch(r) + '\n';
  return out;
}

TrainingReport fit(NnmaModel& model, const Dataset& train, const Dataset& dev,
                   const Hyperparams& hp, const TaskSpec& task, std::ostream* log) {
  hp.validate();
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  if (dev.empty()) throw std::invalid_argument("fit: empty development set");
  if (model.dims != hp.dims(model.dims.classes))
    throw std::invalid_argument("fit: model dimensions do not match hyperparameters");

  const auto train_data = encode_dataset(model, train);
  const auto dev_data = encode_dataset(model, dev);
  const auto weights = reweight(train, task);

  Trainer trainer(model, hp);
  auto params = model.parameters();
  auto best = snapshot_values(params);
  TrainingReport report;
  bool have_best = false;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, trainer.state().rng);
    double total = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t idx = order[pos];
      try {
        total += trainer.step(train_data[idx], weights[idx]);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", training instance " + std::to_string(idx));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    const auto ev = evaluate(model, dev_data);
    rec.dev_macro_f1 = ev.metrics.macro_f1;
    rec.dev_accuracy = ev.metrics.accuracy;
    rec.improved = !have_best || rec.dev_macro_f1 > report.best_dev_macro_f1;
    if (rec.improved) {
      have_best = true;
      since_best = 0;
      report.best_epoch = epoch;
      report.best_dev_macro_f1 = rec.dev_macro_f1;
      report.best_dev_accuracy = rec.dev_accuracy;
      best = snapshot_values(params);
    } else {
      ++since_best;
    }
    report.epochs.push_back(rec);
    if (log) *log << format_epoch(rec) << std::endl;
    if (since_best >= hp.patience) break;
  }
  restore_values(params, best);
  report.steps = trainer.state().steps;
  return report;
}

}  // namespace nnma
