#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnma/analysis.hpp"
#include "nnma/checkpoint.hpp"
#include "nnma/embeddings.hpp"
#include "nnma/gradcheck.hpp"
#include "nnma/model.hpp"

namespace nnma::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError("invalid value '" + value + "' for " + key);
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

Dataset load_split(const fs::path& path, const std::string& split) {
  try {
    return load_tsv(path, split);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  } catch (const std::ios_base::failure& e) {
    throw UsageError(e.what());
  }
}

Checkpoint load_model(const fs::path& path) {
  try {
    return load_checkpoint(path);
  } catch (const CheckpointError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create directory " + dir.string());
}

ordered_json metrics_json(const ClassificationMetrics& m, const std::vector<std::string>& labels) {
  ordered_json per_class = ordered_json::object();
  for (std::size_t k = 0; k < labels.size(); ++k) per_class[labels[k]] = m.per_class_f1[k];
  return {{"macro_f1", m.macro_f1},
          {"accuracy", m.accuracy},
          {"instances", m.counts.total},
          {"per_class_f1", per_class}};
}

ordered_json hyperparams_json(const Hyperparams& hp) {
  return {{"momentum", hp.momentum},
          {"learning_rate", hp.learning_rate},
          {"embedding_learning_rate", hp.embedding_learning_rate},
          {"dropout", hp.dropout},
          {"hidden_dim", hp.hidden_dim},
          {"memory_dim", hp.memory_dim},
          {"embedding_dim", hp.embedding_dim},
          {"levels", hp.levels},
          {"max_epochs", hp.max_epochs},
          {"patience", hp.patience},
          {"seed", hp.seed}};
}

}  // namespace

// ---- configuration ----------------------------------------------------------

void RunConfig::set(const std::string& key, const std::string& value, const fs::path& base) {
  if (key == "data_dir") {
    data_dir = resolve(base, value);
  } else if (key == "embeddings_path") {
    if (value.empty())
      embeddings_path.reset();
    else
      embeddings_path = resolve(base, value);
  } else if (key == "output_dir") {
    output_dir = resolve(base, value);
  } else if (key == "task") {
    try {
      task = TaskSpec::parse(value);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (key == "momentum") {
    hp.momentum = parse_number<double>(key, value);
  } else if (key == "learning_rate") {
    hp.learning_rate = parse_number<double>(key, value);
  } else if (key == "embedding_learning_rate") {
    hp.embedding_learning_rate = parse_number<double>(key, value);
  } else if (key == "dropout") {
    hp.dropout = parse_number<double>(key, value);
  } else if (key == "hidden_dim" || key == "d") {
    hp.hidden_dim = parse_number<std::size_t>(key, value);
  } else if (key == "memory_dim" || key == "d_m") {
    hp.memory_dim = parse_number<std::size_t>(key, value);
  } else if (key == "embedding_dim" || key == "D_e") {
    hp.embedding_dim = parse_number<std::size_t>(key, value);
  } else if (key == "levels" || key == "K") {
    hp.levels = parse_number<std::size_t>(key, value);
  } else if (key == "max_epochs") {
    hp.max_epochs = parse_number<std::size_t>(key, value);
  } else if (key == "patience") {
    hp.patience = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    hp.seed = parse_number<std::uint64_t>(key, value);
  } else {
    throw UsageError("unknown configuration key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (data_dir.empty()) throw UsageError("data_dir is not set");
  if (!fs::is_directory(data_dir))
    throw UsageError("data_dir does not exist: " + data_dir.string());
  for (const char* f : {"train.tsv", "dev.tsv"})
    if (!fs::is_regular_file(data_dir / f))
      throw UsageError("missing " + (data_dir / f).string());
  if (embeddings_path && !fs::is_regular_file(*embeddings_path))
    throw UsageError("embeddings file does not exist: " + embeddings_path->string());
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

RunConfig read_run_config(std::istream& in, const fs::path& base) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)),
            base);
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return read_run_config(in, path.parent_path());
}

// ---- train --------------------------------------------------------------------

TrainResult cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const Hyperparams& hp = config.hp;
  Dataset train_raw = load_split(config.data_dir / "train.tsv", "train");
  Dataset dev_raw = load_split(config.data_dir / "dev.tsv", "dev");
  std::optional<Dataset> test_raw;
  if (fs::is_regular_file(config.data_dir / "test.tsv"))
    test_raw = load_split(config.data_dir / "test.tsv", "test");

  Dataset train, dev;
  std::optional<Dataset> test;
  try {
    train = apply_task(train_raw, config.task);
    dev = apply_task(dev_raw, config.task);
    if (test_raw) test = apply_task(*test_raw, config.task);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto labels = config.task.label_set(train);
  if (labels.size() < 2) throw UsageError("the training split has fewer than two classes");
  for (const Dataset* ds : {&dev, test ? &*test : nullptr}) {
    if (!ds) continue;
    for (const auto& l : ds->labels())
      if (std::find(labels.begin(), labels.end(), l) == labels.end())
        throw UsageError("label '" + l + "' in " + ds->split + " does not occur in train");
  }

  // Vocabulary: every training token; with pretrained vectors, also dev/test
  // tokens that the vector file covers.
  Vocabulary vocab;
  for (const auto& inst : train.instances) {
    for (const auto& t : inst.arg1) vocab.add(t);
    for (const auto& t : inst.arg2) vocab.add(t);
  }
  Rng rng(hp.seed);
  std::optional<EmbeddingMatrix> pretrained;
  if (config.embeddings_path) {
    std::set<std::string> file_tokens;
    {
      std::ifstream in(*config.embeddings_path);
      std::string line;
      while (std::getline(in, line)) file_tokens.insert(line.substr(0, line.find(' ')));
    }
    for (const Dataset* ds : {&dev, test ? &*test : nullptr}) {
      if (!ds) continue;
      for (const auto& inst : ds->instances)
        for (const auto* arg : {&inst.arg1, &inst.arg2})
          for (const auto& t : *arg)
            if (file_tokens.count(t)) vocab.add(t);
    }
    std::ifstream in(*config.embeddings_path);
    PretrainedStats stats;
    try {
      pretrained = load_pretrained(in, hp.embedding_dim, vocab, rng, &stats);
    } catch (const std::ios_base::failure& e) {
      throw UsageError(e.what());
    }
    log << "pretrained vectors: loaded=" << stats.loaded << " unused=" << stats.unused
        << " malformed=" << stats.malformed << " duplicates=" << stats.duplicates << '\n';
  }

  NnmaModel model = NnmaModel::create(hp.dims(labels.size()), std::move(vocab), labels, rng,
                                      std::move(pretrained));
  log << "train=" << train.size() << " dev=" << dev.size() << (test ? " test=" : "")
      << (test ? std::to_string(test->size()) : "") << " vocab=" << model.vocab.size()
      << " classes=" << labels.size() << " task=" << config.task.to_string() << '\n';

  ensure_dir(config.output_dir);
  TrainResult result;
  try {
    result.report = fit(model, train, dev, hp, config.task, &log);
  } catch (const TrainingError& e) {
    throw CommandFailure(e.what());
  }

  const auto train_eval = evaluate(model, train);
  const auto dev_eval = evaluate(model, dev);
  result.train_accuracy = train_eval.metrics.accuracy;
  result.train_macro_f1 = train_eval.metrics.macro_f1;
  result.checkpoint = config.output_dir / "model.ckpt";
  save_checkpoint(result.checkpoint, model);
  write_text(config.output_dir / "train.log", result.report.to_log());

  ordered_json epochs = ordered_json::array();
  for (const auto& e : result.report.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"dev_macro_f1", e.dev_macro_f1},
                      {"dev_accuracy", e.dev_accuracy}});
  ordered_json summary = {
      {"task", config.task.to_string()},
      {"labels", labels},
      {"hyperparameters", hyperparams_json(hp)},
      {"vocab_size", model.vocab.size()},
      {"steps", result.report.steps},
      {"best_epoch", result.report.best_epoch},
      {"best_dev_macro_f1", result.report.best_dev_macro_f1},
      {"epochs", epochs},
      {"train", metrics_json(train_eval.metrics, labels)},
      {"dev", metrics_json(dev_eval.metrics, labels)},
  };
  if (test) summary["test"] = metrics_json(evaluate(model, *test).metrics, labels);
  write_text(config.output_dir / "report.json", summary.dump(2) + "\n");

  log << "best_epoch=" << result.report.best_epoch
      << " best_dev_macro_f1=" << num(result.report.best_dev_macro_f1)
      << " train_accuracy=" << num(result.train_accuracy) << '\n'
      << "wrote " << result.checkpoint.string() << '\n';
  return result;
}

// ---- eval -----------------------------------------------------------------------

EvalResult cmd_eval(const fs::path& model_path, const fs::path& data, const TaskSpec& task,
                    const std::optional<fs::path>& out_path, std::ostream& out) {
  Checkpoint ckpt = load_model(model_path);
  const NnmaModel& model = ckpt.model;
  Dataset ds;
  try {
    ds = apply_task(load_split(data, data.stem().string()), task);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (task.mode == TaskMode::binary) {
    const auto expected = task.label_set(ds);
    if (expected != model.label_names)
      throw UsageError("task " + task.to_string() + " has labels {" + expected[0] + ", " +
                       expected[1] + "} but the checkpoint was trained for " +
                       std::to_string(model.label_names.size()) + " different classes");
  }
  for (const auto& l : ds.labels())
    if (std::find(model.label_names.begin(), model.label_names.end(), l) ==
        model.label_names.end())
      throw UsageError("label '" + l + "' is not one of the checkpoint's classes");

  EvalResult result;
  result.labels = model.label_names;
  result.metrics = evaluate(model, ds).metrics;

  out << "instances " << result.metrics.counts.total << '\n'
      << "macro_f1 " << num(result.metrics.macro_f1) << '\n'
      << "accuracy " << num(result.metrics.accuracy) << '\n';
  for (std::size_t k = 0; k < result.labels.size(); ++k)
    out << "f1 " << result.labels[k] << ' ' << num(result.metrics.per_class_f1[k]) << '\n';

  const fs::path target =
      out_path ? *out_path : model_path.parent_path() / (data.stem().string() + ".eval.json");
  ordered_json j = metrics_json(result.metrics, result.labels);
  j["task"] = task.to_string();
  j["data"] = data.filename().string();
  write_text(target, j.dump(2) + "\n");
  return result;
}

// ---- analyze --------------------------------------------------------------------

AnalyzeResult cmd_analyze(const fs::path& model_path, const fs::path& data,
                          const AnalyzeOptions& options, std::ostream& out) {
  Checkpoint ckpt = load_model(model_path);
  const NnmaModel& model = ckpt.model;
  Dataset ds = load_split(data, data.stem().string());
  for (std::size_t id : options.ids)
    if (id >= ds.size())
      throw UsageError("instance id " + std::to_string(id) + " out of range (data has " +
                       std::to_string(ds.size()) + " instances)");
  ensure_dir(options.out_dir);

  AnalyzeResult result;
  const fs::path report_path = options.out_dir / "kl_report.txt";
  if (model.dims.levels >= 2) {
    const KlReport report = attention_kl_report(model, ds, options.reverse_kl);
    write_text(report_path, report.to_text());
    out << report.to_text();
    result.kl_computed = true;
  } else {
    const std::string notice =
        "# KL analysis skipped: the model has a single attention level; "
        "inter-level divergences need K >= 2\n";
    write_text(report_path, notice);
    out << notice;
  }
  result.files.push_back(report_path);

  for (std::size_t id : options.ids) {
    const Instance& inst = ds.instances[id];
    const AttentionTrace trace = snapshot(forward(model, inst).trace);
    const fs::path csv = options.out_dir / ("heatmap_" + std::to_string(id) + ".csv");
    const fs::path ppm = options.out_dir / ("heatmap_" + std::to_string(id) + ".ppm");
    {
      std::ofstream f(csv, std::ios::binary);
      if (!f) throw UsageError("cannot write " + csv.string());
      write_heatmap_csv(f, trace, inst.arg1, inst.arg2);
    }
    {
      std::ofstream f(ppm, std::ios::binary);
      if (!f) throw UsageError("cannot write " + ppm.string());
      write_heatmap_ppm(f, trace, inst.arg1, inst.arg2);
    }
    result.files.push_back(csv);
    result.files.push_back(ppm);
    out << "wrote " << csv.string() << " and " << ppm.string() << '\n';
  }
  return result;
}

// ---- gradcheck ------------------------------------------------------------------

void GradcheckOptions::parse_dims(const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--dims entries must be key=value: " + item);
    const std::string key = trim(std::string_view(item).substr(0, eq));
    const std::string value = trim(std::string_view(item).substr(eq + 1));
    const auto n = parse_number<std::size_t>(key, value);
    if (key == "d") hidden_dim = n;
    else if (key == "d_m") memory_dim = n;
    else if (key == "D_e") embedding_dim = n;
    else if (key == "K") levels = n;
    else if (key == "L") max_len = n;
    else if (key == "V") vocab_size = n;
    else if (key == "n") classes = n;
    else if (key == "N") instances = n;
    else if (key == "seed") seed = n;
    else throw UsageError("unknown --dims key '" + key + "'");
  }
  if (hidden_dim == 0 || memory_dim == 0 || embedding_dim == 0 || levels == 0 || max_len == 0 ||
      vocab_size < 2 || classes < 2 || instances == 0)
    throw UsageError("--dims: every dimension must be positive (V, n >= 2)");
}

GradcheckResult cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  Rng rng(o.seed);
  Vocabulary vocab;
  for (std::size_t i = 1; i < o.vocab_size; ++i) vocab.add("t" + std::to_string(i));
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < o.classes; ++k) labels.push_back("c" + std::to_string(k));
  const ModelDims dims{o.embedding_dim, o.hidden_dim, o.memory_dim, o.levels, o.classes};
  NnmaModel model = NnmaModel::create(dims, std::move(vocab), labels, rng);
  // Spread every parameter (biases included) so no path starts at a flat spot.
  for (auto& p : model.parameters())
    for (double& v : p.mutable_values()) v = rng.uniform(-0.5, 0.5);

  std::vector<LabeledPair> batch;
  for (std::size_t i = 0; i < o.instances; ++i) {
    LabeledPair ex;
    for (auto* arg : {&ex.pair.arg1, &ex.pair.arg2}) {
      const std::size_t len = 1 + rng.index(o.max_len);
      for (std::size_t t = 0; t < len; ++t) arg->push_back(rng.index(o.vocab_size));
    }
    ex.label = rng.index(o.classes);
    batch.push_back(std::move(ex));
  }
  auto loss_fn = [&] {
    std::vector<Tensor> terms;
    for (const auto& ex : batch) terms.push_back(loss(forward(model, ex.pair), ex.label));
    return sum(concat(terms));
  };

  debug::set_sigmoid_gradient_fault(o.inject_fault);
  GradcheckResult result;
  try {
    for (auto& group : model.parameter_groups()) {
      const auto r = grad_check(loss_fn, group.tensors, {o.step});
      result.groups.push_back({group.name, r.max_relative_error, r.entries_checked});
      result.worst = std::max(result.worst, r.max_relative_error);
    }
  } catch (...) {
    debug::set_sigmoid_gradient_fault(false);
    throw;
  }
  debug::set_sigmoid_gradient_fault(false);
  result.passed = result.worst < o.threshold;

  out << "gradcheck d=" << o.hidden_dim << " d_m=" << o.memory_dim << " D_e=" << o.embedding_dim
      << " K=" << o.levels << " L<=" << o.max_len << " V=" << o.vocab_size << " n=" << o.classes
      << " step=" << num(o.step) << '\n';
  for (const auto& g : result.groups)
    out << g.group << ' ' << num(g.max_relative_error) << " (" << g.entries << " entries)\n";
  out << "max_relative_error " << num(result.worst) << ' '
      << (result.passed ? "PASS" : "FAIL") << " (threshold " << num(o.threshold) << ")\n";
  return result;
}

// ---- synth ----------------------------------------------------------------------

SynthResult cmd_synth(const SynthOptions& options, const fs::path& out_dir, std::ostream& out) {
  Dataset ds;
  try {
    ds = synth_generate(options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ensure_dir(out_dir);
  const auto splits = split_train_dev_test(ds);
  for (const auto& s : splits) {
    try {
      save_tsv(out_dir / (s.split + ".tsv"), s);
    } catch (const std::ios_base::failure& e) {
      throw UsageError(e.what());
    }
  }
  out << "wrote " << splits[0].size() << '/' << splits[1].size() << '/' << splits[2].size()
      << " instances to " << out_dir.string() << '\n';
  return {splits[0].size(), splits[1].size(), splits[2].size()};
}

// ---- entry point ------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-level attention network for argument-pair relation classification", "nnma"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a model from a key=value config file");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> levels;
  std::optional<std::size_t> max_epochs;
  std::string train_out, train_data;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--seed", seed, "Override the seed");
  train->add_option("--levels", levels, "Override the number of attention levels K");
  train->add_option("--max-epochs", max_epochs, "Override max_epochs");
  train->add_option("--data-dir", train_data, "Override data_dir");
  train->add_option("--output", train_out, "Override output_dir");
  train->add_option("--set", overrides, "Extra key=value overrides");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a TSV file");
  std::string eval_model, eval_data, eval_task = "four", eval_out;
  eval->add_option("--model", eval_model, "Checkpoint")->required();
  eval->add_option("--data", eval_data, "TSV file")->required();
  eval->add_option("--task", eval_task, "four | binary:<label> | merged");
  eval->add_option("--out", eval_out, "Metrics JSON path");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "KL report and attention heatmaps");
  std::string an_model, an_data, an_ids, an_out = "analysis";
  bool an_reverse = false;
  analyze->add_option("--model", an_model, "Checkpoint")->required();
  analyze->add_option("--data", an_data, "TSV file")->required();
  analyze->add_option("--ids", an_ids, "Comma-separated 0-based instance indices");
  analyze->add_option("--out", an_out, "Output directory");
  analyze->add_flag("--reverse-kl", an_reverse, "Swap the arguments of every KL divergence");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string dims_spec;
  GradcheckOptions gc;
  gradcheck->add_option("--dims", dims_spec, "e.g. d=3,d_m=4,D_e=3,K=3,L=5,V=20,n=4");
  gradcheck->add_option("--step", gc.step, "Central-difference step");
  gradcheck->add_option("--threshold", gc.threshold, "Pass threshold");
  gradcheck->add_flag("--inject-fault", gc.inject_fault,
                      "Corrupt the sigmoid backward rule (negative control)");

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic cue-token train/dev/test splits");
  SynthOptions so;
  std::string synth_out;
  synth->add_option("--seed", so.seed, "Generator seed")->required();
  synth->add_option("--n", so.n, "Instance count")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--vocab", so.vocab_size, "Vocabulary size (8 cues + filler)");
  synth->add_option("--min-len", so.min_len, "Minimum argument length");
  synth->add_option("--max-len", so.max_len, "Maximum argument length");

  std::vector<std::string> argv_storage{"nnma"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "nnma: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (train->parsed()) {
      RunConfig cfg = load_run_config(config_path);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
        cfg.set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
      }
      if (seed) cfg.hp.seed = *seed;
      if (levels) cfg.hp.levels = *levels;
      if (max_epochs) cfg.hp.max_epochs = *max_epochs;
      if (!train_data.empty()) cfg.data_dir = train_data;
      if (!train_out.empty()) cfg.output_dir = train_out;
      cmd_train(cfg, out);
    } else if (eval->parsed()) {
      TaskSpec task;
      try {
        task = TaskSpec::parse(eval_task);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      cmd_eval(eval_model, eval_data, task,
               eval_out.empty() ? std::nullopt : std::optional<fs::path>(eval_out), out);
    } else if (analyze->parsed()) {
      AnalyzeOptions opts;
      opts.out_dir = an_out;
      opts.reverse_kl = an_reverse;
      std::stringstream ss(an_ids);
      std::string id;
      while (std::getline(ss, id, ','))
        if (!trim(id).empty()) opts.ids.push_back(parse_number<std::size_t>("--ids", trim(id)));
      cmd_analyze(an_model, an_data, opts, out);
    } else if (gradcheck->parsed()) {
      if (!dims_spec.empty()) gc.parse_dims(dims_spec);
      return cmd_gradcheck(gc, out).passed ? kSuccess : kFailure;
    } else if (synth->parsed()) {
      cmd_synth(so, synth_out, out);
    }
  } catch (const UsageError& e) {
    err << "nnma: " << e.what() << '\n';
    return kUsage;
  } catch (const CommandFailure& e) {
    err << "nnma: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "nnma: " << e.what() << '\n';
    return kFailure;
  }
  return kSuccess;
}

}  // namespace nnma::cli
