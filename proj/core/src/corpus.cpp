#include "nnma/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "nnma/embeddings.hpp"
#include "nnma/rng.hpp"

namespace nnma {

namespace {

std::vector<std::string> tokenize(std::string_view field) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (pos < field.size()) {
    while (pos < field.size() && is_space(field[pos])) ++pos;
    std::size_t end = pos;
    while (end < field.size() && !is_space(field[end])) ++end;
    if (end > pos) out.push_back(normalize_token(field.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> Dataset::labels() const {
  std::set<std::string> set;
  for (const auto& inst : instances) set.insert(inst.label);
  return {set.begin(), set.end()};
}

std::map<std::string, std::size_t> Dataset::label_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& inst : instances) ++counts[inst.label];
  return counts;
}

Dataset parse_tsv(std::istream& in, std::string split) {
  Dataset ds;
  ds.split = std::move(split);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 3) {
      throw ParseError(lineno, "expected 3 tab-separated fields, found " +
                                   std::to_string(fields.size()));
    }
    Instance inst;
    inst.label = std::string(fields[0]);
    if (inst.label.empty()) throw ParseError(lineno, "empty label");
    inst.arg1 = tokenize(fields[1]);
    inst.arg2 = tokenize(fields[2]);
    if (inst.arg1.empty() || inst.arg2.empty()) {
      ds.rejected.push_back({lineno, inst.arg1.empty() ? "empty Arg-1" : "empty Arg-2"});
      continue;
    }
    ds.instances.push_back(std::move(inst));
  }
  if (in.bad()) throw std::ios_base::failure("parse_tsv: read error");
  if (ds.instances.empty()) throw ParseError(lineno, "no instances in input");
  return ds;
}

Dataset load_tsv(const std::filesystem::path& path, std::string split) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  try {
    return parse_tsv(in, std::move(split));
  } catch (const ParseError& e) {
    std::string detail = e.what();
    detail.erase(0, detail.find(": ") + 2);  // drop the "line N: " prefix
    throw ParseError(e.line(), path.string() + ": " + detail);
  }
}

void write_tsv(std::ostream& out, const Dataset& ds) {
  for (const auto& inst : ds.instances)
    out << inst.label << '\t' << join(inst.arg1) << '\t' << join(inst.arg2) << '\n';
}

void save_tsv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  write_tsv(out, ds);
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

// ---- tasks --------------------------------------------------------------------

TaskSpec TaskSpec::parse(std::string_view text) {
  if (text == "four" || text == "four_way") return four_way();
  if (text == "merged") return merged();
  constexpr std::string_view merged_prefix = "merged:";
  if (text.substr(0, merged_prefix.size()) == merged_prefix) {
    TaskSpec t = parse(text.substr(merged_prefix.size()));
    t.merge_entrel = true;
    return t;
  }
  constexpr std::string_view prefix = "binary:";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size())
    return binary(std::string(text.substr(prefix.size())));
  throw std::invalid_argument("unknown task '" + std::string(text) +
                              "' (expected four, binary:<label> or merged)");
}

std::string TaskSpec::to_string() const {
  if (mode == TaskMode::four_way) return merge_entrel ? "merged:four" : "four";
  if (merge_entrel && target == "Expansion") return "merged";
  return (merge_entrel ? "merged:binary:" : "binary:") + target;
}

std::vector<std::string> TaskSpec::label_set(const Dataset& ds) const {
  if (mode == TaskMode::binary) return {target, std::string(kOtherLabel)};
  return apply_task(ds, *this).labels();
}

Dataset apply_task(const Dataset& ds, const TaskSpec& task) {
  Dataset out = ds;
  if (task.merge_entrel)
    for (auto& inst : out.instances)
      if (inst.label == kEntRelLabel) inst.label = "Expansion";
  if (task.mode == TaskMode::binary) {
    const bool present = std::any_of(out.instances.begin(), out.instances.end(),
                                     [&](const Instance& i) { return i.label == task.target; });
    if (!present)
      throw std::invalid_argument("apply_task: target label '" + task.target +
                                  "' does not occur in split '" + ds.split + "'");
    for (auto& inst : out.instances)
      if (inst.label != task.target) inst.label = std::string(kOtherLabel);
  }
  return out;
}

// ---- synthetic data --------------------------------------------------------------

std::string synth_cue(int argument, std::size_t class_index) {
  return "cue" + std::to_string(argument) + "_" + std::to_string(class_index);
}

Dataset synth_generate(const SynthOptions& o) {
  constexpr std::size_t kClasses = 4;
  if (o.n < kClasses) throw std::invalid_argument("synth_generate: n must be >= 4");
  if (o.vocab_size < 2 * kClasses + 1)
    throw std::invalid_argument("synth_generate: vocab_size must leave room for filler tokens");
  if (o.min_len < 1 || o.max_len < o.min_len)
    throw std::invalid_argument("synth_generate: invalid length range");

  const std::size_t filler = o.vocab_size - 2 * kClasses;
  Rng rng(o.seed);
  Dataset ds;
  ds.split = "synthetic";
  ds.instances.reserve(o.n);
  auto make_arg = [&](int argument, std::size_t c) {
    const std::size_t len = o.min_len + rng.index(o.max_len - o.min_len + 1);
    const std::size_t cue_pos = rng.index(len);
    std::vector<std::string> tokens(len);
    for (std::size_t i = 0; i < len; ++i)
      tokens[i] = i == cue_pos ? synth_cue(argument, c) : "w" + std::to_string(rng.index(filler));
    return tokens;
  };
  // Balanced label sequence (k mod 4), shuffled; i.i.d. draws would leave
  // the class counts noticeably uneven at n = 400.
  std::vector<std::size_t> classes(o.n);
  for (std::size_t k = 0; k < o.n; ++k) classes[k] = k % kClasses;
  shuffle(classes, rng);
  for (std::size_t c : classes) {
    Instance inst;
    inst.label = kTopLevelLabels[c];
    inst.arg1 = make_arg(1, c);
    inst.arg2 = make_arg(2, c);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

std::array<Dataset, 3> split_train_dev_test(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  std::array<Dataset, 3> out;
  const char* names[] = {"train", "dev", "test"};
  for (std::size_t s = 0; s < 3; ++s) out[s].split = names[s];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);
    out[s].instances.push_back(ds.instances[i]);
  }
  return out;
}

}  // namespace nnma
