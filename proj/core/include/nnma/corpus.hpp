#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nnma {

// The four top-level relation senses, in label-index order.
inline const std::vector<std::string> kTopLevelLabels = {"Comparison", "Contingency",
                                                         "Expansion", "Temporal"};
inline constexpr std::string_view kOtherLabel = "Other";
inline constexpr std::string_view kEntRelLabel = "EntRel";

// Expected implicit-relation split sizes of a sectioned PDTB export
// (train sections 2-20, dev 0-1, test 21-22). Used only to sanity-check
// licensed data.
struct ExpectedSplitSizes {
  std::size_t train = 12345;
  std::size_t dev = 1156;
  std::size_t test = 1011;
};

struct Instance {
  std::string label;
  std::vector<std::string> arg1;
  std::vector<std::string> arg2;

  bool operator==(const Instance&) const = default;
};

struct RejectedLine {
  std::size_t line = 0;
  std::string reason;
};

struct Dataset {
  std::string split;
  std::vector<Instance> instances;
  std::vector<RejectedLine> rejected;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
  // Sorted, de-duplicated label inventory.
  std::vector<std::string> labels() const;
  std::map<std::string, std::size_t> label_counts() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// `label<TAB>arg1 tokens<TAB>arg2 tokens` per line; `#` lines are comments
// and blank lines are ignored. Tokens are whitespace-split and lowercased.
// A line with an empty argument is skipped and listed in Dataset::rejected.
// Wrong field counts throw ParseError; a file without instances throws too.
Dataset parse_tsv(std::istream& in, std::string split = {});
Dataset load_tsv(const std::filesystem::path& path, std::string split = {});

void write_tsv(std::ostream& out, const Dataset& ds);
void save_tsv(const std::filesystem::path& path, const Dataset& ds);

enum class TaskMode { four_way, binary };

// four_way: labels pass through. binary(t): every label other than t becomes
// "Other". merge_entrel relabels EntRel as Expansion before either mapping;
// the "merged" task is merge_entrel + binary(Expansion).
struct TaskSpec {
  TaskMode mode = TaskMode::four_way;
  std::string target;
  bool merge_entrel = false;

  static TaskSpec four_way() { return {}; }
  static TaskSpec binary(std::string target) { return {TaskMode::binary, std::move(target), false}; }
  static TaskSpec merged() { return {TaskMode::binary, "Expansion", true}; }

  // "four" | "binary:<label>" | "merged"; any of them may carry a "merged:"
  // prefix to set merge_entrel (what to_string prints for such specs).
  static TaskSpec parse(std::string_view text);
  std::string to_string() const;

  // Class labels in model index order. Binary tasks are {target, Other};
  // four-way tasks use the sorted inventory of `ds` after relabeling.
  std::vector<std::string> label_set(const Dataset& ds) const;

  bool operator==(const TaskSpec&) const = default;
};

// Relabels instances; never changes the instance count. Throws
// std::invalid_argument if a binary target is absent from the inventory.
Dataset apply_task(const Dataset& ds, const TaskSpec& task);

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t n = 400;
  std::size_t vocab_size = 60;  // 8 cue tokens + filler
  std::size_t min_len = 6;
  std::size_t max_len = 14;
};

// Cue token planted in Arg-1 / Arg-2 for class index c of kTopLevelLabels.
std::string synth_cue(int argument, std::size_t class_index);

// Four-class data where the label is fully determined by a planted cue pair:
// class c puts synth_cue(1, c) somewhere in Arg-1 and synth_cue(2, c)
// somewhere in Arg-2; every other position is a uniformly drawn filler
// token. Class labels are the balanced sequence k mod 4 in shuffled order.
// Pure function of the options.
Dataset synth_generate(const SynthOptions& options);

// First 80% train, next 10% dev, rest test (sizes floor(0.8n), floor(0.1n)).
std::array<Dataset, 3> split_train_dev_test(const Dataset& ds);

}  // namespace nnma
