#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nnma/attention.hpp"
#include "nnma/corpus.hpp"
#include "nnma/model.hpp"

namespace nnma {

// Plain-value snapshot of the per-level attention, memory and re-read
// vectors recorded during one forward pass.
struct AttentionTrace {
  struct Level {
    std::vector<double> a1, a2;
    std::vector<double> M;
    std::vector<double> R1, R2;
  };
  std::vector<Level> levels;
};

AttentionTrace snapshot(const StackOutput& stack);

// Mean KL divergences between attention levels, computed per instance and
// then averaged over the dataset.
//
// Default direction: pairwise[i][j] = KL(a_i || a_j) for i < j and
// uniform[i] = KL(u || a_i) with u = 1/L. `reversed` swaps the arguments of
// every divergence.
struct KlReport {
  struct Side {
    std::vector<std::vector<double>> pairwise;  // K x K, only i < j populated
    std::vector<double> uniform;                // K
  };
  std::size_t levels = 0;
  std::size_t instances = 0;
  bool reversed = false;
  Side arg1;
  Side arg2;
  Side both;  // mean of the two argument sides

  std::string to_text() const;
};

KlReport kl_report(const std::vector<AttentionTrace>& traces, bool reversed = false);

// Runs the model over every instance of `ds` (evaluation mode) and reports.
// Requires K >= 2 and a non-empty dataset.
KlReport attention_kl_report(const NnmaModel& model, const Dataset& ds, bool reversed = false);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Blue below the uniform value, white at it, red above; the saturation
// grows linearly with the distance to uniform (scaled by uniform below and
// by 1 - uniform above).
Rgb heat_color(double weight, double uniform);

// One row per (level, argument): `level,argument,token:weight,...`,
// levels ascending with Arg-1 before Arg-2.
void write_heatmap_csv(std::ostream& out, const AttentionTrace& trace,
                       const std::vector<std::string>& arg1_tokens,
                       const std::vector<std::string>& arg2_tokens);

// Binary PPM (P6): one band of `cell`-pixel square cells per (level,
// argument) in CSV row order; positions past the end of the shorter
// argument are left dark gray.
void write_heatmap_ppm(std::ostream& out, const AttentionTrace& trace,
                       const std::vector<std::string>& arg1_tokens,
                       const std::vector<std::string>& arg2_tokens, std::size_t cell = 16);

}  // namespace nnma
