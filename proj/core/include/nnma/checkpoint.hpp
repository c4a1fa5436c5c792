#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "nnma/model.hpp"
#include "nnma/trainer.hpp"

namespace nnma {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'N', 'N', 'M', 'A', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers and floats little-endian):
//
//   magic "NNMACKPT"            8 bytes
//   version                     u32
//   D_e, d, d_m, K, n, V        u64 x 6
//   n label names, V tokens     each u32 byte length + UTF-8 bytes
//   tensor count                u64
//   per tensor                  u64 rows, u64 cols, rows*cols f64 (row-major)
//   trainer state flag          u8 (0 or 1)
//   [steps u64, rng 4 x u64,
//    network buffers, embedding buffers: u64 count, then u64 length + f64s]
//
// Tensors appear in NnmaModel::parameters() order:
//   embeddings (D_e x V)
//   enc1.forward  W_i W_f W_o W_c b_i b_f b_o b_c, enc1.backward (same)
//   enc2.forward, enc2.backward
//   level k = 1..K: W_m, arg1 W_a W_b W_s, arg2 W_a W_b W_s
//   W_p, b_p
struct Checkpoint {
  NnmaModel model;
  std::optional<TrainerState> trainer_state;
};

void save_checkpoint(std::ostream& out, const NnmaModel& model,
                     const TrainerState* trainer_state = nullptr);
void save_checkpoint(const std::filesystem::path& path, const NnmaModel& model,
                     const TrainerState* trainer_state = nullptr);

// Validates the header before reading any parameter payload. Throws
// CheckpointError on a bad magic or version, inconsistent shapes, or
// truncation; nothing is returned in those cases.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nnma
