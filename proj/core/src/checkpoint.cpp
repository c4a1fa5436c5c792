#include "nnma/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace nnma {

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(std::span<const double> xs) {
    for (double x : xs) f64(x);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    bytes(b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    if (n > (1u << 20)) throw CheckpointError(std::string("implausible string length in ") + what);
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }
  void doubles(std::span<double> xs, const char* what) {
    for (double& x : xs) x = f64(what);
  }

 private:
  std::istream& in_;
};

void write_buffers(Writer& w, const VelocityBuffers& v) {
  w.u64(v.buffers.size());
  for (const auto& b : v.buffers) {
    w.u64(b.size());
    w.doubles(b);
  }
}

VelocityBuffers read_buffers(Reader& r, const std::vector<Tensor>& params) {
  VelocityBuffers v;
  const std::uint64_t count = r.u64("velocity buffer count");
  if (count != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(count) + " velocity buffers, expected " +
                          std::to_string(params.size()));
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t len = r.u64("velocity buffer length");
    if (len != params[k].size())
      throw CheckpointError("velocity buffer " + std::to_string(k) + " has the wrong length");
    std::vector<double> b(len);
    r.doubles(b, "velocity buffer");
    v.buffers.push_back(std::move(b));
  }
  return v;
}

// Parameter shapes for the given header, in checkpoint order.
NnmaModel skeleton(const ModelDims& dims, Vocabulary vocab, std::vector<std::string> labels) {
  NnmaModel m;
  m.dims = dims;
  m.vocab = std::move(vocab);
  m.label_names = std::move(labels);
  m.embeddings.weights = Tensor::zeros(dims.embedding_dim, m.vocab.size(), true);
  m.enc1 = {LstmParams::zeros(dims.embedding_dim, dims.hidden_dim),
            LstmParams::zeros(dims.embedding_dim, dims.hidden_dim)};
  m.enc2 = {LstmParams::zeros(dims.embedding_dim, dims.hidden_dim),
            LstmParams::zeros(dims.embedding_dim, dims.hidden_dim)};
  for (std::size_t k = 0; k < dims.levels; ++k)
    m.levels.push_back(AttentionLevelParams::zeros(dims.hidden_dim, dims.memory_dim, k == 0));
  m.W_p = Tensor::zeros(dims.classes, 6 * dims.hidden_dim, true);
  m.b_p = Tensor::zeros(dims.classes, 1, true);
  return m;
}

}  // namespace

void save_checkpoint(std::ostream& out, const NnmaModel& model, const TrainerState* state) {
  model.validate();
  Writer w(out);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const auto& d = model.dims;
  for (std::uint64_t v : {d.embedding_dim, d.hidden_dim, d.memory_dim, d.levels, d.classes,
                          model.vocab.size()})
    w.u64(v);
  for (const auto& l : model.label_names) w.str(l);
  for (const auto& t : model.vocab.tokens()) w.str(t);
  const auto params = model.parameters();
  w.u64(params.size());
  for (const auto& p : params) {
    w.u64(p.rows());
    w.u64(p.cols());
    w.doubles(p.values());
  }
  w.u8(state ? 1 : 0);
  if (state) {
    w.u64(state->steps);
    for (std::uint64_t s : state->rng.state()) w.u64(s);
    write_buffers(w, state->optimizer.network);
    write_buffers(w, state->optimizer.embeddings);
  }
  if (!out) throw CheckpointError("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const NnmaModel& model,
                     const TrainerState* state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, model, state);
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw CheckpointError("not an NNMA checkpoint (bad magic bytes)");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");

  ModelDims dims;
  dims.embedding_dim = r.u64("D_e");
  dims.hidden_dim = r.u64("d");
  dims.memory_dim = r.u64("d_m");
  dims.levels = r.u64("K");
  dims.classes = r.u64("n");
  const std::uint64_t V = r.u64("V");
  constexpr std::uint64_t kLimit = 1ull << 24;
  if (dims.embedding_dim == 0 || dims.hidden_dim == 0 || dims.memory_dim == 0 ||
      dims.levels == 0 || dims.classes < 2 || V == 0)
    throw CheckpointError("checkpoint header has a zero dimension");
  if (dims.embedding_dim > kLimit || dims.hidden_dim > kLimit || dims.memory_dim > kLimit ||
      dims.levels > 1024 || dims.classes > kLimit || V > kLimit)
    throw CheckpointError("checkpoint header dimensions are implausibly large");

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < dims.classes; ++i) labels.push_back(r.str("label name"));
  Vocabulary vocab;
  for (std::size_t i = 0; i < V; ++i) {
    const std::string tok = r.str("vocabulary token");
    if (i == 0 ? tok != Vocabulary::kUnknown : vocab.add(tok) != i)
      throw CheckpointError("checkpoint vocabulary is inconsistent at entry " + std::to_string(i));
  }

  NnmaModel model = skeleton(dims, std::move(vocab), std::move(labels));
  auto params = model.parameters();
  const std::uint64_t count = r.u64("tensor count");
  if (count != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, header implies " +
                          std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::uint64_t rows = r.u64("tensor shape");
    const std::uint64_t cols = r.u64("tensor shape");
    if (rows != params[k].rows() || cols != params[k].cols())
      throw CheckpointError("tensor " + std::to_string(k) + " has shape " +
                            to_string({rows, cols}) + ", header implies " +
                            to_string(params[k].shape()));
    r.doubles(params[k].mutable_values(), "tensor payload");
  }

  Checkpoint ckpt{std::move(model), std::nullopt};
  const std::uint8_t has_state = r.u8("trainer state flag");
  if (has_state > 1) throw CheckpointError("invalid trainer state flag");
  if (has_state) {
    TrainerState st;
    st.steps = r.u64("trainer steps");
    Rng::State rs;
    for (auto& s : rs) s = r.u64("rng state");
    st.rng.set_state(rs);
    st.optimizer.network = read_buffers(r, ckpt.model.network_parameters());
    st.optimizer.embeddings = read_buffers(r, {ckpt.model.embeddings.weights});
    ckpt.trainer_state = std::move(st);
  }
  ckpt.model.validate();
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace nnma
