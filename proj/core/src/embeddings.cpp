#include "nnma/embeddings.hpp"

#include <charconv>
#include <cstdint>
#include <cwctype>
#include <locale>
#include <optional>
#include <sstream>

namespace nnma {

namespace {

const std::ctype<wchar_t>* unicode_ctype() {
  static const std::optional<std::locale> loc = []() -> std::optional<std::locale> {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        return std::locale(name);
      } catch (const std::runtime_error&) {
      }
    }
    return std::nullopt;
  }();
  return loc ? &std::use_facet<std::ctype<wchar_t>>(*loc) : nullptr;
}

// Decodes one UTF-8 sequence starting at s[i]; returns the code point and
// advances i, or nullopt (leaving i untouched) on malformed input.
std::optional<char32_t> decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return std::nullopt;
  }
  if (i + len > s.size()) return std::nullopt;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return fields;
}

}  // namespace

std::string normalize_token(std::string_view raw) {
  const auto* facet = unicode_ctype();
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    auto cp = decode_utf8(raw, i);
    if (!cp) {
      out.push_back(raw[i++]);
      continue;
    }
    char32_t lower = *cp;
    if (lower < 0x80) {
      if (lower >= 'A' && lower <= 'Z') lower += 'a' - 'A';
    } else if (facet) {
      lower = static_cast<char32_t>(facet->tolower(static_cast<wchar_t>(*cp)));
    }
    encode_utf8(lower, out);
  }
  return out;
}

// ---- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnknown);
  index_.emplace(std::string(kUnknown), kUnknownIndex);
}

std::size_t Vocabulary::add(std::string_view token) {
  std::string norm = normalize_token(token);
  if (auto it = index_.find(norm); it != index_.end()) return it->second;
  const std::size_t idx = tokens_.size();
  tokens_.push_back(norm);
  index_.emplace(std::move(norm), idx);
  return idx;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  return index_of_normalized(normalize_token(token));
}

std::size_t Vocabulary::index_of_normalized(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknownIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(normalize_token(token)) > 0;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index_of(t));
  return out;
}

// ---- embedding tables ---------------------------------------------------------

EmbeddingMatrix random_embeddings(std::size_t dim, std::size_t vocab_size, Rng& rng) {
  std::vector<double> w(dim * vocab_size);
  for (std::size_t c = 0; c < vocab_size; ++c)
    for (std::size_t r = 0; r < dim; ++r)
      w[r * vocab_size + c] = rng.uniform(-kEmbeddingInitScale, kEmbeddingInitScale);
  return {Tensor::from(dim, vocab_size, std::move(w), true)};
}

EmbeddingMatrix load_pretrained(std::istream& in, std::size_t dim, const Vocabulary& vocab,
                                Rng& rng, PretrainedStats* stats) {
  if (!in) throw std::ios_base::failure("load_pretrained: stream is not readable");
  EmbeddingMatrix emb = random_embeddings(dim, vocab.size(), rng);
  auto w = emb.weights.mutable_values();
  const std::size_t v = vocab.size();
  std::vector<bool> seen(v, false);
  PretrainedStats local;

  std::string line;
  std::vector<double> buf(dim);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_spaces(line);
    if (fields.size() != dim + 1) {
      ++local.malformed;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 0; k < dim && ok; ++k) {
      const auto f = fields[k + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), buf[k]);
      ok = ec == std::errc() && ptr == f.data() + f.size();
    }
    if (!ok) {
      ++local.malformed;
      continue;
    }
    const std::size_t idx = vocab.index_of_normalized(fields[0]);
    if (idx == Vocabulary::kUnknownIndex && fields[0] != Vocabulary::kUnknown) {
      ++local.unused;
      continue;
    }
    if (seen[idx]) {
      ++local.duplicates;
      continue;
    }
    seen[idx] = true;
    ++local.loaded;
    for (std::size_t r = 0; r < dim; ++r) w[r * v + idx] = buf[r];
  }
  if (in.bad()) throw std::ios_base::failure("load_pretrained: read error");
  if (stats) *stats = local;
  return emb;
}

void write_pretrained(std::ostream& out, const EmbeddingMatrix& emb, const Vocabulary& vocab) {
  const std::size_t v = emb.vocab_size();
  if (v != vocab.size())
    throw ShapeError("write_pretrained: table has " + std::to_string(v) +
                     " columns but vocabulary has " + std::to_string(vocab.size()) + " tokens");
  char num[32];
  for (std::size_t c = 0; c < v; ++c) {
    out << vocab.token(c);
    for (std::size_t r = 0; r < emb.dim(); ++r) {
      auto [ptr, ec] = std::to_chars(num, num + sizeof num, emb.weights(r, c));
      out << ' ' << std::string_view(num, static_cast<std::size_t>(ptr - num));
    }
    out << '\n';
  }
}

Tensor embed_sequence(std::span<const std::string> tokens, const Vocabulary& vocab,
                      const EmbeddingMatrix& emb) {
  if (tokens.empty()) throw std::invalid_argument("embed_sequence: empty token sequence");
  auto idx = vocab.encode(tokens);
  return embed_indices(idx, emb);
}

Tensor embed_indices(std::span<const std::size_t> indices, const EmbeddingMatrix& emb) {
  if (indices.empty()) throw std::invalid_argument("embed_sequence: empty token sequence");
  return gather_cols(emb.weights, indices);
}

}  // namespace nnma
