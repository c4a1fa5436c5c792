#include "nnma/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nnma/metrics.hpp"

namespace nnma {

namespace {

std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

KlReport::Side empty_side(std::size_t K) {
  KlReport::Side s;
  s.pairwise.assign(K, std::vector<double>(K, 0.0));
  s.uniform.assign(K, 0.0);
  return s;
}

void check_tokens(const AttentionTrace& trace, const std::vector<std::string>& arg1,
                  const std::vector<std::string>& arg2) {
  if (trace.levels.empty()) throw std::invalid_argument("heatmap: trace has no levels");
  for (std::size_t k = 0; k < trace.levels.size(); ++k) {
    if (trace.levels[k].a1.size() != arg1.size() || trace.levels[k].a2.size() != arg2.size())
      throw std::invalid_argument("heatmap: level " + std::to_string(k + 1) +
                                  " attention lengths do not match the token counts (" +
                                  std::to_string(arg1.size()) + ", " +
                                  std::to_string(arg2.size()) + ")");
  }
}

}  // namespace

AttentionTrace snapshot(const StackOutput& stack) {
  AttentionTrace trace;
  for (const auto& lv : stack.levels)
    trace.levels.push_back(
        {to_vector(lv.a1), to_vector(lv.a2), to_vector(lv.M), to_vector(lv.R1), to_vector(lv.R2)});
  return trace;
}

KlReport kl_report(const std::vector<AttentionTrace>& traces, bool reversed) {
  if (traces.empty()) throw std::invalid_argument("kl_report: empty dataset");
  const std::size_t K = traces.front().levels.size();
  if (K < 2) throw std::invalid_argument("kl_report: needs at least 2 attention levels");

  KlReport r;
  r.levels = K;
  r.instances = traces.size();
  r.reversed = reversed;
  r.arg1 = empty_side(K);
  r.arg2 = empty_side(K);
  auto kl = [reversed](const std::vector<double>& p, const std::vector<double>& q) {
    return reversed ? kl_divergence(q, p) : kl_divergence(p, q);
  };
  for (const auto& t : traces) {
    if (t.levels.size() != K) throw std::invalid_argument("kl_report: inconsistent level count");
    for (int side = 0; side < 2; ++side) {
      KlReport::Side& out = side == 0 ? r.arg1 : r.arg2;
      auto dist = [&](std::size_t k) -> const std::vector<double>& {
        return side == 0 ? t.levels[k].a1 : t.levels[k].a2;
      };
      const std::size_t L = dist(0).size();
      const std::vector<double> u(L, 1.0 / static_cast<double>(L));
      for (std::size_t i = 0; i < K; ++i) {
        out.uniform[i] += kl(u, dist(i));
        for (std::size_t j = i + 1; j < K; ++j) out.pairwise[i][j] += kl(dist(i), dist(j));
      }
    }
  }
  const double n = static_cast<double>(traces.size());
  r.both = empty_side(K);
  for (std::size_t i = 0; i < K; ++i) {
    r.arg1.uniform[i] /= n;
    r.arg2.uniform[i] /= n;
    r.both.uniform[i] = 0.5 * (r.arg1.uniform[i] + r.arg2.uniform[i]);
    for (std::size_t j = i + 1; j < K; ++j) {
      r.arg1.pairwise[i][j] /= n;
      r.arg2.pairwise[i][j] /= n;
      r.both.pairwise[i][j] = 0.5 * (r.arg1.pairwise[i][j] + r.arg2.pairwise[i][j]);
    }
  }
  return r;
}

KlReport attention_kl_report(const NnmaModel& model, const Dataset& ds, bool reversed) {
  if (ds.empty()) throw std::invalid_argument("attention_kl_report: empty dataset");
  if (model.dims.levels < 2)
    throw std::invalid_argument("attention_kl_report: model has a single attention level");
  std::vector<AttentionTrace> traces;
  traces.reserve(ds.size());
  for (const auto& inst : ds.instances) traces.push_back(snapshot(forward(model, inst).trace));
  return kl_report(traces, reversed);
}

std::string KlReport::to_text() const {
  std::ostringstream os;
  os << "# attention KL report: levels=" << levels << " instances=" << instances << '\n';
  os << "# direction: " << (reversed ? "kl_ij = KL(a_j || a_i), kl_ui = KL(a_i || uniform)"
                                     : "kl_ij = KL(a_i || a_j), kl_ui = KL(uniform || a_i)")
     << '\n';
  os << "# aggregation: per-instance divergence, then mean over instances; natural log\n";
  auto emit = [&](const char* name, const Side& s) {
    for (std::size_t i = 0; i < levels; ++i)
      for (std::size_t j = i + 1; j < levels; ++j)
        os << name << " kl_" << i + 1 << j + 1 << ' ' << format_double(s.pairwise[i][j]) << '\n';
    for (std::size_t i = 0; i < levels; ++i)
      os << name << " kl_u" << i + 1 << ' ' << format_double(s.uniform[i]) << '\n';
  };
  emit("arg1", arg1);
  emit("arg2", arg2);
  emit("both", both);
  return os.str();
}

Rgb heat_color(double weight, double uniform) {
  auto channel = [](double t) {
    return static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::clamp(t, 0.0, 1.0))));
  };
  if (weight < uniform) {
    const double t = uniform > 0 ? (uniform - weight) / uniform : 0.0;
    return {channel(t), channel(t), 255};
  }
  if (weight > uniform) {
    const double t = uniform < 1 ? (weight - uniform) / (1.0 - uniform) : 0.0;
    return {255, channel(t), channel(t)};
  }
  return {255, 255, 255};
}

void write_heatmap_csv(std::ostream& out, const AttentionTrace& trace,
                       const std::vector<std::string>& arg1_tokens,
                       const std::vector<std::string>& arg2_tokens) {
  check_tokens(trace, arg1_tokens, arg2_tokens);
  for (std::size_t k = 0; k < trace.levels.size(); ++k) {
    for (int side = 1; side <= 2; ++side) {
      const auto& a = side == 1 ? trace.levels[k].a1 : trace.levels[k].a2;
      const auto& tokens = side == 1 ? arg1_tokens : arg2_tokens;
      out << k + 1 << ",arg" << side;
      for (std::size_t i = 0; i < a.size(); ++i) out << ',' << tokens[i] << ':' << format_double(a[i]);
      out << '\n';
    }
  }
}

void write_heatmap_ppm(std::ostream& out, const AttentionTrace& trace,
                       const std::vector<std::string>& arg1_tokens,
                       const std::vector<std::string>& arg2_tokens, std::size_t cell) {
  check_tokens(trace, arg1_tokens, arg2_tokens);
  if (cell == 0) throw std::invalid_argument("heatmap: cell size must be positive");
  const std::size_t cols = std::max(arg1_tokens.size(), arg2_tokens.size());
  const std::size_t bands = trace.levels.size() * 2;
  const std::size_t width = cols * cell, height = bands * cell;
  const Rgb background{64, 64, 64};

  std::vector<std::uint8_t> pixels(width * height * 3);
  for (std::size_t band = 0; band < bands; ++band) {
    const auto& lv = trace.levels[band / 2];
    const auto& a = band % 2 == 0 ? lv.a1 : lv.a2;
    const double uniform = 1.0 / static_cast<double>(a.size());
    for (std::size_t c = 0; c < cols; ++c) {
      const Rgb color = c < a.size() ? heat_color(a[c], uniform) : background;
      for (std::size_t y = band * cell; y < (band + 1) * cell; ++y)
        for (std::size_t x = c * cell; x < (c + 1) * cell; ++x) {
          std::uint8_t* px = &pixels[(y * width + x) * 3];
          px[0] = color.r;
          px[1] = color.g;
          px[2] = color.b;
        }
    }
  }
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

}  // namespace nnma
