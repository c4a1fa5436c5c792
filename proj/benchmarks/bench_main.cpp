#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "nnma/model.hpp"
#include "nnma/recurrent.hpp"
#include "nnma/rng.hpp"
#include "nnma/tensor.hpp"

namespace {

nnma::Tensor random_matrix(std::size_t r, std::size_t c, nnma::Rng& rng, bool grad = false) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.uniform(-0.5, 0.5);
  return nnma::Tensor::from(r, c, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nnma::Rng rng(1);
  auto a = random_matrix(n, n, rng);
  auto b = random_matrix(n, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nnma::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Matmul)->Arg(50)->Arg(100)->Arg(200);

void BM_LstmStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  nnma::Rng rng(2);
  auto p = nnma::LstmParams::xavier(d, d, rng);
  auto x = random_matrix(d, 1, rng);
  auto h = random_matrix(d, 1, rng);
  auto c = random_matrix(d, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nnma::lstm_step(x, h, c, p));
}
BENCHMARK(BM_LstmStep)->Arg(16)->Arg(50);

// Default dimensions (D_e=50, d=50, d_m=200), two levels, 20 words per side.
struct Fixture {
  nnma::NnmaModel model;
  nnma::EncodedPair pair;

  explicit Fixture(std::size_t levels) {
    nnma::Rng rng(3);
    nnma::Vocabulary vocab;
    for (int i = 0; i < 500; ++i) vocab.add("w" + std::to_string(i));
    nnma::ModelDims dims;
    dims.levels = levels;
    model = nnma::NnmaModel::create(dims, vocab, {"a", "b", "c", "d"}, rng);
    for (int i = 0; i < 20; ++i) {
      pair.arg1.push_back(rng.index(vocab.size()));
      pair.arg2.push_back(rng.index(vocab.size()));
    }
  }
};

void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nnma::forward(f.model, f.pair).P);
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto l = nnma::loss(nnma::forward(f.model, f.pair), 1);
    l.backward();
    f.model.zero_grad();
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
