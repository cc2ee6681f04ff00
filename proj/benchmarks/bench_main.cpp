#include <benchmark/benchmark.h>

#include "msem/ann.hpp"
#include "msem/model.hpp"
#include "msem/rng.hpp"

namespace {

using namespace msem;

Model make_model() {
  std::vector<PairExample> seedset;
  PairExample ex;
  ex.q1 = {"how", "do", "i", "reset", "my", "password", "?"};
  ex.q2 = {"what", "is", "the", "refund", "policy", "today"};
  ex.raw1 = "how do i reset my password ?";
  ex.raw2 = "what is the refund policy today";
  ex.label = 0;
  seedset.push_back(ex);
  EncoderConfig cfg = EncoderConfig::tiny();
  return Model::init(cfg, build_vocab(seedset), build_char_vocab(seedset), 3, {}, 7);
}

void BM_EncodeSentence(benchmark::State& state) {
  const Model model = make_model();
  const std::vector<std::string> tokens = {"how", "do", "i", "reset", "my", "password", "?"};
  for (auto _ : state) {
    Tensor v = model.encode_sentence(tokens);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_EncodeSentence);

void BM_AnnQuery(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(3);
  std::vector<std::pair<uint64_t, std::vector<double>>> vectors;
  vectors.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    std::vector<double> v(64);
    for (auto& x : v) x = rng.normal();
    vectors.emplace_back(static_cast<uint64_t>(i), std::move(v));
  }
  const AnnIndex index = AnnIndex::build(vectors, 16, 32, 1);
  std::vector<double> q(64);
  for (auto& x : q) x = rng.normal();
  for (auto _ : state) {
    auto result = index.query_topk(q, 10, 800);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_AnnQuery)->Arg(1000)->Arg(10000);

void BM_BruteForceTopk(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(3);
  std::vector<std::pair<uint64_t, std::vector<double>>> vectors;
  for (int64_t i = 0; i < n; ++i) {
    std::vector<double> v(64);
    for (auto& x : v) x = rng.normal();
    vectors.emplace_back(static_cast<uint64_t>(i), std::move(v));
  }
  std::vector<double> q(64);
  for (auto& x : q) x = rng.normal();
  for (auto _ : state) {
    auto result = brute_force_topk(vectors, q, 10);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_BruteForceTopk)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
