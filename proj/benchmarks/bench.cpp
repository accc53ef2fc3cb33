#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dysflm/channel.hpp"
#include "dysflm/lm.hpp"
#include "dysflm/metrics.hpp"

using namespace dysflm;

static void BM_EditDistance(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> tok(0, 9);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<int> a(n), b(n);
  for (auto& x : a) x = tok(rng);
  for (auto& x : b) x = tok(rng);
  for (auto _ : state) benchmark::DoNotOptimize(edit_distance(a, b));
}
BENCHMARK(BM_EditDistance)->Arg(16)->Arg(64)->Arg(256);

static void BM_LMForward(benchmark::State& state) {
  LMConfig cfg;
  cfg.vocab_size = 64;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.d_ff = 128;
  cfg.max_seq_len = 256;
  TransformerLM<float> lm(cfg);
  ModelInput<float> in;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> tok(0, 63);
  for (long i = 0; i < state.range(0); ++i) in.tokens.push_back(tok(rng));
  for (auto _ : state) benchmark::DoNotOptimize(lm.forward(in));
}
BENCHMARK(BM_LMForward)->Arg(16)->Arg(64);

static void BM_ChannelSample(benchmark::State& state) {
  ChannelSpec spec = make_uniform_channel({"a", "b", "c", "d"}, 0.1, 0.05, 0.02);
  std::vector<std::string> truth(static_cast<std::size_t>(state.range(0)), "a");
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth[i] = spec.alphabet[i % spec.alphabet.size()];
  Rng rng = make_rng(3, "bench");
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_hypothesis(spec, truth, rng));
}
BENCHMARK(BM_ChannelSample)->Arg(8)->Arg(32);

BENCHMARK_MAIN();
