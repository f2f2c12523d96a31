// Copyright 2026 The Gapfill Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs parallel kernels, plus scaling of the Gibbs strategies in M, g
// and d. Arg 0 selects the execution mode (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include "gapfill/inference.hpp"
#include "gapfill/training.hpp"

namespace {

using namespace gapfill;

constexpr std::size_t kLength = 50;

Sequence random_text(std::size_t d, std::size_t length, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<std::size_t> idx(length);
  for (auto& i : idx) i = uniform_index(rng, d);
  return onehot_sequence(idx, d, false);
}

Exec mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

void BM_GsnFill(benchmark::State& state) {
  const std::size_t d = 32;
  Rng rng = make_rng(1);
  const BiRnnParams params = init_bi(d, d, 40, rng, Family::softmax);
  const Sequence x = random_text(d, kLength, 2);
  ChainConfig cfg;
  cfg.mcmc_steps = static_cast<std::size_t>(state.range(1));
  cfg.n_chains = 20;
  cfg.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(gsn_fill(params, x, {20, 5}, cfg).gap_nll);
}
BENCHMARK(BM_GsnFill)->ArgsProduct({{0, 1}, {20, 100, 400}})->Unit(benchmark::kMillisecond);

void BM_BayesMcmcFill(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(1));
  Rng rng = make_rng(3);
  const UniRnnParams params = init_uni(d, d, 48, rng, Family::softmax);
  const Sequence x = random_text(d, kLength, 4);
  ChainConfig cfg;
  cfg.mcmc_steps = 20;
  cfg.n_chains = 4;
  cfg.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(bayes_mcmc_fill(params, x, {20, 5}, cfg).gap_nll);
}
BENCHMARK(BM_BayesMcmcFill)->ArgsProduct({{0, 1}, {8, 32}})->Unit(benchmark::kMillisecond);

void BM_NadeExact(benchmark::State& state) {
  const std::size_t d = 32;
  const std::size_t g = static_cast<std::size_t>(state.range(1));
  Rng rng = make_rng(5);
  const BiRnnParams params = init_bi(d + 1, d, 40, rng, Family::softmax);
  const Sequence x = random_text(d, kLength, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nade_exact_gap_nll(params, x, {20, g}, mode(state)).gap_nll);
  }
}
BENCHMARK(BM_NadeExact)->ArgsProduct({{0, 1}, {3, 5, 6}})->Unit(benchmark::kMillisecond);

void BM_BpttBatch(benchmark::State& state) {
  Rng rng = make_rng(7);
  const std::size_t d = 32;
  std::vector<std::uint32_t> track(20000);
  for (auto& s : track) s = static_cast<std::uint32_t>(uniform_index(rng, d));
  Corpus corpus;
  corpus.dim = d;
  corpus.symbol_tracks = {track};
  TrainConfig cfg;
  cfg.regime = Regime::brnn;
  cfg.seq_len = kLength;
  cfg.minibatch_size = 40;
  Rng batch_rng = make_rng(8), mask_rng = make_rng(9);
  const Minibatch batch = make_training_batch(corpus, cfg, batch_rng, mask_rng);
  const BiRnnParams params = init_bi(d, d, 40, rng, Family::softmax);
  for (auto _ : state) benchmark::DoNotOptimize(bptt_bi(params, batch, mode(state)).loss);
}
BENCHMARK(BM_BpttBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
