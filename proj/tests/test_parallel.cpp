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


// The parallel path must reproduce the serial reference bit for bit. The
// thread count is raised above the core count so the OpenMP schedule
// actually interleaves work even on small machines.

#include <doctest.h>

#include "gapfill/eval.hpp"
#include "gapfill/training.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace gapfill;

namespace {

struct ManyThreads {
  ManyThreads() {
#ifdef GAPFILL_HAVE_OPENMP
    previous = omp_get_max_threads();
    omp_set_num_threads(4);
#endif
  }
  ~ManyThreads() {
#ifdef GAPFILL_HAVE_OPENMP
    omp_set_num_threads(previous);
#endif
  }
  int previous = 1;
};

void check_same(const GapResult& a, const GapResult& b) {
  CHECK(a.gap_nll == b.gap_nll);
  CHECK(a.per_position_nll == b.per_position_nll);
  CHECK(a.chain_log_likelihoods == b.chain_log_likelihoods);
  CHECK(a.samples == b.samples);
  CHECK(a.flags == b.flags);
}

}  // namespace

TEST_CASE("gap strategies: serial equals parallel") {
  ManyThreads threads;
  const std::size_t d = 5;
  BiRnnParams b = zero_bi(d, d, 6);
  oracle::randomize(b, 1);
  BiRnnParams nade = zero_bi(d + 1, d, 6);
  oracle::randomize(nade, 2);
  UniRnnParams u = zero_uni(d, d, 6);
  oracle::randomize(u, 3);
  const Sequence x = testing::random_onehot(d, 30, 4);
  const GapSpec gap{10, 4};

  ChainConfig cfg;
  cfg.mcmc_steps = 25;
  cfg.n_chains = 9;
  cfg.seed = 5;
  cfg.keep_samples = true;
  ChainConfig serial = cfg;
  serial.exec = Exec::serial;

  check_same(gsn_fill(b, x, gap, cfg), gsn_fill(b, x, gap, serial));
  check_same(bayes_mcmc_fill(u, x, gap, cfg), bayes_mcmc_fill(u, x, gap, serial));
  check_same(oneway_fill(u, x, gap, cfg), oneway_fill(u, x, gap, serial));
  check_same(nade_exact_gap_nll(nade, x, gap, Exec::parallel),
             nade_exact_gap_nll(nade, x, gap, Exec::serial));
  const auto p = bayes_exact_conditional(u, x, 12, Exec::parallel);
  const auto s = bayes_exact_conditional(u, x, 12, Exec::serial);
  CHECK(p.params == s.params);
}

TEST_CASE("BPTT: serial equals parallel") {
  ManyThreads threads;
  const Alphabet a = build_alphabet(testing::cycle_text(7, 7), 7);
  const Corpus corpus = text_corpus(testing::cycle_text(7, 700) + "gfedcba", a);
  TrainConfig cfg;
  cfg.seq_len = 30;
  cfg.minibatch_size = 11;
  for (Regime regime : {Regime::uni, Regime::brnn, Regime::nade_masked}) {
    cfg.regime = regime;
    Rng br = make_rng(1), mr = make_rng(2);
    const Minibatch batch = make_training_batch(corpus, cfg, br, mr);
    const std::size_t d_in = corpus.dim + (uses_missing_channel(regime) ? 1 : 0);
    if (model_kind(regime) == ModelKind::uni) {
      UniRnnParams u = zero_uni(d_in, corpus.dim, 8);
      oracle::randomize(u, 6);
      const auto x = bptt_uni(u, batch, Exec::parallel);
      const auto y = bptt_uni(u, batch, Exec::serial);
      CHECK(x.loss == y.loss);
      CHECK(x.grads == y.grads);
    } else {
      BiRnnParams bi = zero_bi(d_in, corpus.dim, 8);
      oracle::randomize(bi, 7);
      const auto x = bptt_bi(bi, batch, Exec::parallel);
      const auto y = bptt_bi(bi, batch, Exec::serial);
      CHECK(x.loss == y.loss);
      CHECK(x.grads == y.grads);
    }
  }
}

TEST_CASE("batch evaluation: serial equals parallel") {
  ManyThreads threads;
  const Alphabet a = build_alphabet("abcd", 4);
  std::string text;
  Rng rng = make_rng(8);
  for (int i = 0; i < 300; ++i) text.push_back(static_cast<char>('a' + uniform_index(rng, 4)));
  const Corpus corpus = text_corpus(text, a).segmented(50);
  const std::size_t d = corpus.dim;

  ModelSet models;
  models.uni = zero_uni(d, d, 4);
  oracle::randomize(*models.uni, 9);
  models.brnn = zero_bi(d, d, 4);
  oracle::randomize(*models.brnn, 10);
  models.nade = zero_bi(d + 1, d, 4);
  oracle::randomize(*models.nade, 11);
  models.onegram = estimate_onegram(corpus);

  EvalConfig cfg;
  cfg.gap_len = 3;
  cfg.n_gaps = 12;
  cfg.chain.mcmc_steps = 10;
  cfg.chain.n_chains = 4;
  cfg.seed = 12;
  const EvalReport par = evaluate_gaps(models, corpus, cfg);
  cfg.exec = Exec::serial;
  const EvalReport ser = evaluate_gaps(models, corpus, cfg);
  CHECK(par.to_json() == ser.to_json());
  CHECK(table1_csv(par) == table1_csv(ser));
}
