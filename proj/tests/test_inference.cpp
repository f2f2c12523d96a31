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


#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numeric>

#include "gapfill/inference.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace gapfill;

namespace {

// Rows of `x` with the gap set to the state `code` (categorical, mixed radix).
oracle::Rows with_state(oracle::Rows rows, GapSpec gap, std::size_t a, std::uint64_t code) {
  for (std::size_t i = 0; i < gap.length; ++i) {
    auto& r = rows[gap.start + i];
    std::fill(r.begin(), r.end(), 0.0);
    r[code % a] = 1.0;
    code /= a;
  }
  return rows;
}

std::size_t pow_int(std::size_t a, std::size_t g) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < g; ++i) n *= a;
  return n;
}

// Exact posterior of the gap under a unidirectional model, by full joints.
std::vector<double> posterior_oracle(const UniRnnParams& p, const Sequence& x, GapSpec gap) {
  const std::size_t a = p.output_dim();
  const std::size_t n = pow_int(a, gap.length);
  std::vector<double> logp(n);
  for (std::uint64_t s = 0; s < n; ++s) logp[s] = oracle::uni_log_joint(p, with_state(oracle::rows_of(x), gap, a, s));
  const double top = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double& v : logp) z += (v = std::exp(v - top));
  for (double& v : logp) v /= z;
  return logp;
}

// table[state][position][value] from loop-reference BRNN passes.
std::vector<std::vector<std::vector<double>>> bi_table_oracle(const BiRnnParams& p,
                                                              const Sequence& x, GapSpec gap) {
  const std::size_t a = p.output_dim();
  const std::size_t n = pow_int(a, gap.length);
  std::vector<std::vector<std::vector<double>>> table(n);
  for (std::uint64_t s = 0; s < n; ++s) {
    const auto out = oracle::bi_shifted(p, with_state(oracle::rows_of(x), gap, a, s));
    for (std::size_t i = 0; i < gap.length; ++i) table[s].push_back(out[gap.start + i]);
  }
  return table;
}

double context_free_nll(const Vector& bias, const Sequence& x, GapSpec gap) {
  const Vector p = softmax(bias);
  double total = 0.0;
  for (std::size_t t = gap.start; t < gap.end(); ++t) total -= std::log(p[argmax(x.step(t))]);
  return total;
}

}  // namespace

TEST_CASE("value codes") {
  CHECK(value_count(Family::softmax, 5) == 5);
  CHECK(value_count(Family::bernoulli, 3) == 8);
  const Vector bits = {1, 0, 1};
  CHECK(value_code(Family::bernoulli, bits) == 5);
  Vector row(3);
  write_value(Family::bernoulli, 6, row);
  CHECK(row == Vector{0, 1, 1});
  write_value(Family::softmax, 2, row);
  CHECK(row == Vector{0, 0, 1});
}

TEST_CASE("zero-weight models collapse to the context-free likelihood") {
  const std::size_t d = 4;
  const Vector bias = {0.3, -1.0, 2.0, 0.1};
  UniRnnParams u = zero_uni(d, d, 3);
  u.output_bias = bias;
  BiRnnParams b = zero_bi(d, d, 3);
  b.output_bias = bias;
  BiRnnParams nade = zero_bi(d + 1, d, 3);
  nade.output_bias = bias;
  const Sequence x = testing::random_onehot(d, 12, 4);
  const GapSpec gap{4, 3};
  const double want = context_free_nll(bias, x, gap);

  ChainConfig cfg;
  cfg.mcmc_steps = 7;
  cfg.n_chains = 5;
  cfg.seed = 3;
  CHECK(gsn_fill(b, x, gap, cfg).gap_nll == doctest::Approx(want).epsilon(1e-9));
  CHECK(bayes_mcmc_fill(u, x, gap, cfg).gap_nll == doctest::Approx(want).epsilon(1e-9));
  CHECK(oneway_fill(u, x, gap, cfg).gap_nll == doctest::Approx(want).epsilon(1e-9));
  const GapResult ne = nade_exact_gap_nll(nade, x, gap);
  CHECK(ne.gap_nll == doctest::Approx(want).epsilon(1e-9));
  CHECK(ne.n_chains == 6);
  for (double v : ne.chain_log_likelihoods) CHECK(-v == doctest::Approx(want).epsilon(1e-9));

  OneGramStats stats;
  stats.probabilities = softmax(bias);
  stats.observations = 100;
  CHECK(onegram_nll(stats, x, gap).gap_nll == doctest::Approx(want).epsilon(1e-9));

  // Per-position curves are the per-step context-free values.
  const GapResult g = gsn_fill(b, x, gap, cfg);
  REQUIRE(g.per_position_nll.size() == 3);
  const Vector p = softmax(bias);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.per_position_nll[i] == doctest::Approx(-std::log(p[argmax(x.step(4 + i))])));
  }

  // Uni and BRNN conditionals are softmax(b_y) everywhere.
  for (std::size_t t = 0; t < 12; ++t) {
    const auto c = bayes_exact_conditional(u, x, t);
    for (std::size_t k = 0; k < d; ++k) CHECK(c.params[k] == doctest::Approx(p[k]).epsilon(1e-12));
  }
}

TEST_CASE("exact unidirectional conditional matches full-joint enumeration") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const std::size_t d = 2 + seed % 3, T = 3 + seed % 4;
    UniRnnParams u = zero_uni(d, d, 4);
    oracle::randomize(u, seed, 1.5);
    const Sequence x = testing::random_onehot(d, T, 10 + seed);
    for (std::size_t t = 0; t < T; ++t) {
      const auto want = posterior_oracle(u, x, GapSpec{t, 1});
      const auto got = bayes_exact_conditional(u, x, t, Exec::parallel);
      for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(got.params[k] - want[k]) < 1e-8);
    }
    // At the last step the future product is empty.
    const auto last = bayes_exact_conditional(u, x, T - 1);
    const auto pred = oracle::uni_predictive(u, oracle::rows_of(x));
    for (std::size_t k = 0; k < d; ++k) CHECK(last.params[k] == doctest::Approx(pred[T - 1][k]).epsilon(1e-12));
  }
}

TEST_CASE("gap posterior enumeration") {
  UniRnnParams u = zero_uni(2, 2, 3);
  oracle::randomize(u, 8);
  const Sequence x = testing::random_onehot(2, 6, 9);
  const GapPosterior post = enumerate_gap_posterior(u, x, {2, 2});
  CHECK(post.codes.size() == 4);
  CHECK(std::abs(std::accumulate(post.probabilities.begin(), post.probabilities.end(), 0.0) - 1.0) < 1e-10);
  const auto want = posterior_oracle(u, x, {2, 2});
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(post.probabilities[i] - want[post.codes[i]]) < 1e-12);

  // Marginal of one step agrees with the single-step conditional when the gap is one step.
  const GapPosterior one = enumerate_gap_posterior(u, x, {3, 1});
  const auto cond = bayes_exact_conditional(u, x, 3);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(one.probabilities[i] - cond.params[one.codes[i]]) < 1e-8);

  const GapPosterior empty = enumerate_gap_posterior(u, x, {2, 0});
  REQUIRE(empty.probabilities.size() == 1);
  CHECK(empty.probabilities[0] == 1.0);

  UniRnnParams wide = zero_uni(9, 9, 2);
  CHECK_THROWS_AS(enumerate_gap_posterior(wide, testing::random_onehot(9, 8, 1), {1, 4}), InvalidInput);
}

TEST_CASE("BRNN conditional table agrees with the reference") {
  BiRnnParams b = zero_bi(3, 3, 4);
  oracle::randomize(b, 12);
  const Sequence x = testing::random_onehot(3, 6, 13);
  const GapSpec gap{2, 2};
  const GapConditionalTable t = enumerate_gap_conditionals(b, x, gap);
  const auto want = bi_table_oracle(b, x, gap);
  REQUIRE(t.table.size() == want.size());
  for (std::size_t s = 0; s < want.size(); ++s) {
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t v = 0; v < 3; ++v) CHECK(t.table[s][i][v] == doctest::Approx(want[s][i][v]).epsilon(1e-12));
    }
  }
}

TEST_CASE("Bayes Gibbs chain converges to the exact gap posterior") {
  UniRnnParams u = zero_uni(2, 2, 3);
  oracle::randomize(u, 21, 1.5);
  const Sequence x = testing::random_onehot(2, 5, 22);
  const GapSpec gap{1, 2};
  const auto freq = oracle::frequencies(bayes_mcmc_trace(u, x, gap, 20000, 23), 4);
  const double tv = oracle::total_variation(freq, posterior_oracle(u, x, gap));
  MESSAGE("Bayes Gibbs TV: " << tv);
  CHECK(tv < 0.02);
}

TEST_CASE("GSN chain converges to the stationary law of its conditionals") {
  BiRnnParams b = zero_bi(2, 2, 3);
  oracle::randomize(b, 31, 1.5);
  const Sequence x = testing::random_onehot(2, 4, 32);
  const GapSpec gap{1, 2};
  const auto pi = oracle::gibbs_stationary(bi_table_oracle(b, x, gap), 2, 2);
  const auto freq = oracle::frequencies(gsn_trace(b, x, gap, 20000, 33), 4);
  const double tv = oracle::total_variation(freq, pi);
  MESSAGE("GSN Gibbs TV: " << tv);
  CHECK(tv < 0.02);
}

TEST_CASE("NADE probabilities are normalised over all sequences") {
  const std::size_t d = 3, T = 4;
  BiRnnParams b = zero_bi(d + 1, d, 4);
  oracle::randomize(b, 41, 1.5);
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  double total = 0.0;
  std::vector<std::size_t> idx(T, 0);
  for (std::size_t code = 0; code < pow_int(d, T); ++code) {
    std::size_t c = code;
    for (auto& i : idx) {
      i = c % d;
      c /= d;
    }
    total += std::exp(nade_ordered_log_likelihood(b, onehot_sequence(idx, d, false), order));
  }
  CHECK(std::abs(total - 1.0) < 1e-8);
}

TEST_CASE("exact NADE likelihood against a two-ordering hand computation") {
  const std::size_t d = 2, T = 4;
  BiRnnParams b = zero_bi(d + 1, d, 3);
  oracle::randomize(b, 51, 1.5);
  const Sequence x = testing::random_onehot(d, T, 52);
  const GapSpec gap{1, 2};
  auto rows = oracle::rows_of(with_width(x, d + 1));
  const auto truth = oracle::rows_of(x);
  const auto missing = [&](oracle::Rows r, std::size_t t) {
    r[t] = {0.0, 0.0, 1.0};
    return r;
  };
  const auto both = missing(missing(rows, 1), 2);
  const auto p_first = oracle::bi_shifted(b, both);
  const double p1 = oracle::log_prob(b.family, p_first[1], truth[1]);
  const double p2 = oracle::log_prob(b.family, p_first[2], truth[2]);
  const double p2_after_1 = oracle::log_prob(b.family, oracle::bi_shifted(b, missing(rows, 2))[2], truth[2]);
  const double p1_after_2 = oracle::log_prob(b.family, oracle::bi_shifted(b, missing(rows, 1))[1], truth[1]);
  const double want = -std::log(0.5 * (std::exp(p1 + p2_after_1) + std::exp(p2 + p1_after_2)));

  const GapResult r = nade_exact_gap_nll(b, x, gap, Exec::serial);
  CHECK(r.gap_nll == doctest::Approx(want).epsilon(1e-12));
  CHECK(r.per_position_nll[0] == doctest::Approx(-p1).epsilon(1e-12));
  CHECK(r.per_position_nll[1] == doctest::Approx(-p2).epsilon(1e-12));

  // g = 1: the single conditional.
  const GapResult one = nade_exact_gap_nll(b, x, {2, 1});
  CHECK(one.gap_nll == doctest::Approx(-oracle::log_prob(b.family, oracle::bi_shifted(b, missing(rows, 2))[2], truth[2])).epsilon(1e-12));
}

TEST_CASE("NADE sampling fill") {
  const std::size_t d = 4;
  BiRnnParams b = zero_bi(d + 1, d, 3);
  oracle::randomize(b, 61);
  const Sequence x = testing::random_onehot(d, 10, 62);
  Rng r1 = make_rng(5), r2 = make_rng(5);
  const NadeFill f1 = nade_fill(b, x, {3, 4}, r1);
  const NadeFill f2 = nade_fill(b, x, {3, 4}, r2);
  CHECK(f1.filled == f2.filled);
  CHECK(f1.order == f2.order);
  std::vector<std::size_t> sorted = f1.order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::size_t>{3, 4, 5, 6});
  for (std::size_t t : {0u, 1u, 2u, 7u, 8u, 9u}) {
    for (std::size_t k = 0; k < d; ++k) CHECK(f1.filled.steps(t, k) == x.steps(t, k));
  }
  CHECK(f1.log_likelihood == doctest::Approx(nade_ordered_log_likelihood(b, f1.filled, f1.order)).epsilon(1e-12));

  // g = 1 samples from the single conditional.
  std::vector<double> counts(d, 0.0);
  Rng rng = make_rng(7);
  for (int i = 0; i < 4000; ++i) counts[argmax(nade_fill(b, x, {5, 1}, rng).filled.step(5))] += 1.0;
  auto rows = oracle::rows_of(with_width(x, d + 1));
  rows[5] = {0, 0, 0, 0, 1};
  const auto want = oracle::bi_shifted(b, rows)[5];
  for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(counts[k] / 4000.0 - want[k]) < 0.03);
}

TEST_CASE("argument checks") {
  BiRnnParams plain = zero_bi(3, 3, 2);
  BiRnnParams nade = zero_bi(4, 3, 2);
  const Sequence x = testing::random_onehot(3, 20, 1);
  CHECK_THROWS_AS(nade_exact_gap_nll(nade, x, {2, 7}), InvalidInput);
  CHECK_THROWS_AS(nade_exact_gap_nll(plain, x, {2, 2}), InvalidInput);
  ChainConfig cfg;
  cfg.mcmc_steps = 2;
  CHECK_THROWS_AS(gsn_fill(plain, x, {2, 3}, cfg), InvalidInput);
  cfg.mcmc_steps = 3;
  CHECK_NOTHROW(gsn_fill(plain, x, {2, 3}, cfg));
  CHECK_THROWS_AS(gsn_fill(plain, x, {18, 3}, cfg), InvalidInput);
  UniRnnParams binary = zero_uni(3, 3, 2, Family::bernoulli);
  try {
    bayes_mcmc_fill(binary, testing::random_binary(3, 10, 2), {2, 2}, cfg);
    FAIL("expected rejection");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("2^d") != std::string::npos);
  }
  BiRnnParams aligned = plain;
  aligned.output = BiOutput::aligned;
  CHECK_THROWS_AS(gsn_fill(aligned, x, {2, 3}, cfg), InvalidInput);
}

TEST_CASE("one-gram baseline") {
  SUBCASE("uniform categorical") {
    OneGramStats s;
    s.probabilities = {0.25, 0.25, 0.25, 0.25};
    CHECK(onegram_nll(s, testing::random_onehot(4, 10, 3), {2, 5}).gap_nll == doctest::Approx(5.0 * std::log(4.0)));
  }
  SUBCASE("binary with mean one half") {
    PianoRoll roll;
    roll.dim = 2;
    roll.scores = {Sequence(Matrix(4, 2, {1, 0, 0, 1, 1, 1, 0, 0}))};
    const Corpus c = binary_corpus(roll.scores);
    const OneGramStats s = estimate_onegram(c);
    CHECK(s.family == Family::bernoulli);
    CHECK(s.probabilities == Vector{0.5, 0.5});
    const Sequence x(Matrix(1, 2, {1, 0}));
    CHECK(onegram_nll(s, x, {0, 1}).gap_nll == doctest::Approx(2.0 * std::log(2.0)));
  }
  SUBCASE("add-one smoothing") {
    const Alphabet a({U'a', U'b'});
    // d = 3 including the out-of-alphabet symbol.
    const OneGramStats s = estimate_onegram(text_corpus("aaab", a));
    CHECK(s.probabilities[0] == doctest::Approx(4.0 / 7.0));
    const Alphabet two({U'a'});
    // Over [a, OOV]: "aaab" gives a 3 of 4, smoothed (3+1)/(4+2).
    const OneGramStats s2 = estimate_onegram(text_corpus("aaab", two));
    CHECK(s2.probabilities.size() == 2);
    CHECK(s2.probabilities[0] == doctest::Approx(4.0 / 6.0));
    const GapResult r = onegram_nll(s2, encode_onehot("a", two, false), {0, 1});
    CHECK(r.gap_nll == doctest::Approx(-std::log(4.0 / 6.0)));
  }
  SUBCASE("clamped Bernoulli means") {
    const Corpus c = binary_corpus({Sequence(Matrix(2, 2, {1, 0, 1, 0}))});
    const OneGramStats s = estimate_onegram(c);
    CHECK(s.probabilities[0] == doctest::Approx(1.0 - 1.0 / 4.0));
    CHECK(s.probabilities[1] == doctest::Approx(1.0 / 4.0));
  }
  SUBCASE("JSON round trip") {
    OneGramStats s;
    s.probabilities = {0.1, 0.9};
    s.observations = 12;
    s.family = Family::bernoulli;
    const OneGramStats back = OneGramStats::from_json(s.to_json());
    CHECK(back.probabilities == s.probabilities);
    CHECK(back.observations == 12);
    CHECK(back.family == Family::bernoulli);
  }
}

TEST_CASE("gap result JSON") {
  GapResult r;
  r.strategy = "gsn";
  r.gap_nll = std::numeric_limits<double>::infinity();
  r.per_position_nll = {0.5, 1.5};
  r.n_chains = 3;
  r.mcmc_steps = 10;
  r.flags = {"zero_probability"};
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["strategy"] == "gsn");
  CHECK(j["gap_nll"].is_null());
  CHECK(j["per_position_nll"][1] == 1.5);
  CHECK(j["M"] == 10);
  CHECK(j["flags"][0] == "zero_probability");
}

TEST_CASE("zero-probability truth flags the result") {
  BiRnnParams b = zero_bi(2, 2, 2);
  b.output_bias = {800.0, -800.0};
  Sequence x = onehot_sequence(std::vector<std::size_t>{0, 1, 0, 0}, 2, false);
  ChainConfig cfg;
  cfg.mcmc_steps = 3;
  cfg.n_chains = 2;
  const GapResult r = gsn_fill(b, x, {1, 1}, cfg);
  CHECK(r.flagged());
  CHECK(std::isinf(r.gap_nll));
}

TEST_CASE("incremental caches agree with full forward passes") {
  const std::size_t d = 5, T = 15;
  BiRnnParams b = zero_bi(d + 1, d, 6);
  oracle::randomize(b, 71);
  UniRnnParams u = zero_uni(d, d, 6);
  oracle::randomize(u, 72);
  Sequence cur = with_width(testing::random_onehot(d, T, 73), d + 1);
  BiConditionalCache bc(b, cur);
  Sequence ucur = testing::random_onehot(d, T, 74);
  UniConditionalCache uc(u, ucur);
  Rng rng = make_rng(75);
  for (int step = 0; step < 200; ++step) {
    const std::size_t t = uniform_index(rng, T);
    const std::size_t action = uniform_index(rng, 3);
    if (action == 0) {
      bc.set_missing(t);
      set_missing_token(cur, t);
    } else if (action == 1) {
      Vector v(d, 0.0);
      v[uniform_index(rng, d)] = 1.0;
      bc.set_data(t, v);
      for (std::size_t k = 0; k < d; ++k) cur.steps(t, k) = v[k];
      cur.steps(t, d) = 0.0;
      uc.set_data(t, v);
      for (std::size_t k = 0; k < d; ++k) ucur.steps(t, k) = v[k];
    }
    const std::size_t q = uniform_index(rng, T);
    CHECK(bc.conditional(q).params == bi_forward(b, cur)[q].params);
    CHECK(uc.predictive(q).params == uni_predictive(u, ucur)[q].params);
  }
}

TEST_CASE("one-way inference") {
  UniRnnParams u = zero_uni(3, 3, 4);
  oracle::randomize(u, 81);
  const Sequence x = testing::random_onehot(3, 9, 82);
  ChainConfig cfg;
  cfg.n_chains = 4;
  const GapResult one = oneway_fill(u, x, {4, 1}, cfg);
  const auto pred = oracle::uni_predictive(u, oracle::rows_of(x));
  CHECK(one.gap_nll == doctest::Approx(-std::log(pred[4][argmax(x.step(4))])).epsilon(1e-12));
  const GapResult three = oneway_fill(u, x, {4, 3}, cfg);
  double want = 0.0;
  for (std::size_t t = 4; t < 7; ++t) want -= std::log(pred[t][argmax(x.step(t))]);
  CHECK(three.gap_nll == doctest::Approx(want).epsilon(1e-12));
  CHECK(three.per_position_nll.size() == 3);
  // The first gap step has no sampled history, so its curve value is exact.
  CHECK(three.per_position_nll[0] == doctest::Approx(-std::log(pred[4][argmax(x.step(4))])).epsilon(1e-12));
}

TEST_CASE("Gibbs results are reproducible") {
  BiRnnParams b = zero_bi(4, 4, 5);
  oracle::randomize(b, 91);
  const Sequence x = testing::random_onehot(4, 20, 92);
  ChainConfig cfg;
  cfg.mcmc_steps = 30;
  cfg.n_chains = 6;
  cfg.seed = 17;
  cfg.keep_samples = true;
  const GapResult a = gsn_fill(b, x, {8, 4}, cfg);
  const GapResult c = gsn_fill(b, x, {8, 4}, cfg);
  CHECK(a.gap_nll == c.gap_nll);
  CHECK(a.samples == c.samples);
  CHECK(a.samples.size() == 6);
  cfg.seed = 18;
  CHECK(gsn_fill(b, x, {8, 4}, cfg).chain_log_likelihoods != a.chain_log_likelihoods);
}
