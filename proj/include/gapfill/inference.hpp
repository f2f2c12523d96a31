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

// Gap filling.
//
// Strategies and their test-time cost (d data width, c hidden units, T
// sequence length, g gap length, M Gibbs steps, a values per step):
//
//   gsn         Gibbs sampling with BRNN conditionals     O((dc + c^2)(T + gM))
//   nade        one reconstruction per gap step           O((dc + c^2)(T + g))
//   bayes_mcmc  Gibbs sampling with exact unidirectional
//               conditionals (all a proposals per step)   O((dc + c^2)(T + aTM))
//   oneway      left-to-right unidirectional prediction   O((dc + c^2) T)
//   onegram     context-free frequencies                  O(dg)
//
// The GSN and NADE costs rely on BiConditionalCache, which recomputes only
// the hidden states between the gap and the resampled step.
//
// All functions take `x` holding the observations in its first d_out
// channels; values inside the gap are treated as the ground truth that the
// likelihoods score. Chains, permutations and proposals are independent
// and run through parallel_for; results equal the serial path bit for bit.

#ifndef GAPFILL_INFERENCE_HPP_
#define GAPFILL_INFERENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gapfill/corpus.hpp"
#include "gapfill/models.hpp"
#include "gapfill/parallel.hpp"
#include "gapfill/rng.hpp"

namespace gapfill {

// Forced-step probabilities below this flag the gap result.
inline constexpr double kZeroProbability = 1e-300;

// Initial gap contents for a Gibbs chain. `automatic` picks random one-hot
// for categorical data and all-zero vectors for binary data.
enum class InitMode { automatic, random_onehot, zeros };

struct ChainConfig {
  std::size_t mcmc_steps = 100;
  std::size_t n_chains = 100;
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::automatic;
  Exec exec = Exec::parallel;
  bool keep_samples = false;
};

struct GapResult {
  std::string strategy;
  double gap_nll = 0.0;
  std::vector<double> per_position_nll;
  std::vector<Sequence> samples;              // gap contents (g x d_out) per chain
  std::vector<double> chain_log_likelihoods;  // per chain or per ordering
  std::size_t n_chains = 0;
  std::size_t mcmc_steps = 0;
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
  // {"strategy", "gap_nll", "per_position_nll", "n_chains", "M", "flags"};
  // non-finite numbers are written as null.
  std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Gap values

// Number of distinct values one step can take: d (categorical) or 2^d.
std::size_t value_count(Family family, std::size_t dim);
// Category index (categorical) or bit pattern with channel i as bit i.
std::uint64_t value_code(Family family, std::span<const double> row);
void write_value(Family family, std::uint64_t code, std::span<double> row);

// ---------------------------------------------------------------------------
// Incremental conditionals

// Caches BRNN hidden states for a working sequence and recomputes only the
// stale part after a step changes.
class BiConditionalCache {
 public:
  // `input` has the model's input width.
  BiConditionalCache(const BiRnnParams& params, Sequence input);

  const Sequence& input() const { return input_; }
  // Writes data channels (width d_out); the missing channel, if any, is 0.
  void set_data(std::size_t t, std::span<const double> data);
  // Requires a missing-token channel.
  void set_missing(std::size_t t);
  // P(x_t | all other steps) under the shifted output.
  StepDistribution conditional(std::size_t t);

 private:
  void invalidate(std::size_t t);
  void ensure_forward(std::size_t count);
  void ensure_backward(std::size_t first);

  const BiRnnParams* params_;
  Sequence input_;
  Matrix forward_;
  Matrix backward_;
  std::size_t forward_valid_ = 0;  // rows [0, forward_valid_) are current
  std::size_t backward_valid_;     // rows [backward_valid_, T) are current
};

class UniConditionalCache {
 public:
  UniConditionalCache(const UniRnnParams& params, Sequence input);

  const Sequence& input() const { return input_; }
  void set_data(std::size_t t, std::span<const double> data);
  // P(x_t | x_0..x_{t-1}).
  StepDistribution predictive(std::size_t t);
  // P(x_t = a | all other steps) by Bayes' rule: proportional to
  // prod_{tau >= t} P(x_tau | x_<tau) with x_t = a, one pass per proposal a.
  // Categorical data only.
  StepDistribution exact_conditional(std::size_t t, Exec exec = Exec::serial);

 private:
  void ensure_hidden(std::size_t count);

  const UniRnnParams* params_;
  Sequence input_;
  Matrix hidden_;
  std::size_t valid_ = 0;
};

// ---------------------------------------------------------------------------
// Strategies

// GSN: each chain initialises the gap, runs M - g steps that resample a
// uniformly chosen gap position from the BRNN conditional, then a final
// sweep over a random permutation of the gap. The final sweep is run twice
// from the same state: forced to the true values (their probabilities give
// the chain's gap likelihood) and free (the probability of the true value at
// each position gives the per-position curve).
// gap_nll = -log mean_chains(likelihood). Requires M >= g.
GapResult gsn_fill(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                   const ChainConfig& config);

// Same protocol with the exact unidirectional conditional. Categorical only.
GapResult bayes_mcmc_fill(const UniRnnParams& params, const Sequence& x, GapSpec gap,
                          const ChainConfig& config);

// Visits `steps` Gibbs states (after each resampling step) of a single
// chain and returns their gap codes (mixed radix, position 0 least
// significant). Used to check stationary distributions.
std::vector<std::uint64_t> gsn_trace(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                                     std::size_t steps, std::uint64_t seed,
                                     InitMode init = InitMode::automatic);
std::vector<std::uint64_t> bayes_mcmc_trace(const UniRnnParams& params, const Sequence& x,
                                            GapSpec gap, std::size_t steps, std::uint64_t seed,
                                            InitMode init = InitMode::automatic);

StepDistribution bayes_exact_conditional(const UniRnnParams& params, const Sequence& x,
                                         std::size_t t, Exec exec = Exec::serial);

struct NadeFill {
  Sequence filled;  // whole sequence, data channels
  std::vector<std::size_t> order;
  double log_likelihood = 0.0;  // sum of log sampling probabilities
};

// Marks the gap missing, then fills it in a uniformly random order, each
// step sampled from the BRNN conditional with the unfilled steps still
// missing. Requires a missing-token channel.
NadeFill nade_fill(const BiRnnParams& params, const Sequence& x, GapSpec gap, Rng& rng);

// log prod_k P(x_{order[k]} | observed steps, order[0..k-1]) with every step
// listed in `order` initially missing. `order` may cover the whole sequence.
double nade_ordered_log_likelihood(const BiRnnParams& params, const Sequence& x,
                                   std::span<const std::size_t> order);

inline constexpr std::size_t kMaxExactNadeGap = 6;

// Exact NADE gap likelihood: mean over all g! orderings. Per-position NLL
// scores each step with the whole gap missing. g <= 6.
GapResult nade_exact_gap_nll(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                             Exec exec = Exec::parallel);

// gap_nll: teacher-forced sum of -log P(x_t | true history) over the gap.
// per_position_nll: n_chains left-to-right samplings of the gap, scoring the
// true value at each position, aggregated as -log mean likelihood.
GapResult oneway_fill(const UniRnnParams& params, const Sequence& x, GapSpec gap,
                      const ChainConfig& config);

// Context-free baseline. Categorical probabilities use add-one smoothing;
// Bernoulli means are clamped to [1/(n+2), 1 - 1/(n+2)] for n steps.
struct OneGramStats {
  Family family = Family::softmax;
  Vector probabilities;
  std::size_t observations = 0;

  std::string to_json() const;
  static OneGramStats from_json(std::string_view text);
};

OneGramStats estimate_onegram(const Corpus& corpus);
StepDistribution onegram_distribution(const OneGramStats& stats);
GapResult onegram_nll(const OneGramStats& stats, const Sequence& x, GapSpec gap);

void save_onegram(const OneGramStats& stats, const std::filesystem::path& path);
OneGramStats load_onegram(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Exhaustive oracles

inline constexpr std::size_t kMaxEnumeratedStates = 4096;

struct GapPosterior {
  std::size_t values_per_step = 0;
  std::vector<std::uint64_t> codes;
  std::vector<double> probabilities;
};

// Exact P(gap contents | rest) for a unidirectional model by scoring the
// full joint of every completion. Allows gap.length == 0 (one empty
// completion). Rejects a^g > 4096.
GapPosterior enumerate_gap_posterior(const UniRnnParams& params, const Sequence& x, GapSpec gap);

// For every gap state, the BRNN conditional of every gap position over the
// a values of that step: table[state][position][value]. These define the
// random-scan Gibbs transition matrix.
struct GapConditionalTable {
  std::size_t values_per_step = 0;
  std::size_t gap_length = 0;
  std::vector<std::vector<Vector>> table;
};

GapConditionalTable enumerate_gap_conditionals(const BiRnnParams& params, const Sequence& x,
                                               GapSpec gap);

}  // namespace gapfill

#endif  // GAPFILL_INFERENCE_HPP_
