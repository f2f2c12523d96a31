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

#include "gapfill/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace gapfill {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogZeroProbability = std::log(kZeroProbability);

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void require_shifted(const BiRnnParams& params) {
  if (params.output != BiOutput::shifted) {
    throw InvalidInput("gap filling needs the shifted BRNN output; the aligned variant sees x_t");
  }
}

void require_categorical(const UniRnnParams& params) {
  if (params.family != Family::softmax) {
    throw InvalidInput("Bayesian conditionals need categorical data: binary steps have 2^d "
                       "proposals (d = " + std::to_string(params.output_dim()) + ")");
  }
}

Sequence truth_of(const Sequence& x, std::size_t d_out) {
  if (x.width() < d_out) {
    throw InvalidInput("sequence width " + std::to_string(x.width()) +
                       " is below the model output width " + std::to_string(d_out));
  }
  return data_channels(x, d_out);
}

void sample_into(const StepDistribution& dist, Rng& rng, std::span<double> row) {
  if (dist.family == Family::softmax) {
    const std::size_t k = sample_categorical(rng, dist.params);
    std::fill(row.begin(), row.end(), 0.0);
    row[k] = 1.0;
  } else {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = uniform01(rng) < dist.params[i] ? 1.0 : 0.0;
  }
}

InitMode resolve(InitMode mode, Family family) {
  if (mode != InitMode::automatic) return mode;
  return family == Family::softmax ? InitMode::random_onehot : InitMode::zeros;
}

template <class Cache>
void initialise_gap(Cache& cache, GapSpec gap, std::size_t d_out, InitMode mode, Rng& rng) {
  Vector row(d_out, 0.0);
  for (std::size_t t = gap.start; t < gap.end(); ++t) {
    std::fill(row.begin(), row.end(), 0.0);
    if (mode == InitMode::random_onehot) row[uniform_index(rng, d_out)] = 1.0;
    cache.set_data(t, row);
  }
}

struct ChainOutcome {
  double forced_log_likelihood = 0.0;
  bool zero_probability = false;
  std::vector<double> position_prob;
  Sequence sample;
};

// One Gibbs chain with the forced/free final sweep (see gsn_fill).
template <class Cache, class Conditional>
ChainOutcome run_chain(Cache cache, const Sequence& truth, GapSpec gap, std::size_t steps,
                       Family family, InitMode init, Rng& rng, Conditional conditional,
                       bool keep_sample) {
  const std::size_t d_out = truth.width();
  const std::size_t g = gap.length;
  initialise_gap(cache, gap, d_out, resolve(init, family), rng);
  Vector row(d_out);
  for (std::size_t s = 0; s + g < steps; ++s) {
    const std::size_t t = gap.start + uniform_index(rng, g);
    sample_into(conditional(cache, t), rng, row);
    cache.set_data(t, row);
  }
  const auto order = random_permutation(g, rng);
  Cache forced = cache;

  ChainOutcome out;
  out.position_prob.assign(g, 0.0);
  for (std::size_t i : order) {
    const std::size_t t = gap.start + i;
    const StepDistribution dist = conditional(cache, t);
    out.position_prob[i] = std::exp(dist.log_prob(truth.step(t)));
    sample_into(dist, rng, row);
    cache.set_data(t, row);
  }
  for (std::size_t i : order) {
    const std::size_t t = gap.start + i;
    const double lp = conditional(forced, t).log_prob(truth.step(t));
    out.forced_log_likelihood += lp;
    if (!(lp >= kLogZeroProbability)) out.zero_probability = true;
    forced.set_data(t, truth.step(t));
  }
  if (keep_sample) {
    out.sample = Sequence(g, d_out);
    for (std::size_t i = 0; i < g; ++i) {
      const auto src = cache.input().step(gap.start + i).first(d_out);
      std::copy(src.begin(), src.end(), out.sample.step(i).begin());
    }
  }
  return out;
}

template <class Cache, class Conditional>
std::vector<std::uint64_t> run_trace(Cache cache, GapSpec gap, std::size_t d_out, Family family,
                                     std::size_t steps, InitMode init, Rng& rng,
                                     Conditional conditional) {
  initialise_gap(cache, gap, d_out, resolve(init, family), rng);
  const std::uint64_t radix = value_count(family, d_out);
  std::vector<std::uint64_t> codes(gap.length, 0);
  for (std::size_t i = 0; i < gap.length; ++i) {
    codes[i] = value_code(family, cache.input().step(gap.start + i).first(d_out));
  }
  std::vector<std::uint64_t> trace;
  trace.reserve(steps);
  Vector row(d_out);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t i = uniform_index(rng, gap.length);
    const std::size_t t = gap.start + i;
    sample_into(conditional(cache, t), rng, row);
    cache.set_data(t, row);
    codes[i] = value_code(family, row);
    std::uint64_t state = 0;
    for (std::size_t k = gap.length; k-- > 0;) state = state * radix + codes[k];
    trace.push_back(state);
  }
  return trace;
}

GapResult aggregate_chains(std::string strategy, const std::vector<ChainOutcome>& chains,
                           std::size_t g, const ChainConfig& config) {
  GapResult result;
  result.strategy = std::move(strategy);
  result.n_chains = chains.size();
  result.mcmc_steps = config.mcmc_steps;
  bool zero = false;
  for (const auto& c : chains) {
    result.chain_log_likelihoods.push_back(c.forced_log_likelihood);
    zero = zero || c.zero_probability;
    if (config.keep_samples) result.samples.push_back(c.sample);
  }
  const double n = static_cast<double>(chains.size());
  result.gap_nll = -(log_sum_exp(result.chain_log_likelihoods) - std::log(n));
  result.per_position_nll.assign(g, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    double mean = 0.0;
    for (const auto& c : chains) mean += c.position_prob[i];
    result.per_position_nll[i] = -std::log(mean / n);
  }
  if (zero || !std::isfinite(result.gap_nll)) result.flags.push_back("zero_probability");
  return result;
}

void check_chain_config(const ChainConfig& config, GapSpec gap) {
  if (config.n_chains < 1) throw InvalidInput("n_chains must be at least 1");
  if (config.mcmc_steps < gap.length) {
    throw InvalidInput("M = " + std::to_string(config.mcmc_steps) +
                       " Gibbs steps cannot force the final " + std::to_string(gap.length) +
                       " steps of the gap");
  }
}

std::uint64_t checked_state_count(std::size_t values, std::size_t g) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < g; ++i) {
    if (total > kMaxEnumeratedStates) break;
    total *= values;
  }
  if (total > kMaxEnumeratedStates) {
    throw InvalidInput("enumeration needs a^g = " + std::to_string(values) + "^" +
                       std::to_string(g) + " > " + std::to_string(kMaxEnumeratedStates) +
                       " gap completions");
  }
  return total;
}

// Writes the gap values of mixed-radix `state` into `seq`.
void write_state(Family family, std::size_t values, std::uint64_t state, GapSpec gap,
                 std::size_t d_out, Sequence& seq) {
  for (std::size_t i = 0; i < gap.length; ++i) {
    auto row = seq.step(gap.start + i).first(d_out);
    write_value(family, state % values, row);
    state /= values;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// GapResult

std::string GapResult::to_json() const {
  json per = json::array();
  for (double v : per_position_nll) per.push_back(finite_or_null(v));
  return json{{"strategy", strategy},
              {"gap_nll", finite_or_null(gap_nll)},
              {"per_position_nll", per},
              {"n_chains", n_chains},
              {"M", mcmc_steps},
              {"flags", flags}}
      .dump();
}

// ---------------------------------------------------------------------------
// Values

std::size_t value_count(Family family, std::size_t dim) {
  if (family == Family::softmax) return dim;
  if (dim >= 63) throw InvalidInput("2^" + std::to_string(dim) + " binary values overflow");
  return std::size_t{1} << dim;
}

std::uint64_t value_code(Family family, std::span<const double> row) {
  if (family == Family::softmax) return argmax(row);
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] != 0.0) code |= std::uint64_t{1} << i;
  }
  return code;
}

void write_value(Family family, std::uint64_t code, std::span<double> row) {
  std::fill(row.begin(), row.end(), 0.0);
  if (family == Family::softmax) {
    row[code] = 1.0;
  } else {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = (code >> i) & 1U ? 1.0 : 0.0;
  }
}

// ---------------------------------------------------------------------------
// BiConditionalCache

BiConditionalCache::BiConditionalCache(const BiRnnParams& params, Sequence input)
    : params_(&params),
      input_(std::move(input)),
      forward_(input_.length(), params.hidden_size()),
      backward_(input_.length(), params.hidden_size()),
      backward_valid_(input_.length()) {
  validate(params);
  require_shifted(params);
  if (input_.width() != params.input_dim()) {
    throw InvalidInput("sequence width " + std::to_string(input_.width()) +
                       " does not match model input width " + std::to_string(params.input_dim()));
  }
}

void BiConditionalCache::invalidate(std::size_t t) {
  forward_valid_ = std::min(forward_valid_, t);
  backward_valid_ = std::max(backward_valid_, t + 1);
}

void BiConditionalCache::set_data(std::size_t t, std::span<const double> data) {
  auto row = input_.step(t);
  std::copy(data.begin(), data.end(), row.begin());
  std::fill(row.begin() + static_cast<std::ptrdiff_t>(data.size()), row.end(), 0.0);
  invalidate(t);
}

void BiConditionalCache::set_missing(std::size_t t) {
  if (!params_->has_missing_channel()) throw InvalidInput("model has no missing-token channel");
  auto row = input_.step(t);
  std::fill(row.begin(), row.end(), 0.0);
  row.back() = 1.0;
  invalidate(t);
}

void BiConditionalCache::ensure_forward(std::size_t count) {
  for (std::size_t r = forward_valid_; r < count; ++r) {
    recurrent_step(params_->forward, r == 0 ? std::span<const double>{} : forward_.row(r - 1),
                   input_.step(r), forward_.row(r));
  }
  forward_valid_ = std::max(forward_valid_, count);
}

void BiConditionalCache::ensure_backward(std::size_t first) {
  const std::size_t T = input_.length();
  for (std::size_t r = backward_valid_; r-- > first;) {
    recurrent_step(params_->backward, r + 1 == T ? std::span<const double>{} : backward_.row(r + 1),
                   input_.step(r), backward_.row(r));
  }
  backward_valid_ = std::min(backward_valid_, first);
}

StepDistribution BiConditionalCache::conditional(std::size_t t) {
  const std::size_t T = input_.length();
  ensure_forward(t);
  ensure_backward(t + 1);
  return bi_output(*params_, t == 0 ? std::span<const double>{} : forward_.row(t - 1),
                   t + 1 == T ? std::span<const double>{} : backward_.row(t + 1));
}

// ---------------------------------------------------------------------------
// UniConditionalCache

UniConditionalCache::UniConditionalCache(const UniRnnParams& params, Sequence input)
    : params_(&params), input_(std::move(input)), hidden_(input_.length(), params.hidden_size()) {
  validate(params);
  if (input_.width() != params.input_dim()) {
    throw InvalidInput("sequence width " + std::to_string(input_.width()) +
                       " does not match model input width " + std::to_string(params.input_dim()));
  }
}

void UniConditionalCache::set_data(std::size_t t, std::span<const double> data) {
  auto row = input_.step(t);
  std::copy(data.begin(), data.end(), row.begin());
  std::fill(row.begin() + static_cast<std::ptrdiff_t>(data.size()), row.end(), 0.0);
  valid_ = std::min(valid_, t);
}

void UniConditionalCache::ensure_hidden(std::size_t count) {
  for (std::size_t r = valid_; r < count; ++r) {
    recurrent_step(params_->stack, r == 0 ? std::span<const double>{} : hidden_.row(r - 1),
                   input_.step(r), hidden_.row(r));
  }
  valid_ = std::max(valid_, count);
}

StepDistribution UniConditionalCache::predictive(std::size_t t) {
  ensure_hidden(t);
  return uni_output(*params_, t == 0 ? std::span<const double>{} : hidden_.row(t - 1));
}

StepDistribution UniConditionalCache::exact_conditional(std::size_t t, Exec exec) {
  require_categorical(*params_);
  const StepDistribution prior = predictive(t);
  const std::size_t T = input_.length();
  const std::size_t d_out = params_->output_dim();
  const std::size_t c = params_->hidden_size();
  const auto prev = t == 0 ? std::span<const double>{} : std::span<const double>(hidden_.row(t - 1));
  Vector log_weights(d_out, -kInf);
  parallel_for(d_out, exec, [&](std::size_t a) {
    double lw = std::log(prior.params[a]);
    if (!std::isfinite(lw)) return;
    Vector proposal(params_->input_dim(), 0.0);
    proposal[a] = 1.0;
    Vector h(c), next(c);
    recurrent_step(params_->stack, prev, proposal, h);
    for (std::size_t tau = t + 1; tau < T && std::isfinite(lw); ++tau) {
      lw += uni_output(*params_, h).log_prob(input_.step(tau).first(d_out));
      if (tau + 1 < T) {
        recurrent_step(params_->stack, h, input_.step(tau), next);
        std::swap(h, next);
      }
    }
    log_weights[a] = lw;
  });
  if (!std::isfinite(*std::max_element(log_weights.begin(), log_weights.end()))) return prior;
  return {Family::softmax, softmax(log_weights)};
}

// ---------------------------------------------------------------------------
// Gibbs strategies

GapResult gsn_fill(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                   const ChainConfig& config) {
  require_shifted(params);
  gap.validate(x.length());
  check_chain_config(config, gap);
  const Sequence truth = truth_of(x, params.output_dim());
  BiConditionalCache base(params, with_width(truth, params.input_dim()));
  base.conditional(gap.start);  // warm the states outside the gap
  std::vector<ChainOutcome> chains(config.n_chains);
  parallel_for(config.n_chains, config.exec, [&](std::size_t c) {
    Rng rng = make_rng(split_seed(config.seed, c));
    chains[c] = run_chain(base, truth, gap, config.mcmc_steps, params.family, config.init_mode, rng,
                          [](BiConditionalCache& cache, std::size_t t) { return cache.conditional(t); },
                          config.keep_samples);
  });
  return aggregate_chains("gsn", chains, gap.length, config);
}

GapResult bayes_mcmc_fill(const UniRnnParams& params, const Sequence& x, GapSpec gap,
                          const ChainConfig& config) {
  require_categorical(params);
  gap.validate(x.length());
  check_chain_config(config, gap);
  const Sequence truth = truth_of(x, params.output_dim());
  UniConditionalCache base(params, with_width(truth, params.input_dim()));
  base.predictive(gap.start);
  std::vector<ChainOutcome> chains(config.n_chains);
  parallel_for(config.n_chains, config.exec, [&](std::size_t c) {
    Rng rng = make_rng(split_seed(config.seed, c));
    chains[c] = run_chain(
        base, truth, gap, config.mcmc_steps, params.family, config.init_mode, rng,
        [](UniConditionalCache& cache, std::size_t t) { return cache.exact_conditional(t); },
        config.keep_samples);
  });
  return aggregate_chains("bayes_mcmc", chains, gap.length, config);
}

std::vector<std::uint64_t> gsn_trace(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                                     std::size_t steps, std::uint64_t seed, InitMode init) {
  gap.validate(x.length());
  const Sequence truth = truth_of(x, params.output_dim());
  BiConditionalCache cache(params, with_width(truth, params.input_dim()));
  Rng rng = make_rng(seed);
  return run_trace(cache, gap, params.output_dim(), params.family, steps, init, rng,
                   [](BiConditionalCache& c, std::size_t t) { return c.conditional(t); });
}

std::vector<std::uint64_t> bayes_mcmc_trace(const UniRnnParams& params, const Sequence& x,
                                            GapSpec gap, std::size_t steps, std::uint64_t seed,
                                            InitMode init) {
  require_categorical(params);
  gap.validate(x.length());
  const Sequence truth = truth_of(x, params.output_dim());
  UniConditionalCache cache(params, with_width(truth, params.input_dim()));
  Rng rng = make_rng(seed);
  return run_trace(cache, gap, params.output_dim(), params.family, steps, init, rng,
                   [](UniConditionalCache& c, std::size_t t) { return c.exact_conditional(t); });
}

StepDistribution bayes_exact_conditional(const UniRnnParams& params, const Sequence& x,
                                         std::size_t t, Exec exec) {
  require_categorical(params);
  if (t >= x.length()) throw InvalidInput("time index outside the sequence");
  UniConditionalCache cache(params, with_width(truth_of(x, params.output_dim()), params.input_dim()));
  return cache.exact_conditional(t, exec);
}

// ---------------------------------------------------------------------------
// NADE

NadeFill nade_fill(const BiRnnParams& params, const Sequence& x, GapSpec gap, Rng& rng) {
  if (!params.has_missing_channel()) {
    throw InvalidInput("NADE filling needs a model trained with a missing-token channel");
  }
  gap.validate(x.length());
  const std::size_t d_out = params.output_dim();
  const Sequence truth = truth_of(x, d_out);
  BiConditionalCache cache(params, with_width(truth, params.input_dim()));
  for (std::size_t t = gap.start; t < gap.end(); ++t) cache.set_missing(t);
  NadeFill out;
  out.filled = truth;
  out.order = random_permutation(gap.length, rng);
  for (auto& i : out.order) i += gap.start;
  for (std::size_t t : out.order) {
    const StepDistribution dist = cache.conditional(t);
    auto row = out.filled.step(t);
    sample_into(dist, rng, row);
    out.log_likelihood += dist.log_prob(row);
    cache.set_data(t, row);
  }
  return out;
}

double nade_ordered_log_likelihood(const BiRnnParams& params, const Sequence& x,
                                   std::span<const std::size_t> order) {
  if (!params.has_missing_channel()) {
    throw InvalidInput("NADE likelihood needs a model trained with a missing-token channel");
  }
  const Sequence truth = truth_of(x, params.output_dim());
  BiConditionalCache cache(params, with_width(truth, params.input_dim()));
  for (std::size_t t : order) {
    if (t >= x.length()) throw InvalidInput("ordering refers to a step outside the sequence");
    cache.set_missing(t);
  }
  double total = 0.0;
  for (std::size_t t : order) {
    total += cache.conditional(t).log_prob(truth.step(t));
    cache.set_data(t, truth.step(t));
  }
  return total;
}

GapResult nade_exact_gap_nll(const BiRnnParams& params, const Sequence& x, GapSpec gap,
                             Exec exec) {
  if (!params.has_missing_channel()) {
    throw InvalidInput("NADE likelihood needs a model trained with a missing-token channel");
  }
  if (gap.length > kMaxExactNadeGap) {
    throw InvalidInput("exact NADE enumerates g! orderings and is limited to g <= " +
                       std::to_string(kMaxExactNadeGap) + "; use nade_fill sampling for g = " +
                       std::to_string(gap.length));
  }
  gap.validate(x.length());
  const Sequence truth = truth_of(x, params.output_dim());
  BiConditionalCache base(params, with_width(truth, params.input_dim()));
  for (std::size_t t = gap.start; t < gap.end(); ++t) base.set_missing(t);

  GapResult result;
  result.strategy = "nade";
  for (std::size_t t = gap.start; t < gap.end(); ++t) {
    result.per_position_nll.push_back(step_nll(base.conditional(t), truth.step(t)));
  }

  std::vector<std::vector<std::size_t>> orderings;
  std::vector<std::size_t> order(gap.length);
  std::iota(order.begin(), order.end(), gap.start);
  do {
    orderings.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));

  result.chain_log_likelihoods.assign(orderings.size(), 0.0);
  parallel_for(orderings.size(), exec, [&](std::size_t k) {
    BiConditionalCache cache = base;
    double total = 0.0;
    for (std::size_t t : orderings[k]) {
      total += cache.conditional(t).log_prob(truth.step(t));
      cache.set_data(t, truth.step(t));
    }
    result.chain_log_likelihoods[k] = total;
  });
  result.n_chains = orderings.size();
  result.gap_nll = -(log_sum_exp(result.chain_log_likelihoods) -
                     std::log(static_cast<double>(orderings.size())));
  const bool zero = std::any_of(result.chain_log_likelihoods.begin(),
                                result.chain_log_likelihoods.end(),
                                [](double v) { return !(v >= kLogZeroProbability); });
  if (zero || !std::isfinite(result.gap_nll)) result.flags.push_back("zero_probability");
  return result;
}

// ---------------------------------------------------------------------------
// One-way inference

GapResult oneway_fill(const UniRnnParams& params, const Sequence& x, GapSpec gap,
                      const ChainConfig& config) {
  gap.validate(x.length());
  if (config.n_chains < 1) throw InvalidInput("n_chains must be at least 1");
  const std::size_t d_out = params.output_dim();
  const Sequence truth = truth_of(x, d_out);
  UniConditionalCache base(params, with_width(truth, params.input_dim()));

  GapResult result;
  result.strategy = "oneway";
  result.n_chains = config.n_chains;
  result.gap_nll = 0.0;
  for (std::size_t t = gap.start; t < gap.end(); ++t) {
    result.gap_nll += step_nll(base.predictive(t), truth.step(t));
  }
  base.predictive(gap.start);

  std::vector<std::vector<double>> probs(config.n_chains, std::vector<double>(gap.length));
  std::vector<Sequence> samples(config.n_chains);
  result.chain_log_likelihoods.assign(config.n_chains, 0.0);
  parallel_for(config.n_chains, config.exec, [&](std::size_t c) {
    Rng rng = make_rng(split_seed(config.seed, c));
    UniConditionalCache cache = base;
    Vector row(d_out);
    Sequence sample(gap.length, d_out);
    for (std::size_t i = 0; i < gap.length; ++i) {
      const std::size_t t = gap.start + i;
      const StepDistribution dist = cache.predictive(t);
      const double lp = dist.log_prob(truth.step(t));
      probs[c][i] = std::exp(lp);
      result.chain_log_likelihoods[c] += lp;
      sample_into(dist, rng, row);
      std::copy(row.begin(), row.end(), sample.step(i).begin());
      cache.set_data(t, row);
    }
    samples[c] = std::move(sample);
  });
  const double n = static_cast<double>(config.n_chains);
  for (std::size_t i = 0; i < gap.length; ++i) {
    double mean = 0.0;
    for (const auto& p : probs) mean += p[i];
    result.per_position_nll.push_back(-std::log(mean / n));
  }
  if (config.keep_samples) result.samples = std::move(samples);
  if (!(result.gap_nll <= -kLogZeroProbability)) result.flags.push_back("zero_probability");
  return result;
}

// ---------------------------------------------------------------------------
// One-gram

std::string OneGramStats::to_json() const {
  return json{{"family", gapfill::to_string(family)},
              {"probabilities", probabilities},
              {"observations", observations}}
      .dump();
}

OneGramStats OneGramStats::from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    OneGramStats stats;
    stats.family = family_from_string(doc.at("family").get<std::string>());
    stats.probabilities = doc.at("probabilities").get<Vector>();
    stats.observations = doc.at("observations").get<std::size_t>();
    return stats;
  } catch (const json::exception& e) {
    throw ParseError(std::string("one-gram stats: ") + e.what());
  }
}

OneGramStats estimate_onegram(const Corpus& corpus) {
  OneGramStats stats;
  stats.family = corpus.family;
  stats.observations = corpus.total_steps();
  const double n = static_cast<double>(stats.observations);
  const double d = static_cast<double>(corpus.dim);
  Vector counts(corpus.dim, 0.0);
  if (corpus.family == Family::softmax) {
    for (const auto& track : corpus.symbol_tracks) {
      for (auto s : track) counts[s] += 1.0;
    }
    for (double& c : counts) c = (c + 1.0) / (n + d);
  } else {
    for (const auto& track : corpus.binary_tracks) {
      for (std::size_t t = 0; t < track.length(); ++t) {
        for (std::size_t k = 0; k < corpus.dim; ++k) counts[k] += track.steps(t, k);
      }
    }
    const double lo = 1.0 / (n + 2.0);
    for (double& c : counts) c = std::clamp(n > 0 ? c / n : 0.5, lo, 1.0 - lo);
  }
  stats.probabilities = std::move(counts);
  return stats;
}

StepDistribution onegram_distribution(const OneGramStats& stats) {
  return {stats.family, stats.probabilities};
}

GapResult onegram_nll(const OneGramStats& stats, const Sequence& x, GapSpec gap) {
  gap.validate(x.length());
  const Sequence truth = truth_of(x, stats.probabilities.size());
  const StepDistribution dist = onegram_distribution(stats);
  GapResult result;
  result.strategy = "onegram";
  for (std::size_t t = gap.start; t < gap.end(); ++t) {
    const double nll = step_nll(dist, truth.step(t));
    result.per_position_nll.push_back(nll);
    result.gap_nll += nll;
  }
  if (!std::isfinite(result.gap_nll)) result.flags.push_back("zero_probability");
  return result;
}

void save_onegram(const OneGramStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << stats.to_json() << '\n';
}

OneGramStats load_onegram(const std::filesystem::path& path) {
  return OneGramStats::from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Oracles

GapPosterior enumerate_gap_posterior(const UniRnnParams& params, const Sequence& x, GapSpec gap) {
  if (gap.end() > x.length()) throw InvalidInput("gap exceeds the sequence");
  const std::size_t d_out = params.output_dim();
  GapPosterior posterior;
  posterior.values_per_step = value_count(params.family, d_out);
  const std::uint64_t states = checked_state_count(posterior.values_per_step, gap.length);
  Sequence seq = with_width(truth_of(x, d_out), params.input_dim());
  Vector log_joint(states);
  for (std::uint64_t s = 0; s < states; ++s) {
    write_state(params.family, posterior.values_per_step, s, gap, d_out, seq);
    log_joint[s] = uni_log_joint(params, seq);
    posterior.codes.push_back(s);
  }
  const double norm = log_sum_exp(log_joint);
  for (double lj : log_joint) posterior.probabilities.push_back(std::exp(lj - norm));
  return posterior;
}

GapConditionalTable enumerate_gap_conditionals(const BiRnnParams& params, const Sequence& x,
                                               GapSpec gap) {
  require_shifted(params);
  gap.validate(x.length());
  const std::size_t d_out = params.output_dim();
  GapConditionalTable out;
  out.values_per_step = value_count(params.family, d_out);
  out.gap_length = gap.length;
  const std::uint64_t states = checked_state_count(out.values_per_step, gap.length);
  Sequence seq = with_width(truth_of(x, d_out), params.input_dim());
  Vector value_row(d_out);
  for (std::uint64_t s = 0; s < states; ++s) {
    write_state(params.family, out.values_per_step, s, gap, d_out, seq);
    const auto dists = bi_forward(params, seq);
    std::vector<Vector> per_position;
    for (std::size_t i = 0; i < gap.length; ++i) {
      const auto& dist = dists[gap.start + i];
      if (params.family == Family::softmax) {
        per_position.push_back(dist.params);
        continue;
      }
      Vector probs(out.values_per_step);
      for (std::size_t v = 0; v < out.values_per_step; ++v) {
        write_value(params.family, v, value_row);
        probs[v] = std::exp(dist.log_prob(value_row));
      }
      per_position.push_back(std::move(probs));
    }
    out.table.push_back(std::move(per_position));
  }
  return out;
}

}  // namespace gapfill
