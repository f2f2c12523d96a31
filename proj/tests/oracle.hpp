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

// Reference computations for the tests. Written with plain loops over the
// parameter containers; nothing here calls the library's numerics, forward
// passes or caches, so agreement with the library is a real cross-check.

#ifndef GAPFILL_TESTS_ORACLE_HPP_
#define GAPFILL_TESTS_ORACLE_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "gapfill/corpus.hpp"
#include "gapfill/models.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const gapfill::Sequence& x) {
  Rows out(x.length());
  for (std::size_t t = 0; t < x.length(); ++t) out[t].assign(x.step(t).begin(), x.step(t).end());
  return out;
}

inline std::vector<double> affine(const gapfill::Matrix& w, const std::vector<double>& v,
                                  std::vector<double> acc) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) acc[r] += w(r, c) * v[c];
  }
  return acc;
}

inline std::vector<double> probabilities(gapfill::Family family, const std::vector<double>& z) {
  std::vector<double> p(z.size());
  if (family == gapfill::Family::softmax) {
    double top = z[0];
    for (double v : z) top = std::max(top, v);
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) total += std::exp(z[i] - top);
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i] - top) / total;
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));
  }
  return p;
}

inline double log_prob(gapfill::Family family, const std::vector<double>& p,
                       const std::vector<double>& target) {
  double lp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (family == gapfill::Family::softmax) {
      if (target[i] > 0.5) lp += std::log(p[i]);
    } else {
      lp += target[i] > 0.5 ? std::log(p[i]) : std::log(1.0 - p[i]);
    }
  }
  return lp;
}

// Hidden states of one stack; `reverse` runs right to left.
inline Rows hidden(const gapfill::RecurrentStack& s, const Rows& x, bool reverse) {
  const std::size_t T = x.size();
  const std::size_t c = s.hidden_bias.size();
  Rows h(T, std::vector<double>(c));
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t t = reverse ? T - 1 - i : i;
    std::vector<double> a = affine(s.input_weights, x[t], s.hidden_bias);
    const bool has_prev = reverse ? t + 1 < T : t > 0;
    if (has_prev) a = affine(s.recurrent_weights, h[reverse ? t + 1 : t - 1], a);
    for (std::size_t k = 0; k < c; ++k) h[t][k] = std::tanh(a[k]);
  }
  return h;
}

// P(x_t | x_<t) for t = 0..T-1, from the inputs `x`.
inline Rows uni_predictive(const gapfill::UniRnnParams& p, const Rows& x) {
  const Rows h = hidden(p.stack, x, false);
  Rows out;
  for (std::size_t t = 0; t < x.size(); ++t) {
    std::vector<double> z = p.output_bias;
    if (t > 0) z = affine(p.output_weights, h[t - 1], z);
    out.push_back(probabilities(p.family, z));
  }
  return out;
}

// Shifted BRNN output at every step.
inline Rows bi_shifted(const gapfill::BiRnnParams& p, const Rows& x) {
  const Rows hf = hidden(p.forward, x, false);
  const Rows hb = hidden(p.backward, x, true);
  Rows out;
  for (std::size_t t = 0; t < x.size(); ++t) {
    std::vector<double> z = p.output_bias;
    if (t > 0) z = affine(p.forward_output, hf[t - 1], z);
    if (t + 1 < x.size()) z = affine(p.backward_output, hb[t + 1], z);
    out.push_back(probabilities(p.family, z));
  }
  return out;
}

inline Rows data_part(const Rows& x, std::size_t d) {
  Rows out;
  for (const auto& r : x) out.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(d));
  return out;
}

inline double uni_log_joint(const gapfill::UniRnnParams& p, const Rows& x) {
  const Rows pred = uni_predictive(p, x);
  const Rows y = data_part(x, p.output_dim());
  double lp = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) lp += log_prob(p.family, pred[t], y[t]);
  return lp;
}

template <class Params, class Forward>
double masked_loss(const Params& p, const gapfill::Minibatch& batch, Forward forward) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Rows dists = forward(p, rows_of(batch.inputs[b]));
    const Rows y = rows_of(batch.targets[b]);
    for (std::size_t t = 0; t < batch.length(); ++t) {
      if (!batch.error_mask[t]) continue;
      total -= log_prob(p.family, dists[t], y[t]);
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

inline double uni_loss(const gapfill::UniRnnParams& p, const gapfill::Minibatch& batch) {
  return masked_loss(p, batch, [](const auto& q, const Rows& x) { return uni_predictive(q, x); });
}

inline double bi_loss(const gapfill::BiRnnParams& p, const gapfill::Minibatch& batch) {
  return masked_loss(p, batch, [](const auto& q, const Rows& x) { return bi_shifted(q, x); });
}

// Random-scan Gibbs stationary distribution from a table of conditionals
// (table[state][position][value]), by power iteration on the transition
// matrix. States use mixed radix with position 0 least significant.
inline std::vector<double> gibbs_stationary(const std::vector<std::vector<std::vector<double>>>& table,
                                            std::size_t values, std::size_t g,
                                            std::size_t iterations = 20000) {
  const std::size_t n = table.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  std::vector<std::size_t> stride(g, 1);
  for (std::size_t i = 1; i < g; ++i) stride[i] = stride[i - 1] * values;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < g; ++i) {
        const std::size_t digit = (s / stride[i]) % values;
        for (std::size_t v = 0; v < values; ++v) {
          const std::size_t to = s + (v - digit) * stride[i];
          next[to] += pi[s] * table[s][i][v] / static_cast<double>(g);
        }
      }
    }
    pi.swap(next);
  }
  return pi;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

// Empirical distribution of codes in [0, n).
inline std::vector<double> frequencies(const std::vector<std::uint64_t>& codes, std::size_t n) {
  std::vector<double> f(n, 0.0);
  for (auto c : codes) f[c] += 1.0;
  for (double& v : f) v /= static_cast<double>(codes.size());
  return f;
}

// Random weights in [-scale, scale] for every tensor.
template <class Params>
void randomize(Params& p, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto t : p.tensors()) {
    for (double& v : t) v = u(gen);
  }
}

}  // namespace oracle

#endif  // GAPFILL_TESTS_ORACLE_HPP_
