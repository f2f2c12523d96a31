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

// Single-hidden-layer recurrent networks.
//
// Unidirectional:
//   h_t = tanh(W_h h_{t-1} + W_x x_t + b_h),   h_{-1} = 0
//   P(x_{t+1} | x_0..x_t) = phi(W_y h_t + b_y)
// Output t predicts the NEXT input. The first observation is predicted from
// the zero state, i.e. P(x_0) = phi(b_y).
//
// Bidirectional, shifted output:
//   hf_t = tanh(Wf_h hf_{t-1} + Wf_x x_t + bf_h),   hf_{-1} = 0
//   hb_t = tanh(Wb_h hb_{t+1} + Wb_x x_t + bb_h),   hb_T = 0
//   P(x_t | x_{-t}) = phi(Wf_y hf_{t-1} + Wb_y hb_{t+1} + b_y)
// Output t reconstructs the CURRENT input and never sees x_t itself.
//
// phi is softmax (categorical data) or elementwise sigmoid (binary data).
// The input width may exceed the output width by one: the extra input channel
// is the NADE missing-value token.

#ifndef GAPFILL_MODELS_HPP_
#define GAPFILL_MODELS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gapfill/corpus.hpp"
#include "gapfill/numerics.hpp"
#include "gapfill/rng.hpp"

namespace gapfill {

struct RecurrentStack {
  Matrix input_weights;      // c x d_in
  Matrix recurrent_weights;  // c x c
  Vector hidden_bias;        // c

  bool operator==(const RecurrentStack&) const = default;
};

struct UniRnnParams {
  RecurrentStack stack;
  Matrix output_weights;  // d_out x c
  Vector output_bias;     // d_out
  Family family = Family::softmax;

  std::size_t input_dim() const { return stack.input_weights.cols(); }
  std::size_t output_dim() const { return output_bias.size(); }
  std::size_t hidden_size() const { return stack.hidden_bias.size(); }
  bool has_missing_channel() const { return input_dim() == output_dim() + 1; }

  // Parameter tensors in checkpoint order: W_x, W_h, b_h, W_y, b_y.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  static const std::vector<std::string>& tensor_names();

  bool operator==(const UniRnnParams&) const = default;
};

// `aligned` is the traditional BRNN output phi(Wf_y hf_t + Wb_y hb_t + b_y),
// which sees x_t. It is kept for comparison only; every gap-filling strategy
// requires `shifted`.
enum class BiOutput { shifted, aligned };

struct BiRnnParams {
  RecurrentStack forward;
  RecurrentStack backward;
  Matrix forward_output;   // d_out x c
  Matrix backward_output;  // d_out x c
  Vector output_bias;      // d_out
  Family family = Family::softmax;
  BiOutput output = BiOutput::shifted;

  std::size_t input_dim() const { return forward.input_weights.cols(); }
  std::size_t output_dim() const { return output_bias.size(); }
  std::size_t hidden_size() const { return forward.hidden_bias.size(); }
  bool has_missing_channel() const { return input_dim() == output_dim() + 1; }

  // Checkpoint order: Wf_x, Wf_h, bf_h, Wb_x, Wb_h, bb_h, Wf_y, Wb_y, b_y.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  static const std::vector<std::string>& tensor_names();

  bool operator==(const BiRnnParams&) const = default;
};

// A predictive distribution for one time step: class probabilities
// (softmax) or per-channel Bernoulli means.
struct StepDistribution {
  Family family = Family::softmax;
  Vector params;

  // log P(target); target is one-hot (softmax) or binary (bernoulli).
  double log_prob(std::span<const double> target) const;
};

// -log P(target); +inf when the target has zero probability.
double step_nll(const StepDistribution& dist, std::span<const double> target);

StepDistribution output_distribution(Family family, std::span<const double> logits);

// ---------------------------------------------------------------------------
// Construction

UniRnnParams zero_uni(std::size_t d_in, std::size_t d_out, std::size_t hidden,
                      Family family = Family::softmax);
BiRnnParams zero_bi(std::size_t d_in, std::size_t d_out, std::size_t hidden,
                    Family family = Family::softmax);

// W_x ~ U[-1, 1]; W_h, W_y ~ U[-s, s] with s = sqrt(6 / (fan_in + fan_out));
// biases zero.
UniRnnParams init_uni(std::size_t d_in, std::size_t d_out, std::size_t hidden, Rng& rng,
                      Family family = Family::softmax);
// Both stacks and both output matrices are drawn independently.
BiRnnParams init_bi(std::size_t d_in, std::size_t d_out, std::size_t hidden, Rng& rng,
                    Family family = Family::softmax);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

std::size_t uni_parameter_count(std::size_t d_in, std::size_t d_out, std::size_t hidden);
std::size_t bi_parameter_count(std::size_t d_in, std::size_t d_out, std::size_t hidden);
std::size_t parameter_count(const UniRnnParams& params);
std::size_t parameter_count(const BiRnnParams& params);

// Throws InvalidInput on inconsistent shapes or an input width other than
// d_out or d_out + 1.
void validate(const UniRnnParams& params);
void validate(const BiRnnParams& params);

UniRnnParams zeros_like(const UniRnnParams& params);
BiRnnParams zeros_like(const BiRnnParams& params);

// ---------------------------------------------------------------------------
// Forward passes

// out = tanh(W_h prev + W_x x + b_h); an empty `prev` stands for the zero state.
void recurrent_step(const RecurrentStack& stack, std::span<const double> prev,
                    std::span<const double> x, std::span<double> out);

// phi(W_y h + b_y); an empty `hidden` stands for the zero state.
StepDistribution uni_output(const UniRnnParams& params, std::span<const double> hidden);

// phi(Wf_y forward_hidden + Wb_y backward_hidden + b_y); empty spans are zero states.
StepDistribution bi_output(const BiRnnParams& params, std::span<const double> forward_hidden,
                           std::span<const double> backward_hidden);

// Hidden states h_0..h_{T-1}, one row each.
Matrix uni_hidden_states(const UniRnnParams& params, const Sequence& x);

// T distributions; entry t predicts x_{t+1} (the last one the unseen step T).
std::vector<StepDistribution> uni_forward(const UniRnnParams& params, const Sequence& x);

// Distribution of x_t given x_0..x_{t-1}, for every t (entry 0 is phi(b_y)).
std::vector<StepDistribution> uni_predictive(const UniRnnParams& params, const Sequence& x);

// log P(x) = sum_t log P(x_t | x_<t). `x` holds model inputs; targets are
// its first d_out channels.
double uni_log_joint(const UniRnnParams& params, const Sequence& x);

struct BiHiddenStates {
  Matrix forward;   // T x c
  Matrix backward;  // T x c
};

BiHiddenStates bi_hidden_states(const BiRnnParams& params, const Sequence& x);

// T distributions; entry t reconstructs x_t from every other step.
std::vector<StepDistribution> bi_forward(const BiRnnParams& params, const Sequence& x);

}  // namespace gapfill

#endif  // GAPFILL_MODELS_HPP_
