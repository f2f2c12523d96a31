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

#include "gapfill/models.hpp"

#include <cmath>
#include <limits>

namespace gapfill {

namespace {

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  for (double& v : values) v = uniform_real(rng, -bound, bound);
}

RecurrentStack zero_stack(std::size_t d_in, std::size_t hidden) {
  return {Matrix(hidden, d_in), Matrix(hidden, hidden), Vector(hidden, 0.0)};
}

RecurrentStack init_stack(std::size_t d_in, std::size_t hidden, Rng& rng) {
  RecurrentStack stack = zero_stack(d_in, hidden);
  fill_uniform(stack.input_weights.values(), 1.0, rng);
  fill_uniform(stack.recurrent_weights.values(), glorot_bound(hidden, hidden), rng);
  return stack;
}

void check_dims(std::size_t d_in, std::size_t d_out, std::size_t hidden) {
  if (d_in == 0 || d_out == 0 || hidden == 0) throw InvalidInput("model dimensions must be >= 1");
  if (d_in != d_out && d_in != d_out + 1) {
    throw InvalidInput("input width " + std::to_string(d_in) + " must equal output width " +
                       std::to_string(d_out) + " or exceed it by one (missing-token channel)");
  }
}

void check_stack(const RecurrentStack& stack, std::size_t d_in, std::size_t hidden,
                 const char* name) {
  if (stack.input_weights.rows() != hidden || stack.input_weights.cols() != d_in ||
      stack.recurrent_weights.rows() != hidden || stack.recurrent_weights.cols() != hidden ||
      stack.hidden_bias.size() != hidden) {
    throw InvalidInput(std::string(name) + " stack has inconsistent shapes");
  }
}

void check_input(const Sequence& x, std::size_t d_in) {
  if (x.width() != d_in) {
    throw InvalidInput("sequence width " + std::to_string(x.width()) +
                       " does not match model input width " + std::to_string(d_in));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor views

std::vector<std::span<double>> UniRnnParams::tensors() {
  return {stack.input_weights.values(), stack.recurrent_weights.values(), stack.hidden_bias,
          output_weights.values(), output_bias};
}

std::vector<std::span<const double>> UniRnnParams::tensors() const {
  return {stack.input_weights.values(), stack.recurrent_weights.values(), stack.hidden_bias,
          output_weights.values(), output_bias};
}

const std::vector<std::string>& UniRnnParams::tensor_names() {
  static const std::vector<std::string> names = {"W_x", "W_h", "b_h", "W_y", "b_y"};
  return names;
}

std::vector<std::span<double>> BiRnnParams::tensors() {
  return {forward.input_weights.values(),  forward.recurrent_weights.values(),
          forward.hidden_bias,             backward.input_weights.values(),
          backward.recurrent_weights.values(), backward.hidden_bias,
          forward_output.values(),         backward_output.values(),
          output_bias};
}

std::vector<std::span<const double>> BiRnnParams::tensors() const {
  return {forward.input_weights.values(),  forward.recurrent_weights.values(),
          forward.hidden_bias,             backward.input_weights.values(),
          backward.recurrent_weights.values(), backward.hidden_bias,
          forward_output.values(),         backward_output.values(),
          output_bias};
}

const std::vector<std::string>& BiRnnParams::tensor_names() {
  static const std::vector<std::string> names = {"Wf_x", "Wf_h", "bf_h", "Wb_x", "Wb_h",
                                                 "bb_h", "Wf_y", "Wb_y", "b_y"};
  return names;
}

// ---------------------------------------------------------------------------
// Distributions

double StepDistribution::log_prob(std::span<const double> target) const {
  if (target.size() != params.size()) {
    throw InvalidInput("target width " + std::to_string(target.size()) +
                       " does not match distribution width " + std::to_string(params.size()));
  }
  if (family == Family::softmax) return std::log(params[argmax(target)]);
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    total += target[i] != 0.0 ? std::log(params[i]) : std::log1p(-params[i]);
  }
  return total;
}

double step_nll(const StepDistribution& dist, std::span<const double> target) {
  const double lp = dist.log_prob(target);
  return std::isfinite(lp) ? -lp : std::numeric_limits<double>::infinity();
}

StepDistribution output_distribution(Family family, std::span<const double> logits) {
  return {family, family == Family::softmax ? softmax(logits) : sigmoid(logits)};
}

// ---------------------------------------------------------------------------
// Construction

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

UniRnnParams zero_uni(std::size_t d_in, std::size_t d_out, std::size_t hidden, Family family) {
  check_dims(d_in, d_out, hidden);
  return {zero_stack(d_in, hidden), Matrix(d_out, hidden), Vector(d_out, 0.0), family};
}

BiRnnParams zero_bi(std::size_t d_in, std::size_t d_out, std::size_t hidden, Family family) {
  check_dims(d_in, d_out, hidden);
  BiRnnParams p;
  p.forward = zero_stack(d_in, hidden);
  p.backward = zero_stack(d_in, hidden);
  p.forward_output = Matrix(d_out, hidden);
  p.backward_output = Matrix(d_out, hidden);
  p.output_bias = Vector(d_out, 0.0);
  p.family = family;
  return p;
}

UniRnnParams init_uni(std::size_t d_in, std::size_t d_out, std::size_t hidden, Rng& rng,
                      Family family) {
  check_dims(d_in, d_out, hidden);
  UniRnnParams p = zero_uni(d_in, d_out, hidden, family);
  p.stack = init_stack(d_in, hidden, rng);
  fill_uniform(p.output_weights.values(), glorot_bound(hidden, d_out), rng);
  return p;
}

BiRnnParams init_bi(std::size_t d_in, std::size_t d_out, std::size_t hidden, Rng& rng,
                    Family family) {
  BiRnnParams p = zero_bi(d_in, d_out, hidden, family);
  p.forward = init_stack(d_in, hidden, rng);
  p.backward = init_stack(d_in, hidden, rng);
  fill_uniform(p.forward_output.values(), glorot_bound(hidden, d_out), rng);
  fill_uniform(p.backward_output.values(), glorot_bound(hidden, d_out), rng);
  return p;
}

std::size_t uni_parameter_count(std::size_t d_in, std::size_t d_out, std::size_t hidden) {
  return d_in * hidden + hidden * hidden + hidden * d_out + hidden + d_out;
}

std::size_t bi_parameter_count(std::size_t d_in, std::size_t d_out, std::size_t hidden) {
  return 2 * (d_in * hidden + hidden * hidden + hidden) + 2 * hidden * d_out + d_out;
}

std::size_t parameter_count(const UniRnnParams& params) {
  std::size_t n = 0;
  for (const auto& t : params.tensors()) n += t.size();
  return n;
}

std::size_t parameter_count(const BiRnnParams& params) {
  std::size_t n = 0;
  for (const auto& t : params.tensors()) n += t.size();
  return n;
}

void validate(const UniRnnParams& params) {
  const std::size_t c = params.hidden_size();
  check_dims(params.input_dim(), params.output_dim(), c);
  check_stack(params.stack, params.input_dim(), c, "unidirectional");
  if (params.output_weights.rows() != params.output_dim() || params.output_weights.cols() != c) {
    throw InvalidInput("output weights have inconsistent shape");
  }
}

void validate(const BiRnnParams& params) {
  const std::size_t c = params.hidden_size();
  check_dims(params.input_dim(), params.output_dim(), c);
  check_stack(params.forward, params.input_dim(), c, "forward");
  check_stack(params.backward, params.input_dim(), c, "backward");
  for (const Matrix* m : {&params.forward_output, &params.backward_output}) {
    if (m->rows() != params.output_dim() || m->cols() != c) {
      throw InvalidInput("output weights have inconsistent shape");
    }
  }
}

UniRnnParams zeros_like(const UniRnnParams& params) {
  UniRnnParams z = zero_uni(params.input_dim(), params.output_dim(), params.hidden_size(),
                            params.family);
  return z;
}

BiRnnParams zeros_like(const BiRnnParams& params) {
  BiRnnParams z = zero_bi(params.input_dim(), params.output_dim(), params.hidden_size(),
                          params.family);
  z.output = params.output;
  return z;
}

// ---------------------------------------------------------------------------
// Forward passes

void recurrent_step(const RecurrentStack& stack, std::span<const double> prev,
                    std::span<const double> x, std::span<double> out) {
  std::copy(stack.hidden_bias.begin(), stack.hidden_bias.end(), out.begin());
  if (!prev.empty()) matvec_add(stack.recurrent_weights, prev, out);
  sparse_matvec_add(stack.input_weights, x, out);
  for (double& v : out) v = std::tanh(v);
}

StepDistribution uni_output(const UniRnnParams& params, std::span<const double> hidden) {
  Vector logits = params.output_bias;
  if (!hidden.empty()) matvec_add(params.output_weights, hidden, logits);
  return output_distribution(params.family, logits);
}

StepDistribution bi_output(const BiRnnParams& params, std::span<const double> forward_hidden,
                           std::span<const double> backward_hidden) {
  Vector logits = params.output_bias;
  if (!forward_hidden.empty()) matvec_add(params.forward_output, forward_hidden, logits);
  if (!backward_hidden.empty()) matvec_add(params.backward_output, backward_hidden, logits);
  return output_distribution(params.family, logits);
}

Matrix uni_hidden_states(const UniRnnParams& params, const Sequence& x) {
  validate(params);
  check_input(x, params.input_dim());
  Matrix h(x.length(), params.hidden_size());
  for (std::size_t t = 0; t < x.length(); ++t) {
    recurrent_step(params.stack, t == 0 ? std::span<const double>{} : h.row(t - 1), x.step(t),
                   h.row(t));
  }
  return h;
}

std::vector<StepDistribution> uni_forward(const UniRnnParams& params, const Sequence& x) {
  const Matrix h = uni_hidden_states(params, x);
  std::vector<StepDistribution> out;
  out.reserve(x.length());
  for (std::size_t t = 0; t < x.length(); ++t) out.push_back(uni_output(params, h.row(t)));
  return out;
}

std::vector<StepDistribution> uni_predictive(const UniRnnParams& params, const Sequence& x) {
  const Matrix h = uni_hidden_states(params, x);
  std::vector<StepDistribution> out;
  out.reserve(x.length());
  for (std::size_t t = 0; t < x.length(); ++t) {
    out.push_back(uni_output(params, t == 0 ? std::span<const double>{} : h.row(t - 1)));
  }
  return out;
}

double uni_log_joint(const UniRnnParams& params, const Sequence& x) {
  const auto dists = uni_predictive(params, x);
  double total = 0.0;
  for (std::size_t t = 0; t < x.length(); ++t) {
    total += dists[t].log_prob(x.step(t).first(params.output_dim()));
  }
  return total;
}

BiHiddenStates bi_hidden_states(const BiRnnParams& params, const Sequence& x) {
  validate(params);
  check_input(x, params.input_dim());
  const std::size_t T = x.length();
  BiHiddenStates h{Matrix(T, params.hidden_size()), Matrix(T, params.hidden_size())};
  for (std::size_t t = 0; t < T; ++t) {
    recurrent_step(params.forward, t == 0 ? std::span<const double>{} : h.forward.row(t - 1),
                   x.step(t), h.forward.row(t));
  }
  for (std::size_t t = T; t-- > 0;) {
    recurrent_step(params.backward,
                   t + 1 == T ? std::span<const double>{} : h.backward.row(t + 1), x.step(t),
                   h.backward.row(t));
  }
  return h;
}

std::vector<StepDistribution> bi_forward(const BiRnnParams& params, const Sequence& x) {
  const BiHiddenStates h = bi_hidden_states(params, x);
  const std::size_t T = x.length();
  std::vector<StepDistribution> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (params.output == BiOutput::aligned) {
      out.push_back(bi_output(params, h.forward.row(t), h.backward.row(t)));
    } else {
      out.push_back(bi_output(params, t == 0 ? std::span<const double>{} : h.forward.row(t - 1),
                              t + 1 == T ? std::span<const double>{} : h.backward.row(t + 1)));
    }
  }
  return out;
}

}  // namespace gapfill
