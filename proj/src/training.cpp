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

#include "gapfill/training.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gapfill {

namespace {

// Sequences are summed in fixed blocks, then blocks in index order, so the
// reduction order never depends on the thread count.
constexpr std::size_t kGradientBlock = 4;

template <class P>
void add_into(P& dst, const P& src) {
  auto d = dst.tensors();
  const auto s = src.tensors();
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d[i].size(); ++k) d[i][k] += s[i][k];
  }
}

template <class P>
double norm_of(const P& grads) {
  double total = 0.0;
  for (const auto& t : grads.tensors()) total += squared_norm(t);
  return std::sqrt(total);
}

std::size_t count_mask(const Minibatch& batch) {
  std::size_t n = 0;
  for (auto m : batch.error_mask) n += m != 0;
  return n;
}

void check_batch(const Minibatch& batch, std::size_t d_in, std::size_t d_out) {
  if (batch.inputs.size() != batch.targets.size() || batch.inputs.empty()) {
    throw InvalidInput("minibatch needs matching, nonempty inputs and targets");
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch.inputs[b].length() != batch.length() || batch.targets[b].length() != batch.length()) {
      throw InvalidInput("minibatch sequence " + std::to_string(b) + " has the wrong length");
    }
    if (batch.inputs[b].width() != d_in || batch.targets[b].width() != d_out) {
      throw InvalidInput("minibatch sequence " + std::to_string(b) +
                         " does not match the model dimensions");
    }
  }
  if (count_mask(batch) == 0) throw InvalidInput("error mask selects no step");
}

// dlogits = (p - y) * scale for both softmax/cross-entropy and
// sigmoid/binary cross-entropy.
void output_gradient(const StepDistribution& dist, std::span<const double> target, double scale,
                     std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (dist.params[i] - target[i]) * scale;
}

// Backpropagates dh (T x c, consumed) through one recurrent stack. `reverse`
// selects the right-to-left stack, whose predecessor of t is t + 1.
void backprop_stack(const RecurrentStack& stack, const Matrix& hidden, const Sequence& x,
                    Matrix& dh, bool reverse, RecurrentStack& grad) {
  const std::size_t T = x.length();
  const std::size_t c = stack.hidden_bias.size();
  Vector da(c);
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t t = reverse ? i : T - 1 - i;
    const auto h = hidden.row(t);
    const auto g = dh.row(t);
    for (std::size_t k = 0; k < c; ++k) da[k] = g[k] * (1.0 - h[k] * h[k]);
    for (std::size_t k = 0; k < c; ++k) grad.hidden_bias[k] += da[k];
    sparse_outer_add(grad.input_weights, da, x.step(t));
    const bool has_prev = reverse ? t + 1 < T : t > 0;
    if (has_prev) {
      const std::size_t prev = reverse ? t + 1 : t - 1;
      outer_add(grad.recurrent_weights, da, hidden.row(prev));
      matvec_transpose_add(stack.recurrent_weights, da, dh.row(prev));
    }
  }
}

double accumulate_uni(const UniRnnParams& p, const Sequence& x, const Sequence& y,
                      const std::vector<std::uint8_t>& mask, double scale, UniGradients* g) {
  const std::size_t T = x.length();
  const Matrix h = uni_hidden_states(p, x);
  Matrix dh(T, p.hidden_size());
  Vector dl(p.output_dim());
  double nll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    const auto prev = t == 0 ? std::span<const double>{} : h.row(t - 1);
    const StepDistribution dist = uni_output(p, prev);
    nll += step_nll(dist, y.step(t));
    if (g == nullptr) continue;
    output_gradient(dist, y.step(t), scale, dl);
    for (std::size_t k = 0; k < dl.size(); ++k) g->output_bias[k] += dl[k];
    if (t > 0) {
      outer_add(g->output_weights, dl, prev);
      matvec_transpose_add(p.output_weights, dl, dh.row(t - 1));
    }
  }
  if (g != nullptr) backprop_stack(p.stack, h, x, dh, false, g->stack);
  return nll;
}

double accumulate_bi(const BiRnnParams& p, const Sequence& x, const Sequence& y,
                     const std::vector<std::uint8_t>& mask, double scale, BiGradients* g) {
  const std::size_t T = x.length();
  const BiHiddenStates h = bi_hidden_states(p, x);
  Matrix dhf(T, p.hidden_size());
  Matrix dhb(T, p.hidden_size());
  Vector dl(p.output_dim());
  const bool aligned = p.output == BiOutput::aligned;
  double nll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    const bool has_f = aligned || t > 0;
    const bool has_b = aligned || t + 1 < T;
    const std::size_t tf = aligned ? t : t - 1;
    const std::size_t tb = aligned ? t : t + 1;
    const auto hf = has_f ? h.forward.row(tf) : std::span<const double>{};
    const auto hb = has_b ? h.backward.row(tb) : std::span<const double>{};
    const StepDistribution dist = bi_output(p, hf, hb);
    nll += step_nll(dist, y.step(t));
    if (g == nullptr) continue;
    output_gradient(dist, y.step(t), scale, dl);
    for (std::size_t k = 0; k < dl.size(); ++k) g->output_bias[k] += dl[k];
    if (has_f) {
      outer_add(g->forward_output, dl, hf);
      matvec_transpose_add(p.forward_output, dl, dhf.row(tf));
    }
    if (has_b) {
      outer_add(g->backward_output, dl, hb);
      matvec_transpose_add(p.backward_output, dl, dhb.row(tb));
    }
  }
  if (g != nullptr) {
    backprop_stack(p.forward, h.forward, x, dhf, false, g->forward);
    backprop_stack(p.backward, h.backward, x, dhb, true, g->backward);
  }
  return nll;
}

template <class P, class Accumulate>
std::pair<double, P> blocked_gradients(const P& params, const Minibatch& batch, Exec exec,
                                       Accumulate accumulate) {
  check_batch(batch, params.input_dim(), params.output_dim());
  const double n = static_cast<double>(count_mask(batch) * batch.size());
  const double scale = 1.0 / n;
  const std::size_t blocks = (batch.size() + kGradientBlock - 1) / kGradientBlock;
  std::vector<P> block_grads(blocks, zeros_like(params));
  std::vector<double> block_nll(blocks, 0.0);
  parallel_for(blocks, exec, [&](std::size_t blk) {
    const std::size_t end = std::min(batch.size(), (blk + 1) * kGradientBlock);
    for (std::size_t b = blk * kGradientBlock; b < end; ++b) {
      block_nll[blk] += accumulate(params, batch.inputs[b], batch.targets[b], batch.error_mask,
                                   scale, &block_grads[blk]);
    }
  });
  P total = zeros_like(params);
  double nll = 0.0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    add_into(total, block_grads[blk]);
    nll += block_nll[blk];
  }
  return {nll / n, std::move(total)};
}

template <class P>
UpdateInfo apply_update(P& params, const P& grads, std::size_t k, const TrainConfig& config) {
  if (k >= config.total_updates) {
    throw InvalidInput("update index " + std::to_string(k) + " is past total_updates " +
                       std::to_string(config.total_updates));
  }
  UpdateInfo info;
  info.eta = learning_rate(k, config);
  info.grad_norm = norm_of(grads);
  if (info.grad_norm == 0.0 || !std::isfinite(info.grad_norm)) {
    info.warning = "update " + std::to_string(k) + ": gradient norm is " +
                   std::to_string(info.grad_norm) + ", update skipped";
    return info;
  }
  const double factor = info.eta / info.grad_norm;
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p[i].size(); ++j) p[i][j] -= factor * g[i][j];
  }
  info.applied = true;
  return info;
}

}  // namespace

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::uni: return "uni";
    case Regime::brnn: return "brnn";
    case Regime::nade_masked: return "nade_masked";
    case Regime::nade_no_mask: return "nade_no_mask";
  }
  return "?";
}

Regime regime_from_string(std::string_view name) {
  for (Regime r : {Regime::uni, Regime::brnn, Regime::nade_masked, Regime::nade_no_mask}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidInput("unknown training regime '" + std::string(name) + "'");
}

ModelKind model_kind(Regime regime) {
  return regime == Regime::uni ? ModelKind::uni : ModelKind::bi;
}

bool uses_missing_channel(Regime regime) {
  return regime == Regime::nade_masked || regime == Regime::nade_no_mask;
}

void TrainConfig::validate() const {
  if (!(step_size > 0.0)) throw InvalidInput("step_size must be positive");
  if (total_updates < 1) throw InvalidInput("total_updates must be at least 1");
  if (minibatch_size < 1) throw InvalidInput("minibatch_size must be at least 1");
  if (hidden < 1) throw InvalidInput("hidden size must be at least 1");
  if (seq_len < 1) throw InvalidInput("sequence length must be at least 1");
  if (log_every < 1) throw InvalidInput("log_every must be at least 1");
  if (uses_missing_channel(regime) && (nade_gap < 1 || nade_stride < nade_gap)) {
    throw InvalidInput("NADE gap must satisfy 1 <= gap <= stride");
  }
  if (regime != Regime::nade_masked) burnin_mask(seq_len, effective_burnin());
}

BurnIn TrainConfig::effective_burnin() const {
  return burnin.value_or(default_burnin(model_kind(regime)));
}

UniLossAndGradients bptt_uni(const UniRnnParams& params, const Minibatch& batch, Exec exec) {
  validate(params);
  auto [loss, grads] = blocked_gradients(params, batch, exec, accumulate_uni);
  return {loss, std::move(grads)};
}

BiLossAndGradients bptt_bi(const BiRnnParams& params, const Minibatch& batch, Exec exec) {
  validate(params);
  auto [loss, grads] = blocked_gradients(params, batch, exec, accumulate_bi);
  return {loss, std::move(grads)};
}

double batch_loss(const UniRnnParams& params, const Minibatch& batch) {
  check_batch(batch, params.input_dim(), params.output_dim());
  double nll = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nll += accumulate_uni(params, batch.inputs[b], batch.targets[b], batch.error_mask, 0.0, nullptr);
  }
  return nll / static_cast<double>(count_mask(batch) * batch.size());
}

double batch_loss(const BiRnnParams& params, const Minibatch& batch) {
  check_batch(batch, params.input_dim(), params.output_dim());
  double nll = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nll += accumulate_bi(params, batch.inputs[b], batch.targets[b], batch.error_mask, 0.0, nullptr);
  }
  return nll / static_cast<double>(count_mask(batch) * batch.size());
}

double global_norm(const UniGradients& grads) { return norm_of(grads); }
double global_norm(const BiGradients& grads) { return norm_of(grads); }

double learning_rate(std::size_t k, const TrainConfig& config) {
  return config.step_size *
         (1.0 - static_cast<double>(k) / static_cast<double>(config.total_updates));
}

UpdateInfo sgd_update(UniRnnParams& params, const UniGradients& grads, std::size_t k,
                      const TrainConfig& config) {
  return apply_update(params, grads, k, config);
}

UpdateInfo sgd_update(BiRnnParams& params, const BiGradients& grads, std::size_t k,
                      const TrainConfig& config) {
  return apply_update(params, grads, k, config);
}

Minibatch make_training_batch(const Corpus& corpus, const TrainConfig& config, Rng& batch_rng,
                              Rng& mask_rng) {
  const bool missing = uses_missing_channel(config.regime);
  Minibatch batch =
      sample_minibatch(corpus, config.minibatch_size, config.seq_len, missing, batch_rng);
  if (missing) batch = nade_mask_gaps(std::move(batch), config.nade_gap, config.nade_stride, mask_rng);
  if (config.regime != Regime::nade_masked) {
    batch.error_mask = burnin_mask(config.seq_len, config.effective_burnin());
  }
  return batch;
}

TrainResult train(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.dim == 0 || corpus.track_count() == 0) throw InvalidInput("empty corpus");
  bool long_enough = false;
  for (std::size_t i = 0; i < corpus.track_count(); ++i) {
    long_enough = long_enough || corpus.track_length(i) >= config.seq_len;
  }
  if (!long_enough) {
    throw InvalidInput("corpus has no track of at least T = " + std::to_string(config.seq_len) +
                       " steps");
  }
  const std::size_t d_out = corpus.dim;
  const std::size_t d_in = d_out + (uses_missing_channel(config.regime) ? 1 : 0);
  Rng init_rng = make_rng(split_seed(config.seed, 0));
  Rng batch_rng = make_rng(split_seed(config.seed, 1));
  Rng mask_rng = make_rng(split_seed(config.seed, 2));

  TrainResult result;
  const auto run = [&](auto& params, auto bptt) {
    for (std::size_t k = 0; k < config.total_updates; ++k) {
      const Minibatch batch = make_training_batch(corpus, config, batch_rng, mask_rng);
      for (const auto& w : batch.warnings) result.warnings.push_back(w);
      auto [loss, grads] = bptt(params, batch, config.exec);
      const UpdateInfo info = sgd_update(params, grads, k, config);
      if (!info.warning.empty()) result.warnings.push_back(info.warning);
      if (k % config.log_every == 0 || k + 1 == config.total_updates) {
        result.trace.push_back({k, info.eta, loss});
      }
    }
  };
  if (model_kind(config.regime) == ModelKind::uni) {
    UniRnnParams params = init_uni(d_in, d_out, config.hidden, init_rng, corpus.family);
    run(params, bptt_uni);
    result.model = std::move(params);
  } else {
    BiRnnParams params = init_bi(d_in, d_out, config.hidden, init_rng, corpus.family);
    run(params, bptt_bi);
    result.model = std::move(params);
  }
  return result;
}

std::string loss_trace_csv(const std::vector<LossPoint>& trace) {
  std::ostringstream out;
  out << "update,eta,loss\n";
  char line[96];
  for (const auto& p : trace) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", p.update, p.eta, p.loss);
    out << line;
  }
  return out.str();
}

double validation_loss(const AnyModel& model, const Corpus& corpus, const TrainConfig& config,
                       std::size_t windows, std::uint64_t seed) {
  Rng batch_rng = make_rng(split_seed(seed, 1));
  Rng mask_rng = make_rng(split_seed(seed, 2));
  double total = 0.0;
  for (std::size_t i = 0; i < windows; ++i) {
    const Minibatch batch = make_training_batch(corpus, config, batch_rng, mask_rng);
    total += std::visit([&](const auto& p) { return batch_loss(p, batch); }, model);
  }
  return total / static_cast<double>(windows);
}

}  // namespace gapfill
