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

// Backpropagation through time and the SGD training loop.
//
// The loss of a minibatch is the mean of step_nll over every sequence and
// every step whose error-mask flag is set. Targets are always indexed by the
// step they describe: for unidirectional models the prediction of step t
// comes from h_{t-1} (the zero state for t = 0), for bidirectional models
// from the shifted output at t.

#ifndef GAPFILL_TRAINING_HPP_
#define GAPFILL_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gapfill/checkpoint.hpp"
#include "gapfill/corpus.hpp"
#include "gapfill/models.hpp"
#include "gapfill/parallel.hpp"

namespace gapfill {

// uni:          unidirectional, next-step targets, head burn-in.
// brnn:         bidirectional, current-step targets, head and tail burn-in.
// nade_masked:  bidirectional with a missing-token input channel; gaps are
//               corrupted and only gap steps carry loss.
// nade_no_mask: as nade_masked, but the loss covers every step outside the
//               burn-in.
enum class Regime { uni, brnn, nade_masked, nade_no_mask };

const char* to_string(Regime regime);
Regime regime_from_string(std::string_view name);
ModelKind model_kind(Regime regime);
bool uses_missing_channel(Regime regime);

struct TrainConfig {
  Regime regime = Regime::uni;
  std::size_t hidden = 64;
  std::size_t minibatch_size = 40;
  std::size_t seq_len = 250;
  double step_size = 0.25;
  std::size_t total_updates = 50000;
  std::optional<BurnIn> burnin;  // unset: the regime default
  std::size_t nade_gap = 5;
  std::size_t nade_stride = 25;
  std::uint64_t seed = 0;
  std::size_t log_every = 1;
  Exec exec = Exec::parallel;

  // Throws InvalidInput on step_size <= 0, total_updates == 0, etc.
  void validate() const;
  BurnIn effective_burnin() const;
};

// Gradients share the parameter containers' shapes.
using UniGradients = UniRnnParams;
using BiGradients = BiRnnParams;

struct UniLossAndGradients {
  double loss = 0.0;
  UniGradients grads;
};

struct BiLossAndGradients {
  double loss = 0.0;
  BiGradients grads;
};

// Exact gradients of the masked mean loss. Throws InvalidInput when the
// error mask selects no step.
UniLossAndGradients bptt_uni(const UniRnnParams& params, const Minibatch& batch,
                             Exec exec = Exec::parallel);
BiLossAndGradients bptt_bi(const BiRnnParams& params, const Minibatch& batch,
                           Exec exec = Exec::parallel);

double batch_loss(const UniRnnParams& params, const Minibatch& batch);
double batch_loss(const BiRnnParams& params, const Minibatch& batch);

double global_norm(const UniGradients& grads);
double global_norm(const BiGradients& grads);

struct UpdateInfo {
  double eta = 0.0;
  double grad_norm = 0.0;
  bool applied = false;
  std::string warning;
};

// Linear decay: step_size * (1 - k / total_updates).
double learning_rate(std::size_t k, const TrainConfig& config);

// params -= eta_k * grads / ||grads||, the norm taken over all tensors
// jointly. A zero gradient leaves params unchanged and sets a warning.
UpdateInfo sgd_update(UniRnnParams& params, const UniGradients& grads, std::size_t k,
                      const TrainConfig& config);
UpdateInfo sgd_update(BiRnnParams& params, const BiGradients& grads, std::size_t k,
                      const TrainConfig& config);

// One training minibatch for the configured regime: windows drawn from the
// corpus, the NADE corruption when applicable, and the regime's error mask.
Minibatch make_training_batch(const Corpus& corpus, const TrainConfig& config, Rng& batch_rng,
                              Rng& mask_rng);

struct LossPoint {
  std::size_t update = 0;
  double eta = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  AnyModel model;
  std::vector<LossPoint> trace;
  std::vector<std::string> warnings;
};

// Runs config.total_updates SGD steps from a fresh initialisation. All
// randomness derives from config.seed: stream 0 initialises weights,
// stream 1 samples windows, stream 2 draws NADE corruption.
TrainResult train(const Corpus& corpus, const TrainConfig& config);

// CSV with header "update,eta,loss".
std::string loss_trace_csv(const std::vector<LossPoint>& trace);

// Mean loss of `model` over `windows` minibatches drawn from `corpus` with
// the regime's masking, using a fixed seed. Used for validation.
double validation_loss(const AnyModel& model, const Corpus& corpus, const TrainConfig& config,
                       std::size_t windows, std::uint64_t seed);

}  // namespace gapfill

#endif  // GAPFILL_TRAINING_HPP_
