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

// Batch evaluation over many gaps of a test corpus.
//
// Gaps are drawn without replacement from every (track, start) whose gap
// stays edge_exclusion steps away from both ends of its track. Every
// strategy sees the same shuffled gap list; a strategy limited to fewer gaps
// takes a prefix of it. Chain seeds depend on the strategy and the gap only,
// so the strategy list order never changes a number.

#ifndef GAPFILL_EVAL_HPP_
#define GAPFILL_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gapfill/corpus.hpp"
#include "gapfill/inference.hpp"
#include "gapfill/models.hpp"

namespace gapfill {

enum class Strategy { gsn, nade, bayes_mcmc, oneway, onegram };

const char* to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);
std::vector<Strategy> all_strategies();

// gsn runs on `brnn`, nade on `nade`, bayes_mcmc and oneway on `uni`.
// `nade_no_mask` only enters the single-step table.
struct ModelSet {
  std::optional<UniRnnParams> uni;
  std::optional<BiRnnParams> brnn;
  std::optional<BiRnnParams> nade;
  std::optional<BiRnnParams> nade_no_mask;
  std::optional<OneGramStats> onegram;

  // Names of the pieces `strategy` needs that are absent.
  std::vector<std::string> missing_for(Strategy strategy) const;
};

struct EvalConfig {
  std::string dataset = "data";
  std::size_t gap_len = 5;
  std::size_t n_gaps = 500;  // 0: every eligible gap
  std::size_t edge_exclusion = 10;
  std::vector<Strategy> strategies = all_strategies();
  std::map<Strategy, std::size_t> n_gaps_for;  // per-strategy cap on n_gaps
  std::uint64_t seed = 0;
  ChainConfig chain;  // mcmc_steps, n_chains and init_mode; its seed is unused
  Exec exec = Exec::parallel;

  void validate() const;
  std::size_t gaps_for(Strategy strategy) const;
};

struct GapLocation {
  std::size_t track = 0;
  std::size_t start = 0;
  bool operator==(const GapLocation&) const = default;
};

// All eligible gaps, shuffled by `seed`, truncated to `n_gaps` (0 keeps all).
// Throws InvalidInput when no track is longer than 2 * edge_exclusion + g.
std::vector<GapLocation> sample_gaps(const Corpus& corpus, std::size_t gap_len,
                                     std::size_t edge_exclusion, std::size_t n_gaps,
                                     std::uint64_t seed);

// The observation sequence (data channels) of one track.
Sequence track_sequence(const Corpus& corpus, std::size_t track);

struct GapRecord {
  Strategy strategy = Strategy::onegram;
  GapLocation location;
  GapResult result;
};

struct StrategySummary {
  Strategy strategy = Strategy::onegram;
  std::size_t n_gaps = 0;
  std::size_t n_flagged = 0;
  double mean_gap_nll = 0.0;                 // over unflagged gaps
  std::vector<double> mean_per_position_nll;  // over unflagged gaps
};

struct StepCurvePoint {
  std::size_t mcmc_steps = 0;
  std::size_t n_gaps = 0;  // gaps unflagged for both strategies
  double gsn_nll = 0.0;
  double nade_nll = 0.0;
  double difference = 0.0;  // gsn - nade
};

struct SingleStepRow {
  std::string model;
  std::size_t n_gaps = 0;
  std::size_t n_flagged = 0;
  double mean_nll = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::size_t gap_len = 0;
  std::vector<StrategySummary> summaries;
  std::vector<GapRecord> records;
  std::vector<StepCurvePoint> step_curve;
  std::vector<SingleStepRow> single_step;

  const StrategySummary* summary(Strategy strategy) const;
  std::string to_json() const;
};

// Runs cfg.strategies on the sampled gaps. Throws InvalidInput listing the
// missing models when a strategy cannot run.
EvalReport evaluate_gaps(const ModelSet& models, const Corpus& corpus, const EvalConfig& cfg);

// GSN gap NLL minus exact NADE gap NLL on one fixed gap sample, per M.
std::vector<StepCurvePoint> gsn_step_curve(const ModelSet& models, const Corpus& corpus,
                                           const std::vector<std::size_t>& m_grid,
                                           const EvalConfig& cfg);

// Mean NLL of single-step gaps for every model present, in the order
// brnn, nade_masked, nade_no_mask, uni. The unidirectional row scores the
// next-step prediction.
std::vector<SingleStepRow> single_step_nll(const ModelSet& models, const Corpus& corpus,
                                           const EvalConfig& cfg);

// CSV renderings.
std::string table1_csv(const EvalReport& report);
std::string fig2_csv(const EvalReport& report);  // one column per gap position
std::string fig3_csv(const EvalReport& report);
std::string table2_csv(const EvalReport& report);

// %.17g, or "inf"/"nan".
std::string format_number(double v);

}  // namespace gapfill

#endif  // GAPFILL_EVAL_HPP_
