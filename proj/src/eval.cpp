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

#include "gapfill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "gapfill/parallel.hpp"
#include "gapfill/rng.hpp"

namespace gapfill {

using nlohmann::json;

namespace {

// Stream ids for seed splitting.
constexpr std::uint64_t kGapStream = 1;
constexpr std::uint64_t kStrategyStream = 100;
constexpr std::uint64_t kCurveStream = 200;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(finite_or_null(v));
  return out;
}

std::uint64_t strategy_seed(std::uint64_t master, Strategy strategy, std::size_t gap) {
  return split_seed(split_seed(master, kStrategyStream + static_cast<std::uint64_t>(strategy)), gap);
}

void check_dims(const ModelSet& models, const Corpus& corpus) {
  auto check = [&](std::size_t d, const char* name) {
    if (d != corpus.dim) {
      throw InvalidInput(std::string(name) + " model predicts " + std::to_string(d) +
                         " channels but the corpus has " + std::to_string(corpus.dim));
    }
  };
  if (models.uni) check(models.uni->output_dim(), "uni");
  if (models.brnn) check(models.brnn->output_dim(), "brnn");
  if (models.nade) check(models.nade->output_dim(), "nade");
  if (models.nade_no_mask) check(models.nade_no_mask->output_dim(), "nade_no_mask");
  if (models.onegram) check(models.onegram->probabilities.size(), "onegram");
}

GapResult run_strategy(const ModelSet& models, Strategy strategy, const Sequence& x, GapSpec gap,
                       ChainConfig chain) {
  chain.exec = Exec::serial;
  switch (strategy) {
    case Strategy::gsn:
      return gsn_fill(*models.brnn, x, gap, chain);
    case Strategy::nade:
      return nade_exact_gap_nll(*models.nade, x, gap, Exec::serial);
    case Strategy::bayes_mcmc:
      return bayes_mcmc_fill(*models.uni, x, gap, chain);
    case Strategy::oneway:
      return oneway_fill(*models.uni, x, gap, chain);
    case Strategy::onegram:
      return onegram_nll(*models.onegram, x, gap);
  }
  throw InvalidInput("unknown strategy");
}

StrategySummary summarize(Strategy strategy, std::size_t g, const std::vector<GapRecord>& records) {
  StrategySummary s;
  s.strategy = strategy;
  s.mean_per_position_nll.assign(g, 0.0);
  std::size_t used = 0;
  for (const auto& r : records) {
    if (r.strategy != strategy) continue;
    ++s.n_gaps;
    if (r.result.flagged()) {
      ++s.n_flagged;
      continue;
    }
    ++used;
    s.mean_gap_nll += r.result.gap_nll;
    for (std::size_t i = 0; i < g; ++i) s.mean_per_position_nll[i] += r.result.per_position_nll[i];
  }
  const double n = used == 0 ? std::nan("") : static_cast<double>(used);
  s.mean_gap_nll /= n;
  for (double& v : s.mean_per_position_nll) v /= n;
  return s;
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string line;
  for (const auto& c : cells) {
    if (!line.empty()) line += ',';
    line += c;
  }
  return line + '\n';
}

}  // namespace

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::gsn:
      return "gsn";
    case Strategy::nade:
      return "nade";
    case Strategy::bayes_mcmc:
      return "bayes_mcmc";
    case Strategy::oneway:
      return "oneway";
    case Strategy::onegram:
      return "onegram";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  for (Strategy s : all_strategies()) {
    if (name == to_string(s)) return s;
  }
  throw InvalidInput("unknown strategy '" + std::string(name) +
                     "' (expected gsn, nade, bayes_mcmc, oneway or onegram)");
}

std::vector<Strategy> all_strategies() {
  return {Strategy::gsn, Strategy::nade, Strategy::bayes_mcmc, Strategy::oneway, Strategy::onegram};
}

std::vector<std::string> ModelSet::missing_for(Strategy strategy) const {
  std::vector<std::string> out;
  switch (strategy) {
    case Strategy::gsn:
      if (!brnn) out.push_back("brnn checkpoint");
      break;
    case Strategy::nade:
      if (!nade) out.push_back("nade checkpoint");
      break;
    case Strategy::bayes_mcmc:
    case Strategy::oneway:
      if (!uni) out.push_back("uni checkpoint");
      break;
    case Strategy::onegram:
      if (!onegram) out.push_back("onegram stats");
      break;
  }
  return out;
}

void EvalConfig::validate() const {
  if (gap_len < 1) throw InvalidInput("gap length must be at least 1");
  if (strategies.empty()) throw InvalidInput("no strategy selected");
  if (chain.n_chains < 1) throw InvalidInput("n_chains must be at least 1");
}

std::size_t EvalConfig::gaps_for(Strategy strategy) const {
  const auto it = n_gaps_for.find(strategy);
  if (it == n_gaps_for.end()) return n_gaps;
  return n_gaps == 0 ? it->second : std::min(n_gaps, it->second);
}

std::vector<GapLocation> sample_gaps(const Corpus& corpus, std::size_t gap_len,
                                     std::size_t edge_exclusion, std::size_t n_gaps,
                                     std::uint64_t seed) {
  if (gap_len < 1) throw InvalidInput("gap length must be at least 1");
  std::vector<GapLocation> eligible;
  for (std::size_t k = 0; k < corpus.track_count(); ++k) {
    const std::size_t T = corpus.track_length(k);
    if (T < 2 * edge_exclusion + gap_len) continue;
    for (std::size_t s = edge_exclusion; s + gap_len + edge_exclusion <= T; ++s) {
      eligible.push_back({k, s});
    }
  }
  if (eligible.empty()) {
    throw InvalidInput("no track is at least 2 * edge_exclusion + g = " +
                       std::to_string(2 * edge_exclusion + gap_len) + " steps long");
  }
  Rng rng = make_rng(split_seed(seed, kGapStream));
  shuffle(eligible, rng);
  if (n_gaps != 0 && n_gaps < eligible.size()) eligible.resize(n_gaps);
  return eligible;
}

Sequence track_sequence(const Corpus& corpus, std::size_t track) {
  return corpus.window(track, 0, corpus.track_length(track), false);
}

const StrategySummary* EvalReport::summary(Strategy strategy) const {
  for (const auto& s : summaries) {
    if (s.strategy == strategy) return &s;
  }
  return nullptr;
}

std::string EvalReport::to_json() const {
  json doc;
  doc["dataset"] = dataset;
  doc["gap_len"] = gap_len;
  json strategies = json::array();
  for (const auto& s : summaries) {
    strategies.push_back({{"strategy", to_string(s.strategy)},
                          {"n_gaps", s.n_gaps},
                          {"n_flagged", s.n_flagged},
                          {"mean_gap_nll", finite_or_null(s.mean_gap_nll)},
                          {"mean_per_position_nll", numbers(s.mean_per_position_nll)}});
  }
  doc["strategies"] = strategies;
  json gaps = json::array();
  for (const auto& r : records) {
    gaps.push_back({{"strategy", to_string(r.strategy)},
                    {"track", r.location.track},
                    {"start", r.location.start},
                    {"gap_nll", finite_or_null(r.result.gap_nll)},
                    {"per_position_nll", numbers(r.result.per_position_nll)},
                    {"flags", r.result.flags}});
  }
  doc["gaps"] = gaps;
  json curve = json::array();
  for (const auto& p : step_curve) {
    curve.push_back({{"M", p.mcmc_steps},
                     {"n_gaps", p.n_gaps},
                     {"gsn_nll", finite_or_null(p.gsn_nll)},
                     {"nade_nll", finite_or_null(p.nade_nll)},
                     {"difference", finite_or_null(p.difference)}});
  }
  doc["step_curve"] = curve;
  json single = json::array();
  for (const auto& r : single_step) {
    single.push_back({{"model", r.model},
                      {"n_gaps", r.n_gaps},
                      {"n_flagged", r.n_flagged},
                      {"mean_nll", finite_or_null(r.mean_nll)}});
  }
  doc["single_step"] = single;
  return doc.dump(1);
}

EvalReport evaluate_gaps(const ModelSet& models, const Corpus& corpus, const EvalConfig& cfg) {
  cfg.validate();
  std::vector<std::string> missing;
  for (Strategy s : cfg.strategies) {
    for (auto& m : models.missing_for(s)) {
      if (std::find(missing.begin(), missing.end(), m) == missing.end()) missing.push_back(m);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing for the requested strategies:";
    for (const auto& m : missing) msg += " " + m;
    throw InvalidInput(msg);
  }
  check_dims(models, corpus);

  // 0 means every eligible gap.
  std::size_t max_gaps = cfg.gaps_for(cfg.strategies.front());
  for (Strategy s : cfg.strategies) {
    const std::size_t n = cfg.gaps_for(s);
    max_gaps = (n == 0 || max_gaps == 0) ? 0 : std::max(max_gaps, n);
  }
  const auto gaps = sample_gaps(corpus, cfg.gap_len, cfg.edge_exclusion, max_gaps, cfg.seed);

  // Jobs in (strategy order, gap order); each writes its own slot.
  std::vector<GapRecord> records;
  for (Strategy s : cfg.strategies) {
    const std::size_t n = cfg.gaps_for(s) == 0 ? gaps.size() : std::min(gaps.size(), cfg.gaps_for(s));
    for (std::size_t i = 0; i < n; ++i) records.push_back({s, gaps[i], {}});
  }
  std::vector<std::size_t> gap_index(records.size());
  for (std::size_t j = 0, i = 0; j < records.size(); ++j) {
    i = (j > 0 && records[j].strategy == records[j - 1].strategy) ? i + 1 : 0;
    gap_index[j] = i;
  }
  parallel_for(records.size(), cfg.exec, [&](std::size_t j) {
    auto& r = records[j];
    const Sequence x = track_sequence(corpus, r.location.track);
    ChainConfig chain = cfg.chain;
    chain.seed = strategy_seed(cfg.seed, r.strategy, gap_index[j]);
    r.result = run_strategy(models, r.strategy, x, {r.location.start, cfg.gap_len}, chain);
  });

  EvalReport report;
  report.dataset = cfg.dataset;
  report.gap_len = cfg.gap_len;
  for (Strategy s : cfg.strategies) report.summaries.push_back(summarize(s, cfg.gap_len, records));
  report.records = std::move(records);
  return report;
}

std::vector<StepCurvePoint> gsn_step_curve(const ModelSet& models, const Corpus& corpus,
                                           const std::vector<std::size_t>& m_grid,
                                           const EvalConfig& cfg) {
  if (m_grid.empty()) throw InvalidInput("empty M grid");
  if (*std::min_element(m_grid.begin(), m_grid.end()) < cfg.gap_len) {
    throw InvalidInput("every M in the grid must be at least the gap length " +
                       std::to_string(cfg.gap_len));
  }
  std::vector<std::string> missing = models.missing_for(Strategy::gsn);
  for (auto& m : models.missing_for(Strategy::nade)) missing.push_back(m);
  if (!missing.empty()) {
    std::string msg = "step curve needs:";
    for (const auto& m : missing) msg += " " + m;
    throw InvalidInput(msg);
  }
  check_dims(models, corpus);
  const auto gaps = sample_gaps(corpus, cfg.gap_len, cfg.edge_exclusion,
                                cfg.gaps_for(Strategy::gsn), cfg.seed);

  std::vector<GapResult> nade(gaps.size());
  parallel_for(gaps.size(), cfg.exec, [&](std::size_t i) {
    nade[i] = nade_exact_gap_nll(*models.nade, track_sequence(corpus, gaps[i].track),
                                 {gaps[i].start, cfg.gap_len}, Exec::serial);
  });

  std::vector<StepCurvePoint> curve;
  for (std::size_t m : m_grid) {
    std::vector<GapResult> gsn(gaps.size());
    parallel_for(gaps.size(), cfg.exec, [&](std::size_t i) {
      ChainConfig chain = cfg.chain;
      chain.mcmc_steps = m;
      chain.exec = Exec::serial;
      chain.seed = split_seed(split_seed(cfg.seed, kCurveStream), i);
      gsn[i] = gsn_fill(*models.brnn, track_sequence(corpus, gaps[i].track),
                        {gaps[i].start, cfg.gap_len}, chain);
    });
    StepCurvePoint p;
    p.mcmc_steps = m;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      if (gsn[i].flagged() || nade[i].flagged()) continue;
      ++p.n_gaps;
      p.gsn_nll += gsn[i].gap_nll;
      p.nade_nll += nade[i].gap_nll;
    }
    const double n = p.n_gaps == 0 ? std::nan("") : static_cast<double>(p.n_gaps);
    p.gsn_nll /= n;
    p.nade_nll /= n;
    p.difference = p.gsn_nll - p.nade_nll;
    curve.push_back(p);
  }
  return curve;
}

std::vector<SingleStepRow> single_step_nll(const ModelSet& models, const Corpus& corpus,
                                           const EvalConfig& cfg) {
  check_dims(models, corpus);
  const auto gaps = sample_gaps(corpus, 1, cfg.edge_exclusion, cfg.n_gaps, cfg.seed);

  auto mean_row = [&](std::string name, auto score) {
    std::vector<double> nll(gaps.size());
    parallel_for(gaps.size(), cfg.exec, [&](std::size_t i) {
      nll[i] = score(track_sequence(corpus, gaps[i].track), gaps[i].start);
    });
    SingleStepRow row;
    row.model = std::move(name);
    row.n_gaps = gaps.size();
    std::size_t used = 0;
    for (double v : nll) {
      if (!(v <= -std::log(kZeroProbability))) {
        ++row.n_flagged;
        continue;
      }
      ++used;
      row.mean_nll += v;
    }
    row.mean_nll /= used == 0 ? std::nan("") : static_cast<double>(used);
    return row;
  };

  auto bi_score = [](const BiRnnParams& params, bool mark_missing) {
    return [&params, mark_missing](const Sequence& x, std::size_t t) {
      BiConditionalCache cache(params, with_width(x, params.input_dim()));
      if (mark_missing) cache.set_missing(t);
      return step_nll(cache.conditional(t), x.step(t));
    };
  };

  std::vector<SingleStepRow> rows;
  if (models.brnn) rows.push_back(mean_row("brnn", bi_score(*models.brnn, false)));
  if (models.nade) rows.push_back(mean_row("nade_masked", bi_score(*models.nade, true)));
  if (models.nade_no_mask) {
    rows.push_back(mean_row("nade_no_mask", bi_score(*models.nade_no_mask, true)));
  }
  if (models.uni) {
    const UniRnnParams& params = *models.uni;
    rows.push_back(mean_row("uni", [&params](const Sequence& x, std::size_t t) {
      UniConditionalCache cache(params, with_width(x, params.input_dim()));
      return step_nll(cache.predictive(t), x.step(t));
    }));
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string table1_csv(const EvalReport& report) {
  std::string out = "dataset,strategy,n_gaps,n_flagged,mean_gap_nll\n";
  for (const auto& s : report.summaries) {
    out += csv_row({report.dataset, to_string(s.strategy), std::to_string(s.n_gaps),
                    std::to_string(s.n_flagged), format_number(s.mean_gap_nll)});
  }
  return out;
}

std::string fig2_csv(const EvalReport& report) {
  std::string out = "dataset,strategy";
  for (std::size_t i = 1; i <= report.gap_len; ++i) out += ",pos" + std::to_string(i);
  out += '\n';
  for (const auto& s : report.summaries) {
    out += report.dataset + "," + to_string(s.strategy);
    for (double v : s.mean_per_position_nll) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

std::string fig3_csv(const EvalReport& report) {
  std::string out = "dataset,M,n_gaps,gsn_nll,nade_nll,difference\n";
  for (const auto& p : report.step_curve) {
    out += csv_row({report.dataset, std::to_string(p.mcmc_steps), std::to_string(p.n_gaps),
                    format_number(p.gsn_nll), format_number(p.nade_nll),
                    format_number(p.difference)});
  }
  return out;
}

std::string table2_csv(const EvalReport& report) {
  std::string out = "dataset,model,n_gaps,n_flagged,mean_nll\n";
  for (const auto& r : report.single_step) {
    out += csv_row({report.dataset, r.model, std::to_string(r.n_gaps), std::to_string(r.n_flagged),
                    format_number(r.mean_nll)});
  }
  return out;
}

}  // namespace gapfill
