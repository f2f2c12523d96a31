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

#include "gapfill/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "gapfill/checkpoint.hpp"
#include "gapfill/corpus.hpp"
#include "gapfill/eval.hpp"
#include "gapfill/inference.hpp"
#include "gapfill/training.hpp"

namespace gapfill::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not a count");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run bookkeeping

struct Run {
  std::string command;
  fs::path out;
  json inputs = json::object();
  json outputs = json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& path) {
    if (path.empty()) return;
    inputs[path] = hex64(fnv1a(read_file(path)));
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = out / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    outputs.push_back(path.string());
  }

  void produced(const fs::path& path) { outputs.push_back(path.string()); }
};

// Effective option values, keyed by long option name.
json snapshot(const CLI::App& app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_type_size() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      cfg[name] = opt->results().back();
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void finish(Run& run, const CLI::App& app, std::uint64_t seed) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  json manifest{{"command", run.command},
                {"config", snapshot(app)},
                {"seed", seed},
                {"inputs", run.inputs},
                {"outputs", run.outputs},
                {"wall_time_seconds", seconds}};
  const fs::path path = run.out / "manifest.json";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << manifest.dump(1) << '\n';
}

Run start_run(const std::string& command, const std::string& out) {
  Run run;
  run.command = command;
  run.out = out;
  fs::create_directories(run.out);
  return run;
}

// ---------------------------------------------------------------------------
// Config files

bool given_on_command_line(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

// Appends options from the config file that the command line leaves unset.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  const auto path = config_path(args);
  if (!path) return args;
  json doc;
  try {
    doc = json::parse(read_file(*path));
  } catch (const json::exception& e) {
    throw UsageError("config " + *path + " is not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) doc = doc["config"];
  if (!doc.is_object()) throw UsageError("config " + *path + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "config" || given_on_command_line(args, key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      args.push_back("--" + key);
      args.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back("--" + key);
      args.push_back(joined);
    } else if (value.is_number()) {
      args.push_back("--" + key);
      args.push_back(value.dump());
    } else if (!value.is_null()) {
      throw UsageError("config key '" + key + "' has an unsupported value");
    }
  }
  return args;
}

// ---------------------------------------------------------------------------
// Data

struct DataOptions {
  std::string data;
  std::string format = "auto";
  std::string alphabet;
  std::size_t max_symbols = 63;
};

void add_data_options(CLI::App& app, DataOptions& o, const char* what) {
  app.add_option("--data", o.data, what)->required();
  app.add_option("--format", o.format, "text, pianoroll or auto (by extension)")
      ->check(CLI::IsMember({"auto", "text", "pianoroll"}));
  app.add_option("--alphabet", o.alphabet, "alphabet JSON for text data");
  app.add_option("--max-symbols", o.max_symbols,
                 "alphabet size cap when building one (OOV is added)");
}

bool is_pianoroll(const DataOptions& o) {
  if (o.format != "auto") return o.format == "pianoroll";
  return fs::path(o.data).extension() == ".json";
}

struct Loaded {
  Corpus corpus;
  std::optional<Alphabet> alphabet;
  std::u32string text;
  PianoRoll roll;
};

Loaded load_data(const DataOptions& o, Run& run) {
  Loaded loaded;
  run.input(o.data);
  if (is_pianoroll(o)) {
    loaded.roll = load_pianoroll(o.data);
    loaded.corpus = binary_corpus(loaded.roll.scores);
    return loaded;
  }
  const std::string utf8 = read_file(o.data);
  if (!o.alphabet.empty()) {
    run.input(o.alphabet);
    loaded.alphabet = load_alphabet(o.alphabet);
  } else {
    loaded.alphabet = build_alphabet(utf8, o.max_symbols);
  }
  loaded.text = decode_utf8(utf8);
  loaded.corpus = text_corpus(utf8, *loaded.alphabet);
  return loaded;
}

// ---------------------------------------------------------------------------
// Training options

struct TrainOptions {
  std::string kind = "uni";
  std::string regime;
  TrainConfig config;
  std::optional<double> burnin_head;
  std::optional<double> burnin_tail;
  bool serial = false;
};

void add_train_options(CLI::App& app, TrainOptions& o) {
  app.add_option("--kind", o.kind, "uni or brnn")->check(CLI::IsMember({"uni", "brnn"}));
  app.add_option("--regime", o.regime, "uni, brnn, nade_masked or nade_no_mask");
  app.add_option("--T", o.config.seq_len, "training window length");
  app.add_option("--updates", o.config.total_updates, "number of SGD updates");
  app.add_option("--hidden", o.config.hidden, "hidden units per recurrent stack");
  app.add_option("--batch", o.config.minibatch_size, "sequences per minibatch");
  app.add_option("--lr", o.config.step_size, "initial step size");
  app.add_option("--seed", o.config.seed, "master seed");
  app.add_option("--nade-gap", o.config.nade_gap, "longest corrupted run");
  app.add_option("--nade-stride", o.config.nade_stride, "one corrupted gap per this many steps");
  app.add_option("--burnin-head", o.burnin_head, "fraction of leading steps without loss");
  app.add_option("--burnin-tail", o.burnin_tail, "fraction of trailing steps without loss");
  app.add_option("--log-every", o.config.log_every, "loss trace interval");
  app.add_flag("--serial", o.serial, "disable parallel kernels");
}

TrainConfig resolve_train(TrainOptions& o) {
  TrainConfig cfg = o.config;
  if (o.regime.empty()) o.regime = o.kind;
  try {
    cfg.regime = regime_from_string(o.regime);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const bool bi = model_kind(cfg.regime) == ModelKind::bi;
  if (bi != (o.kind == "brnn")) {
    throw UsageError("regime " + o.regime + " needs --kind " + (bi ? "brnn" : "uni") +
                     (uses_missing_channel(cfg.regime) ? " (the missing-token channel is bidirectional only)" : ""));
  }
  if (o.burnin_head || o.burnin_tail) {
    const BurnIn d = default_burnin(model_kind(cfg.regime));
    cfg.burnin = BurnIn{o.burnin_head.value_or(d.head), o.burnin_tail.value_or(d.tail)};
  }
  cfg.exec = o.serial ? Exec::serial : Exec::parallel;
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void save_model(const AnyModel& model, const fs::path& path) {
  std::visit([&](const auto& p) { save_checkpoint(p, path); }, model);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_prepare(CLI::App& app, const DataOptions& data, const std::string& out_dir,
                std::ostream& out) {
  Run run = start_run("prepare", out_dir);
  const Loaded loaded = load_data(data, run);
  if (loaded.alphabet) {
    save_alphabet(*loaded.alphabet, run.out / "alphabet.json");
    run.produced(run.out / "alphabet.json");
  }
  save_onegram(estimate_onegram(loaded.corpus), run.out / "onegram.json");
  run.produced(run.out / "onegram.json");
  finish(run, app, 0);
  out << "prepared " << to_string(loaded.corpus.family) << " data: d=" << loaded.corpus.dim
      << ", " << loaded.corpus.total_steps() << " steps, " << loaded.corpus.track_count()
      << " tracks\n";
  return kExitOk;
}

int cmd_train(CLI::App& app, const DataOptions& data, TrainOptions& opts,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = resolve_train(opts);
  Run run = start_run("train", out_dir);
  const Loaded loaded = load_data(data, run);
  const TrainResult result = train(loaded.corpus, cfg);
  save_model(result.model, run.out / "model.ckpt");
  run.produced(run.out / "model.ckpt");
  run.write("trace.csv", loss_trace_csv(result.trace));
  if (loaded.alphabet) {
    save_alphabet(*loaded.alphabet, run.out / "alphabet.json");
    run.produced(run.out / "alphabet.json");
  }
  const std::set<std::string> warnings(result.warnings.begin(), result.warnings.end());
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  finish(run, app, cfg.seed);
  out << "trained " << to_string(cfg.regime) << " model, final loss "
      << format_number(result.trace.empty() ? 0.0 : result.trace.back().loss) << '\n';
  return kExitOk;
}

struct FillOptions {
  std::string checkpoint;
  std::string stats;
  std::string strategy = "gsn";
  std::string gap;
  std::size_t score = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::size_t mcmc_steps = 100;
  std::size_t chains = 100;
  std::uint64_t seed = 0;
};

int cmd_fill(CLI::App& app, const DataOptions& data, const FillOptions& o,
             const std::string& out_dir, std::ostream& out) {
  Strategy strategy;
  GapSpec gap;
  try {
    strategy = strategy_from_string(o.strategy);
    gap = parse_gap(o.gap);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  Run run = start_run("fill", out_dir);
  std::optional<AnyModel> model;
  std::optional<OneGramStats> stats;
  if (!o.checkpoint.empty()) {
    run.input(o.checkpoint);
    model = load_checkpoint(o.checkpoint);
  }
  if (!o.stats.empty()) {
    run.input(o.stats);
    stats = load_onegram(o.stats);
  }
  const UniRnnParams* uni = model ? std::get_if<UniRnnParams>(&*model) : nullptr;
  const BiRnnParams* bi = model ? std::get_if<BiRnnParams>(&*model) : nullptr;
  switch (strategy) {
    case Strategy::gsn:
      if (!bi) throw UsageError("strategy gsn needs a bidirectional checkpoint (--checkpoint)");
      break;
    case Strategy::nade:
      if (!bi || !bi->has_missing_channel()) {
        throw UsageError("strategy nade needs a bidirectional checkpoint with a missing-token channel");
      }
      break;
    case Strategy::bayes_mcmc:
    case Strategy::oneway:
      if (!uni) {
        throw UsageError(std::string("strategy ") + to_string(strategy) +
                         " needs a unidirectional checkpoint (--checkpoint)");
      }
      if (strategy == Strategy::bayes_mcmc && uni->family != Family::softmax) {
        throw UsageError("strategy bayes_mcmc needs categorical data: a binary step has 2^d "
                         "proposals (d = " + std::to_string(uni->output_dim()) + ")");
      }
      break;
    case Strategy::onegram:
      if (!stats) throw UsageError("strategy onegram needs one-gram stats (--stats)");
      break;
  }
  const std::size_t d_out = strategy == Strategy::onegram ? stats->probabilities.size()
                            : uni                         ? uni->output_dim()
                                                          : bi->output_dim();

  DataOptions data_opts = data;
  if (!is_pianoroll(data) && data.alphabet.empty()) {
    throw UsageError("text input needs --alphabet (written by prepare and train)");
  }
  const Loaded loaded = load_data(data_opts, run);
  if (loaded.corpus.dim != d_out) {
    throw UsageError("data has " + std::to_string(loaded.corpus.dim) + " channels, model expects " +
                     std::to_string(d_out));
  }
  const std::size_t track = is_pianoroll(data) ? o.score : 0;
  if (track >= loaded.corpus.track_count()) throw UsageError("--score is out of range");
  const std::size_t full = loaded.corpus.track_length(track);
  if (o.offset >= full) throw UsageError("--offset is beyond the end of the data");
  const std::size_t length = o.length == 0 ? full - o.offset : std::min(o.length, full - o.offset);
  const Sequence x = loaded.corpus.window(track, o.offset, length, false);
  try {
    gap.validate(x.length());
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  ChainConfig chain;
  chain.mcmc_steps = o.mcmc_steps;
  chain.n_chains = o.chains;
  chain.seed = o.seed;
  chain.keep_samples = true;
  GapResult result;
  Sequence filled = x;
  Rng rng = make_rng(split_seed(o.seed, 1));
  auto copy_sample = [&](const Sequence& sample) {
    for (std::size_t i = 0; i < gap.length; ++i) {
      std::copy(sample.step(i).begin(), sample.step(i).end(), filled.step(gap.start + i).begin());
    }
  };
  switch (strategy) {
    case Strategy::gsn:
      result = gsn_fill(*bi, x, gap, chain);
      copy_sample(result.samples.front());
      break;
    case Strategy::bayes_mcmc:
      result = bayes_mcmc_fill(*uni, x, gap, chain);
      copy_sample(result.samples.front());
      break;
    case Strategy::oneway:
      result = oneway_fill(*uni, x, gap, chain);
      copy_sample(result.samples.front());
      break;
    case Strategy::nade: {
      const NadeFill nade = nade_fill(*bi, x, gap, rng);
      filled = nade.filled;
      if (gap.length <= kMaxExactNadeGap) {
        result = nade_exact_gap_nll(*bi, x, gap);
      } else {
        result.strategy = "nade";
        result.gap_nll = -nade_ordered_log_likelihood(*bi, x, nade.order);
        result.n_chains = 1;
        result.flags.push_back("single_ordering");
      }
      break;
    }
    case Strategy::onegram: {
      result = onegram_nll(*stats, x, gap);
      const StepDistribution dist = onegram_distribution(*stats);
      for (std::size_t t = gap.start; t < gap.end(); ++t) {
        auto row = filled.step(t);
        std::fill(row.begin(), row.end(), 0.0);
        if (dist.family == Family::softmax) {
          row[sample_categorical(rng, dist.params)] = 1.0;
        } else {
          for (std::size_t k = 0; k < row.size(); ++k) row[k] = uniform01(rng) < dist.params[k] ? 1.0 : 0.0;
        }
      }
      break;
    }
  }
  result.samples.clear();
  run.write("gap_result.json", result.to_json() + "\n");
  if (loaded.alphabet) {
    const std::string text = decode_onehot(filled, *loaded.alphabet);
    run.write("filled.txt", text + "\n");
    out << text << '\n';
  } else {
    json rows = json::array();
    for (std::size_t t = 0; t < filled.length(); ++t) {
      json row = json::array();
      for (double v : filled.step(t)) row.push_back(static_cast<int>(v));
      rows.push_back(row);
    }
    run.write("filled.json", rows.dump() + "\n");
    out << rows.dump() << '\n';
  }
  finish(run, app, o.seed);
  return kExitOk;
}

struct EvalOptions {
  std::string uni, brnn, nade, nade_no_mask, stats;
  std::string strategies;
  std::string dataset = "data";
  long long segment = -1;
  std::size_t gap_len = 5;
  std::size_t n_gaps = 500;
  std::size_t edge = 10;
  std::size_t bayes_gaps = 0;
  std::size_t mcmc_steps = 100;
  std::size_t chains = 100;
  std::uint64_t seed = 0;
  bool fig3 = false;
  std::string m_grid = "5,10,20,50,100";
  bool table2 = false;
  bool serial = false;
};

int cmd_eval(CLI::App& app, const DataOptions& data, const EvalOptions& o,
             const std::string& out_dir, std::ostream& out) {
  Run run = start_run("eval", out_dir);
  ModelSet models;
  auto load_as = [&](const std::string& path, auto& slot, bool want_bi) {
    if (path.empty()) return;
    run.input(path);
    AnyModel m = load_checkpoint(path);
    using Slot = typename std::remove_reference_t<decltype(slot)>::value_type;
    if (auto* p = std::get_if<Slot>(&m)) {
      slot = std::move(*p);
    } else {
      throw UsageError(path + " is not a " + (want_bi ? "bidirectional" : "unidirectional") + " checkpoint");
    }
  };
  load_as(o.uni, models.uni, false);
  load_as(o.brnn, models.brnn, true);
  load_as(o.nade, models.nade, true);
  load_as(o.nade_no_mask, models.nade_no_mask, true);
  if (!o.stats.empty()) {
    run.input(o.stats);
    models.onegram = load_onegram(o.stats);
  }
  if (models.nade && !models.nade->has_missing_channel()) {
    throw UsageError("--nade checkpoint has no missing-token channel");
  }

  EvalConfig cfg;
  cfg.dataset = o.dataset;
  cfg.gap_len = o.gap_len;
  cfg.n_gaps = o.n_gaps;
  cfg.edge_exclusion = o.edge;
  cfg.seed = o.seed;
  cfg.chain.mcmc_steps = o.mcmc_steps;
  cfg.chain.n_chains = o.chains;
  cfg.exec = o.serial ? Exec::serial : Exec::parallel;
  if (o.bayes_gaps > 0) cfg.n_gaps_for[Strategy::bayes_mcmc] = o.bayes_gaps;
  cfg.strategies.clear();
  if (o.strategies.empty()) {
    for (Strategy s : all_strategies()) {
      if (models.missing_for(s).empty()) cfg.strategies.push_back(s);
    }
    if (cfg.strategies.empty()) throw UsageError("no checkpoints or stats given");
  } else {
    std::vector<std::string> missing;
    for (const auto& name : split_list(o.strategies)) {
      Strategy s;
      try {
        s = strategy_from_string(name);
      } catch (const InvalidInput& e) {
        throw UsageError(e.what());
      }
      cfg.strategies.push_back(s);
      for (auto& m : models.missing_for(s)) missing.push_back(std::string(to_string(s)) + " needs " + m);
    }
    if (!missing.empty()) {
      std::string msg = "missing pieces:";
      for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? "; " : " ") + missing[i];
      throw UsageError(msg);
    }
  }
  std::vector<std::size_t> grid;
  if (o.fig3) {
    grid = parse_counts(o.m_grid, "--M-grid");
    if (grid.empty()) throw UsageError("--M-grid is empty");
    if (!models.brnn || !models.nade) throw UsageError("--fig3 needs --brnn and --nade checkpoints");
  }

  const Loaded loaded = load_data(data, run);
  const std::size_t segment =
      o.segment < 0 ? (loaded.alphabet ? 50 : 0) : static_cast<std::size_t>(o.segment);
  const Corpus corpus = segment > 0 ? loaded.corpus.segmented(segment) : loaded.corpus;

  EvalReport report = evaluate_gaps(models, corpus, cfg);
  if (o.fig3) report.step_curve = gsn_step_curve(models, corpus, grid, cfg);
  if (o.table2) report.single_step = single_step_nll(models, corpus, cfg);

  run.write("report.json", report.to_json() + "\n");
  run.write("table1.csv", table1_csv(report));
  run.write("fig2.csv", fig2_csv(report));
  run.write("fig3.csv", fig3_csv(report));
  run.write("table2.csv", table2_csv(report));
  finish(run, app, o.seed);
  out << table1_csv(report);
  return kExitOk;
}

struct GridOptions {
  std::string valid;
  std::string grid = "0.0001,0.0003,0.001,0.003,0.01,0.03,0.1,0.3,1";
  std::size_t windows = 20;
};

int cmd_gridsearch(CLI::App& app, const DataOptions& data, TrainOptions& topts,
                   const GridOptions& o, const std::string& out_dir, std::ostream& out) {
  const auto rates_text = split_list(o.grid);
  if (rates_text.empty()) throw UsageError("--grid is empty");
  std::vector<double> rates;
  for (const auto& r : rates_text) {
    try {
      rates.push_back(std::stod(r));
    } catch (const std::exception&) {
      throw UsageError("--grid: '" + r + "' is not a number");
    }
  }
  TrainConfig cfg = resolve_train(topts);
  Run run = start_run("gridsearch", out_dir);
  const Loaded loaded = load_data(data, run);
  Corpus train_corpus = loaded.corpus;
  Corpus valid_corpus;
  if (!o.valid.empty()) {
    DataOptions vopts = data;
    vopts.data = o.valid;
    if (loaded.alphabet && data.alphabet.empty()) {
      run.input(o.valid);
      valid_corpus = text_corpus(read_file(o.valid), *loaded.alphabet);
    } else {
      valid_corpus = load_data(vopts, run).corpus;
    }
  } else if (loaded.corpus.family == Family::softmax) {
    // Hold out the last tenth of the text.
    const auto& track = loaded.corpus.symbol_tracks.front();
    const std::size_t cut = track.size() - track.size() / 10;
    train_corpus.symbol_tracks = {std::vector<std::uint32_t>(track.begin(), track.begin() + static_cast<std::ptrdiff_t>(cut))};
    valid_corpus = loaded.corpus;
    valid_corpus.symbol_tracks = {std::vector<std::uint32_t>(track.begin() + static_cast<std::ptrdiff_t>(cut), track.end())};
  } else {
    const std::size_t n = loaded.corpus.binary_tracks.size();
    if (n < 2) throw UsageError("gridsearch needs --valid or at least two scores");
    const std::size_t cut = n - std::max<std::size_t>(1, n / 10);
    train_corpus.binary_tracks.assign(loaded.corpus.binary_tracks.begin(),
                                      loaded.corpus.binary_tracks.begin() + static_cast<std::ptrdiff_t>(cut));
    valid_corpus = loaded.corpus;
    valid_corpus.binary_tracks.assign(loaded.corpus.binary_tracks.begin() + static_cast<std::ptrdiff_t>(cut),
                                      loaded.corpus.binary_tracks.end());
  }

  std::string csv = "step_size,validation_loss\n";
  std::size_t best = 0;
  std::vector<double> losses;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    cfg.step_size = rates[i];
    const TrainResult result = train(train_corpus, cfg);
    losses.push_back(validation_loss(result.model, valid_corpus, cfg, o.windows, cfg.seed));
    csv += rates_text[i] + "," + format_number(losses.back()) + "\n";
    if (losses.back() < losses[best]) best = i;
  }
  run.write("gridsearch.csv", csv);
  run.write("best.json", json{{"step_size", rates[best]}, {"validation_loss", losses[best]}}.dump() + "\n");
  finish(run, app, cfg.seed);
  out << csv << "best step_size " << rates_text[best] << '\n';
  return kExitOk;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train recurrent sequence models and fill gaps in discrete sequences."};
  app.name("gapfill");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config, out_dir;
  DataOptions data;
  TrainOptions train_opts;
  FillOptions fill_opts;
  EvalOptions eval_opts;
  GridOptions grid_opts;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON file of option values, or a manifest");
    sub->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* prepare = app.add_subcommand("prepare", "build the alphabet and one-gram stats");
  common(prepare);
  add_data_options(*prepare, data, "training text or piano-roll JSON");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  common(train_cmd);
  add_data_options(*train_cmd, data, "training text or piano-roll JSON");
  add_train_options(*train_cmd, train_opts);

  CLI::App* fill = app.add_subcommand("fill", "fill one gap");
  common(fill);
  add_data_options(*fill, data, "text or piano-roll JSON holding the sequence");
  fill->add_option("--checkpoint", fill_opts.checkpoint, "model checkpoint");
  fill->add_option("--stats", fill_opts.stats, "one-gram stats");
  fill->add_option("--strategy", fill_opts.strategy, "gsn, nade, bayes_mcmc, oneway or onegram");
  fill->add_option("--gap", fill_opts.gap, "start:len")->required();
  fill->add_option("--score", fill_opts.score, "score index in piano-roll data");
  fill->add_option("--offset", fill_opts.offset, "first step of the window to use");
  fill->add_option("--length", fill_opts.length, "window length (0: to the end)");
  fill->add_option("--M", fill_opts.mcmc_steps, "Gibbs steps per chain");
  fill->add_option("--chains", fill_opts.chains, "independent chains");
  fill->add_option("--seed", fill_opts.seed, "master seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate strategies on many gaps");
  common(eval);
  add_data_options(*eval, data, "test text or piano-roll JSON");
  eval->add_option("--uni", eval_opts.uni, "unidirectional checkpoint");
  eval->add_option("--brnn", eval_opts.brnn, "BRNN checkpoint (GSN)");
  eval->add_option("--nade", eval_opts.nade, "NADE-trained checkpoint");
  eval->add_option("--nade-no-mask", eval_opts.nade_no_mask, "NADE checkpoint trained without loss masking");
  eval->add_option("--stats", eval_opts.stats, "one-gram stats");
  eval->add_option("--strategies", eval_opts.strategies, "comma list (default: all available)");
  eval->add_option("--dataset", eval_opts.dataset, "name written to the tables");
  eval->add_option("--segment", eval_opts.segment, "split tracks into windows (-1: 50 for text, none for music)");
  eval->add_option("--g", eval_opts.gap_len, "gap length");
  eval->add_option("--n-gaps", eval_opts.n_gaps, "gaps to sample (0: all)");
  eval->add_option("--edge", eval_opts.edge, "steps excluded at both track ends");
  eval->add_option("--bayes-gaps", eval_opts.bayes_gaps, "cap on gaps for bayes_mcmc (0: none)");
  eval->add_option("--M", eval_opts.mcmc_steps, "Gibbs steps per chain");
  eval->add_option("--chains", eval_opts.chains, "independent chains");
  eval->add_option("--seed", eval_opts.seed, "master seed");
  eval->add_flag("--fig3", eval_opts.fig3, "compute GSN minus NADE NLL over --M-grid");
  eval->add_option("--M-grid", eval_opts.m_grid, "comma list of Gibbs step counts");
  eval->add_flag("--table2", eval_opts.table2, "compute single-step NLL per model");
  eval->add_flag("--serial", eval_opts.serial, "disable parallel evaluation");

  CLI::App* grid = app.add_subcommand("gridsearch", "select the step size by validation loss");
  common(grid);
  add_data_options(*grid, data, "training text or piano-roll JSON");
  add_train_options(*grid, train_opts);
  grid->add_option("--valid", grid_opts.valid, "validation data (default: hold out the last tenth)");
  grid->add_option("--grid", grid_opts.grid, "comma list of step sizes");
  grid->add_option("--windows", grid_opts.windows, "validation minibatches");

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (prepare->parsed()) return cmd_prepare(*prepare, data, out_dir, out);
    if (train_cmd->parsed()) return cmd_train(*train_cmd, data, train_opts, out_dir, out, err);
    if (fill->parsed()) return cmd_fill(*fill, data, fill_opts, out_dir, out);
    if (eval->parsed()) return cmd_eval(*eval, data, eval_opts, out_dir, out);
    return cmd_gridsearch(*grid, data, train_opts, grid_opts, out_dir, out);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInput& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace gapfill::cli
