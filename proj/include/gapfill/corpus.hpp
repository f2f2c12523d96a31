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

// Data ingestion and encoding: alphabets for character text, piano-roll
// loading, corpora of tracks, minibatch windows, and the training masks
// (burn-in and NADE gap masking).

#ifndef GAPFILL_CORPUS_HPP_
#define GAPFILL_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gapfill/numerics.hpp"
#include "gapfill/rng.hpp"

namespace gapfill {

// Categorical (one-hot, softmax output) or binary (factorial Bernoulli output).
enum class Family { softmax, bernoulli };

const char* to_string(Family family);
Family family_from_string(std::string_view name);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Alphabet

// Ordered set of characters. The last symbol is always the reserved
// out-of-alphabet symbol, which absorbs every character not listed.
class Alphabet {
 public:
  Alphabet() = default;
  // `symbols` excludes the OOV symbol; throws on duplicates.
  explicit Alphabet(std::vector<char32_t> symbols);

  std::size_t size() const { return symbols_.size() + 1; }
  std::size_t oov_index() const { return symbols_.size(); }
  const std::vector<char32_t>& symbols() const { return symbols_; }

  std::size_t index(char32_t symbol) const;
  // UTF-8 rendering of one symbol; OOV renders as U+FFFD.
  std::string render(std::size_t index) const;

  std::string to_json() const;
  static Alphabet from_json(std::string_view text);

  bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<char32_t> symbols_;
  std::unordered_map<char32_t, std::size_t> lookup_;
};

std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

// Keeps the max_symbols most frequent characters (frequency descending,
// then code point ascending) and appends the OOV symbol.
Alphabet build_alphabet(std::string_view utf8_text, std::size_t max_symbols);

Alphabet load_alphabet(const std::filesystem::path& path);
void save_alphabet(const Alphabet& alphabet, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sequences

// A T x width matrix of observation vectors with an optional per-step
// missing flag.
struct Sequence {
  Matrix steps;
  std::vector<std::uint8_t> missing;  // empty, or one flag per step

  Sequence() = default;
  Sequence(std::size_t length, std::size_t width) : steps(length, width) {}
  explicit Sequence(Matrix m) : steps(std::move(m)) {}

  std::size_t length() const { return steps.rows(); }
  std::size_t width() const { return steps.cols(); }
  std::span<double> step(std::size_t t) { return steps.row(t); }
  std::span<const double> step(std::size_t t) const { return steps.row(t); }
  bool is_missing(std::size_t t) const { return !missing.empty() && missing[t] != 0; }

  bool operator==(const Sequence&) const = default;
};

std::vector<std::size_t> to_indices(std::u32string_view text, const Alphabet& alphabet);

// One one-hot row per symbol index. With `with_missing_channel`, rows get one
// extra trailing dimension, initialised to 0.
Sequence onehot_sequence(std::span<const std::size_t> indices, std::size_t dim,
                         bool with_missing_channel);

Sequence encode_onehot(std::string_view utf8_text, const Alphabet& alphabet,
                       bool with_missing_channel);

// Argmax over the first alphabet.size() channels of every step.
std::string decode_onehot(const Sequence& seq, const Alphabet& alphabet);

// Copies the first `dim` channels of every step.
Sequence data_channels(const Sequence& seq, std::size_t dim);

// Widens each step to `width` channels (the extra channel, if any, is 0).
Sequence with_width(const Sequence& seq, std::size_t width);

// Sets step t to the missing token: data channels 0, last channel 1.
void set_missing_token(Sequence& seq, std::size_t t);

// ---------------------------------------------------------------------------
// Gaps

// A contiguous run [start, start + length) of steps.
struct GapSpec {
  std::size_t start = 0;
  std::size_t length = 1;

  std::size_t end() const { return start + length; }
  bool contains(std::size_t t) const { return t >= start && t < end(); }

  // Throws InvalidInput unless 1 <= length and end() <= sequence_length.
  void validate(std::size_t sequence_length) const;

  bool operator==(const GapSpec&) const = default;
};

// Parses "start:len".
GapSpec parse_gap(std::string_view text);

// ---------------------------------------------------------------------------
// Corpora and minibatches

// A collection of tracks (one long text, or one track per musical score).
// Categorical tracks are stored as symbol indices and expanded to one-hot
// rows only when a window is materialised.
struct Corpus {
  Family family = Family::softmax;
  std::size_t dim = 0;
  std::vector<std::vector<std::uint32_t>> symbol_tracks;  // softmax family
  std::vector<Sequence> binary_tracks;                     // bernoulli family

  std::size_t track_count() const;
  std::size_t track_length(std::size_t track) const;
  std::size_t total_steps() const;

  // Steps [offset, offset + length) of a track, optionally with a trailing
  // missing-token channel (initialised to 0).
  Sequence window(std::size_t track, std::size_t offset, std::size_t length,
                  bool with_missing_channel = false) const;

  // Splits every track into consecutive non-overlapping segments of
  // `length` steps, dropping the remainder.
  Corpus segmented(std::size_t length) const;
};

Corpus text_corpus(std::string_view utf8_text, const Alphabet& alphabet);
Corpus binary_corpus(std::vector<Sequence> scores);

struct Minibatch {
  std::vector<Sequence> inputs;
  std::vector<Sequence> targets;      // data channels only
  std::vector<std::uint8_t> error_mask;  // one flag per time step, shared by the batch
  std::vector<std::string> warnings;

  std::size_t size() const { return inputs.size(); }
  std::size_t length() const { return error_mask.size(); }
};

// Draws `count` windows of `length` steps uniformly with replacement: a
// track uniformly among those at least `length` long, then an offset
// uniformly. Inputs carry an extra missing channel when requested; the
// error mask starts all-true.
Minibatch sample_minibatch(const Corpus& corpus, std::size_t count, std::size_t length,
                           bool with_missing_channel, Rng& rng);

// NADE training corruption. For every full window of `stride` steps, a gap of
// `gap_len` steps is placed at an offset drawn uniformly from
// [0, stride - gap_len] (shared by the batch). For each sequence and gap,
// k ~ Uniform{1..gap_len} and a contiguous run of k steps at a uniform
// position inside the gap is set to the missing token. The error mask is
// true exactly on gap steps.
Minibatch nade_mask_gaps(Minibatch batch, std::size_t gap_len, std::size_t stride, Rng& rng);

// Fraction of steps excluded from the loss at the head and tail of a window.
struct BurnIn {
  double head = 0.0;
  double tail = 0.0;
};

enum class ModelKind { uni, bi };

BurnIn default_burnin(ModelKind kind);

// Uni: first ceil(0.2 T) steps false. Bi: first and last ceil(T / 6) false.
std::vector<std::uint8_t> burnin_mask(std::size_t length, ModelKind kind);
std::vector<std::uint8_t> burnin_mask(std::size_t length, BurnIn burnin);

// ---------------------------------------------------------------------------
// Piano rolls

struct PianoRoll {
  std::size_t dim = 88;
  std::vector<Sequence> scores;
};

// Reads {"dim": D, "scores": [[[0,1,...], ...], ...]}. Malformed JSON raises
// ParseError with the line; non-binary entries or ragged steps raise
// ValidationError naming the score and step.
PianoRoll load_pianoroll(const std::filesystem::path& path);
PianoRoll parse_pianoroll(std::string_view json_text);
void save_pianoroll(const PianoRoll& roll, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace gapfill

#endif  // GAPFILL_CORPUS_HPP_
