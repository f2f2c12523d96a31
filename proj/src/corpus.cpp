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

#include "gapfill/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace gapfill {

using nlohmann::json;

const char* to_string(Family family) {
  return family == Family::softmax ? "softmax" : "bernoulli";
}

Family family_from_string(std::string_view name) {
  if (name == "softmax") return Family::softmax;
  if (name == "bernoulli") return Family::bernoulli;
  throw InvalidInput("unknown output family '" + std::string(name) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// UTF-8

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    bool valid = true;
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= text.size()) {
        valid = false;
        break;
      }
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<char32_t> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!lookup_.emplace(symbols_[i], i).second) {
      throw InvalidInput("alphabet: duplicate symbol U+" + std::to_string(symbols_[i]));
    }
  }
}

std::size_t Alphabet::index(char32_t symbol) const {
  const auto it = lookup_.find(symbol);
  return it == lookup_.end() ? oov_index() : it->second;
}

std::string Alphabet::render(std::size_t index) const {
  if (index >= symbols_.size()) return encode_utf8(U"�");
  return encode_utf8(std::u32string(1, symbols_[index]));
}

std::string Alphabet::to_json() const {
  json symbols = json::array();
  for (char32_t s : symbols_) symbols.push_back(encode_utf8(std::u32string(1, s)));
  return json{{"symbols", symbols}}.dump();
}

Alphabet Alphabet::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("alphabet: ") + e.what());
  }
  if (!doc.contains("symbols") || !doc["symbols"].is_array()) {
    throw ParseError("alphabet: missing 'symbols' array");
  }
  std::vector<char32_t> symbols;
  for (const auto& entry : doc["symbols"]) {
    const std::u32string s = decode_utf8(entry.get<std::string>());
    if (s.size() != 1) throw ParseError("alphabet: each symbol must be one character");
    symbols.push_back(s[0]);
  }
  return Alphabet(std::move(symbols));
}

Alphabet build_alphabet(std::string_view utf8_text, std::size_t max_symbols) {
  const std::u32string text = decode_utf8(utf8_text);
  if (text.empty()) throw InvalidInput("build_alphabet: empty text");
  std::map<char32_t, std::size_t> counts;
  for (char32_t c : text) ++counts[c];
  std::vector<std::pair<char32_t, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<char32_t> symbols;
  for (std::size_t i = 0; i < ranked.size() && i < max_symbols; ++i) {
    symbols.push_back(ranked[i].first);
  }
  return Alphabet(std::move(symbols));
}

Alphabet load_alphabet(const std::filesystem::path& path) {
  return Alphabet::from_json(read_file(path));
}

void save_alphabet(const Alphabet& alphabet, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << alphabet.to_json() << '\n';
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::size_t> to_indices(std::u32string_view text, const Alphabet& alphabet) {
  std::vector<std::size_t> out;
  out.reserve(text.size());
  for (char32_t c : text) out.push_back(alphabet.index(c));
  return out;
}

Sequence onehot_sequence(std::span<const std::size_t> indices, std::size_t dim,
                         bool with_missing_channel) {
  Sequence seq(indices.size(), dim + (with_missing_channel ? 1 : 0));
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= dim) throw InvalidInput("onehot_sequence: index out of range");
    seq.steps(t, indices[t]) = 1.0;
  }
  return seq;
}

Sequence encode_onehot(std::string_view utf8_text, const Alphabet& alphabet,
                       bool with_missing_channel) {
  const auto indices = to_indices(decode_utf8(utf8_text), alphabet);
  return onehot_sequence(indices, alphabet.size(), with_missing_channel);
}

std::string decode_onehot(const Sequence& seq, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    out += alphabet.render(argmax(seq.step(t).first(alphabet.size())));
  }
  return out;
}

Sequence data_channels(const Sequence& seq, std::size_t dim) {
  if (dim > seq.width()) throw InvalidInput("data_channels: dim exceeds width");
  Sequence out(seq.length(), dim);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    std::copy_n(seq.step(t).begin(), dim, out.step(t).begin());
  }
  out.missing = seq.missing;
  return out;
}

Sequence with_width(const Sequence& seq, std::size_t width) {
  if (width == seq.width()) return seq;
  if (width < seq.width()) return data_channels(seq, width);
  Sequence out(seq.length(), width);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    std::copy(seq.step(t).begin(), seq.step(t).end(), out.step(t).begin());
  }
  out.missing = seq.missing;
  return out;
}

void set_missing_token(Sequence& seq, std::size_t t) {
  auto row = seq.step(t);
  std::fill(row.begin(), row.end(), 0.0);
  row.back() = 1.0;
  if (seq.missing.empty()) seq.missing.assign(seq.length(), 0);
  seq.missing[t] = 1;
}

// ---------------------------------------------------------------------------
// Gaps

void GapSpec::validate(std::size_t sequence_length) const {
  if (length < 1) throw InvalidInput("gap length must be at least 1");
  if (end() > sequence_length) {
    throw InvalidInput("gap [" + std::to_string(start) + ", " + std::to_string(end()) +
                       ") exceeds sequence length " + std::to_string(sequence_length));
  }
}

GapSpec parse_gap(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidInput("gap must be written start:len, got '" + std::string(text) + "'");
  }
  GapSpec gap;
  const auto parse = [&](std::string_view part, std::size_t& value) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw InvalidInput("bad gap component '" + std::string(part) + "'");
    }
  };
  parse(text.substr(0, colon), gap.start);
  parse(text.substr(colon + 1), gap.length);
  if (gap.length < 1) throw InvalidInput("gap length must be at least 1");
  return gap;
}

// ---------------------------------------------------------------------------
// Corpus

std::size_t Corpus::track_count() const {
  return family == Family::softmax ? symbol_tracks.size() : binary_tracks.size();
}

std::size_t Corpus::track_length(std::size_t track) const {
  return family == Family::softmax ? symbol_tracks.at(track).size()
                                   : binary_tracks.at(track).length();
}

std::size_t Corpus::total_steps() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < track_count(); ++i) total += track_length(i);
  return total;
}

Sequence Corpus::window(std::size_t track, std::size_t offset, std::size_t length,
                        bool with_missing_channel) const {
  if (offset + length > track_length(track)) {
    throw InvalidInput("window exceeds track " + std::to_string(track));
  }
  Sequence seq(length, dim + (with_missing_channel ? 1 : 0));
  if (family == Family::softmax) {
    const auto& symbols = symbol_tracks[track];
    for (std::size_t t = 0; t < length; ++t) seq.steps(t, symbols[offset + t]) = 1.0;
  } else {
    const auto& roll = binary_tracks[track];
    for (std::size_t t = 0; t < length; ++t) {
      std::copy_n(roll.step(offset + t).begin(), dim, seq.step(t).begin());
    }
  }
  return seq;
}

Corpus Corpus::segmented(std::size_t length) const {
  if (length == 0) throw InvalidInput("segment length must be positive");
  Corpus out;
  out.family = family;
  out.dim = dim;
  for (std::size_t track = 0; track < track_count(); ++track) {
    const std::size_t n = track_length(track) / length;
    for (std::size_t s = 0; s < n; ++s) {
      if (family == Family::softmax) {
        const auto& src = symbol_tracks[track];
        out.symbol_tracks.emplace_back(src.begin() + s * length,
                                       src.begin() + (s + 1) * length);
      } else {
        out.binary_tracks.push_back(window(track, s * length, length));
      }
    }
  }
  return out;
}

Corpus text_corpus(std::string_view utf8_text, const Alphabet& alphabet) {
  Corpus corpus;
  corpus.family = Family::softmax;
  corpus.dim = alphabet.size();
  const auto indices = to_indices(decode_utf8(utf8_text), alphabet);
  corpus.symbol_tracks.emplace_back(indices.begin(), indices.end());
  return corpus;
}

Corpus binary_corpus(std::vector<Sequence> scores) {
  Corpus corpus;
  corpus.family = Family::bernoulli;
  corpus.dim = scores.empty() ? 0 : scores.front().width();
  for (const auto& s : scores) {
    if (s.width() != corpus.dim) throw InvalidInput("binary_corpus: ragged dimensions");
  }
  corpus.binary_tracks = std::move(scores);
  return corpus;
}

Minibatch sample_minibatch(const Corpus& corpus, std::size_t count, std::size_t length,
                           bool with_missing_channel, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.track_count(); ++i) {
    if (corpus.track_length(i) >= length) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw InvalidInput("corpus has no track of at least " + std::to_string(length) + " steps");
  }
  Minibatch batch;
  batch.error_mask.assign(length, 1);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t track = eligible[uniform_index(rng, eligible.size())];
    const std::size_t offset = uniform_index(rng, corpus.track_length(track) - length + 1);
    batch.targets.push_back(corpus.window(track, offset, length, false));
    batch.inputs.push_back(with_missing_channel ? corpus.window(track, offset, length, true)
                                                : batch.targets.back());
  }
  return batch;
}

Minibatch nade_mask_gaps(Minibatch batch, std::size_t gap_len, std::size_t stride, Rng& rng) {
  if (gap_len < 1 || stride < gap_len) {
    throw InvalidInput("nade_mask_gaps: need 1 <= gap_len <= stride");
  }
  const std::size_t length = batch.length();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch.inputs[b].width() != batch.targets[b].width() + 1) {
      throw InvalidInput("nade_mask_gaps: inputs need a missing-token channel");
    }
  }
  batch.error_mask.assign(length, 0);
  const std::size_t windows = length / stride;
  if (windows == 0) {
    batch.warnings.push_back("sequence length " + std::to_string(length) +
                             " is shorter than stride " + std::to_string(stride) +
                             "; no gaps placed");
    return batch;
  }
  std::vector<std::size_t> gap_starts;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t start = w * stride + uniform_index(rng, stride - gap_len + 1);
    gap_starts.push_back(start);
    for (std::size_t t = start; t < start + gap_len; ++t) batch.error_mask[t] = 1;
  }
  for (auto& input : batch.inputs) {
    for (std::size_t start : gap_starts) {
      const std::size_t k = 1 + uniform_index(rng, gap_len);
      const std::size_t run = start + uniform_index(rng, gap_len - k + 1);
      for (std::size_t t = run; t < run + k; ++t) set_missing_token(input, t);
    }
  }
  return batch;
}

BurnIn default_burnin(ModelKind kind) {
  return kind == ModelKind::uni ? BurnIn{0.2, 0.0} : BurnIn{1.0 / 6.0, 1.0 / 6.0};
}

namespace {

std::size_t burn_steps(double fraction, std::size_t length) {
  // The epsilon keeps exact products such as 0.2 * 250 from rounding up.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(length) - 1e-9));
}

}  // namespace

std::vector<std::uint8_t> burnin_mask(std::size_t length, ModelKind kind) {
  return burnin_mask(length, default_burnin(kind));
}

std::vector<std::uint8_t> burnin_mask(std::size_t length, BurnIn burnin) {
  if (burnin.head < 0.0 || burnin.tail < 0.0) throw InvalidInput("negative burn-in fraction");
  const std::size_t head = burn_steps(burnin.head, length);
  const std::size_t tail = burn_steps(burnin.tail, length);
  if (head + tail >= length) {
    throw InvalidInput("burn-in of " + std::to_string(head + tail) +
                       " steps leaves nothing of a length-" + std::to_string(length) +
                       " window");
  }
  std::vector<std::uint8_t> mask(length, 1);
  std::fill_n(mask.begin(), head, 0);
  std::fill_n(mask.end() - static_cast<std::ptrdiff_t>(tail), tail, 0);
  return mask;
}

// ---------------------------------------------------------------------------
// Piano rolls

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

PianoRoll parse_pianoroll(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("piano roll: malformed JSON at line " + std::to_string(line_of(json_text, e.byte)) +
                     ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
    throw ParseError("piano roll: expected an object with a 'scores' array");
  }
  PianoRoll roll;
  if (doc.contains("dim")) {
    if (!doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0) {
      throw ParseError("piano roll: 'dim' must be a positive integer");
    }
    roll.dim = doc["dim"].get<std::size_t>();
  }
  const auto& scores = doc["scores"];
  for (std::size_t s = 0; s < scores.size(); ++s) {
    const auto& score = scores[s];
    const auto where = [&](std::size_t t) {
      return "score " + std::to_string(s) + ", step " + std::to_string(t);
    };
    if (!score.is_array()) throw ParseError("piano roll: score " + std::to_string(s) + " is not a list");
    Sequence seq(score.size(), roll.dim);
    for (std::size_t t = 0; t < score.size(); ++t) {
      const auto& step = score[t];
      if (!step.is_array()) throw ParseError("piano roll: " + where(t) + " is not a list");
      if (step.size() != roll.dim) {
        throw ValidationError("piano roll: " + where(t) + " has " + std::to_string(step.size()) +
                              " entries, expected " + std::to_string(roll.dim));
      }
      for (std::size_t k = 0; k < roll.dim; ++k) {
        const auto& v = step[k];
        if (!v.is_number_integer() || (v.get<long long>() != 0 && v.get<long long>() != 1)) {
          throw ValidationError("piano roll: non-binary entry " + v.dump() + " at " + where(t) +
                                ", key " + std::to_string(k));
        }
        seq.steps(t, k) = static_cast<double>(v.get<long long>());
      }
    }
    roll.scores.push_back(std::move(seq));
  }
  return roll;
}

PianoRoll load_pianoroll(const std::filesystem::path& path) {
  return parse_pianoroll(read_file(path));
}

void save_pianoroll(const PianoRoll& roll, const std::filesystem::path& path) {
  json scores = json::array();
  for (const auto& seq : roll.scores) {
    json score = json::array();
    for (std::size_t t = 0; t < seq.length(); ++t) {
      json step = json::array();
      for (double v : seq.step(t)) step.push_back(v != 0.0 ? 1 : 0);
      score.push_back(std::move(step));
    }
    scores.push_back(std::move(score));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json{{"dim", roll.dim}, {"scores", scores}}.dump() << '\n';
}

}  // namespace gapfill
