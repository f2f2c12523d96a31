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

#include "gapfill/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace gapfill {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "gapfill-rnn";

struct TensorShape {
  std::size_t rows;
  std::size_t cols;
};

std::vector<TensorShape> uni_shapes(std::size_t d_in, std::size_t d_out, std::size_t c) {
  return {{c, d_in}, {c, c}, {1, c}, {d_out, c}, {1, d_out}};
}

std::vector<TensorShape> bi_shapes(std::size_t d_in, std::size_t d_out, std::size_t c) {
  return {{c, d_in}, {c, c}, {1, c}, {c, d_in}, {c, c}, {1, c}, {d_out, c}, {d_out, c}, {1, d_out}};
}

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double read_le(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

std::string serialize(const json& header_base, const std::vector<std::string>& names,
                      const std::vector<std::span<const double>>& tensors,
                      const std::vector<TensorShape>& shapes) {
  json header = header_base;
  json entries = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    entries.push_back({{"name", names[i]}, {"rows", shapes[i].rows}, {"cols", shapes[i].cols}});
  }
  header["tensors"] = entries;
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& t : tensors) {
    for (double v : t) append_le(out, v);
  }
  return out;
}

template <class T>
T field(const json& header, const char* name) {
  if (!header.contains(name)) throw CheckpointError(std::string("checkpoint header lacks field '") + name + "'");
  try {
    return header.at(name).get<T>();
  } catch (const json::exception&) {
    throw CheckpointError(std::string("checkpoint header field '") + name + "' has the wrong type");
  }
}

struct Parsed {
  CheckpointInfo info;
  json header;
  std::size_t payload_offset = 0;
};

Parsed parse_header(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw CheckpointError("checkpoint truncated: no header line");
  Parsed parsed;
  try {
    parsed.header = json::parse(bytes.substr(0, newline));
  } catch (const json::parse_error&) {
    throw CheckpointError("checkpoint header is not JSON (bad magic)");
  }
  const json& h = parsed.header;
  if (!h.is_object() || !h.contains("magic") || h["magic"] != kMagic) {
    throw CheckpointError("checkpoint field 'magic' is not '" + std::string(kMagic) + "'");
  }
  parsed.info.version = field<int>(h, "version");
  if (parsed.info.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint field 'version' is " + std::to_string(parsed.info.version) +
                          ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto kind = field<std::string>(h, "kind");
  if (kind == "uni") {
    parsed.info.kind = ModelKind::uni;
  } else if (kind == "bi") {
    parsed.info.kind = ModelKind::bi;
  } else {
    throw CheckpointError("checkpoint field 'kind' has unknown value '" + kind + "'");
  }
  parsed.info.input_dim = field<std::size_t>(h, "d_in");
  parsed.info.output_dim = field<std::size_t>(h, "d_out");
  parsed.info.hidden = field<std::size_t>(h, "hidden");
  try {
    parsed.info.family = family_from_string(field<std::string>(h, "family"));
  } catch (const InvalidInput&) {
    throw CheckpointError("checkpoint field 'family' has an unknown value");
  }
  const auto output = field<std::string>(h, "output");
  if (output != "shifted" && output != "aligned") {
    throw CheckpointError("checkpoint field 'output' has unknown value '" + output + "'");
  }
  parsed.info.output = output == "shifted" ? BiOutput::shifted : BiOutput::aligned;
  parsed.payload_offset = newline + 1;
  return parsed;
}

void read_tensors(const std::string& bytes, const Parsed& parsed,
                  const std::vector<std::string>& names,
                  const std::vector<TensorShape>& shapes,
                  std::vector<std::span<double>> tensors) {
  const json& entries = parsed.header.contains("tensors") ? parsed.header["tensors"] : json();
  if (!entries.is_array() || entries.size() != names.size()) {
    throw CheckpointError("checkpoint field 'tensors' does not list " +
                          std::to_string(names.size()) + " tensors");
  }
  std::size_t offset = parsed.payload_offset;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const json& e = entries[i];
    if (field<std::string>(e, "name") != names[i] || field<std::size_t>(e, "rows") != shapes[i].rows ||
        field<std::size_t>(e, "cols") != shapes[i].cols) {
      throw CheckpointError("checkpoint tensor '" + names[i] + "' has an unexpected name or shape");
    }
    const std::size_t n = tensors[i].size();
    if (offset + 8 * n > bytes.size()) {
      throw CheckpointError("checkpoint truncated in tensor '" + names[i] + "'");
    }
    for (std::size_t k = 0; k < n; ++k) tensors[i][k] = read_le(bytes.data() + offset + 8 * k);
    offset += 8 * n;
  }
  if (offset != bytes.size()) throw CheckpointError("checkpoint has trailing bytes after 'b_y'");
}

json base_header(const char* kind, std::size_t d_in, std::size_t d_out, std::size_t c,
                 Family family, BiOutput output) {
  return json{{"magic", kMagic},
              {"version", kCheckpointVersion},
              {"kind", kind},
              {"d_in", d_in},
              {"d_out", d_out},
              {"hidden", c},
              {"family", to_string(family)},
              {"output", output == BiOutput::shifted ? "shifted" : "aligned"}};
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string serialize_checkpoint(const UniRnnParams& params) {
  validate(params);
  const auto d_in = params.input_dim(), d_out = params.output_dim(), c = params.hidden_size();
  return serialize(base_header("uni", d_in, d_out, c, params.family, BiOutput::shifted),
                   UniRnnParams::tensor_names(), params.tensors(), uni_shapes(d_in, d_out, c));
}

std::string serialize_checkpoint(const BiRnnParams& params) {
  validate(params);
  const auto d_in = params.input_dim(), d_out = params.output_dim(), c = params.hidden_size();
  return serialize(base_header("bi", d_in, d_out, c, params.family, params.output),
                   BiRnnParams::tensor_names(), params.tensors(), bi_shapes(d_in, d_out, c));
}

AnyModel deserialize_checkpoint(const std::string& bytes) {
  const Parsed parsed = parse_header(bytes);
  const auto& info = parsed.info;
  try {
    if (info.kind == ModelKind::uni) {
      UniRnnParams p = zero_uni(info.input_dim, info.output_dim, info.hidden, info.family);
      read_tensors(bytes, parsed, UniRnnParams::tensor_names(),
                   uni_shapes(info.input_dim, info.output_dim, info.hidden), p.tensors());
      return p;
    }
    BiRnnParams p = zero_bi(info.input_dim, info.output_dim, info.hidden, info.family);
    p.output = info.output;
    read_tensors(bytes, parsed, BiRnnParams::tensor_names(),
                 bi_shapes(info.input_dim, info.output_dim, info.hidden), p.tensors());
    return p;
  } catch (const InvalidInput& e) {
    throw CheckpointError(std::string("checkpoint dimensions invalid: ") + e.what());
  }
}

void save_checkpoint(const UniRnnParams& params, const std::filesystem::path& path) {
  write_bytes(serialize_checkpoint(params), path);
}

void save_checkpoint(const BiRnnParams& params, const std::filesystem::path& path) {
  write_bytes(serialize_checkpoint(params), path);
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(bytes);
}

UniRnnParams load_uni_checkpoint(const std::filesystem::path& path) {
  AnyModel model = load_checkpoint(path);
  if (auto* p = std::get_if<UniRnnParams>(&model)) return std::move(*p);
  throw CheckpointError("checkpoint " + path.string() +
                        " field 'kind' is 'bi', expected 'uni'");
}

BiRnnParams load_bi_checkpoint(const std::filesystem::path& path) {
  AnyModel model = load_checkpoint(path);
  if (auto* p = std::get_if<BiRnnParams>(&model)) return std::move(*p);
  throw CheckpointError("checkpoint " + path.string() +
                        " field 'kind' is 'uni', expected 'bi'");
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  return parse_header(line + "\n").info;
}

}  // namespace gapfill
