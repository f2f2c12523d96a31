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

// Checkpoint file layout:
//
//   line 1: JSON header, e.g.
//     {"magic":"gapfill-rnn","version":1,"kind":"uni","d_in":33,"d_out":32,
//      "hidden":64,"family":"softmax","output":"shifted",
//      "tensors":[{"name":"W_x","rows":64,"cols":33}, ...]}
//   then:   the tensors in header order, each as rows*cols little-endian
//           IEEE-754 float64 values, row-major, no padding.
//
// Tensor order is UniRnnParams::tensor_names() / BiRnnParams::tensor_names().

#ifndef GAPFILL_CHECKPOINT_HPP_
#define GAPFILL_CHECKPOINT_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "gapfill/models.hpp"

namespace gapfill {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
  ModelKind kind = ModelKind::uni;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t hidden = 0;
  Family family = Family::softmax;
  BiOutput output = BiOutput::shifted;
  int version = kCheckpointVersion;
};

using AnyModel = std::variant<UniRnnParams, BiRnnParams>;

std::string serialize_checkpoint(const UniRnnParams& params);
std::string serialize_checkpoint(const BiRnnParams& params);
AnyModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const UniRnnParams& params, const std::filesystem::path& path);
void save_checkpoint(const BiRnnParams& params, const std::filesystem::path& path);

AnyModel load_checkpoint(const std::filesystem::path& path);
// Throw CheckpointError naming the kind when the file holds the other kind.
UniRnnParams load_uni_checkpoint(const std::filesystem::path& path);
BiRnnParams load_bi_checkpoint(const std::filesystem::path& path);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

}  // namespace gapfill

#endif  // GAPFILL_CHECKPOINT_HPP_
