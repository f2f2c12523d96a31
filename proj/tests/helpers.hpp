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


// Small fixtures shared by the unit tests.

#ifndef GAPFILL_TESTS_HELPERS_HPP_
#define GAPFILL_TESTS_HELPERS_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gapfill/corpus.hpp"
#include "gapfill/rng.hpp"

namespace testing {

inline gapfill::Sequence random_onehot(std::size_t d, std::size_t length, std::uint64_t seed,
                                       bool with_missing_channel = false) {
  std::mt19937_64 gen(seed);
  std::vector<std::size_t> idx(length);
  for (auto& i : idx) i = gen() % d;
  return gapfill::onehot_sequence(idx, d, with_missing_channel);
}

inline gapfill::Sequence random_binary(std::size_t d, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  gapfill::Sequence s(length, d);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t k = 0; k < d; ++k) s.steps(t, k) = static_cast<double>(gen() % 2);
  }
  return s;
}

inline gapfill::Sequence random_data(gapfill::Family family, std::size_t d, std::size_t length,
                                     std::uint64_t seed) {
  return family == gapfill::Family::softmax ? random_onehot(d, length, seed)
                                            : random_binary(d, length, seed);
}

// A fresh, empty directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(GAPFILL_TEST_TMP_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Text cycling through `d` symbols: "abc...abc...".
inline std::string cycle_text(std::size_t d, std::size_t length) {
  std::string s;
  for (std::size_t i = 0; i < length; ++i) s.push_back(static_cast<char>('a' + i % d));
  return s;
}

}  // namespace testing

#endif  // GAPFILL_TESTS_HELPERS_HPP_
