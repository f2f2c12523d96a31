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

// Seeded randomness. Every random draw in the library goes through an
// explicitly passed Rng; nothing reads global state.
//
// Seed splitting: a child stream k of master seed s is seeded with
//   splitmix64(s ^ splitmix64(k + 1))
// so sub-seeds depend only on (s, k), never on the order in which streams
// are consumed. Draws use raw engine output rather than std::*_distribution
// so results are identical across standard library implementations.

#ifndef GAPFILL_RNG_HPP_
#define GAPFILL_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gapfill {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform in [lo, hi].
double uniform_real(Rng& rng, double lo, double hi);

// Uniform over {0, ..., n-1}; n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Index drawn with probability proportional to probs[i].
std::size_t sample_categorical(Rng& rng, std::span<const double> probs);

// Fisher-Yates.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace gapfill

#endif  // GAPFILL_RNG_HPP_
