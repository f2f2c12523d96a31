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

// Command-line front end: prepare, train, fill, eval, gridsearch.
//
// Option values come from the command line, then from a JSON file given by
// --config (an object of option names, or a manifest whose "config" member
// is such an object), then from defaults. Every command writes
// manifest.json into its --out directory with the effective configuration,
// so `--config <out>/manifest.json` repeats the run.

#ifndef GAPFILL_CLI_HPP_
#define GAPFILL_CLI_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gapfill::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a, used for the manifest's input hashes.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace gapfill::cli

#endif  // GAPFILL_CLI_HPP_
