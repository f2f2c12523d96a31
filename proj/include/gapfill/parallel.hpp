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

#ifndef GAPFILL_PARALLEL_HPP_
#define GAPFILL_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef GAPFILL_HAVE_OPENMP
#include <omp.h>
#endif

namespace gapfill {

// Selects between the OpenMP kernels and the serial reference loops. Both
// paths write results into per-index slots and reduce them in index order,
// so they produce bit-identical output.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef GAPFILL_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Calls body(i) for i in [0, n). Exceptions thrown by body are rethrown on
// the calling thread (the first one captured wins).
template <class Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gapfill

#endif  // GAPFILL_PARALLEL_HPP_
