// Copyright 2026 The zoneppi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZONEPPI_PARALLEL_H_
#define ZONEPPI_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace zoneppi {

// Runs body(i) for i in [0, count) on up to `threads` workers. Callers write
// results into index-addressed storage so output never depends on scheduling.
// If any task throws, the exception from the lowest failing index is
// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

// 0 means "use the hardware concurrency".
unsigned resolve_threads(unsigned requested);

}  // namespace zoneppi

#endif  // ZONEPPI_PARALLEL_H_
