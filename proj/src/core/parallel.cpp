// Copyright 2026 The flexconv Authors
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

#include "flexconv/core/parallel.hpp"

#include <omp.h>

#include <algorithm>

namespace flexconv {

namespace {
int g_threads = 1;
}

void set_num_threads(int threads) {
  g_threads = std::max(1, threads);
  omp_set_num_threads(g_threads);
}

int num_threads() { return g_threads; }

}  // namespace flexconv
