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

#include "flexconv/core/log.hpp"

#include <iostream>
#include <mutex>

namespace flexconv {

namespace {
std::mutex g_sink_mutex;
LogSink g_sink = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
}  // namespace

LogSink set_warning_sink(LogSink sink) {
  std::lock_guard lock(g_sink_mutex);
  std::swap(sink, g_sink);
  return sink;
}

void log_warning(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) g_sink(message);
}

}  // namespace flexconv
