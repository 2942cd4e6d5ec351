/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace msngo::log {

using Sink = std::function<void(std::string_view)>;

namespace detail {

struct State {
  std::mutex mutex;
  Sink sink;
  bool info_enabled = false;
};

inline State& state() {
  static State s;
  return s;
}

}  // namespace detail

// Replaces the warning sink; an empty sink restores stderr output.
inline void set_warning_sink(Sink sink) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  s.sink = std::move(sink);
}

inline void warn(std::string_view message) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  if (s.sink) {
    s.sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

inline void set_info_enabled(bool enabled) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  s.info_enabled = enabled;
}

inline void info(std::string_view message) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  if (s.info_enabled) std::cerr << message << '\n';
}

// Collects warnings for the lifetime of the object; the previous sink is
// restored on destruction.
class WarningCapture {
 public:
  WarningCapture() {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    previous_ = std::move(s.sink);
    s.sink = [this](std::string_view m) { messages_.emplace_back(m); };
  }
  ~WarningCapture() {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    s.sink = std::move(previous_);
  }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(std::string_view needle) const {
    for (const auto& m : messages_) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  }

 private:
  Sink previous_;
  std::vector<std::string> messages_;
};

}  // namespace msngo::log
