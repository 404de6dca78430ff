//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mstk {
namespace {
std::atomic<int> g_level { static_cast<int>(LogLevel::kError) };
std::mutex g_mutex;
} // namespace

void set_log_level(LogLevel level) {
  g_level.store(static_cast<int>(level));
}

LogLevel log_level() {
  return static_cast<LogLevel>(g_level.load());
}

void log_message(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > g_level.load())
    return;
  static constexpr const char *kTags[] = { "error", "warning", "info" };
  std::lock_guard lock(g_mutex);
  std::clog << "[mstk " << kTags[static_cast<int>(level)] << "] " << msg
            << '\n';
}

} // namespace mstk
