//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_LOG_HPP_
#define MSTK_LOG_HPP_

#include <string_view>

namespace mstk {

enum class LogLevel {
  kError = 0,
  kWarning = 1,
  kInfo = 2,
};

/// Messages above this level are dropped. Defaults to kError.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_message(LogLevel level, std::string_view msg);

inline void log_warning(std::string_view msg) {
  log_message(LogLevel::kWarning, msg);
}
inline void log_info(std::string_view msg) {
  log_message(LogLevel::kInfo, msg);
}

} // namespace mstk

#endif // MSTK_LOG_HPP_
