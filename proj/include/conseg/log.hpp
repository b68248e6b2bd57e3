#pragma once

#include <sstream>
#include <string>

namespace conseg {

enum class LogLevel : int { Debug = 0, Info = 1, Warn = 2, ErrorLevel = 3, Off = 4 };

// Threshold from the CONSENSUS_SEG_LOG environment variable
// (debug|info|warn|error|off); defaults to warn when unset or unknown.
LogLevel log_threshold();

void log_message(LogLevel level, const std::string& message);

namespace detail {

template <typename... Args>
std::string log_concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace detail

template <typename... Args>
void log_debug(const Args&... args) {
  log_message(LogLevel::Debug, detail::log_concat(args...));
}
template <typename... Args>
void log_info(const Args&... args) {
  log_message(LogLevel::Info, detail::log_concat(args...));
}
template <typename... Args>
void log_warn(const Args&... args) {
  log_message(LogLevel::Warn, detail::log_concat(args...));
}
template <typename... Args>
void log_error(const Args&... args) {
  log_message(LogLevel::ErrorLevel, detail::log_concat(args...));
}

}  // namespace conseg
