#include "conseg/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace conseg {

namespace {

LogLevel parse_level(const char* s) {
  if (s == nullptr) return LogLevel::Warn;
  const std::string v(s);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  if (v == "warn") return LogLevel::Warn;
  if (v == "error") return LogLevel::ErrorLevel;
  if (v == "off") return LogLevel::Off;
  return LogLevel::Warn;
}

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    default: return "error";
  }
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_threshold() {
  static const LogLevel level = parse_level(std::getenv("CONSENSUS_SEG_LOG"));
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(log_threshold())) return;
  const std::lock_guard<std::mutex> lock(log_mutex());
  std::fprintf(stderr, "[%s] %s\n", level_tag(level), message.c_str());
}

}  // namespace conseg
