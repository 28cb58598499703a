#include "facto/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace facto {

namespace {

LogLevel level_from_env() {
  const char* value = std::getenv("FACTO_LOG");
  if (value == nullptr) return LogLevel::Info;
  const std::string v(value);
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "trace") return LogLevel::Trace;
  return LogLevel::Info;
}

std::atomic<int>& current_level() {
  static std::atomic<int> level{static_cast<int>(level_from_env())};
  return level;
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(current_level().load()); }

void set_log_level(LogLevel level) { current_level().store(static_cast<int>(level)); }

void log_line(LogLevel level, std::string_view message) {
  if (level == LogLevel::Quiet || static_cast<int>(level) > current_level().load()) return;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  std::cerr << message << '\n';
}

}  // namespace facto
