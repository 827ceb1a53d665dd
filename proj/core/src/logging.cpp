#include "fedsel/logging.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace fedsel {
namespace {

LogLevel parse_level() {
  const char* env = std::getenv("FEDSEL_LOG");
  if (env == nullptr) return LogLevel::Warn;
  std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "warn") return LogLevel::Warn;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() {
  static LogLevel level = parse_level();
  return level;
}

void log(LogLevel level, const std::string& message) {
  if (level > log_level()) return;
  std::lock_guard<std::mutex> lock(log_mutex());
  std::cerr << "[fedsel " << level_tag(level) << "] " << message << '\n';
}

}  // namespace fedsel
