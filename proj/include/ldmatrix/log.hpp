#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace ldmatrix {

enum class LogLevel : int { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Log level is read once from the LDMATRIX_LOG environment variable
// (error|warn|info|debug); default is warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("LDMATRIX_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "warn") == 0) return LogLevel::kWarn;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "ldmatrix[%s] %s\n", names[static_cast<int>(level)],
               msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::kError, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::kWarn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::kDebug, msg); }

}  // namespace ldmatrix
