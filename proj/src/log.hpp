#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace ndp {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from the NDP_LOG environment variable (error|warn|info|debug),
// default info.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("NDP_LOG");
    if (!env) return LogLevel::Info;
    if (!std::strcmp(env, "error")) return LogLevel::Error;
    if (!std::strcmp(env, "warn")) return LogLevel::Warn;
    if (!std::strcmp(env, "debug")) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  const char* tag = level == LogLevel::Error  ? "error"
                    : level == LogLevel::Warn ? "warn"
                    : level == LogLevel::Info ? "info"
                                              : "debug";
  std::fprintf(stderr, "[ndp %s] %s\n", tag, msg.c_str());
  std::fflush(stderr);
}

inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }

}  // namespace ndp
