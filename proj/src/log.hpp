#pragma once

// Thin wrapper over spdlog; verbosity comes from IOVSIM_LOG_LEVEL (trace|debug|info|warn|error|off,
// default warn). Logs go to stderr so they never mix with exported data.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>

namespace iovsim::log {

inline spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_logger_st("iovsim");
    const char* env = std::getenv("IOVSIM_LOG_LEVEL");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *instance;
}

template <typename... Args>
void debug(fmt::format_string<Args...> pattern, Args&&... args) {
  logger().debug(pattern, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> pattern, Args&&... args) {
  logger().info(pattern, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> pattern, Args&&... args) {
  logger().warn(pattern, std::forward<Args>(args)...);
}

}  // namespace iovsim::log
