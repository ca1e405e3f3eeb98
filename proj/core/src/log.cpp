#include "l2c/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace l2c::log {
namespace {

Level parse_env() {
  const char* env = std::getenv("L2C_LOG");
  if (!env) return Level::kWarn;
  const std::string_view v(env);
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(parse_env())};
  return lvl;
}

std::shared_ptr<spdlog::logger> logger() {
  static auto lg = [] {
    auto l = spdlog::stderr_color_mt("l2c");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    l->set_level(spdlog::level::trace);
    return l;
  }();
  return lg;
}

bool enabled(Level l) { return static_cast<int>(l) <= current().load(); }

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void error(const std::string& msg) {
  if (enabled(Level::kError)) logger()->error(msg);
}
void warn(const std::string& msg) {
  if (enabled(Level::kWarn)) logger()->warn(msg);
}
void info(const std::string& msg) {
  if (enabled(Level::kInfo)) logger()->info(msg);
}
void debug(const std::string& msg) {
  if (enabled(Level::kDebug)) logger()->debug(msg);
}

}  // namespace l2c::log
