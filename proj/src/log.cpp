#include "log.hpp"

#include <cstdlib>
#include <memory>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>

namespace rowe::detail {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("ROWE_LOG");
  const std::string_view v = env ? env : "";
  if (v == "error") return spdlog::level::err;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

}  // namespace

spdlog::logger& log() {
  static const auto logger = [] {
    auto l = std::make_shared<spdlog::logger>("rowe", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_level(level_from_env());
    l->set_pattern("[%H:%M:%S.%e] [rowe] [%l] %v");
    return l;
  }();
  return *logger;
}

}  // namespace rowe::detail
