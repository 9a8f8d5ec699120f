#pragma once

#include <spdlog/logger.h>

namespace rowe::detail {

/// Library logger writing to stderr. Level comes from ROWE_LOG
/// (error | warn | info | debug); default warn.
spdlog::logger& log();

}  // namespace rowe::detail
