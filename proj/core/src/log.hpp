#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace brain::detail {

/// Library logger; writes to stderr so stdout stays machine-readable.
spdlog::logger& log();

}  // namespace brain::detail
