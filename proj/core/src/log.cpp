#include "log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

namespace brain::detail {

spdlog::logger& log() {
    static const std::shared_ptr<spdlog::logger> logger = [] {
        auto existing = spdlog::get("brain");
        if (existing) return existing;
        auto created = spdlog::stderr_logger_mt("brain");
        created->set_pattern("[%l] %v");
        return created;
    }();
    return *logger;
}

}  // namespace brain::detail
