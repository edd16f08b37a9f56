/*
 Copyright 2026 The empc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "empc/logging.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "empc/common.hpp"

namespace empc {

void set_log_level(const std::string& level)
{
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only accept that when asked for.
    if (parsed == spdlog::level::off && level != "off") {
        throw UsageError("unknown log level '" + level + "'");
    }
    spdlog::set_level(parsed);
}

void configure_logging()
{
    auto logger = spdlog::get("empc");
    if (!logger) {
        logger = spdlog::stderr_color_mt("empc");
    }
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("EMPC_LOG_LEVEL")) {
        try {
            set_log_level(env);
        } catch (const UsageError& e) {
            spdlog::warn("{}; keeping level info", e.what());
        }
    }
}

} // namespace empc
