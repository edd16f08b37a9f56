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
#ifndef EMPC_LOGGING_HPP
#define EMPC_LOGGING_HPP

#include <string>

namespace empc {

/// Configure the default stderr logger from EMPC_LOG_LEVEL (trace..off, default info).
void configure_logging();
/// Throws UsageError for unknown names.
void set_log_level(const std::string& level);

} // namespace empc

#endif // EMPC_LOGGING_HPP
