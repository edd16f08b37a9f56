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
#include "empc/common.hpp"

#include <fmt/format.h>

namespace empc {

Vector stack(const Sequence& seq)
{
    if (seq.empty()) {
        return {};
    }
    const Eigen::Index block = seq.front().size();
    Vector z(block * static_cast<Eigen::Index>(seq.size()));
    for (std::size_t k = 0; k < seq.size(); ++k) {
        if (seq[k].size() != block) {
            throw UsageError("stack: ragged sequence");
        }
        z.segment(static_cast<Eigen::Index>(k) * block, block) = seq[k];
    }
    return z;
}

Sequence unstack(const Vector& z, int blocks)
{
    if (blocks <= 0 || z.size() % blocks != 0) {
        throw UsageError(fmt::format("unstack: cannot split {} entries into {} blocks", z.size(), blocks));
    }
    const Eigen::Index block = z.size() / blocks;
    Sequence seq(static_cast<std::size_t>(blocks));
    for (int k = 0; k < blocks; ++k) {
        seq[static_cast<std::size_t>(k)] = z.segment(k * block, block);
    }
    return seq;
}

void require_dim(const Vector& v, int expected, const char* what)
{
    if (v.size() != expected) {
        throw UsageError(fmt::format("{}: expected dimension {}, got {}", what, expected, v.size()));
    }
}

} // namespace empc
