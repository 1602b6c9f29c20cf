// Copyright 2026 The qfhe-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFHELAB_RNG_HPP
#define QFHELAB_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace qfhelab {

/// Deterministic random source. Every sampling operation in the library takes
/// one of these explicitly; there is no ambient randomness. Sub-streams are
/// derived by name so that independent campaigns draw from independent,
/// reproducible sequences regardless of scheduling.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    uint64_t u64();
    /// Uniform in [0, n). n must be > 0. Rejection sampled, not modulo biased.
    uint64_t below(uint64_t n);
    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01();
    int bit();

    /// Derive an independent stream keyed by (this stream's seed, name, index).
    Rng stream(std::string_view name, uint64_t index = 0) const;

    uint64_t seed() const {
        return seed_;
    }

  private:
    uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace qfhelab

#endif
