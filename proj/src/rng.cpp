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

#include "qfhelab/rng.hpp"

namespace qfhelab {

namespace {

uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t mix_name(uint64_t seed, std::string_view name, uint64_t index) {
    // FNV-1a over the name, then splitmix to decorrelate nearby seeds.
    uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : name) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    uint64_t s = h;
    return splitmix64(s);
}

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

uint64_t Rng::u64() {
    return eng_();
}

uint64_t Rng::below(uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform and portable.
    uint64_t threshold = (~uint64_t{0} - n + 1) % n;  // 2^64 mod n
    for (;;) {
        uint64_t r = eng_();
        if (r >= threshold || threshold == 0) {
            return r % n;
        }
    }
}

double Rng::uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

int Rng::bit() {
    return static_cast<int>(eng_() & 1u);
}

Rng Rng::stream(std::string_view name, uint64_t index) const {
    return Rng(mix_name(seed_, name, index));
}

}  // namespace qfhelab
