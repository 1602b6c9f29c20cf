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

#ifndef QFHELAB_BARRINGTON_HPP
#define QFHELAB_BARRINGTON_HPP

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfhelab/he.hpp"

#include <json.hpp>

namespace qfhelab::bp {

struct UnboundVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedGate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Permutation of {1..5}, stored 0-based: img[i] is the image of point i.
struct PermS5 {
    std::array<uint8_t, 5> img{0, 1, 2, 3, 4};

    static PermS5 identity() {
        return {};
    }
    /// From cycle notation, e.g. from_cycle({1,2,3,4,5}) is (12345).
    static PermS5 from_cycle(std::span<const int> points);

    int apply(int i) const {
        return img[static_cast<size_t>(i)];
    }
    /// Apply this first, then g: (this.then(g))(x) = g(this(x)).
    PermS5 then(const PermS5& g) const;
    PermS5 inverse() const;
    bool is_identity() const {
        return *this == identity();
    }
    bool is_five_cycle() const;
    /// g^-1 . this . g in then-composition order, i.e. relabel points by g.
    PermS5 conjugate_by(const PermS5& g) const;

    bool operator==(const PermS5&) const = default;

    std::string to_cycle_string() const;
    std::array<int, 5> image_list() const;  // 1-based images, for JSON
    static PermS5 from_image_list(std::span<const int> images);
};

using he::VarClass;

/// Variable reference; index < 0 designates the always-0 dummy variable of
/// that class (used by alternation padding).
struct BpVar {
    VarClass cls = VarClass::Ct;
    int index = 0;

    bool is_dummy() const {
        return index < 0;
    }
    bool operator==(const BpVar&) const = default;
};

struct BpInstruction {
    BpVar var;
    PermS5 on1;
    PermS5 on0;
};

/// Width-5 permutation branching program. Output convention: 1 iff tau(1) != 1;
/// compiled programs additionally guarantee tau = e exactly on output 0.
struct PermBP {
    std::vector<BpInstruction> instrs;

    size_t length() const {
        return instrs.size();
    }
    nlohmann::json to_json() const;
    static PermBP from_json(const nlohmann::json& j);
};

struct BpEvalResult {
    PermS5 tau;
    int out = 0;
};

BpEvalResult bp_eval(const PermBP& bp, std::span<const uint8_t> ct_bits,
                     std::span<const uint8_t> sk_bits);

/// Barrington compilation of a fan-in-2 {XOR, AND, NOT} circuit. XOR is
/// lowered to AND/NOT form first; accepting cycle fixed at (12345); all
/// conjugator choices deterministic. length <= 4^depth(lowered circuit).
PermBP bp_compile(const he::BoolCircuit& circuit);

/// Depth of the AND/NOT lowering of the circuit, the exponent in the
/// compiled-length bound.
int lowered_depth(const he::BoolCircuit& circuit);

/// Pad with identity instructions on dummy variables so classes strictly
/// alternate Ct, Sk, Ct, Sk, ... and the length is even.
PermBP bp_alternate(const PermBP& bp);

bool is_alternating(const PermBP& bp);

/// Reverse instruction order, inverting both permutations per instruction.
PermBP bp_invert(const PermBP& bp);

/// The paper's 4-instruction OR example, stored in (on1, on0) order.
PermBP or_example_bp();

}  // namespace qfhelab::bp

#endif
