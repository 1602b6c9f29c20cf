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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qfhelab/barrington.hpp"

using namespace qfhelab;
using namespace qfhelab::bp;
using he::BoolCircuit;
using he::CircuitBuilder;
using he::VarClass;

namespace {

// Exhaustive agreement between a circuit and its compiled program.
void check_equivalent(const BoolCircuit& circuit, const PermBP& program) {
    size_t n_ct = 0, n_sk = 0;
    for (const auto& in : circuit.inputs) {
        (in.cls == VarClass::Ct ? n_ct : n_sk) += 1;
    }
    size_t n = circuit.inputs.size();
    REQUIRE(n <= 10);
    for (uint32_t assign = 0; assign < (1u << n); ++assign) {
        std::vector<uint8_t> all(n);
        std::vector<uint8_t> ct_bits, sk_bits;
        for (size_t i = 0; i < n; ++i) {
            all[i] = (assign >> i) & 1;
            (circuit.inputs[i].cls == VarClass::Ct ? ct_bits : sk_bits).push_back(all[i]);
        }
        int want = circuit.eval(all);
        BpEvalResult got = bp_eval(program, ct_bits, sk_bits);
        CHECK(got.out == want);
        if (want == 0) {
            CHECK(got.tau.is_identity());
        }
    }
}

BoolCircuit or_circuit() {
    CircuitBuilder b;
    int sk = b.input("sk", VarClass::Sk);
    int x = b.input("x", VarClass::Ct);
    return b.finish(b.or_(sk, x));
}

BoolCircuit random_circuit(int n_vars, int depth, Rng& rng) {
    CircuitBuilder b;
    std::vector<int> vals;
    for (int i = 0; i < n_vars; ++i) {
        vals.push_back(b.input("v" + std::to_string(i),
                               rng.bit() ? VarClass::Sk : VarClass::Ct));
    }
    // Build layer by layer so the depth is bounded by the request.
    std::vector<int> frontier = vals;
    for (int level = 0; level < depth; ++level) {
        std::vector<int> next;
        for (size_t i = 0; i + 1 < frontier.size(); i += 2) {
            switch (rng.below(3)) {
                case 0:
                    next.push_back(b.xor_(frontier[i], frontier[i + 1]));
                    break;
                case 1:
                    next.push_back(b.and_(frontier[i], frontier[i + 1]));
                    break;
                default:
                    next.push_back(b.not_(frontier[i]));
                    break;
            }
        }
        if (frontier.size() % 2 == 1) {
            next.push_back(frontier.back());
        }
        if (next.empty()) {
            break;
        }
        frontier = next;
    }
    return b.finish(frontier[0]);
}

}  // namespace

TEST_CASE("perm composition and inversion basics") {
    PermS5 c = PermS5::from_cycle(std::array{1, 2, 3, 4, 5});
    CHECK(c.apply(0) == 1);
    CHECK(c.then(c.inverse()).is_identity());
    CHECK(c.is_five_cycle());
    CHECK_FALSE(PermS5::identity().is_five_cycle());
    CHECK(c.to_cycle_string() == "(12345)");
}

TEST_CASE("the paper's OR example evaluates correctly") {
    PermBP bp = or_example_bp();
    SUBCASE("on (0,0) tau is exactly the identity") {
        auto r = bp_eval(bp, std::vector<uint8_t>{0}, std::vector<uint8_t>{0});
        CHECK(r.tau.is_identity());
        CHECK(r.out == 0);
    }
    SUBCASE("all true cases send 1 to 4") {
        for (auto [ct, sk] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}}) {
            auto r = bp_eval(bp, std::vector<uint8_t>{static_cast<uint8_t>(ct)},
                             std::vector<uint8_t>{static_cast<uint8_t>(sk)});
            CHECK(r.tau.apply(0) == 3);  // 1 -> 4, zero-based
            CHECK(r.out == 1);
        }
    }
    SUBCASE("empty program gives identity") {
        PermBP empty;
        auto r = bp_eval(empty, std::vector<uint8_t>{}, std::vector<uint8_t>{});
        CHECK(r.tau.is_identity());
        CHECK(r.out == 0);
    }
    SUBCASE("unbound variable throws") {
        CHECK_THROWS_AS(bp_eval(bp, std::vector<uint8_t>{}, std::vector<uint8_t>{0}),
                        UnboundVariable);
    }
}

TEST_CASE("bp_compile") {
    SUBCASE("single-variable passthrough is one instruction with a 5-cycle on 1") {
        CircuitBuilder b;
        int v = b.input("v", VarClass::Ct);
        PermBP bp = bp_compile(b.finish(v));
        REQUIRE(bp.length() == 1);
        CHECK(bp.instrs[0].on0.is_identity());
        CHECK(bp.instrs[0].on1.is_five_cycle());
    }
    SUBCASE("compiled OR is correct and matches the 4-instruction core length") {
        BoolCircuit c = or_circuit();
        PermBP bp = bp_compile(c);
        CHECK(bp.length() == 4);
        check_equivalent(c, bp);
    }
    SUBCASE("random depth-4 circuits: exhaustive equivalence and length bound") {
        Rng rng(2024);
        for (int trial = 0; trial < 50; ++trial) {
            Rng trng = rng.stream("trial", static_cast<uint64_t>(trial));
            BoolCircuit c = random_circuit(5, 4, trng);
            PermBP bp = bp_compile(c);
            check_equivalent(c, bp);
            int depth = lowered_depth(c);
            double bound = std::pow(4.0, depth);
            CHECK(static_cast<double>(bp.length()) <= bound);
        }
    }
}

TEST_CASE("bp_alternate") {
    SUBCASE("already-alternating program is unchanged") {
        PermBP bp = or_example_bp();
        PermBP alt = bp_alternate(bp);
        REQUIRE(alt.length() == 4);
        for (size_t i = 0; i < 4; ++i) {
            CHECK(alt.instrs[i].var == bp.instrs[i].var);
            CHECK(alt.instrs[i].on1 == bp.instrs[i].on1);
        }
        CHECK(is_alternating(alt));
    }
    SUBCASE("consecutive same-class instructions get one dummy between them") {
        PermBP bp;
        PermS5 c = PermS5::from_cycle(std::array{1, 2, 3, 4, 5});
        bp.instrs.push_back({{VarClass::Ct, 0}, c, PermS5::identity()});
        bp.instrs.push_back({{VarClass::Ct, 1}, c, PermS5::identity()});
        PermBP alt = bp_alternate(bp);
        REQUIRE(alt.length() == 4);
        CHECK(alt.instrs[1].var.is_dummy());
        CHECK(alt.instrs[1].var.cls == VarClass::Sk);
        CHECK(alt.instrs[1].on0.is_identity());
        CHECK(alt.instrs[3].var.is_dummy());
        CHECK(is_alternating(alt));
    }
    SUBCASE("normalized OR example computes the same function") {
        PermBP bp = or_example_bp();
        // Force padding by starting with the sk instruction.
        std::reverse(bp.instrs.begin(), bp.instrs.end());
        PermBP alt = bp_alternate(bp);
        CHECK(is_alternating(alt));
        for (int ct = 0; ct < 2; ++ct) {
            for (int sk = 0; sk < 2; ++sk) {
                std::vector<uint8_t> cb{static_cast<uint8_t>(ct)};
                std::vector<uint8_t> sb{static_cast<uint8_t>(sk)};
                CHECK(bp_eval(alt, cb, sb).out == bp_eval(bp, cb, sb).out);
            }
        }
    }
}

TEST_CASE("bp_invert") {
    PermBP bp = or_example_bp();
    PermBP inv = bp_invert(bp);
    SUBCASE("program followed by its inverse is the identity on every input") {
        PermBP both = bp;
        both.instrs.insert(both.instrs.end(), inv.instrs.begin(), inv.instrs.end());
        for (int ct = 0; ct < 2; ++ct) {
            for (int sk = 0; sk < 2; ++sk) {
                std::vector<uint8_t> cb{static_cast<uint8_t>(ct)};
                std::vector<uint8_t> sb{static_cast<uint8_t>(sk)};
                CHECK(bp_eval(both, cb, sb).tau.is_identity());
            }
        }
    }
    SUBCASE("inverse of the OR example on (1,0) maps 4 back to 1") {
        std::vector<uint8_t> cb{1};
        std::vector<uint8_t> sb{0};
        auto r = bp_eval(inv, cb, sb);
        CHECK(r.tau.apply(3) == 0);
    }
    SUBCASE("invert is an involution") {
        PermBP back = bp_invert(inv);
        REQUIRE(back.length() == bp.length());
        for (size_t i = 0; i < bp.length(); ++i) {
            CHECK(back.instrs[i].on1 == bp.instrs[i].on1);
            CHECK(back.instrs[i].on0 == bp.instrs[i].on0);
            CHECK(back.instrs[i].var == bp.instrs[i].var);
        }
    }
}

TEST_CASE("bp json round trip carries the on1-first convention") {
    PermBP bp = or_example_bp();
    nlohmann::json j = bp.to_json();
    CHECK(j["convention"] == "on1-first");
    PermBP back = PermBP::from_json(j);
    REQUIRE(back.length() == bp.length());
    for (size_t i = 0; i < bp.length(); ++i) {
        CHECK(back.instrs[i].on1 == bp.instrs[i].on1);
        CHECK(back.instrs[i].on0 == bp.instrs[i].on0);
    }
}

TEST_CASE("compiled instructions have fixed-point-free on1/on0 ratios") {
    // Needed by the gadget layout: the two candidate partners of a register
    // must differ on every row for genuine instructions.
    Rng rng(4);
    BoolCircuit c = random_circuit(4, 3, rng);
    PermBP bp = bp_compile(c);
    for (const auto& ins : bp.instrs) {
        for (int row = 0; row < 5; ++row) {
            CHECK(ins.on1.apply(row) != ins.on0.apply(row));
        }
    }
}
