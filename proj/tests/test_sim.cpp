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

#include <cmath>
#include <numbers>

#include "qfhelab/dtf.hpp"
#include "qfhelab/sim.hpp"

using namespace qfhelab;
using namespace qfhelab::sim;

namespace {

SparseState state_over(std::vector<WireId> wires,
                       std::vector<std::pair<std::string, Amp>> amps) {
    SparseState s;
    s.wires = std::move(wires);
    for (auto& [l, a] : amps) {
        s.amps[l] = a;
    }
    return s;
}

}  // namespace

TEST_CASE("gate set passes the unitarity self-test") {
    CHECK(self_test());
}

TEST_CASE("alloc_plus prepares |+> blobs") {
    StateBag bag;
    auto ws = bag.alloc_plus(1);
    const SparseState& blob = bag.blob_of(ws[0]);
    REQUIRE(blob.amps.size() == 2);
    CHECK(std::abs(blob.amps.at("0") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
    CHECK(std::abs(blob.amps.at("1") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);

    CHECK(bag.alloc_plus(0).empty());

    auto three = bag.alloc_plus(3);
    CHECK(bag.blob_count() == 4);
    // Merged, the joint state is uniform over 8 labels.
    SparseState joint = bag.joint_state(three);
    REQUIRE(joint.amps.size() == 8);
    for (const auto& [l, a] : joint.amps) {
        CHECK(std::abs(a - Amp{std::pow(0.5, 1.5), 0}) < 1e-12);
    }
}

TEST_CASE("prepare_superposition basics") {
    StateBag bag;
    SUBCASE("uniform over 2 bits") {
        WireId w = bag.prepare_superposition(
            {{"00", 0.25}, {"10", 0.25}, {"01", 0.25}, {"11", 0.25}});
        const SparseState& blob = bag.blob_of(w);
        REQUIRE(blob.amps.size() == 4);
        for (const auto& [l, a] : blob.amps) {
            CHECK(std::abs(a - Amp{0.5, 0}) < 1e-12);
        }
    }
    SUBCASE("point mass on x=5, t=3 lands on label 101") {
        WireId w = bag.prepare_superposition({{label_of(5, 3), 1.0}});
        const SparseState& blob = bag.blob_of(w);
        REQUIRE(blob.amps.size() == 1);
        CHECK(blob.amps.count("101") == 1);
    }
    SUBCASE("square roots recover the distribution") {
        WireId w = bag.prepare_superposition({{"00", 0.5}, {"01", 0.25}, {"10", 0.25}});
        const SparseState& blob = bag.blob_of(w);
        CHECK(std::abs(blob.amps.at("00") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
        CHECK(std::abs(blob.amps.at("01") - Amp{0.5, 0}) < 1e-12);
        CHECK(std::abs(blob.amps.at("10") - Amp{0.5, 0}) < 1e-12);
    }
    SUBCASE("non-normalized distribution is rejected") {
        CHECK_THROWS_AS(bag.prepare_superposition({{"0", 0.5}, {"1", 0.6}}), NonNormalized);
    }
}

TEST_CASE("standard gates act as expected") {
    StateBag bag;
    SUBCASE("H on |0> gives |+>") {
        WireId w = bag.alloc_wire(1, 0);
        bag.apply_gate(Gate::H, w);
        const SparseState& blob = bag.blob_of(w);
        CHECK(std::abs(blob.amps.at("0") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
        CHECK(std::abs(blob.amps.at("1") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
    }
    SUBCASE("T then Tdg is the identity on a generic state") {
        Rng rng(7);
        WireId w = bag.alloc_plus(1)[0];
        bag.apply_gate(Gate::T, w);
        bag.apply_gate(Gate::H, w);
        SparseState before = bag.blob_of(w);
        bag.apply_gate(Gate::T, w);
        bag.apply_gate(Gate::Tdg, w);
        const SparseState& after = bag.blob_of(w);
        for (const auto& [l, a] : before.amps) {
            CHECK(std::abs(a - after.amps.at(l)) < 1e-12);
        }
    }
    SUBCASE("CNOT on |+>|0> makes a Bell pair") {
        WireId c = bag.alloc_plus(1)[0];
        WireId t = bag.alloc_wire(1, 0);
        bag.apply_cnot(c, t);
        SparseState joint = bag.joint_state({c, t});
        REQUIRE(joint.amps.size() == 2);
        CHECK(std::abs(joint.amps.at("00") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
        CHECK(std::abs(joint.amps.at("11") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
    }
    SUBCASE("unknown wire throws") {
        CHECK_THROWS_AS(bag.apply_gate(Gate::X, WireId{999, 1}), UnknownWire);
    }
}

TEST_CASE("apply_classical_function entangles a fresh register") {
    StateBag bag;
    SUBCASE("identity table copies in the computational basis") {
        WireId w = bag.alloc_plus(1)[0];
        WireId out = bag.apply_classical_function(
            {w}, [](const std::string& in) { return in; }, 1);
        SparseState joint = bag.joint_state({w, out});
        REQUIRE(joint.amps.size() == 2);
        CHECK(joint.amps.count("00") == 1);
        CHECK(joint.amps.count("11") == 1);
    }
    SUBCASE("constant function leaves a product state") {
        WireId w = bag.alloc_plus(1)[0];
        WireId out = bag.apply_classical_function(
            {w}, [](const std::string&) { return std::string("1"); }, 1);
        // The split pass should leave the constant register in its own blob.
        const SparseState& blob = bag.blob_of(out);
        CHECK(blob.wires.size() <= 2);
        std::string m;
        Rng rng(1);
        m = bag.measure_standard(out, rng);
        CHECK(m == "1");
        CHECK(bag.blob_of(w).amps.size() == 2);
    }
    SUBCASE("parity register splits support evenly") {
        Rng rng(3);
        WireId w = bag.prepare_superposition(
            {{"00", 0.25}, {"10", 0.25}, {"01", 0.25}, {"11", 0.25}});
        WireId out = bag.apply_classical_function(
            {w},
            [](const std::string& in) {
                int parity = (in[0] == '1') ^ (in[1] == '1');
                return std::string(parity ? "1" : "0");
            },
            1);
        std::string m = bag.measure_standard(out, rng);
        const SparseState& blob = bag.blob_of(w);
        REQUIRE(blob.amps.size() == 2);
        for (const auto& [l, a] : blob.amps) {
            int parity = (l[0] == '1') ^ (l[1] == '1');
            CHECK(parity == (m == "1" ? 1 : 0));
            CHECK(std::abs(std::abs(a) - 1 / std::numbers::sqrt2) < 1e-12);
        }
    }
}

TEST_CASE("table-driven classical function rejects missing entries") {
    StateBag bag;
    WireId w = bag.alloc_plus(1)[0];
    std::map<std::string, std::string> partial{{"0", "1"}};
    CHECK_THROWS_AS(bag.apply_classical_function({w}, partial, 1), PartialFunction);
    std::map<std::string, std::string> total{{"0", "1"}, {"1", "0"}};
    WireId out = bag.apply_classical_function({w}, total, 1);
    SparseState joint = bag.joint_state({w, out});
    CHECK(joint.amps.count("01") == 1);
    CHECK(joint.amps.count("10") == 1);
}

TEST_CASE("measuring the image register collapses u^v (disjoint mode)") {
    // The generic (materialized function register) protocol route: prepare
    // controls u, v, w and a domain register, evaluate the 4-to-2 function
    // into a register, measure it, and verify the survivors share u^v.
    StateBag bag;
    Rng rng(123);
    Rng krng(321);
    auto key = qfhelab::dtf::four_to_two(qfhelab::dtf::ref_family(2), 0, krng);
    auto ws = bag.alloc_plus(3);  // u, v, w
    WireId x = bag.prepare_superposition(key->dist(0, 0));
    WireId y = bag.apply_classical_function(
        {ws[0], ws[1], ws[2], x},
        [&key](const std::string& in) {
            int u = in[0] == '1';
            int v = in[1] == '1';
            int w = in[2] == '1';
            return key->eval(u ^ v, u ^ w, in.substr(3));
        },
        key->image_bits());
    bag.measure_standard(y, rng);
    SparseState joint = bag.joint_state(bag.live_wires());
    size_t off_u = static_cast<size_t>(joint.offset_of(ws[0].id));
    size_t off_v = static_cast<size_t>(joint.offset_of(ws[1].id));
    REQUIRE(!joint.amps.empty());
    int uv = -1;
    for (const auto& [label, a] : joint.amps) {
        int here = (label[off_u] == '1') ^ (label[off_v] == '1');
        if (uv < 0) {
            uv = here;
        }
        CHECK(here == uv);
    }
}

TEST_CASE("measure_standard follows the Born rule") {
    SUBCASE("measuring |0> is deterministic") {
        StateBag bag;
        Rng rng(11);
        WireId w = bag.alloc_wire(1, 0);
        CHECK(bag.measure_standard(w, rng) == "0");
    }
    SUBCASE("measuring |+> is a fair coin within 3 sigma") {
        StateBag bag;
        Rng rng(12345);
        int ones = 0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            WireId w = bag.alloc_plus(1)[0];
            ones += bag.measure_standard(w, rng) == "1" ? 1 : 0;
        }
        double f = static_cast<double>(ones) / trials;
        CHECK(f > 0.485);
        CHECK(f < 0.515);
    }
    SUBCASE("outcomes are reproducible under a fixed seed") {
        auto run = [] {
            StateBag bag;
            Rng rng(777);
            std::string seq;
            for (int i = 0; i < 64; ++i) {
                WireId w = bag.alloc_plus(1)[0];
                seq += bag.measure_standard(w, rng);
            }
            return seq;
        };
        CHECK(run() == run());
    }
}

TEST_CASE("controlled superposition entangles per-control distributions") {
    StateBag bag;
    // Control |+>: branch 0 gets a point mass, branch 1 a two-label split.
    WireId c = bag.alloc_plus(1)[0];
    std::map<std::string, double> d0{{"00", 1.0}};
    std::map<std::string, double> d1{{"01", 0.5}, {"11", 0.5}};
    WireId x = bag.prepare_superposition_controlled(
        {c}, [&](const std::string& ctrl) -> const std::map<std::string, double>& {
            return ctrl == "0" ? d0 : d1;
        });
    SparseState joint = bag.joint_state({c, x});
    REQUIRE(joint.amps.size() == 3);
    CHECK(std::abs(joint.amps.at("000") - Amp{1 / std::numbers::sqrt2, 0}) < 1e-12);
    CHECK(std::abs(joint.amps.at("101") - Amp{0.5, 0}) < 1e-12);
    CHECK(std::abs(joint.amps.at("111") - Amp{0.5, 0}) < 1e-12);
}

TEST_CASE("measure_hadamard leaves the advertised phases") {
    SUBCASE("|0...0> spreads d uniformly and leaves no phase on the rest") {
        Rng rng(77);
        std::map<std::string, int> counts;
        const int trials = 4000;
        for (int i = 0; i < trials; ++i) {
            StateBag bag;
            WireId anchor = bag.alloc_plus(1)[0];
            WireId w = bag.alloc_wire(2, 0);
            // Entangle nothing; the anchor must stay exactly |+>.
            std::string d = bag.measure_hadamard(w, rng);
            counts[d] += 1;
            const SparseState& rest = bag.blob_of(anchor);
            CHECK(std::abs(rest.amps.at("0") - rest.amps.at("1")) < 1e-12);
        }
        for (const auto& [d, n] : counts) {
            CHECK(n > trials / 4 - 3 * std::sqrt(trials * 0.25 * 0.75));
            CHECK(n < trials / 4 + 3 * std::sqrt(trials * 0.25 * 0.75));
        }
    }
    SUBCASE("|+>^t collapses to d = 0^t") {
        StateBag bag;
        Rng rng(5);
        WireId w = bag.prepare_superposition(
            {{"00", 0.25}, {"10", 0.25}, {"01", 0.25}, {"11", 0.25}});
        CHECK(bag.measure_hadamard(w, rng) == "00");
    }
    SUBCASE("two-term superposition imprints (-1)^{d.(x0^x1)} on the control") {
        // control |+> entangled with x-register: |0>|x0> + |1>|x1>.
        for (uint64_t seed = 0; seed < 12; ++seed) {
            StateBag bag;
            Rng rng(seed);
            WireId c = bag.alloc_plus(1)[0];
            const std::string x0 = "01";
            const std::string x1 = "10";
            WireId x = bag.apply_classical_function(
                {c}, [&](const std::string& in) { return in == "0" ? x0 : x1; }, 2);
            std::string d = bag.measure_hadamard(x, rng);
            const SparseState& blob = bag.blob_of(c);
            REQUIRE(blob.amps.size() == 2);
            Amp ratio = blob.amps.at("1") / blob.amps.at("0");
            int expected_sign = dot_f2(d, x0) ^ dot_f2(d, x1);
            CHECK(std::abs(ratio - Amp{expected_sign ? -1.0 : 1.0, 0}) < 1e-10);
        }
    }
}

TEST_CASE("bell_measure identifies Bell states and supports teleportation") {
    SUBCASE("fresh pair gives (0,0)") {
        StateBag bag;
        Rng rng(9);
        auto ws = bag.alloc_plus(2);
        bag.apply_gate(Gate::H, ws[1]);
        bag.apply_cnot(ws[0], ws[1]);
        auto [a, b] = bag.bell_measure(ws[0], ws[1], rng);
        CHECK(a == 0);
        CHECK(b == 0);
    }
    SUBCASE("teleport-then-correct is the identity channel") {
        Rng outer(2026);
        for (int trial = 0; trial < 100; ++trial) {
            StateBag bag;
            Rng rng = outer.stream("trial", static_cast<uint64_t>(trial));
            // Random-ish source state via a few gates on |+>.
            WireId src = bag.alloc_plus(1)[0];
            for (int g = 0; g < 4; ++g) {
                switch (rng.below(4)) {
                    case 0:
                        bag.apply_gate(Gate::T, src);
                        break;
                    case 1:
                        bag.apply_gate(Gate::H, src);
                        break;
                    case 2:
                        bag.apply_gate(Gate::P, src);
                        break;
                    default:
                        bag.apply_gate(Gate::Z, src);
                        break;
                }
            }
            SparseState want = bag.blob_of(src);
            auto pair = bag.alloc_plus(2);
            bag.apply_gate(Gate::H, pair[1]);
            bag.apply_cnot(pair[0], pair[1]);
            auto [a, b] = bag.bell_measure(src, pair[0], rng);
            if (a) {
                bag.apply_gate(Gate::Z, pair[1]);
            }
            if (b) {
                bag.apply_gate(Gate::X, pair[1]);
            }
            SparseState got = bag.blob_of(pair[1]);
            // Compare against the source amplitudes on the survivor wire.
            SparseState relabeled = want;
            relabeled.wires = {pair[1]};
            CHECK(fidelity(relabeled, got) > 1.0 - 1e-12);
        }
    }
    SUBCASE("entanglement swap leaves a Bell pair up to recorded Paulis") {
        StateBag bag;
        Rng rng(31);
        auto mk_pair = [&](WireId& x, WireId& y) {
            auto ws = bag.alloc_plus(2);
            bag.apply_gate(Gate::H, ws[1]);
            bag.apply_cnot(ws[0], ws[1]);
            x = ws[0];
            y = ws[1];
        };
        WireId a1, a2, b1, b2;
        mk_pair(a1, a2);
        mk_pair(b1, b2);
        auto [za, xb] = bag.bell_measure(a2, b1, rng);
        PauliFrame frame;
        if (za) {
            frame.flip_z(b2);
        }
        if (xb) {
            frame.flip_x(b2);
        }
        frame.undo(bag, {b2});
        SparseState joint = bag.joint_state({a1, b2});
        SparseState target = state_over(
            {a1, b2},
            {{"00", {1 / std::numbers::sqrt2, 0}}, {"11", {1 / std::numbers::sqrt2, 0}}});
        CHECK(fidelity(joint, target) > 1.0 - 1e-12);
    }
}

TEST_CASE("fidelity basics") {
    StateBag bag;
    WireId w = bag.alloc_plus(1)[0];
    SparseState plus = bag.blob_of(w);
    SparseState zero = state_over({w}, {{"0", {1, 0}}});
    SparseState one = state_over({w}, {{"1", {1, 0}}});
    CHECK(fidelity(plus, plus) == doctest::Approx(1.0));
    CHECK(fidelity(zero, one) == doctest::Approx(0.0));
    CHECK(fidelity(zero, plus) == doctest::Approx(0.5));
    SparseState other = state_over({WireId{4242, 1}}, {{"0", {1, 0}}});
    CHECK_THROWS_AS(fidelity(zero, other), WireMismatch);
}

TEST_CASE("normalization holds over long random gate sequences") {
    StateBag bag;
    Rng rng(99);
    auto ws = bag.alloc_plus(6);
    for (int step = 0; step < 10000; ++step) {
        int which = static_cast<int>(rng.below(8));
        WireId w = ws[rng.below(6)];
        switch (which) {
            case 0:
                bag.apply_gate(Gate::H, w);
                break;
            case 1:
                bag.apply_gate(Gate::T, w);
                break;
            case 2:
                bag.apply_gate(Gate::P, w);
                break;
            case 3:
                bag.apply_gate(Gate::X, w);
                break;
            case 4:
                bag.apply_gate(Gate::Z, w);
                break;
            case 5:
                bag.apply_gate(Gate::Tdg, w);
                break;
            default: {
                WireId v = ws[rng.below(6)];
                if (v.id != w.id) {
                    bag.apply_cnot(w, v);
                }
                break;
            }
        }
    }
    double total = 0;
    for (const auto& w : bag.live_wires()) {
        (void)w;
    }
    // Each blob individually normalized.
    for (const auto& w : ws) {
        total = bag.blob_of(w).norm2();
        CHECK(std::abs(total - 1.0) < 1e-10);
    }
}

TEST_CASE("merge order does not change the joint state") {
    auto build = [](const std::vector<std::pair<int, int>>& cnots) {
        StateBag bag;
        Rng rng(17);
        auto ws = bag.alloc_plus(6);
        bag.apply_gate(Gate::T, ws[2]);
        bag.apply_gate(Gate::H, ws[4]);
        for (auto [c, t] : cnots) {
            bag.apply_cnot(ws[static_cast<size_t>(c)], ws[static_cast<size_t>(t)]);
        }
        SparseState joint = bag.joint_state(ws);
        return joint;
    };
    // The same entangling set applied in different orders.
    SparseState a = build({{0, 1}, {2, 3}, {4, 5}, {1, 2}, {3, 4}});
    SparseState b = build({{4, 5}, {2, 3}, {0, 1}, {3, 4}, {1, 2}});
    // Wire ids coincide across bags by construction order.
    CHECK(fidelity(a, b) == doctest::Approx(1.0));
}

TEST_CASE("blob json dump has the documented shape") {
    StateBag bag;
    WireId w = bag.alloc_plus(1)[0];
    nlohmann::json j = blob_to_json(bag.blob_of(w));
    CHECK(j["wires"].size() == 1);
    CHECK(j["wires"][0]["width"] == 1);
    CHECK(j["amps"].size() == 2);
    CHECK(j["amps"]["0"].size() == 2);
}
