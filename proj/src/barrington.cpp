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

#include "qfhelab/barrington.hpp"

#include <algorithm>
#include <memory>

namespace qfhelab::bp {

PermS5 PermS5::from_cycle(std::span<const int> points) {
    PermS5 p;
    for (size_t i = 0; i < points.size(); ++i) {
        int from = points[i] - 1;
        int to = points[(i + 1) % points.size()] - 1;
        p.img[static_cast<size_t>(from)] = static_cast<uint8_t>(to);
    }
    return p;
}

PermS5 PermS5::then(const PermS5& g) const {
    PermS5 r;
    for (size_t i = 0; i < 5; ++i) {
        r.img[i] = g.img[img[i]];
    }
    return r;
}

PermS5 PermS5::inverse() const {
    PermS5 r;
    for (size_t i = 0; i < 5; ++i) {
        r.img[img[i]] = static_cast<uint8_t>(i);
    }
    return r;
}

bool PermS5::is_five_cycle() const {
    int x = 0;
    for (int steps = 1; steps < 5; ++steps) {
        x = img[static_cast<size_t>(x)];
        if (x == 0) {
            return false;
        }
    }
    return img[static_cast<size_t>(x)] == 0;
}

PermS5 PermS5::conjugate_by(const PermS5& g) const {
    return g.inverse().then(*this).then(g);
}

std::string PermS5::to_cycle_string() const {
    if (is_identity()) {
        return "e";
    }
    std::string s;
    std::array<bool, 5> seen{};
    for (int start = 0; start < 5; ++start) {
        if (seen[static_cast<size_t>(start)] || img[static_cast<size_t>(start)] == start) {
            continue;
        }
        s += '(';
        int x = start;
        do {
            seen[static_cast<size_t>(x)] = true;
            s += static_cast<char>('1' + x);
            x = img[static_cast<size_t>(x)];
        } while (x != start);
        s += ')';
    }
    return s;
}

std::array<int, 5> PermS5::image_list() const {
    std::array<int, 5> out{};
    for (size_t i = 0; i < 5; ++i) {
        out[i] = img[i] + 1;
    }
    return out;
}

PermS5 PermS5::from_image_list(std::span<const int> images) {
    PermS5 p;
    for (size_t i = 0; i < 5; ++i) {
        p.img[i] = static_cast<uint8_t>(images[i] - 1);
    }
    return p;
}

namespace {

int var_bit(const BpVar& v, std::span<const uint8_t> ct_bits, std::span<const uint8_t> sk_bits) {
    if (v.is_dummy()) {
        return 0;
    }
    std::span<const uint8_t> bits = v.cls == VarClass::Ct ? ct_bits : sk_bits;
    if (static_cast<size_t>(v.index) >= bits.size()) {
        throw UnboundVariable("variable index " + std::to_string(v.index) + " out of range");
    }
    return bits[static_cast<size_t>(v.index)] & 1;
}

}  // namespace

BpEvalResult bp_eval(const PermBP& bp, std::span<const uint8_t> ct_bits,
                     std::span<const uint8_t> sk_bits) {
    PermS5 tau;
    for (const auto& ins : bp.instrs) {
        const PermS5& sigma = var_bit(ins.var, ct_bits, sk_bits) ? ins.on1 : ins.on0;
        tau = tau.then(sigma);
    }
    return {tau, tau.apply(0) != 0 ? 1 : 0};
}

nlohmann::json PermBP::to_json() const {
    nlohmann::json j;
    j["convention"] = "on1-first";
    j["instrs"] = nlohmann::json::array();
    for (const auto& ins : instrs) {
        j["instrs"].push_back({{"var", ins.var.index},
                               {"class", ins.var.cls == VarClass::Sk ? "sk" : "ct"},
                               {"on1", ins.on1.image_list()},
                               {"on0", ins.on0.image_list()}});
    }
    return j;
}

PermBP PermBP::from_json(const nlohmann::json& j) {
    PermBP bp;
    for (const auto& ij : j.at("instrs")) {
        BpInstruction ins;
        ins.var.index = ij.at("var").get<int>();
        ins.var.cls = ij.at("class").get<std::string>() == "sk" ? VarClass::Sk : VarClass::Ct;
        auto on1 = ij.at("on1").get<std::array<int, 5>>();
        auto on0 = ij.at("on0").get<std::array<int, 5>>();
        ins.on1 = PermS5::from_image_list(on1);
        ins.on0 = PermS5::from_image_list(on0);
        bp.instrs.push_back(ins);
    }
    return bp;
}

namespace {

// Lowered formula over {leaf, not, and}. Shared circuit nodes are expanded;
// Barrington operates on formulas.
struct Node {
    enum Kind { Leaf, Not, And } kind;
    BpVar var;                      // Leaf
    std::shared_ptr<Node> a, b;    // Not: a; And: a, b
};

using NodePtr = std::shared_ptr<Node>;

NodePtr leaf(BpVar v) {
    return std::make_shared<Node>(Node{Node::Leaf, v, nullptr, nullptr});
}
NodePtr not_(NodePtr a) {
    return std::make_shared<Node>(Node{Node::Not, {}, std::move(a), nullptr});
}
NodePtr and_(NodePtr a, NodePtr b) {
    return std::make_shared<Node>(Node{Node::And, {}, std::move(a), std::move(b)});
}
NodePtr or_(NodePtr a, NodePtr b) {
    return not_(and_(not_(std::move(a)), not_(std::move(b))));
}
NodePtr xor_(NodePtr a, NodePtr b) {
    return or_(and_(a, not_(b)), and_(not_(a), b));
}

NodePtr lower(const he::BoolCircuit& circuit) {
    std::vector<NodePtr> values;
    int ct_index = 0;
    int sk_index = 0;
    for (const auto& in : circuit.inputs) {
        BpVar v;
        v.cls = in.cls;
        v.index = in.cls == VarClass::Ct ? ct_index++ : sk_index++;
        values.push_back(leaf(v));
    }
    for (const auto& g : circuit.gates) {
        switch (g.op) {
            case he::GateOp::Xor:
                values.push_back(xor_(values[static_cast<size_t>(g.a)],
                                      values[static_cast<size_t>(g.b)]));
                break;
            case he::GateOp::And:
                values.push_back(and_(values[static_cast<size_t>(g.a)],
                                      values[static_cast<size_t>(g.b)]));
                break;
            case he::GateOp::Not:
                values.push_back(not_(values[static_cast<size_t>(g.a)]));
                break;
        }
    }
    if (circuit.output < 0 || circuit.output >= circuit.value_count()) {
        throw UnsupportedGate("circuit output index out of range");
    }
    return values[static_cast<size_t>(circuit.output)];
}

int node_depth(const NodePtr& n) {
    switch (n->kind) {
        case Node::Leaf:
            return 0;
        case Node::Not:
            return 1 + node_depth(n->a);
        case Node::And:
            return 1 + std::max(node_depth(n->a), node_depth(n->b));
    }
    return 0;
}

// Base commutator pair: five-cycles g0, h0 with g0 h0 g0^-1 h0^-1 (in
// then-order) itself a five-cycle c0. Found once, deterministically.
struct CommutatorBasis {
    PermS5 g0, h0, c0;
};

std::vector<PermS5> all_five_cycles() {
    std::vector<PermS5> out;
    std::array<int, 5> pts{1, 2, 3, 4, 5};
    std::sort(pts.begin(), pts.end());
    // Enumerate permutations and keep 5-cycles; order is deterministic.
    std::array<uint8_t, 5> img{0, 1, 2, 3, 4};
    std::sort(img.begin(), img.end());
    do {
        PermS5 p;
        p.img = img;
        if (p.is_five_cycle()) {
            out.push_back(p);
        }
    } while (std::next_permutation(img.begin(), img.end()));
    return out;
}

const CommutatorBasis& commutator_basis() {
    static const CommutatorBasis basis = [] {
        auto cycles = all_five_cycles();
        for (const auto& g : cycles) {
            for (const auto& h : cycles) {
                PermS5 c = g.then(h).then(g.inverse()).then(h.inverse());
                if (c.is_five_cycle()) {
                    return CommutatorBasis{g, h, c};
                }
            }
        }
        throw std::logic_error("no five-cycle commutator in S5");
    }();
    return basis;
}

// Deterministic theta with theta^-1 . from . theta = to (then-order), found by
// aligning the cycle sequences started at the smallest point.
PermS5 aligning_conjugator(const PermS5& from, const PermS5& to) {
    PermS5 theta;
    int xf = 0;
    int xt = 0;
    for (int i = 0; i < 5; ++i) {
        theta.img[static_cast<size_t>(xf)] = static_cast<uint8_t>(xt);
        xf = from.apply(xf);
        xt = to.apply(xt);
    }
    return theta;
}

void fold_after(std::vector<BpInstruction>& prog, const PermS5& gamma) {
    BpInstruction& last = prog.back();
    last.on1 = last.on1.then(gamma);
    last.on0 = last.on0.then(gamma);
}

// Emit a program computing: identity if node evaluates 0, `cycle` if 1.
void emit(const NodePtr& n, const PermS5& cycle, std::vector<BpInstruction>& out) {
    switch (n->kind) {
        case Node::Leaf:
            out.push_back({n->var, cycle, PermS5::identity()});
            return;
        case Node::Not: {
            // Child emitted against cycle^-1, then everything shifted by cycle.
            emit(n->a, cycle.inverse(), out);
            fold_after(out, cycle);
            return;
        }
        case Node::And: {
            const auto& basis = commutator_basis();
            PermS5 theta = aligning_conjugator(basis.c0, cycle);
            PermS5 g = basis.g0.conjugate_by(theta);
            PermS5 h = basis.h0.conjugate_by(theta);
            emit(n->a, g, out);
            emit(n->b, h, out);
            emit(n->a, g.inverse(), out);
            emit(n->b, h.inverse(), out);
            return;
        }
    }
}

}  // namespace

int lowered_depth(const he::BoolCircuit& circuit) {
    return node_depth(lower(circuit));
}

PermBP bp_compile(const he::BoolCircuit& circuit) {
    NodePtr root = lower(circuit);
    PermBP bp;
    emit(root, PermS5::from_cycle(std::array{1, 2, 3, 4, 5}), bp.instrs);
    return bp;
}

bool is_alternating(const PermBP& bp) {
    if (bp.length() % 2 != 0) {
        return false;
    }
    for (size_t i = 0; i < bp.instrs.size(); ++i) {
        VarClass expect = i % 2 == 0 ? VarClass::Ct : VarClass::Sk;
        if (bp.instrs[i].var.cls != expect) {
            return false;
        }
    }
    return true;
}

PermBP bp_alternate(const PermBP& bp) {
    PermBP out;
    auto dummy = [](VarClass cls) {
        BpInstruction ins;
        ins.var = {cls, -1};
        return ins;
    };
    for (const auto& ins : bp.instrs) {
        VarClass expect = out.length() % 2 == 0 ? VarClass::Ct : VarClass::Sk;
        if (ins.var.cls != expect) {
            out.instrs.push_back(dummy(expect));
        }
        out.instrs.push_back(ins);
    }
    if (out.length() % 2 != 0) {
        out.instrs.push_back(dummy(VarClass::Sk));
    }
    return out;
}

PermBP bp_invert(const PermBP& bp) {
    PermBP out;
    out.instrs.reserve(bp.length());
    for (auto it = bp.instrs.rbegin(); it != bp.instrs.rend(); ++it) {
        BpInstruction ins;
        ins.var = it->var;
        ins.on1 = it->on1.inverse();
        ins.on0 = it->on0.inverse();
        out.instrs.push_back(ins);
    }
    return out;
}

PermBP or_example_bp() {
    // Figure 4's list for sk OR x~, read in (on1, on0) order: variable 1 is
    // the ciphertext bit, variable 2 the secret-key bit.
    PermBP bp;
    auto cyc = [](std::initializer_list<int> pts) {
        return PermS5::from_cycle(std::vector<int>(pts));
    };
    PermS5 e = PermS5::identity();
    bp.instrs.push_back({{VarClass::Ct, 0}, e, cyc({1, 2, 3, 4, 5})});
    bp.instrs.push_back({{VarClass::Sk, 0}, e, cyc({1, 2, 4, 5, 3})});
    bp.instrs.push_back({{VarClass::Ct, 0}, e, cyc({5, 4, 3, 2, 1})});
    bp.instrs.push_back({{VarClass::Sk, 0}, cyc({1, 4, 2, 3, 5}), cyc({1, 5, 2, 4, 3})});
    return bp;
}

}  // namespace qfhelab::bp
