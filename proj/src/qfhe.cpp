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

#include "qfhelab/qfhe.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace qfhelab::qfhe {

using he::HECiphertext;
using sim::Gate;
using sim::StateBag;
using sim::WireId;

int QCircuit::t_count() const {
    int n = 0;
    for (const auto& g : gates) {
        if (g.g == "T") {
            ++n;
        }
    }
    return n;
}

nlohmann::json QCircuit::to_json() const {
    nlohmann::json j;
    j["wires"] = wires;
    j["gates"] = nlohmann::json::array();
    for (const auto& g : gates) {
        nlohmann::json targets = nlohmann::json::array({g.a});
        if (g.g == "CNOT") {
            targets.push_back(g.b);
        }
        j["gates"].push_back({{"g", g.g}, {"targets", targets}});
    }
    return j;
}

QCircuit QCircuit::from_json(const nlohmann::json& j) {
    QCircuit c;
    c.wires = j.at("wires").get<int>();
    for (const auto& gj : j.at("gates")) {
        QGate g;
        g.g = gj.at("g").get<std::string>();
        auto targets = gj.at("targets");
        g.a = targets.at(0).get<int>();
        if (g.g == "CNOT") {
            g.b = targets.at(1).get<int>();
        }
        if (g.a < 0 || g.a >= c.wires || (g.g == "CNOT" && (g.b < 0 || g.b >= c.wires))) {
            throw std::invalid_argument("gate target out of range");
        }
        static const char* known[] = {"H", "P", "CNOT", "T", "X", "Z"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return g.g == k; }) == std::end(known)) {
            throw std::invalid_argument("unknown gate " + g.g);
        }
        c.gates.push_back(g);
    }
    return c;
}

rsp::HeContext QfheKeys::ctx(int level) const {
    return {params.he_scheme, he_keys[static_cast<size_t>(level)].pk,
            he_keys[static_cast<size_t>(level)].evk};
}

QfheKeys qfhe_keygen(const QfheParams& params, Rng& rng) {
    QfheKeys keys;
    keys.params = params;
    int levels = params.levels;
    for (int i = 0; i <= levels; ++i) {
        Rng stream = rng.stream("he-keygen", static_cast<uint64_t>(i));
        keys.he_keys.push_back(params.he_scheme->keygen(stream));
    }
    keys.dec_bp = bp::bp_alternate(bp::bp_compile(params.he_scheme->dec_as_circuit()));
    keys.layout = rsp::layout_from_bp(keys.dec_bp);
    for (int i = 0; i < levels; ++i) {
        rsp::HeContext next = keys.ctx(i + 1);
        Rng gk_stream = rng.stream("gadget-keygen", static_cast<uint64_t>(i));
        keys.gadget_keys.push_back(rsp::gadget_keygen(keys.he_keys[static_cast<size_t>(i)].sk.bits,
                                                      next, params.dtf_family, gk_stream));
        Rng enc_stream = rng.stream("sk-enc", static_cast<uint64_t>(i));
        keys.enc_prev_sk.push_back(params.he_scheme->enc_bits(
            next.pk, keys.he_keys[static_cast<size_t>(i)].sk.bits, enc_stream));
    }
    return keys;
}

QCiphertext qfhe_enc(const QfheKeys& keys, StateBag& bag, std::span<const WireId> wires,
                     Rng& rng) {
    QCiphertext ct;
    ct.level = 0;
    rsp::HeContext ctx = keys.ctx(0);
    for (const WireId& w : wires) {
        int x = rng.bit();
        int z = rng.bit();
        if (x) {
            bag.apply_gate(Gate::X, w);
        }
        if (z) {
            bag.apply_gate(Gate::Z, w);
        }
        ct.wires.push_back(w);
        ct.enc_x.push_back(ctx.scheme->enc(ctx.pk, x, rng));
        ct.enc_z.push_back(ctx.scheme->enc(ctx.pk, z, rng));
        ct.enc_x.back().level = 0;
        ct.enc_z.back().level = 0;
    }
    return ct;
}

HECiphertext recrypt(const QfheKeys& keys, int from, const HECiphertext& ct, Rng& rng) {
    const he::BoolCircuit dec_circuit = keys.params.he_scheme->dec_as_circuit();
    rsp::HeContext next = keys.ctx(from + 1);
    // Bind SK-vars to Enc_{pk_{from+1}}(sk_from), CT-vars to fresh encryptions
    // of the (public) ciphertext payload bits.
    std::vector<HECiphertext> inputs;
    size_t sk_vars = 0;
    for (const auto& in : dec_circuit.inputs) {
        if (in.cls == he::VarClass::Sk) {
            ++sk_vars;
        }
    }
    const auto& enc_sk = keys.enc_prev_sk[static_cast<size_t>(from)];
    if (enc_sk.size() != sk_vars || ct.bits.size() + sk_vars != dec_circuit.inputs.size()) {
        throw he::ArityMismatch("recrypt input mismatch");
    }
    inputs.insert(inputs.end(), enc_sk.begin(), enc_sk.end());
    for (uint8_t b : ct.bits) {
        inputs.push_back(next.scheme->enc(next.pk, b & 1, rng));
    }
    HECiphertext out = next.scheme->eval(next.evk, dec_circuit, inputs, rng);
    out.level = from + 1;
    return out;
}

namespace {

HECiphertext pad_xor(const rsp::HeContext& ctx, const HECiphertext& a, const HECiphertext& b,
                     Rng& rng) {
    he::CircuitBuilder builder;
    int x = builder.input("a", he::VarClass::Ct);
    int y = builder.input("b", he::VarClass::Ct);
    he::BoolCircuit c = builder.finish(builder.xor_(x, y));
    std::array<HECiphertext, 2> in{a, b};
    return ctx.scheme->eval(ctx.evk, c, in, rng);
}

HECiphertext pad_not(const rsp::HeContext& ctx, const HECiphertext& a, Rng& rng) {
    he::CircuitBuilder builder;
    int x = builder.input("a", he::VarClass::Ct);
    he::BoolCircuit c = builder.finish(builder.not_(x));
    std::array<HECiphertext, 1> in{a};
    return ctx.scheme->eval(ctx.evk, c, in, rng);
}

}  // namespace

void qfhe_eval(const QfheKeys& keys, StateBag& bag, QCiphertext& ct, const QCircuit& c,
               Rng& rng) {
    if (c.wires != static_cast<int>(ct.wires.size())) {
        throw std::invalid_argument("circuit wire count does not match ciphertext");
    }
    if (c.t_count() > keys.params.levels - ct.level) {
        throw TDepthExceeded("circuit needs " + std::to_string(c.t_count()) +
                             " levels, only " +
                             std::to_string(keys.params.levels - ct.level) + " left");
    }
    for (const auto& g : c.gates) {
        rsp::HeContext ctx = keys.ctx(ct.level);
        size_t a = static_cast<size_t>(g.a);
        if (g.g == "H") {
            bag.apply_gate(Gate::H, ct.wires[a]);
            std::swap(ct.enc_x[a], ct.enc_z[a]);
        } else if (g.g == "P") {
            bag.apply_gate(Gate::P, ct.wires[a]);
            ct.enc_z[a] = pad_xor(ctx, ct.enc_x[a], ct.enc_z[a], rng);
        } else if (g.g == "X") {
            // Pure pad-key update: X X^x Z^z = X^{x^1} Z^z.
            ct.enc_x[a] = pad_not(ctx, ct.enc_x[a], rng);
        } else if (g.g == "Z") {
            ct.enc_z[a] = pad_not(ctx, ct.enc_z[a], rng);
        } else if (g.g == "CNOT") {
            size_t b = static_cast<size_t>(g.b);
            bag.apply_cnot(ct.wires[a], ct.wires[b]);
            ct.enc_z[a] = pad_xor(ctx, ct.enc_z[a], ct.enc_z[b], rng);
            ct.enc_x[b] = pad_xor(ctx, ct.enc_x[b], ct.enc_x[a], rng);
        } else if (g.g == "T") {
            bag.apply_gate(Gate::T, ct.wires[a]);
            // The wire now carries a P^x error; the remotely prepared gadget
            // consumes it and hands back pads under the next key set.
            int i = ct.level;
            rsp::HeContext next = keys.ctx(i + 1);
            Rng gadget_rng = rng.stream("gadget", static_cast<uint64_t>(i * 1024 + g.a));
            rsp::GadgetState gadget = rsp::rsp_gen_gadget(
                bag, keys.gadget_keys[static_cast<size_t>(i)],
                keys.enc_prev_sk[static_cast<size_t>(i)], next, keys.layout,
                gadget_rng.stream("prep"), /*lazy=*/true);
            Rng apply_rng = gadget_rng.stream("apply");
            rsp::GadgetApplyResult out =
                rsp::gadget_apply(gadget, ct.wires[a], ct.enc_x[a], apply_rng);
            // Retire the leftover gadget wires (chains disjoint from the data).
            std::vector<WireId> leftovers;
            for (const WireId& w : bag.live_wires()) {
                bool is_data = false;
                for (const WireId& dw : ct.wires) {
                    if (dw.id == w.id) {
                        is_data = true;
                    }
                }
                if (w.id == out.data_wire.id) {
                    is_data = true;
                }
                if (!is_data) {
                    leftovers.push_back(w);
                }
            }
            bag.discard_exclusive(leftovers);
            ct.wires[a] = out.data_wire;
            ct.enc_x[a] = pad_xor(next, out.enc_x, recrypt(keys, i, ct.enc_x[a], rng), rng);
            ct.enc_z[a] = pad_xor(next, out.enc_z, recrypt(keys, i, ct.enc_z[a], rng), rng);
            for (size_t w = 0; w < ct.wires.size(); ++w) {
                if (w == a) {
                    continue;
                }
                ct.enc_x[w] = recrypt(keys, i, ct.enc_x[w], rng);
                ct.enc_z[w] = recrypt(keys, i, ct.enc_z[w], rng);
            }
            ct.level = i + 1;
            for (size_t w = 0; w < ct.wires.size(); ++w) {
                ct.enc_x[w].level = ct.level;
                ct.enc_z[w].level = ct.level;
            }
        } else {
            throw std::invalid_argument("unknown gate " + g.g);
        }
    }
}

std::vector<WireId> qfhe_dec_with_level(const QfheKeys& keys, StateBag& bag,
                                        const QCiphertext& ct, int sk_level) {
    const auto& sk = keys.he_keys[static_cast<size_t>(sk_level)].sk;
    for (size_t i = 0; i < ct.wires.size(); ++i) {
        int x = keys.params.he_scheme->dec(sk, ct.enc_x[i]);
        int z = keys.params.he_scheme->dec(sk, ct.enc_z[i]);
        // Undo X^x Z^z: apply Z^z then X^x.
        if (z) {
            bag.apply_gate(Gate::Z, ct.wires[i]);
        }
        if (x) {
            bag.apply_gate(Gate::X, ct.wires[i]);
        }
    }
    return ct.wires;
}

std::vector<WireId> qfhe_dec(const QfheKeys& keys, StateBag& bag, const QCiphertext& ct) {
    return qfhe_dec_with_level(keys, bag, ct, ct.level);
}

void write_key_chain(const QfheKeys& keys, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto emit = [&](const std::string& name, const nlohmann::json& j) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << j.dump(2) << "\n";
    };
    for (size_t i = 0; i < keys.he_keys.size(); ++i) {
        const auto& ks = keys.he_keys[i];
        std::string level = std::to_string(i);
        emit("he_pk_" + level + ".json",
             {{"scheme", ks.pk.scheme}, {"bits", ks.pk.bits}});
        emit("he_evk_" + level + ".json",
             {{"scheme", ks.evk.scheme}, {"bits", ks.evk.bits}});
        emit("he_sk_" + level + ".json",
             {{"scheme", ks.sk.scheme}, {"bits", ks.sk.bits}});
    }
    for (size_t i = 0; i < keys.gadget_keys.size(); ++i) {
        const auto& gk = keys.gadget_keys[i];
        for (size_t j = 0; j < gk.keys.size(); ++j) {
            std::string tag = std::to_string(i) + "_" + std::to_string(j);
            nlohmann::json enc_td = nlohmann::json::array();
            for (const auto& ct : gk.enc_trapdoors[j]) {
                enc_td.push_back(ct.to_json());
            }
            emit("gadget_key_" + tag + ".json",
                 {{"key", gk.keys[j]->key_json()}, {"enc_trapdoor", enc_td}});
            emit("gadget_trapdoor_" + tag + ".json", gk.keys[j]->trapdoor_json());
        }
    }
    emit("dec_bp.json", keys.dec_bp.to_json());
    emit("layout.json", keys.layout.to_json());
}

void apply_circuit_direct(StateBag& bag, std::span<const WireId> wires, const QCircuit& c) {
    for (const auto& g : c.gates) {
        const WireId& a = wires[static_cast<size_t>(g.a)];
        if (g.g == "H") {
            bag.apply_gate(Gate::H, a);
        } else if (g.g == "P") {
            bag.apply_gate(Gate::P, a);
        } else if (g.g == "X") {
            bag.apply_gate(Gate::X, a);
        } else if (g.g == "Z") {
            bag.apply_gate(Gate::Z, a);
        } else if (g.g == "T") {
            bag.apply_gate(Gate::T, a);
        } else if (g.g == "CNOT") {
            bag.apply_cnot(a, wires[static_cast<size_t>(g.b)]);
        } else {
            throw std::invalid_argument("unknown gate " + g.g);
        }
    }
}

}  // namespace qfhelab::qfhe
