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

#include "qfhelab/rsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace qfhelab::rsp {

using he::HECiphertext;
using sim::StateBag;
using sim::WireId;

namespace {

std::vector<uint8_t> bits_of_bytes(const std::string& bytes) {
    std::vector<uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (unsigned char c : bytes) {
        for (int j = 0; j < 8; ++j) {
            bits.push_back((c >> j) & 1);
        }
    }
    return bits;
}

std::string bytes_of_bits(const std::vector<uint8_t>& bits) {
    std::string bytes(bits.size() / 8, '\0');
    for (size_t i = 0; i < bytes.size(); ++i) {
        unsigned char c = 0;
        for (int j = 0; j < 8; ++j) {
            c |= static_cast<unsigned char>((bits[i * 8 + static_cast<size_t>(j)] & 1) << j);
        }
        bytes[i] = static_cast<char>(c);
    }
    return bytes;
}

const he::BoolCircuit& xor2_circuit() {
    static const he::BoolCircuit c = [] {
        he::CircuitBuilder b;
        int x = b.input("a", he::VarClass::Ct);
        int y = b.input("b", he::VarClass::Ct);
        return b.finish(b.xor_(x, y));
    }();
    return c;
}

const he::BoolCircuit& and2_circuit() {
    static const he::BoolCircuit c = [] {
        he::CircuitBuilder b;
        int x = b.input("a", he::VarClass::Ct);
        int y = b.input("b", he::VarClass::Ct);
        return b.finish(b.and_(x, y));
    }();
    return c;
}

// (sel, a0, a1) -> a1 if sel else a0.
const he::BoolCircuit& mux_circuit() {
    static const he::BoolCircuit c = [] {
        he::CircuitBuilder b;
        int sel = b.input("sel", he::VarClass::Ct);
        int a0 = b.input("a0", he::VarClass::Ct);
        int a1 = b.input("a1", he::VarClass::Ct);
        int lo = b.and_(b.not_(sel), a0);
        int hi = b.and_(sel, a1);
        return b.finish(b.xor_(lo, hi));
    }();
    return c;
}

HECiphertext enc_bit(const HeContext& ctx, int bit, Rng& rng) {
    return ctx.scheme->enc(ctx.pk, bit, rng);
}

HECiphertext ct_xor(const HeContext& ctx, const HECiphertext& a, const HECiphertext& b,
                    Rng& rng) {
    std::array<HECiphertext, 2> in{a, b};
    return ctx.scheme->eval(ctx.evk, xor2_circuit(), in, rng);
}

HECiphertext ct_and(const HeContext& ctx, const HECiphertext& a, const HECiphertext& b,
                    Rng& rng) {
    std::array<HECiphertext, 2> in{a, b};
    return ctx.scheme->eval(ctx.evk, and2_circuit(), in, rng);
}

HECiphertext ct_mux(const HeContext& ctx, const HECiphertext& sel, const HECiphertext& a0,
                    const HECiphertext& a1, Rng& rng) {
    std::array<HECiphertext, 3> in{sel, a0, a1};
    return ctx.scheme->eval(ctx.evk, mux_circuit(), in, rng);
}

}  // namespace

void Transcript::log(int step, const std::string& regs, const std::string& basis,
                     const std::string& outcome) {
    lines.push_back(
        {{"step", step}, {"registers", regs}, {"basis", basis}, {"outcome", outcome}});
}

RegId GadgetLayout::pi0(const RegId& q) const {
    return {q.layer, layers[static_cast<size_t>(q.layer)].on0.apply(q.row - 1) + 1, true};
}

RegId GadgetLayout::pi1(const RegId& q) const {
    return {q.layer, layers[static_cast<size_t>(q.layer)].on1.apply(q.row - 1) + 1, true};
}

int GadgetLayout::key_bit_index(const RegId& q) const {
    return layers[static_cast<size_t>(q.layer)].var.index;
}

std::optional<RegId> GadgetLayout::nu(std::span<const uint8_t> ct_bits, const RegId& q) const {
    if (!q.out || q.layer + 1 >= layer_count()) {
        return std::nullopt;
    }
    const Step& round = rounds[static_cast<size_t>(q.layer + 1)];
    int bit = 0;
    if (!round.var.is_dummy()) {
        if (static_cast<size_t>(round.var.index) >= ct_bits.size()) {
            throw LayoutMismatch("ciphertext bit index out of range in nu");
        }
        bit = ct_bits[static_cast<size_t>(round.var.index)] & 1;
    }
    return RegId{q.layer + 1, round.select(bit).apply(q.row - 1) + 1, false};
}

nlohmann::json GadgetLayout::to_json() const {
    auto step_json = [](const Step& s) {
        return nlohmann::json{{"var", s.var.index},
                              {"class", s.var.cls == he::VarClass::Sk ? "sk" : "ct"},
                              {"on1", s.on1.image_list()},
                              {"on0", s.on0.image_list()}};
    };
    nlohmann::json j;
    j["bp_length"] = bp_length;
    j["registers"] = register_count();
    j["p_layer"] = p_layer;
    nlohmann::json p = nlohmann::json::array();
    for (int row = 2; row <= 5; ++row) {
        p.push_back(RegId{p_layer, row, true}.str());
    }
    j["P"] = p;
    j["rounds"] = nlohmann::json::array();
    for (const auto& r : rounds) {
        j["rounds"].push_back(step_json(r));
    }
    j["layers"] = nlohmann::json::array();
    for (const auto& l : layers) {
        j["layers"].push_back(step_json(l));
    }
    // Explicit register view: Q1 rows with their candidate partners and the
    // selecting key bit; Q2 is the set of partner registers.
    nlohmann::json q1 = nlohmann::json::array();
    nlohmann::json q2 = nlohmann::json::array();
    for (int k = 0; k < layer_count(); ++k) {
        for (int row = 1; row <= 5; ++row) {
            RegId q{k, row, false};
            q1.push_back({{"reg", q.str()},
                          {"pi0", pi0(q).str()},
                          {"pi1", pi1(q).str()},
                          {"key_bit", key_bit_index(q)}});
            q2.push_back(RegId{k, row, true}.str());
        }
    }
    j["Q1"] = q1;
    j["Q2"] = q2;
    j["data_in"] = "1_0_out";
    j["data_out"] = RegId{layer_count() - 1, 1, true}.str();
    return j;
}

GadgetLayout layout_from_bp(const bp::PermBP& program) {
    if (!bp::is_alternating(program)) {
        throw NotAlternating("layout needs an alternation-normalized program of even length");
    }
    if (program.length() == 0) {
        throw NotAlternating("layout needs a nonempty program");
    }
    GadgetLayout layout;
    layout.bp_length = static_cast<int>(program.length());

    auto as_step = [](const bp::BpInstruction& ins) {
        return GadgetLayout::Step{ins.var, ins.on1, ins.on0};
    };
    auto identity_step = [](he::VarClass cls) {
        GadgetLayout::Step s;
        s.var = {cls, -1};
        return s;
    };

    for (const auto& ins : program.instrs) {
        if (ins.var.cls == he::VarClass::Ct) {
            layout.rounds.push_back(as_step(ins));
        } else {
            layout.layers.push_back(as_step(ins));
        }
    }
    layout.p_layer = static_cast<int>(layout.layers.size()) - 1;

    // Bridge between the program and its inverse, then the inverse itself,
    // then a trailing identity layer so the data ends at a fixed register.
    layout.rounds.push_back(identity_step(he::VarClass::Ct));
    bp::PermBP inv = bp::bp_invert(program);
    for (const auto& ins : inv.instrs) {
        if (ins.var.cls == he::VarClass::Ct) {
            layout.rounds.push_back(as_step(ins));
        } else {
            layout.layers.push_back(as_step(ins));
        }
    }
    layout.layers.push_back(identity_step(he::VarClass::Sk));

    if (layout.rounds.size() != layout.layers.size()) {
        throw LayoutMismatch("round/layer count mismatch in layout construction");
    }
    return layout;
}

HbpResult hidden_bell_pair(StateBag& bag, WireId reg0, WireId reg1, WireId reg2,
                           const dtf::FourToTwo& key,
                           std::span<const HECiphertext> enc_trapdoor,
                           const HECiphertext& enc_z0, const HECiphertext& enc_z1,
                           const HeContext& he_ctx, Rng& rng, Transcript* transcript) {
    if (reg0.id == reg1.id || reg0.id == reg2.id || reg1.id == reg2.id) {
        throw ShapeViolation("hidden bell pair needs three distinct registers");
    }
    // Register 2 must be a fresh unentangled |+>.
    {
        const sim::SparseState& blob = bag.blob_of(reg2);
        if (blob.wires.size() != 1) {
            throw ShapeViolation("register 2 must be unentangled");
        }
        sim::SparseState plus;
        plus.wires = {reg2};
        plus.amps["0"] = 1.0 / std::numbers::sqrt2;
        plus.amps["1"] = 1.0 / std::numbers::sqrt2;
        if (sim::fidelity(blob, plus) < 1.0 - 1e-9) {
            throw ShapeViolation("register 2 is not |+>");
        }
    }
    // Registers 0 and 1 need a uniform marginal on their own bit.
    for (WireId r : {reg0, reg1}) {
        const sim::SparseState& blob = bag.blob_of(r);
        size_t off = static_cast<size_t>(blob.offset_of(r.id));
        double p1 = 0;
        for (const auto& [label, a] : blob.amps) {
            if (label[off] == '1') {
                p1 += std::norm(a);
            }
        }
        if (std::abs(p1 - 0.5) > 1e-9) {
            throw ShapeViolation("candidate register has a biased marginal");
        }
    }

    // chi2: domain superposition conditioned on (u, v, w) = (2, 0, 1). When
    // the distribution does not depend on the branch (every family here), the
    // domain register starts in a product state.
    bool b_independent = key.dist(0, 0) == key.dist(0, 1) && key.dist(0, 0) == key.dist(1, 0) &&
                         key.dist(0, 0) == key.dist(1, 1);
    WireId x_wire;
    if (b_independent) {
        x_wire = bag.prepare_superposition(key.dist(0, 0));
    } else {
        auto dist_for = [&key](const std::string& ctrl) -> const std::map<std::string, double>& {
            int u = ctrl[0] == '1';
            int v = ctrl[1] == '1';
            int w = ctrl[2] == '1';
            return key.dist(u ^ v, u ^ w);
        };
        x_wire = bag.prepare_superposition_controlled({reg2, reg0, reg1}, dist_for);
    }

    // chi3 + chi4: evaluate f_{i(u,v,w)} and measure the image register. With
    // invertible components the simulator collapses through the preimage set
    // instead of materializing the joint function register.
    auto f_joint = [&key](const std::string& in) {
        int u = in[0] == '1';
        int v = in[1] == '1';
        int w = in[2] == '1';
        return key.eval(u ^ v, u ^ w, in.substr(3));
    };
    std::string y;
    if (key.component(0).invertible() && key.component(1).invertible()) {
        auto preimages = [&key](const std::string& yy) {
            size_t y1 = static_cast<size_t>(key.component(0).image_bits());
            auto side1 = key.component(0).invert(yy.substr(0, y1));
            auto side2 = key.component(1).invert(yy.substr(y1));
            std::vector<std::string> out;
            for (const auto& [b1, x1] : side1) {
                for (const auto& [b2, x2] : side2) {
                    for (int u = 0; u < 2; ++u) {
                        std::string label;
                        label += u ? '1' : '0';
                        label += (u ^ b1) ? '1' : '0';
                        label += (u ^ b2) ? '1' : '0';
                        out.push_back(label + x1 + x2);
                    }
                }
            }
            return out;
        };
        y = bag.measure_function({reg2, reg0, reg1, x_wire}, f_joint, preimages, rng);
    } else {
        WireId y_wire =
            bag.apply_classical_function({reg2, reg0, reg1, x_wire}, f_joint, key.image_bits());
        y = bag.measure_standard(y_wire, rng);
    }

    // chi5: Hadamard-measure the domain register.
    std::string d = bag.measure_hadamard(x_wire, rng);
    if (transcript) {
        transcript->log(static_cast<int>(transcript->lines.size()), "image", "standard", y);
        transcript->log(static_cast<int>(transcript->lines.size()), "domain", "hadamard", d);
    }

    // Homomorphic post-processing over the encrypted trapdoor: partial
    // inversion gives a; phase computation gives s; both only exist under
    // encryption (the clear success flag is desk-scale instrumentation).
    nlohmann::json pub_key = key.key_json();
    auto fn = [&pub_key, &y, &d](const std::vector<uint8_t>& td_bits) -> he::HeScheme::NativeOut {
        nlohmann::json td = nlohmann::json::parse(bytes_of_bits(td_bits));
        auto full = dtf::four_to_two_from_json(pub_key, td);
        auto pairs = full->partial_invert(y);
        uint8_t a = 0;
        uint8_t s = 0;
        uint8_t ok = 0;
        if (pairs.size() == 2) {
            bool share_b1 = pairs[0].first == pairs[1].first;
            a = static_cast<uint8_t>(share_b1 ? pairs[0].first : pairs[0].second);
            double base = full->alpha(y, d, a, a);
            double other = share_b1 ? full->alpha(y, d, a, a ^ 1) : full->alpha(y, d, a ^ 1, a);
            double scale = std::max(std::abs(base), std::abs(other));
            if (scale > 1e-12 && std::abs(std::abs(base) - std::abs(other)) <= 1e-9 * scale) {
                ok = 1;
                s = (base > 0) != (other > 0) ? 1 : 0;
            }
        } else if (pairs.size() == 1) {
            // The epsilon event: one side of the claw is missing.
            a = static_cast<uint8_t>(full->mode() == 0 ? pairs[0].first : pairs[0].second);
        }
        return {{a, s}, {ok}};
    };
    std::vector<uint8_t> clear;
    std::vector<HECiphertext> out =
        he_ctx.scheme->apply_native(he_ctx.evk, enc_trapdoor, fn, &clear, rng);

    HbpResult result;
    result.success = !clear.empty() && clear[0] == 1;
    result.r2 = out[0];
    result.r0 = ct_xor(he_ctx, enc_z0, out[1], rng);
    result.r1 = ct_xor(he_ctx, enc_z1, out[1], rng);
    return result;
}

GadgetKeys gadget_keygen(std::span<const uint8_t> sk_bits, const HeContext& he_next,
                         const dtf::DtfGen& family, Rng& rng) {
    GadgetKeys gk;
    for (size_t i = 0; i < sk_bits.size(); ++i) {
        Rng stream = rng.stream("gadget-key", i);
        std::shared_ptr<const dtf::FourToTwo> key =
            dtf::four_to_two(family, sk_bits[i] & 1, stream);
        std::string td = key->trapdoor_json().dump();
        Rng enc_stream = rng.stream("gadget-key-enc", i);
        gk.enc_trapdoors.push_back(
            he_next.scheme->enc_bits(he_next.pk, bits_of_bytes(td), enc_stream));
        gk.keys.push_back(std::move(key));
    }
    return gk;
}

GadgetState::GadgetState(StateBag& bag, const GadgetLayout& layout, const GadgetKeys& gk,
                         std::vector<HECiphertext> enc_sk, HeContext he_ctx, Rng rng)
    : bag_(&bag),
      layout_(&layout),
      gk_(&gk),
      enc_sk_(std::move(enc_sk)),
      he_ctx_(std::move(he_ctx)),
      rng_(std::move(rng)) {}

WireId GadgetState::wire(const RegId& r) const {
    auto it = wires_.find(r);
    if (it == wires_.end()) {
        throw LayoutMismatch("register " + r.str() + " is not materialized");
    }
    return it->second;
}

bool GadgetState::has_wire(const RegId& r) const {
    return wires_.count(r) > 0;
}

const HECiphertext& GadgetState::x_pad(const RegId& q_in) const {
    return x_pads_.at(q_in);
}

const HECiphertext& GadgetState::z_pad(const RegId& q_out) const {
    return z_pads_.at(q_out);
}

void GadgetState::forget(const RegId& r) {
    wires_.erase(r);
}

void GadgetState::ensure_layer(int layer) {
    while (layers_prepared_ <= layer) {
        int k = layers_prepared_;
        const GadgetLayout::Step& step = layout_->layers[static_cast<size_t>(k)];
        Rng prep_rng = rng_.stream("layer", static_cast<uint64_t>(k));

        std::vector<WireId> fresh = bag_->alloc_plus(10);
        for (int row = 1; row <= 5; ++row) {
            wires_[RegId{k, row, false}] = fresh[static_cast<size_t>(row - 1)];
            wires_[RegId{k, row, true}] = fresh[static_cast<size_t>(4 + row)];
        }
        {
            Rng pad_rng = prep_rng.stream("zero-pads");
            for (int row = 1; row <= 5; ++row) {
                z_pads_.insert({RegId{k, row, true}, enc_bit(he_ctx_, 0, pad_rng)});
            }
        }

        for (int row = 1; row <= 5; ++row) {
            RegId q{k, row, false};
            if (step.fixed()) {
                // Both candidates coincide; the wiring is public, so the
                // evaluator lays the Bell pair down directly.
                RegId partner{k, step.on0.apply(row - 1) + 1, true};
                bag_->apply_gate(sim::Gate::H, wire(partner));
                bag_->apply_cnot(wire(q), wire(partner));
                Rng pad_rng = prep_rng.stream("fixed-pad", static_cast<uint64_t>(row));
                x_pads_.insert({q, enc_bit(he_ctx_, 0, pad_rng)});
                continue;
            }
            int bit_index = step.var.index;
            if (bit_index < 0 || static_cast<size_t>(bit_index) >= gk_->keys.size()) {
                throw LayoutMismatch("layer wants secret-key bit " + std::to_string(bit_index) +
                                     " but the gadget key has " +
                                     std::to_string(gk_->keys.size()) + " bits");
            }
            RegId c0 = layout_->pi0(q);
            RegId c1 = layout_->pi1(q);
            for (int attempt = 0;; ++attempt) {
                Rng hbp_rng = prep_rng.stream("hbp", static_cast<uint64_t>(row * 8 + attempt));
                HbpResult r = hidden_bell_pair(*bag_, wire(c0), wire(c1), wire(q),
                                               *gk_->keys[static_cast<size_t>(bit_index)],
                                               gk_->enc_trapdoors[static_cast<size_t>(bit_index)],
                                               z_pads_.at(c0), z_pads_.at(c1), he_ctx_, hbp_rng,
                                               &transcript_);
                if (r.success) {
                    x_pads_.insert_or_assign(q, r.r2);
                    z_pads_.insert_or_assign(c0, r.r0);
                    z_pads_.insert_or_assign(c1, r.r1);
                    break;
                }
                // Retry only while the three registers can be cleanly reset.
                bool resettable = true;
                std::vector<uint32_t> own = {wire(q).id, wire(c0).id, wire(c1).id};
                for (WireId w : {wire(q), wire(c0), wire(c1)}) {
                    for (const auto& other : bag_->blob_of(w).wires) {
                        if (std::find(own.begin(), own.end(), other.id) == own.end()) {
                            resettable = false;
                        }
                    }
                }
                if (!resettable || attempt >= 3) {
                    throw RSPFailure(q.str());
                }
                bag_->discard_exclusive({wire(q), wire(c0), wire(c1)});
                std::vector<WireId> redo = bag_->alloc_plus(3);
                wires_[q] = redo[0];
                wires_[c0] = redo[1];
                wires_[c1] = redo[2];
                Rng pad_rng = prep_rng.stream("retry-pad", static_cast<uint64_t>(attempt));
                z_pads_.insert_or_assign(c0, enc_bit(he_ctx_, 0, pad_rng));
                z_pads_.insert_or_assign(c1, enc_bit(he_ctx_, 0, pad_rng));
            }
        }

        if (k == layout_->p_layer) {
            for (int row = 2; row <= 5; ++row) {
                bag_->apply_gate(sim::Gate::Pdg, wire(RegId{k, row, true}));
            }
        }
        ++layers_prepared_;
    }
}

void GadgetState::materialize_all() {
    ensure_layer(layout_->layer_count() - 1);
}

GadgetState rsp_gen_gadget(StateBag& bag, const GadgetKeys& gk,
                           std::span<const HECiphertext> enc_sk, const HeContext& he_ctx,
                           const GadgetLayout& layout, Rng rng, bool lazy) {
    for (const auto& layer : layout.layers) {
        if (!layer.fixed() && (layer.var.index < 0 ||
                               static_cast<size_t>(layer.var.index) >= gk.keys.size())) {
            throw LayoutMismatch("gadget key has " + std::to_string(gk.keys.size()) +
                                 " bits, layout wants bit " + std::to_string(layer.var.index));
        }
    }
    GadgetState state(bag, layout, gk,
                      std::vector<HECiphertext>(enc_sk.begin(), enc_sk.end()), he_ctx,
                      std::move(rng));
    if (!lazy) {
        state.materialize_all();
    }
    return state;
}

GadgetApplyResult gadget_apply(GadgetState& gadget, WireId data_wire,
                               const HECiphertext& enc_x_data, Rng& rng) {
    if (data_wire.width != 1) {
        throw LayoutMismatch("gadget data wire must be a single qubit");
    }
    const GadgetLayout& layout = gadget.layout();
    const HeContext& ctx = gadget.he_ctx();
    StateBag& bag = gadget.bag();
    std::span<const uint8_t> ct_bits(enc_x_data.bits);

    // Encrypted ledger: accumulated byproduct pads and the one-hot data row.
    HECiphertext acc_x = enc_bit(ctx, 0, rng);
    HECiphertext acc_z = enc_bit(ctx, 0, rng);
    std::array<HECiphertext, 5> pos = {enc_bit(ctx, 1, rng), enc_bit(ctx, 0, rng),
                                       enc_bit(ctx, 0, rng), enc_bit(ctx, 0, rng),
                                       enc_bit(ctx, 0, rng)};

    int n_layers = layout.layer_count();
    for (int k = 0; k < n_layers; ++k) {
        gadget.ensure_layer(k);
        const GadgetLayout::Step& round = layout.rounds[static_cast<size_t>(k)];
        int round_bit = 0;
        if (!round.var.is_dummy()) {
            if (static_cast<size_t>(round.var.index) >= ct_bits.size()) {
                throw LayoutMismatch("round wants ciphertext bit " +
                                     std::to_string(round.var.index));
            }
            round_bit = ct_bits[static_cast<size_t>(round.var.index)] & 1;
        }
        const bp::PermS5& m = round.select(round_bit);

        // Bell measurements for this round, row-ascending.
        std::array<int, 5> out_a{};  // Z-type outcome per source row
        std::array<int, 5> out_b{};  // X-type outcome per source row
        for (int row = 1; row <= 5; ++row) {
            WireId src;
            if (k == 0) {
                if (row != 1) {
                    continue;  // the external input is the only layer-(-1) register
                }
                src = data_wire;
            } else {
                RegId src_reg{k - 1, row, true};
                src = gadget.wire(src_reg);
                gadget.forget(src_reg);
            }
            RegId tgt_reg{k, m.apply(row - 1) + 1, false};
            WireId tgt = gadget.wire(tgt_reg);
            gadget.forget(tgt_reg);
            auto [za, xb] = bag.bell_measure(src, tgt, rng);
            out_a[static_cast<size_t>(row - 1)] = za;
            out_b[static_cast<size_t>(row - 1)] = xb;
            gadget.transcript().log(k, (k == 0 ? std::string("data") : RegId{k - 1, row, true}.str()) +
                                           "," + tgt_reg.str(),
                                    "bell", std::to_string(za) + std::to_string(xb));
        }

        // Fold the data row's measurement outcome into the pads.
        for (int row = 1; row <= 5; ++row) {
            if (k == 0 && row != 1) {
                continue;
            }
            if (out_b[static_cast<size_t>(row - 1)]) {
                acc_x = ct_xor(ctx, acc_x, pos[static_cast<size_t>(row - 1)], rng);
            }
            if (out_a[static_cast<size_t>(row - 1)]) {
                acc_z = ct_xor(ctx, acc_z, pos[static_cast<size_t>(row - 1)], rng);
            }
        }

        // Known routing permutation moves the one-hot vector in the clear.
        {
            std::array<HECiphertext, 5> next = pos;
            for (int row = 1; row <= 5; ++row) {
                next[static_cast<size_t>(m.apply(row - 1))] = pos[static_cast<size_t>(row - 1)];
            }
            pos = next;
        }

        const GadgetLayout::Step& step = layout.layers[static_cast<size_t>(k)];
        if (step.fixed()) {
            // Public wiring, zero pads: only the row relabeling applies.
            std::array<HECiphertext, 5> next = pos;
            for (int row = 1; row <= 5; ++row) {
                next[static_cast<size_t>(step.on0.apply(row - 1))] =
                    pos[static_cast<size_t>(row - 1)];
            }
            pos = next;
        } else {
            // X pads sit on the in-registers the data just landed on.
            for (int row = 1; row <= 5; ++row) {
                HECiphertext sel =
                    ct_and(ctx, pos[static_cast<size_t>(row - 1)], gadget.x_pad({k, row, false}),
                           rng);
                acc_x = ct_xor(ctx, acc_x, sel, rng);
            }
            // Hidden permutation: one-hot update selected by the sk bit.
            const HECiphertext& sk_bit =
                gadget.enc_sk().at(static_cast<size_t>(step.var.index));
            bp::PermS5 inv0 = step.on0.inverse();
            bp::PermS5 inv1 = step.on1.inverse();
            std::array<HECiphertext, 5> next = pos;
            for (int row = 0; row < 5; ++row) {
                next[static_cast<size_t>(row)] =
                    ct_mux(ctx, sk_bit, pos[static_cast<size_t>(inv0.apply(row))],
                           pos[static_cast<size_t>(inv1.apply(row))], rng);
            }
            pos = next;
            // Z pads sit on the out-registers the data teleported to.
            for (int row = 1; row <= 5; ++row) {
                HECiphertext sel =
                    ct_and(ctx, pos[static_cast<size_t>(row - 1)], gadget.z_pad({k, row, true}),
                           rng);
                acc_z = ct_xor(ctx, acc_z, sel, rng);
            }
        }

        if (k == layout.p_layer) {
            // Crossing a Pdg register converts the pads: z ^= x when the data
            // sits on rows 2..5.
            HECiphertext crossed = pos[1];
            for (int row = 2; row < 5; ++row) {
                crossed = ct_xor(ctx, crossed, pos[static_cast<size_t>(row)], rng);
            }
            acc_z = ct_xor(ctx, acc_z, ct_and(ctx, crossed, acc_x, rng), rng);
        }
    }

    GadgetApplyResult result;
    result.data_wire = gadget.wire(RegId{n_layers - 1, 1, true});
    gadget.forget(RegId{n_layers - 1, 1, true});
    result.enc_x = acc_x;
    result.enc_z = acc_z;
    return result;
}

void build_gamma_direct(StateBag& bag, const GadgetLayout& layout,
                        std::span<const uint8_t> sk_bits,
                        const std::map<RegId, int>& x_pads, const std::map<RegId, int>& z_pads,
                        std::map<RegId, WireId>& wires_out) {
    for (int k = 0; k < layout.layer_count(); ++k) {
        const GadgetLayout::Step& step = layout.layers[static_cast<size_t>(k)];
        int bit = 0;
        if (!step.var.is_dummy()) {
            bit = sk_bits[static_cast<size_t>(step.var.index)] & 1;
        }
        std::vector<WireId> fresh = bag.alloc_plus(10);
        for (int row = 1; row <= 5; ++row) {
            wires_out[RegId{k, row, false}] = fresh[static_cast<size_t>(row - 1)];
            wires_out[RegId{k, row, true}] = fresh[static_cast<size_t>(4 + row)];
        }
        for (int row = 1; row <= 5; ++row) {
            RegId q{k, row, false};
            RegId partner{k, step.select(bit).apply(row - 1) + 1, true};
            bag.apply_gate(sim::Gate::H, wires_out[partner]);
            bag.apply_cnot(wires_out[q], wires_out[partner]);
            auto xit = x_pads.find(q);
            if (xit != x_pads.end() && xit->second) {
                bag.apply_gate(sim::Gate::X, wires_out[q]);
            }
            auto zit = z_pads.find(partner);
            if (zit != z_pads.end() && zit->second) {
                bag.apply_gate(sim::Gate::Z, wires_out[partner]);
            }
        }
        if (k == layout.p_layer) {
            for (int row = 2; row <= 5; ++row) {
                bag.apply_gate(sim::Gate::Pdg, wires_out[RegId{k, row, true}]);
            }
        }
    }
}

}  // namespace qfhelab::rsp
