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

#ifndef QFHELAB_RSP_HPP
#define QFHELAB_RSP_HPP

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfhelab/barrington.hpp"
#include "qfhelab/dtf.hpp"
#include "qfhelab/he.hpp"
#include "qfhelab/rng.hpp"
#include "qfhelab/sim.hpp"

#include <json.hpp>

namespace qfhelab::rsp {

struct ShapeViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotAlternating : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LayoutMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RSPFailure : std::runtime_error {
    explicit RSPFailure(const std::string& reg)
        : std::runtime_error("hidden bell pair failed at register " + reg), reg_label(reg) {}
    std::string reg_label;
};

/// What the evaluator holds of the classical scheme: scheme, pk, evk.
struct HeContext {
    std::shared_ptr<const he::HeScheme> scheme;
    he::HEPublicKey pk;
    he::HEEvalKey evk;
};

/// Gadget register address. Pair layers sit at even positions of the combined
/// instruction sequence; layer k (0-based) is position 2(k+1). Rows are 1..5.
/// The external data input plays the role of "1_0_out".
struct RegId {
    int layer = 0;  // pair-layer index, 0-based
    int row = 1;    // 1..5
    bool out = false;

    bool operator<(const RegId& o) const {
        return std::tie(layer, row, out) < std::tie(o.layer, o.row, o.out);
    }
    bool operator==(const RegId&) const = default;
    std::string str() const {
        return std::to_string(row) + "_" + std::to_string(layer) + (out ? "_out" : "_in");
    }
};

/// The teleportation-gadget wiring (Q, Q1, Q2, P, pi, nu) for an
/// alternation-normalized program followed by its inverse. Layer structure:
///   rounds:  meas k teleports layer (k-1) out-rows into layer k in-rows
///            (round 0 takes the external input at row 1);
///   layers:  pair layer k Bell-pairs a_in with sigma(a)_out, sigma chosen by
///            one secret-key bit (dummy layers wire the identity).
/// P-dagger registers: rows 2..5 out of the layer carrying the program's last
/// instruction; data output: row 1 out of the last layer.
struct GadgetLayout {
    struct Step {
        bp::BpVar var;
        bp::PermS5 on1, on0;

        bool fixed() const {
            return on1 == on0;
        }
        const bp::PermS5& select(int bit) const {
            return bit ? on1 : on0;
        }
    };

    int bp_length = 0;                // L of the normalized input program
    std::vector<Step> rounds;         // ct-class steps, L+1 of them
    std::vector<Step> layers;         // sk-class steps, L+1 of them
    int p_layer = 0;                  // layer index carrying the P-dagger rows

    int layer_count() const {
        return static_cast<int>(layers.size());
    }
    int register_count() const {
        return 10 * layer_count();
    }
    bool in_p_set(const RegId& r) const {
        return r.out && r.layer == p_layer && r.row >= 2;
    }
    /// Candidate partners of an in-register (out rows of the same layer).
    RegId pi0(const RegId& q) const;
    RegId pi1(const RegId& q) const;
    /// Secret-key bit selecting between them; -1 on dummy layers.
    int key_bit_index(const RegId& q) const;
    /// Measurement partner selected by the ciphertext bits; nullopt for the
    /// final layer's out-registers (no further measurement).
    std::optional<RegId> nu(std::span<const uint8_t> ct_bits, const RegId& q) const;

    nlohmann::json to_json() const;
};

GadgetLayout layout_from_bp(const bp::PermBP& bp);

/// Measurement transcript entry (JSON-lines friendly).
struct Transcript {
    nlohmann::json lines = nlohmann::json::array();
    void log(int step, const std::string& regs, const std::string& basis,
             const std::string& outcome);
};

struct HbpResult {
    bool success = false;
    he::HECiphertext r0, r1, r2;
};

/// Lemma-4.1 protocol: given three registers (candidates 0 and 1, fresh |+> 2)
/// and a 4-to-2 key with its trapdoor only available encrypted, produce a
/// hidden Bell pair between register 2 and register mu, returning encrypted
/// pad updates (Z pads on 0 and 1, X pad on 2). success=false flags the
/// epsilon event (no phase relation at the measured outcome).
HbpResult hidden_bell_pair(sim::StateBag& bag, sim::WireId reg0, sim::WireId reg1,
                           sim::WireId reg2, const dtf::FourToTwo& key,
                           std::span<const he::HECiphertext> enc_trapdoor,
                           const he::HECiphertext& enc_z0, const he::HECiphertext& enc_z1,
                           const HeContext& he_ctx, Rng& rng, Transcript* transcript = nullptr);

struct GadgetKeys {
    std::vector<std::shared_ptr<const dtf::FourToTwo>> keys;           // one per sk bit
    std::vector<std::vector<he::HECiphertext>> enc_trapdoors;          // bits under pk'
};

/// One 4-to-2 key per secret-key bit, generated in mode sk_i, trapdoors
/// encrypted under the next-level public key.
GadgetKeys gadget_keygen(std::span<const uint8_t> sk_bits, const HeContext& he_next,
                         const dtf::DtfGen& family, Rng& rng);

/// Remotely prepared gadget. Pair layers materialize lazily in preparation
/// order (ascending layer, then row); measured wires are discarded as the
/// teleportation consumes them, so live wires stay bounded regardless of L.
class GadgetState {
  public:
    GadgetState(sim::StateBag& bag, const GadgetLayout& layout, const GadgetKeys& gk,
                std::vector<he::HECiphertext> enc_sk, HeContext he_ctx, Rng rng);

    const GadgetLayout& layout() const {
        return *layout_;
    }
    sim::StateBag& bag() {
        return *bag_;
    }

    void ensure_layer(int layer);
    void materialize_all();
    int layers_prepared() const {
        return layers_prepared_;
    }

    sim::WireId wire(const RegId& r) const;
    bool has_wire(const RegId& r) const;
    const he::HECiphertext& x_pad(const RegId& q_in) const;
    const he::HECiphertext& z_pad(const RegId& q_out) const;
    const std::vector<he::HECiphertext>& enc_sk() const {
        return enc_sk_;
    }
    const HeContext& he_ctx() const {
        return he_ctx_;
    }
    Transcript& transcript() {
        return transcript_;
    }

    /// Drop a consumed wire from the registry (bell measurements remove them
    /// from the bag already).
    void forget(const RegId& r);

  private:
    sim::StateBag* bag_;
    const GadgetLayout* layout_;
    const GadgetKeys* gk_;
    std::vector<he::HECiphertext> enc_sk_;
    HeContext he_ctx_;
    Rng rng_;
    int layers_prepared_ = 0;
    std::map<RegId, sim::WireId> wires_;
    std::map<RegId, he::HECiphertext> x_pads_;
    std::map<RegId, he::HECiphertext> z_pads_;
    Transcript transcript_;
};

/// RSPGenGadget: builds the gadget state for the layout from the gadget keys.
/// With lazy=false every layer is prepared up front (the small-instance path
/// the correctness oracle checks); with lazy=true preparation is driven by
/// gadget_apply.
GadgetState rsp_gen_gadget(sim::StateBag& bag, const GadgetKeys& gk,
                           std::span<const he::HECiphertext> enc_sk, const HeContext& he_ctx,
                           const GadgetLayout& layout, Rng rng, bool lazy = false);

struct GadgetApplyResult {
    sim::WireId data_wire;
    he::HECiphertext enc_x;
    he::HECiphertext enc_z;
};

/// Teleport a data qubit through the gadget: performs the nu-measurements in
/// plan order and homomorphically assembles the new pad keys, so that the
/// output wire holds X^x' Z^z' (Pdg)^x rho for x = Dec(enc_x_data).
GadgetApplyResult gadget_apply(GadgetState& gadget, sim::WireId data_wire,
                               const he::HECiphertext& enc_x_data, Rng& rng);

/// Oracle helper: the ideal gadget state gamma_{x,z}(sk) built directly from
/// decrypted pads, for fidelity comparison in tests.
void build_gamma_direct(sim::StateBag& bag, const GadgetLayout& layout,
                        std::span<const uint8_t> sk_bits,
                        const std::map<RegId, int>& x_pads, const std::map<RegId, int>& z_pads,
                        std::map<RegId, sim::WireId>& wires_out);

}  // namespace qfhelab::rsp

#endif
