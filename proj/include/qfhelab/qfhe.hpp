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

#ifndef QFHELAB_QFHE_HPP
#define QFHELAB_QFHE_HPP

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfhelab/barrington.hpp"
#include "qfhelab/dtf.hpp"
#include "qfhelab/he.hpp"
#include "qfhelab/rng.hpp"
#include "qfhelab/rsp.hpp"
#include "qfhelab/sim.hpp"

#include <json.hpp>

namespace qfhelab::qfhe {

struct TDepthExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Circuit over {H, P, CNOT, T, X, Z} with wire indices.
struct QGate {
    std::string g;
    int a = 0;
    int b = -1;  // CNOT target
};

struct QCircuit {
    int wires = 0;
    std::vector<QGate> gates;

    /// Levels the evaluation consumes: one per T gate.
    int t_count() const;
    nlohmann::json to_json() const;
    static QCircuit from_json(const nlohmann::json& j);
};

struct QfheParams {
    int levels = 0;  // maximum T count L
    std::shared_ptr<const he::HeScheme> he_scheme;
    dtf::DtfGen dtf_family;
};

struct QfheKeys {
    QfheParams params;
    std::vector<he::HEKeySet> he_keys;                       // 0..L
    std::vector<rsp::GadgetKeys> gadget_keys;                // 0..L-1, against pk_{i+1}
    std::vector<std::vector<he::HECiphertext>> enc_prev_sk;  // Enc_{pk_{i+1}}(sk_i) bits
    bp::PermBP dec_bp;                                       // alternation-normalized
    rsp::GadgetLayout layout;

    rsp::HeContext ctx(int level) const;
};

QfheKeys qfhe_keygen(const QfheParams& params, Rng& rng);

struct QCiphertext {
    std::vector<sim::WireId> wires;
    std::vector<he::HECiphertext> enc_x;
    std::vector<he::HECiphertext> enc_z;
    int level = 0;
};

/// Pauli one-time pad over the given wires; pads encrypted under pk_0.
QCiphertext qfhe_enc(const QfheKeys& keys, sim::StateBag& bag,
                     std::span<const sim::WireId> wires, Rng& rng);

/// Homomorphic evaluation: Cliffords update pads classically; every T gate
/// prepares a fresh gadget from the level's gadget key, teleports the wire
/// through it, and recrypts all pads into the next key set.
void qfhe_eval(const QfheKeys& keys, sim::StateBag& bag, QCiphertext& ct, const QCircuit& c,
               Rng& rng);

/// Decrypt the pads at ct.level and undo them.
std::vector<sim::WireId> qfhe_dec(const QfheKeys& keys, sim::StateBag& bag,
                                  const QCiphertext& ct);

/// Deliberately wrong-level decryption (negative control).
std::vector<sim::WireId> qfhe_dec_with_level(const QfheKeys& keys, sim::StateBag& bag,
                                             const QCiphertext& ct, int sk_level);

/// Recrypt a ciphertext from key set `from` into key set `from + 1` by
/// homomorphically evaluating the decryption circuit with the encrypted
/// secret-key bits bound to its SK-vars.
he::HECiphertext recrypt(const QfheKeys& keys, int from, const he::HECiphertext& ct, Rng& rng);

/// Reference evaluation: apply the circuit directly to plaintext wires.
void apply_circuit_direct(sim::StateBag& bag, std::span<const sim::WireId> wires,
                          const QCircuit& c);

/// Serialize the key chain into a directory, one file set per level, with
/// secret keys and raw trapdoors in files separate from the public material.
void write_key_chain(const QfheKeys& keys, const std::string& dir);

}  // namespace qfhelab::qfhe

#endif
