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

#ifndef QFHELAB_HE_HPP
#define QFHELAB_HE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfhelab/rng.hpp"

#include <json.hpp>

namespace qfhelab::he {

enum class VarClass { Sk, Ct };
enum class GateOp { Xor, And, Not };

struct CircuitInput {
    std::string name;
    VarClass cls = VarClass::Ct;
};

/// Gate inputs index the value array: [0, |inputs|) are circuit inputs, then
/// one slot per gate in order. Not uses only `a`.
struct CircuitGate {
    GateOp op;
    int a = -1;
    int b = -1;
};

struct BoolCircuit {
    std::vector<CircuitInput> inputs;
    std::vector<CircuitGate> gates;
    int output = -1;

    int eval(std::span<const uint8_t> in) const;
    int depth() const;
    int value_count() const {
        return static_cast<int>(inputs.size() + gates.size());
    }

    nlohmann::json to_json() const;
    static BoolCircuit from_json(const nlohmann::json& j);
};

/// Incremental circuit builder; methods return value indices.
class CircuitBuilder {
  public:
    int input(const std::string& name, VarClass cls);
    int xor_(int a, int b);
    int and_(int a, int b);
    int not_(int a);
    int or_(int a, int b) {
        return not_(and_(not_(a), not_(b)));
    }
    BoolCircuit finish(int output) const;

  private:
    BoolCircuit c_;
};

struct SchemeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArityMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HEPublicKey {
    std::string scheme;
    int kappa = 0;
    std::vector<uint8_t> bits;  // insecure by design: the mock pk carries sk
};
struct HESecretKey {
    std::string scheme;
    int kappa = 0;
    std::vector<uint8_t> bits;
};
/// Sealed decryption capability; only he eval paths may open it.
struct HEEvalKey {
    std::string scheme;
    int kappa = 0;
    std::vector<uint8_t> bits;
};
struct HEKeySet {
    HEPublicKey pk;
    HEEvalKey evk;
    HESecretKey sk;
};

struct HECiphertext {
    std::string scheme;
    int kappa = 0;
    int level = 0;
    std::vector<uint8_t> bits;

    nlohmann::json to_json() const;
    static HECiphertext from_json(const nlohmann::json& j);
};

/// Classical homomorphic encryption with exportable decryption circuit.
/// Both instantiations are functional mocks: correct, compact, and with zero
/// noise, but with no security whatsoever.
class HeScheme {
  public:
    virtual ~HeScheme() = default;
    virtual std::string name() const = 0;
    virtual int kappa() const = 0;

    virtual HEKeySet keygen(Rng& rng) const = 0;
    virtual HECiphertext enc(const HEPublicKey& pk, int bit, Rng& rng) const = 0;
    virtual int dec(const HESecretKey& sk, const HECiphertext& ct) const = 0;
    /// Dec(eval(C, cts)) = C(Dec(cts)). Inputs bind positionally to the
    /// circuit's input list (both Sk- and Ct-class inputs take ciphertexts).
    virtual HECiphertext eval(const HEEvalKey& evk, const BoolCircuit& circuit,
                              std::span<const HECiphertext> cts, Rng& rng) const = 0;
    /// Circuit over SK-vars (sk bits first) then CT-vars (payload bits)
    /// computing dec. Input order: sk_0..sk_{kappa-1}, then ciphertext bits.
    virtual BoolCircuit dec_as_circuit() const = 0;

    std::vector<HECiphertext> enc_bits(const HEPublicKey& pk, std::span<const uint8_t> bits,
                                       Rng& rng) const;
    std::vector<uint8_t> dec_bits(const HESecretKey& sk,
                                  std::span<const HECiphertext> cts) const;

    /// Mock-only escape hatch for protocol steps the paper performs
    /// "homomorphically" on trapdoor material: decrypt, run fn on the clear
    /// bits, re-encrypt outputs. fn may also emit clear bytes (desk-scale
    /// instrumentation such as the epsilon-event flag).
    struct NativeOut {
        std::vector<uint8_t> enc_bits;
        std::vector<uint8_t> clear;
    };
    std::vector<HECiphertext> apply_native(
        const HEEvalKey& evk, std::span<const HECiphertext> cts,
        const std::function<NativeOut(const std::vector<uint8_t>&)>& fn,
        std::vector<uint8_t>* clear_out, Rng& rng) const;
};

std::shared_ptr<const HeScheme> make_clear_he();
std::shared_ptr<const HeScheme> make_mask_he(int kappa);
/// "clear" or "mask:<kappa>".
std::shared_ptr<const HeScheme> make_he(const std::string& descriptor);

}  // namespace qfhelab::he

#endif
