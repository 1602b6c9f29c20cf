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

#include "qfhelab/he.hpp"

#include <algorithm>

namespace qfhelab::he {

int BoolCircuit::eval(std::span<const uint8_t> in) const {
    if (in.size() != inputs.size()) {
        throw ArityMismatch("circuit expects " + std::to_string(inputs.size()) + " inputs, got " +
                            std::to_string(in.size()));
    }
    std::vector<uint8_t> v(in.begin(), in.end());
    v.reserve(inputs.size() + gates.size());
    for (const auto& g : gates) {
        uint8_t a = v[static_cast<size_t>(g.a)];
        switch (g.op) {
            case GateOp::Xor:
                v.push_back(a ^ v[static_cast<size_t>(g.b)]);
                break;
            case GateOp::And:
                v.push_back(a & v[static_cast<size_t>(g.b)]);
                break;
            case GateOp::Not:
                v.push_back(a ^ 1u);
                break;
        }
    }
    return v[static_cast<size_t>(output)];
}

int BoolCircuit::depth() const {
    std::vector<int> d(inputs.size(), 0);
    d.reserve(inputs.size() + gates.size());
    for (const auto& g : gates) {
        int da = d[static_cast<size_t>(g.a)];
        int db = g.op == GateOp::Not ? 0 : d[static_cast<size_t>(g.b)];
        d.push_back(std::max(da, db) + 1);
    }
    return d[static_cast<size_t>(output)];
}

nlohmann::json BoolCircuit::to_json() const {
    nlohmann::json j;
    j["inputs"] = nlohmann::json::array();
    for (const auto& in : inputs) {
        j["inputs"].push_back(
            {{"name", in.name}, {"class", in.cls == VarClass::Sk ? "sk" : "ct"}});
    }
    j["gates"] = nlohmann::json::array();
    int out_index = static_cast<int>(inputs.size());
    for (const auto& g : gates) {
        const char* op = g.op == GateOp::Xor ? "XOR" : g.op == GateOp::And ? "AND" : "NOT";
        nlohmann::json gj = {{"op", op}, {"out", out_index++}};
        gj["in"] = g.op == GateOp::Not ? nlohmann::json::array({g.a})
                                       : nlohmann::json::array({g.a, g.b});
        j["gates"].push_back(gj);
    }
    j["output"] = output;
    return j;
}

BoolCircuit BoolCircuit::from_json(const nlohmann::json& j) {
    BoolCircuit c;
    for (const auto& in : j.at("inputs")) {
        c.inputs.push_back({in.at("name").get<std::string>(),
                            in.at("class").get<std::string>() == "sk" ? VarClass::Sk
                                                                      : VarClass::Ct});
    }
    for (const auto& gj : j.at("gates")) {
        std::string op = gj.at("op").get<std::string>();
        CircuitGate g;
        g.op = op == "XOR" ? GateOp::Xor : op == "AND" ? GateOp::And : GateOp::Not;
        auto in = gj.at("in");
        g.a = in.at(0).get<int>();
        g.b = in.size() > 1 ? in.at(1).get<int>() : -1;
        c.gates.push_back(g);
    }
    c.output = j.at("output").get<int>();
    return c;
}

int CircuitBuilder::input(const std::string& name, VarClass cls) {
    c_.inputs.push_back({name, cls});
    if (!c_.gates.empty()) {
        throw std::logic_error("declare all inputs before gates");
    }
    return static_cast<int>(c_.inputs.size()) - 1;
}

int CircuitBuilder::xor_(int a, int b) {
    c_.gates.push_back({GateOp::Xor, a, b});
    return c_.value_count() - 1;
}

int CircuitBuilder::and_(int a, int b) {
    c_.gates.push_back({GateOp::And, a, b});
    return c_.value_count() - 1;
}

int CircuitBuilder::not_(int a) {
    c_.gates.push_back({GateOp::Not, a, -1});
    return c_.value_count() - 1;
}

BoolCircuit CircuitBuilder::finish(int output) const {
    BoolCircuit c = c_;
    c.output = output;
    return c;
}

nlohmann::json HECiphertext::to_json() const {
    return {{"scheme", scheme}, {"level", level}, {"bits", bits}};
}

HECiphertext HECiphertext::from_json(const nlohmann::json& j) {
    HECiphertext ct;
    ct.scheme = j.at("scheme").get<std::string>();
    ct.level = j.at("level").get<int>();
    ct.bits = j.at("bits").get<std::vector<uint8_t>>();
    if (ct.scheme.rfind("mask", 0) == 0) {
        ct.kappa = static_cast<int>(ct.bits.size()) - 1;
    }
    return ct;
}

std::vector<HECiphertext> HeScheme::enc_bits(const HEPublicKey& pk,
                                             std::span<const uint8_t> bits, Rng& rng) const {
    std::vector<HECiphertext> out;
    out.reserve(bits.size());
    for (uint8_t b : bits) {
        out.push_back(enc(pk, b & 1, rng));
    }
    return out;
}

std::vector<uint8_t> HeScheme::dec_bits(const HESecretKey& sk,
                                        std::span<const HECiphertext> cts) const {
    std::vector<uint8_t> out;
    out.reserve(cts.size());
    for (const auto& ct : cts) {
        out.push_back(static_cast<uint8_t>(dec(sk, ct)));
    }
    return out;
}

std::vector<HECiphertext> HeScheme::apply_native(
    const HEEvalKey& evk, std::span<const HECiphertext> cts,
    const std::function<NativeOut(const std::vector<uint8_t>&)>& fn,
    std::vector<uint8_t>* clear_out, Rng& rng) const {
    HESecretKey opened{evk.scheme, evk.kappa, evk.bits};
    std::vector<uint8_t> in;
    in.reserve(cts.size());
    for (const auto& ct : cts) {
        in.push_back(static_cast<uint8_t>(dec(opened, ct)));
    }
    NativeOut result = fn(in);
    HEPublicKey pk{evk.scheme, evk.kappa, evk.bits};
    std::vector<HECiphertext> out;
    out.reserve(result.enc_bits.size());
    for (uint8_t b : result.enc_bits) {
        out.push_back(enc(pk, b & 1, rng));
    }
    if (clear_out) {
        *clear_out = std::move(result.clear);
    }
    return out;
}

namespace {

class ClearHe final : public HeScheme {
  public:
    std::string name() const override {
        return "clear";
    }
    int kappa() const override {
        return 0;
    }

    HEKeySet keygen(Rng&) const override {
        HEKeySet ks;
        ks.pk = {"clear", 0, {}};
        ks.evk = {"clear", 0, {}};
        ks.sk = {"clear", 0, {}};
        return ks;
    }

    HECiphertext enc(const HEPublicKey& pk, int bit, Rng&) const override {
        check(pk.scheme);
        return {"clear", 0, 0, {static_cast<uint8_t>(bit & 1)}};
    }

    int dec(const HESecretKey& sk, const HECiphertext& ct) const override {
        check(sk.scheme);
        check(ct.scheme);
        return ct.bits.at(0) & 1;
    }

    HECiphertext eval(const HEEvalKey& evk, const BoolCircuit& circuit,
                      std::span<const HECiphertext> cts, Rng&) const override {
        check(evk.scheme);
        std::vector<uint8_t> in;
        for (const auto& ct : cts) {
            check(ct.scheme);
            in.push_back(ct.bits.at(0) & 1);
        }
        int out = circuit.eval(in);
        return {"clear", 0, 0, {static_cast<uint8_t>(out)}};
    }

    BoolCircuit dec_as_circuit() const override {
        CircuitBuilder b;
        int c = b.input("c", VarClass::Ct);
        return b.finish(c);
    }

  private:
    static void check(const std::string& s) {
        if (s != "clear") {
            throw SchemeMismatch("expected clear scheme, got " + s);
        }
    }
};

/// One-bit secret-key parity masking: ct = (r, m xor <r, sk>) with r uniform.
/// The pk and evk are plain copies of sk; functional only, no security.
class MaskHe final : public HeScheme {
  public:
    explicit MaskHe(int kappa) : kappa_(kappa) {
        if (kappa < 1) {
            throw std::invalid_argument("mask kappa must be >= 1");
        }
        name_ = "mask:" + std::to_string(kappa);
    }

    std::string name() const override {
        return name_;
    }
    int kappa() const override {
        return kappa_;
    }

    HEKeySet keygen(Rng& rng) const override {
        std::vector<uint8_t> sk(static_cast<size_t>(kappa_));
        for (auto& b : sk) {
            b = static_cast<uint8_t>(rng.bit());
        }
        HEKeySet ks;
        ks.pk = {name_, kappa_, sk};
        ks.evk = {name_, kappa_, sk};
        ks.sk = {name_, kappa_, sk};
        return ks;
    }

    HECiphertext enc(const HEPublicKey& pk, int bit, Rng& rng) const override {
        check(pk.scheme);
        std::vector<uint8_t> bits(static_cast<size_t>(kappa_) + 1);
        int parity = 0;
        for (int i = 0; i < kappa_; ++i) {
            bits[static_cast<size_t>(i)] = static_cast<uint8_t>(rng.bit());
            parity ^= bits[static_cast<size_t>(i)] & pk.bits[static_cast<size_t>(i)];
        }
        bits[static_cast<size_t>(kappa_)] = static_cast<uint8_t>((bit & 1) ^ parity);
        return {name_, kappa_, 0, bits};
    }

    int dec(const HESecretKey& sk, const HECiphertext& ct) const override {
        check(sk.scheme);
        check(ct.scheme);
        if (ct.bits.size() != static_cast<size_t>(kappa_) + 1) {
            throw SchemeMismatch("mask ciphertext has wrong payload length");
        }
        int parity = 0;
        for (int i = 0; i < kappa_; ++i) {
            parity ^= ct.bits[static_cast<size_t>(i)] & sk.bits[static_cast<size_t>(i)];
        }
        return (ct.bits[static_cast<size_t>(kappa_)] ^ parity) & 1;
    }

    HECiphertext eval(const HEEvalKey& evk, const BoolCircuit& circuit,
                      std::span<const HECiphertext> cts, Rng& rng) const override {
        check(evk.scheme);
        if (cts.size() != circuit.inputs.size()) {
            throw ArityMismatch("eval arity mismatch");
        }
        HESecretKey opened{evk.scheme, evk.kappa, evk.bits};
        std::vector<uint8_t> in;
        in.reserve(cts.size());
        for (const auto& ct : cts) {
            in.push_back(static_cast<uint8_t>(dec(opened, ct)));
        }
        int out = circuit.eval(in);
        HEPublicKey pk{evk.scheme, evk.kappa, evk.bits};
        return enc(pk, out, rng);
    }

    BoolCircuit dec_as_circuit() const override {
        CircuitBuilder b;
        std::vector<int> sk(static_cast<size_t>(kappa_));
        std::vector<int> r(static_cast<size_t>(kappa_));
        for (int i = 0; i < kappa_; ++i) {
            sk[static_cast<size_t>(i)] = b.input("sk" + std::to_string(i), VarClass::Sk);
        }
        for (int i = 0; i < kappa_; ++i) {
            r[static_cast<size_t>(i)] = b.input("r" + std::to_string(i), VarClass::Ct);
        }
        int c = b.input("c", VarClass::Ct);
        std::vector<int> terms;
        for (int i = 0; i < kappa_; ++i) {
            terms.push_back(b.and_(r[static_cast<size_t>(i)], sk[static_cast<size_t>(i)]));
        }
        // Balanced xor tree over the masked terms.
        while (terms.size() > 1) {
            std::vector<int> next;
            for (size_t i = 0; i + 1 < terms.size(); i += 2) {
                next.push_back(b.xor_(terms[i], terms[i + 1]));
            }
            if (terms.size() % 2 == 1) {
                next.push_back(terms.back());
            }
            terms = next;
        }
        return b.finish(b.xor_(terms[0], c));
    }

  private:
    void check(const std::string& s) const {
        if (s != name_) {
            throw SchemeMismatch("expected " + name_ + ", got " + s);
        }
    }

    int kappa_;
    std::string name_;
};

}  // namespace

std::shared_ptr<const HeScheme> make_clear_he() {
    return std::make_shared<ClearHe>();
}

std::shared_ptr<const HeScheme> make_mask_he(int kappa) {
    return std::make_shared<MaskHe>(kappa);
}

std::shared_ptr<const HeScheme> make_he(const std::string& descriptor) {
    if (descriptor == "clear") {
        return make_clear_he();
    }
    if (descriptor.rfind("mask:", 0) == 0) {
        return make_mask_he(std::stoi(descriptor.substr(5)));
    }
    throw std::invalid_argument("unknown he scheme: " + descriptor);
}

}  // namespace qfhelab::he
