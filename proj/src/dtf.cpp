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

#include "qfhelab/dtf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qfhelab/group_action.hpp"
#include "qfhelab/sim.hpp"

namespace qfhelab::dtf {

using sim::label_of;
using sim::value_of;

std::string DtfInstance::sample_domain(int b, Rng& rng) const {
    const auto& d = dist(b);
    double r = rng.uniform01();
    double acc = 0;
    for (const auto& [x, p] : d) {
        acc += p;
        if (r < acc) {
            return x;
        }
    }
    return d.rbegin()->first;
}

std::vector<std::pair<int, std::string>> DtfInstance::invert(const std::string&) const {
    throw NotInvertible(family() + " does not expose full inversion");
}

double alpha_brute_force(const DtfInstance& f, const std::string& y, const std::string& d,
                         int b) {
    double acc = 0;
    for (const auto& [x, p] : f.dist(b)) {
        if (f.eval(b, x) == y) {
            double term = std::sqrt(p);
            acc += sim::dot_f2(d, x) ? -term : term;
        }
    }
    return acc;
}

namespace {

class RefDtf final : public DtfInstance {
  public:
    RefDtf(int mode, int t, std::vector<uint32_t> pi, uint32_t delta)
        : mode_(mode), t_(t), pi_(std::move(pi)), delta_(delta) {
        pi_inv_.resize(pi_.size());
        for (uint32_t i = 0; i < pi_.size(); ++i) {
            pi_inv_[pi_[i]] = i;
        }
        double p = 1.0 / static_cast<double>(uint64_t{1} << t_);
        for (uint64_t x = 0; x < (uint64_t{1} << t_); ++x) {
            uniform_[label_of(x, t_)] = p;
        }
    }

    std::string family() const override {
        return "ref";
    }
    int mode() const override {
        return mode_;
    }
    int domain_bits() const override {
        return t_;
    }
    int image_bits() const override {
        return t_ + 1;
    }

    const std::map<std::string, double>& dist(int) const override {
        return uniform_;
    }

    std::string eval(int b, const std::string& x) const override {
        uint32_t xv = static_cast<uint32_t>(value_of(x));
        uint32_t w = mode_ == 0 ? (static_cast<uint32_t>(b) << t_) | xv
                                : xv ^ (b ? delta_ : 0u);
        return label_of(pi_[w], t_ + 1);
    }

    std::vector<int> partial_invert(const std::string& y) const override {
        uint32_t w = pi_inv_[static_cast<uint32_t>(value_of(y))];
        if (mode_ == 0) {
            return {static_cast<int>(w >> t_)};
        }
        if (w >> t_) {
            return {};
        }
        return {0, 1};
    }

    bool invertible() const override {
        return true;
    }

    std::vector<std::pair<int, std::string>> invert(const std::string& y) const override {
        uint32_t w = pi_inv_[static_cast<uint32_t>(value_of(y))];
        if (mode_ == 0) {
            return {{static_cast<int>(w >> t_), label_of(w & mask(), t_)}};
        }
        if (w >> t_) {
            return {};
        }
        return {{0, label_of(w, t_)}, {1, label_of(w ^ delta_, t_)}};
    }

    double alpha(const std::string& y, const std::string& d, int b) const override {
        double acc = 0;
        double root = std::sqrt(1.0 / static_cast<double>(uint64_t{1} << t_));
        for (const auto& [bb, x] : invert(y)) {
            if (bb == b) {
                acc += sim::dot_f2(d, x) ? -root : root;
            }
        }
        return acc;
    }

    nlohmann::json key_json() const override {
        return {{"family", "ref"}, {"t", t_}, {"pi", pi_}, {"mode-hidden", false}};
    }

    nlohmann::json trapdoor_json() const override {
        return {{"family", "ref"}, {"t", t_}, {"mode", mode_}, {"delta", delta_}};
    }

  private:
    uint32_t mask() const {
        return (uint32_t{1} << t_) - 1;
    }

    int mode_;
    int t_;
    std::vector<uint32_t> pi_;
    std::vector<uint32_t> pi_inv_;
    uint32_t delta_;
    std::map<std::string, double> uniform_;
};

}  // namespace

std::unique_ptr<DtfInstance> ref_gen(int mode, int t, Rng& rng) {
    if (t < 1 || t > 12) {
        throw std::invalid_argument("ref family wants 1 <= t <= 12");
    }
    uint64_t size = uint64_t{1} << (t + 1);
    std::vector<uint32_t> pi(size);
    std::iota(pi.begin(), pi.end(), 0u);
    for (uint64_t i = size - 1; i > 0; --i) {
        uint64_t j = rng.below(i + 1);
        std::swap(pi[i], pi[j]);
    }
    uint32_t delta = static_cast<uint32_t>(1 + rng.below((uint64_t{1} << t) - 1));
    return std::make_unique<RefDtf>(mode, t, std::move(pi), delta);
}

DtfGen ref_family(int t) {
    return [t](int mode, Rng& rng) { return ref_gen(mode, t, rng); };
}

std::unique_ptr<DtfInstance> ref_from_json(const nlohmann::json& key,
                                           const nlohmann::json& trapdoor) {
    return std::make_unique<RefDtf>(trapdoor.at("mode").get<int>(), key.at("t").get<int>(),
                                    key.at("pi").get<std::vector<uint32_t>>(),
                                    trapdoor.at("delta").get<uint32_t>());
}

FourToTwo::FourToTwo(std::unique_ptr<DtfInstance> k1, std::unique_ptr<DtfInstance> k2)
    : k1_(std::move(k1)), k2_(std::move(k2)) {
    if (k1_->mode() == k2_->mode()) {
        throw std::invalid_argument("4-to-2 components must have opposite modes");
    }
}

const std::map<std::string, double>& FourToTwo::dist(int b1, int b2) const {
    auto key = std::make_pair(b1, b2);
    auto it = dist_cache_.find(key);
    if (it != dist_cache_.end()) {
        return it->second;
    }
    std::map<std::string, double> product;
    for (const auto& [x1, p1] : k1_->dist(b1)) {
        for (const auto& [x2, p2] : k2_->dist(b2)) {
            product[x1 + x2] = p1 * p2;
        }
    }
    return dist_cache_.emplace(key, std::move(product)).first->second;
}

std::string FourToTwo::eval(int b1, int b2, const std::string& x) const {
    size_t t1 = static_cast<size_t>(k1_->domain_bits());
    return k1_->eval(b1, x.substr(0, t1)) + k2_->eval(b2, x.substr(t1));
}

std::vector<std::pair<int, int>> FourToTwo::partial_invert(const std::string& y) const {
    size_t y1 = static_cast<size_t>(k1_->image_bits());
    std::vector<int> b1s = k1_->partial_invert(y.substr(0, y1));
    std::vector<int> b2s = k2_->partial_invert(y.substr(y1));
    std::vector<std::pair<int, int>> out;
    for (int b1 : b1s) {
        for (int b2 : b2s) {
            out.emplace_back(b1, b2);
        }
    }
    return out;
}

double FourToTwo::alpha(const std::string& y, const std::string& d, int b1, int b2) const {
    size_t y1 = static_cast<size_t>(k1_->image_bits());
    size_t t1 = static_cast<size_t>(k1_->domain_bits());
    return k1_->alpha(y.substr(0, y1), d.substr(0, t1), b1) *
           k2_->alpha(y.substr(y1), d.substr(t1), b2);
}

nlohmann::json FourToTwo::key_json() const {
    return {{"transform", "4to2"}, {"k1", k1_->key_json()}, {"k2", k2_->key_json()}};
}

nlohmann::json FourToTwo::trapdoor_json() const {
    return {{"transform", "4to2"},
            {"t1", k1_->trapdoor_json()},
            {"t2", k2_->trapdoor_json()}};
}

std::unique_ptr<FourToTwo> four_to_two(const DtfGen& family, int mu, Rng& rng) {
    Rng r1 = rng.stream("4to2-k1");
    Rng r2 = rng.stream("4to2-k2");
    return std::make_unique<FourToTwo>(family(mu, r1), family(1 - mu, r2));
}

namespace {

std::map<std::string, FamilyFromJson>& family_registry() {
    static std::map<std::string, FamilyFromJson> registry = {
        {"ref", [](const nlohmann::json& k, const nlohmann::json& t) {
             return ref_from_json(k, t);
         }},
        {"ga", [](const nlohmann::json& k, const nlohmann::json& t)
                   -> std::unique_ptr<DtfInstance> { return ga::ga_from_json(k, t); }},
    };
    return registry;
}

std::unique_ptr<DtfInstance> instance_from_json(const nlohmann::json& key,
                                                const nlohmann::json& trapdoor) {
    std::string family = key.at("family").get<std::string>();
    auto it = family_registry().find(family);
    if (it == family_registry().end()) {
        throw std::invalid_argument("unknown dtf family in json: " + family);
    }
    return it->second(key, trapdoor);
}

}  // namespace

void register_family(const std::string& name, FamilyFromJson from_json) {
    family_registry()[name] = std::move(from_json);
}

std::unique_ptr<FourToTwo> four_to_two_from_json(const nlohmann::json& key,
                                                 const nlohmann::json& trapdoor) {
    return std::make_unique<FourToTwo>(
        instance_from_json(key.at("k1"), trapdoor.at("t1")),
        instance_from_json(key.at("k2"), trapdoor.at("t2")));
}

AmplifiedDtf::AmplifiedDtf(std::shared_ptr<const DtfInstance> base, int ell)
    : base_(std::move(base)), ell_(ell) {
    if (ell_ < 1) {
        throw std::invalid_argument("amplify wants ell >= 1");
    }
    if (!base_->invertible()) {
        throw NotInvertible("amplification requires an injective and invertible base");
    }
}

std::string AmplifiedDtf::family() const {
    return "amp(" + base_->family() + ",l=" + std::to_string(ell_) + ")";
}

int AmplifiedDtf::domain_bits() const {
    return ell_ * base_->domain_bits() + (ell_ - 1);
}

const std::map<std::string, double>& AmplifiedDtf::dist(int b) const {
    auto it = dist_cache_.find(b);
    if (it != dist_cache_.end()) {
        return it->second;
    }
    if (domain_bits() > 20) {
        throw DomainTooLarge("amplified domain has " + std::to_string(domain_bits()) +
                             " bits; use sample_domain");
    }
    std::map<std::string, double> table;
    double rweight = 1.0 / static_cast<double>(uint64_t{1} << (ell_ - 1));
    // Enumerate r_1..r_{ell-1} and per-component supports.
    for (uint64_t rbits = 0; rbits < (uint64_t{1} << (ell_ - 1)); ++rbits) {
        std::vector<int> r(static_cast<size_t>(ell_));
        int parity = b & 1;
        for (int i = 0; i < ell_ - 1; ++i) {
            r[static_cast<size_t>(i)] = static_cast<int>((rbits >> i) & 1);
            parity ^= r[static_cast<size_t>(i)];
        }
        r[static_cast<size_t>(ell_ - 1)] = parity;
        std::vector<std::string> xs(static_cast<size_t>(ell_));
        std::function<void(int, double)> walk = [&](int i, double p) {
            if (i == ell_) {
                std::string label;
                for (const auto& x : xs) {
                    label += x;
                }
                label += label_of(rbits, ell_ - 1);
                table[label] += p * rweight;
                return;
            }
            for (const auto& [x, px] : base_->dist(r[static_cast<size_t>(i)])) {
                xs[static_cast<size_t>(i)] = x;
                walk(i + 1, p * px);
            }
        };
        walk(0, 1.0);
    }
    return dist_cache_.emplace(b, std::move(table)).first->second;
}

std::string AmplifiedDtf::sample_domain(int b, Rng& rng) const {
    std::string label;
    std::vector<int> r(static_cast<size_t>(ell_));
    int parity = b & 1;
    for (int i = 0; i < ell_ - 1; ++i) {
        r[static_cast<size_t>(i)] = rng.bit();
        parity ^= r[static_cast<size_t>(i)];
    }
    r[static_cast<size_t>(ell_ - 1)] = parity;
    for (int i = 0; i < ell_; ++i) {
        label += base_->sample_domain(r[static_cast<size_t>(i)], rng);
    }
    for (int i = 0; i < ell_ - 1; ++i) {
        label += r[static_cast<size_t>(i)] ? '1' : '0';
    }
    return label;
}

std::string AmplifiedDtf::eval(int b, const std::string& x) const {
    int t = base_->domain_bits();
    std::string out;
    int parity = b & 1;
    for (int i = 0; i < ell_ - 1; ++i) {
        parity ^= x[static_cast<size_t>(ell_ * t + i)] == '1' ? 1 : 0;
    }
    for (int i = 0; i < ell_; ++i) {
        int ri = i == ell_ - 1
                     ? parity
                     : (x[static_cast<size_t>(ell_ * t + i)] == '1' ? 1 : 0);
        out += base_->eval(ri, x.substr(static_cast<size_t>(i * t), static_cast<size_t>(t)));
    }
    return out;
}

std::vector<int> AmplifiedDtf::partial_invert(const std::string& y) const {
    int yb = base_->image_bits();
    int parity = 0;
    bool ambiguous = false;
    for (int i = 0; i < ell_; ++i) {
        std::vector<int> ri =
            base_->partial_invert(y.substr(static_cast<size_t>(i * yb), static_cast<size_t>(yb)));
        if (ri.empty()) {
            return {};
        }
        if (ri.size() == 2) {
            ambiguous = true;
        } else {
            parity ^= ri[0];
        }
    }
    if (ambiguous) {
        return {0, 1};
    }
    return {parity};
}

double AmplifiedDtf::alpha(const std::string& y, const std::string& d, int b) const {
    // Parity-convolution recursion over components; d splits as
    // (d_1..d_ell, s_1..s_{ell-1}). The Hadamard outcome bit s_i pairs with
    // the free suffix bit r_i, i.e. with component i for i < ell; the last
    // component's r is determined by b and carries no s phase.
    int t = base_->domain_bits();
    int yb = base_->image_bits();
    double beta[2] = {0.0, 0.0};
    for (int i = 0; i < ell_; ++i) {
        std::string yi = y.substr(static_cast<size_t>(i * yb), static_cast<size_t>(yb));
        std::string di = d.substr(static_cast<size_t>(i * t), static_cast<size_t>(t));
        int si = 0;
        if (i < ell_ - 1) {
            si = d[static_cast<size_t>(ell_ * t + i)] == '1' ? 1 : 0;
        }
        double term[2] = {0.0, 0.0};  // contribution via r_i = 0 / 1
        for (const auto& [ri, xi] : base_->invert(yi)) {
            double root = std::sqrt(base_->dist(ri).at(xi));
            int sign = sim::dot_f2(di, xi) ^ (ri == 1 ? si : 0);
            term[ri] = sign ? -root : root;
        }
        if (i == 0) {
            beta[0] = term[0];
            beta[1] = term[1];
        } else {
            // 1/sqrt(2) rather than the paper's 1/2 prefactor: the composite
            // distribution carries 1/2^{ell-1}, so sqrt weights scale by
            // (1/sqrt 2)^{ell-1}, making this equal to the brute-force alpha
            // with no leftover common factor.
            constexpr double kInvSqrt2 = 0.7071067811865475244;
            double b0 = kInvSqrt2 * (term[0] * beta[0] + term[1] * beta[1]);
            double b1 = kInvSqrt2 * (term[0] * beta[1] + term[1] * beta[0]);
            beta[0] = b0;
            beta[1] = b1;
        }
    }
    return beta[b & 1];
}

nlohmann::json AmplifiedDtf::key_json() const {
    return {{"transform", "amp"}, {"ell", ell_}, {"base", base_->key_json()}};
}

nlohmann::json AmplifiedDtf::trapdoor_json() const {
    return {{"transform", "amp"}, {"ell", ell_}, {"base", base_->trapdoor_json()}};
}

std::unique_ptr<AmplifiedDtf> amplify(std::shared_ptr<const DtfInstance> base, int ell) {
    return std::make_unique<AmplifiedDtf>(std::move(base), ell);
}

}  // namespace qfhelab::dtf
