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

#ifndef QFHELAB_DTF_HPP
#define QFHELAB_DTF_HPP

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qfhelab/rng.hpp"

#include <json.hpp>

namespace qfhelab::dtf {

struct NotInvertible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One generated key/trapdoor pair of a dual-mode trapdoor function family.
/// Evaluation and the domain distribution are public-key operations; partial
/// inversion, full inversion and phase computation are trapdoor operations.
/// Labels are little-endian bit strings (see sim::label_of).
class DtfInstance {
  public:
    virtual ~DtfInstance() = default;

    virtual std::string family() const = 0;
    /// Trapdoor-side introspection for tests; the mode is never part of the key.
    virtual int mode() const = 0;
    virtual int domain_bits() const = 0;
    virtual int image_bits() const = 0;

    /// D_{k,b} as an explicit table over domain labels (support only).
    /// Throws DomainTooLarge above 2^20 labels; use sample_domain then.
    virtual const std::map<std::string, double>& dist(int b) const = 0;
    virtual std::string sample_domain(int b, Rng& rng) const;

    virtual std::string eval(int b, const std::string& x) const = 0;

    /// {b : exists x with f_{k,b}(x) = y}; empty set is a legal result.
    virtual std::vector<int> partial_invert(const std::string& y) const = 0;

    virtual bool invertible() const {
        return false;
    }
    /// All (b, x) with f_{k,b}(x) = y. Throws NotInvertible unless invertible().
    virtual std::vector<std::pair<int, std::string>> invert(const std::string& y) const;

    /// alpha_{k,y,d}(b) = sum over preimages x of y under f_{k,b} of
    /// (-1)^{d.x} sqrt(D_{k,b}(x)), reported up to one positive factor shared
    /// across b (here: computed exactly).
    virtual double alpha(const std::string& y, const std::string& d, int b) const = 0;

    virtual nlohmann::json key_json() const = 0;
    virtual nlohmann::json trapdoor_json() const = 0;
};

/// A family: generates instances in a chosen mode.
using DtfGen = std::function<std::unique_ptr<DtfInstance>(int mode, Rng& rng)>;

/// Exact reference family (epsilon = 0). Mode 0: f_b(x) = Pi(b || x); mode 1:
/// f_b(x) = Pi(0 || (x xor Delta*b)) for a random permutation Pi of
/// {0,1}^{t+1} and random Delta != 0. D uniform. Injective and invertible.
std::unique_ptr<DtfInstance> ref_gen(int mode, int t, Rng& rng);
DtfGen ref_family(int t);
std::unique_ptr<DtfInstance> ref_from_json(const nlohmann::json& key,
                                           const nlohmann::json& trapdoor);

/// 4-to-2 family built from two component instances in modes (mu, 1-mu).
/// Images partition by b1 in mode 0 and by b2 in mode 1; alpha factors as the
/// product of component alphas.
class FourToTwo {
  public:
    FourToTwo(std::unique_ptr<DtfInstance> k1, std::unique_ptr<DtfInstance> k2);

    int mode() const {
        return k1_->mode();
    }
    int domain_bits() const {
        return k1_->domain_bits() + k2_->domain_bits();
    }
    int image_bits() const {
        return k1_->image_bits() + k2_->image_bits();
    }
    const DtfInstance& component(int i) const {
        return i == 0 ? *k1_ : *k2_;
    }

    const std::map<std::string, double>& dist(int b1, int b2) const;
    std::string eval(int b1, int b2, const std::string& x) const;
    /// B1 x B2 as ordered (b1, b2) pairs.
    std::vector<std::pair<int, int>> partial_invert(const std::string& y) const;
    double alpha(const std::string& y, const std::string& d, int b1, int b2) const;

    nlohmann::json key_json() const;
    nlohmann::json trapdoor_json() const;

  private:
    std::unique_ptr<DtfInstance> k1_, k2_;
    mutable std::map<std::pair<int, int>, std::map<std::string, double>> dist_cache_;
};

std::unique_ptr<FourToTwo> four_to_two(const DtfGen& family, int mu, Rng& rng);
/// Reconstruct from serialized key/trapdoor (used by the mock-homomorphic
/// protocol steps). Supports the "ref" and "ga" component families.
std::unique_ptr<FourToTwo> four_to_two_from_json(const nlohmann::json& key,
                                                 const nlohmann::json& trapdoor);

/// Family reconstruction from serialized key/trapdoor JSON, used by the
/// mock-homomorphic protocol steps. "ref" and "ga" come pre-registered;
/// additional families (e.g. test doubles) can register themselves.
using FamilyFromJson = std::function<std::unique_ptr<DtfInstance>(const nlohmann::json& key,
                                                                  const nlohmann::json& td)>;
void register_family(const std::string& name, FamilyFromJson from_json);

/// XOR amplification: domain X^ell x {0,1}^{ell-1};
/// g_b(x_1..x_ell, r_1..r_{ell-1}) = (f_{r_i}(x_i))_i with
/// r_ell = b xor r_1 xor ... xor r_{ell-1}. epsilon^ell-weak when the base is
/// epsilon-weak; requires an injective and invertible base.
class AmplifiedDtf final : public DtfInstance {
  public:
    AmplifiedDtf(std::shared_ptr<const DtfInstance> base, int ell);

    std::string family() const override;
    int mode() const override {
        return base_->mode();
    }
    int domain_bits() const override;
    int image_bits() const override {
        return ell_ * base_->image_bits();
    }
    const std::map<std::string, double>& dist(int b) const override;
    std::string sample_domain(int b, Rng& rng) const override;
    std::string eval(int b, const std::string& x) const override;
    std::vector<int> partial_invert(const std::string& y) const override;
    double alpha(const std::string& y, const std::string& d, int b) const override;
    nlohmann::json key_json() const override;
    nlohmann::json trapdoor_json() const override;

    int ell() const {
        return ell_;
    }
    const DtfInstance& base() const {
        return *base_;
    }

  private:
    std::shared_ptr<const DtfInstance> base_;
    int ell_;
    mutable std::map<int, std::map<std::string, double>> dist_cache_;
};

std::unique_ptr<AmplifiedDtf> amplify(std::shared_ptr<const DtfInstance> base, int ell);

/// Brute-force oracle for alpha, summing (-1)^{d.x} sqrt(D_b(x)) over the
/// full domain table restricted to preimages of y. Test reference; O(|X|).
double alpha_brute_force(const DtfInstance& f, const std::string& y, const std::string& d,
                         int b);

}  // namespace qfhelab::dtf

#endif
