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

#ifndef QFHELAB_GROUP_ACTION_HPP
#define QFHELAB_GROUP_ACTION_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qfhelab/dtf.hpp"
#include "qfhelab/rng.hpp"

#include <json.hpp>

namespace qfhelab::ga {

struct DomainViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AmbiguousPreimage : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OrderCheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Toy effective group action: G = X = Z_N with act(g, x) = g + x mod N and
/// distinguished x0 = 0. Regular and abelian by construction; no hardness.
struct ZnAction {
    int64_t N = 0;

    int64_t add(int64_t a, int64_t b) const {
        return (a + b) % N;
    }
    int64_t negate(int64_t a) const {
        return (N - a % N) % N;
    }
    int64_t act(int64_t g, int64_t x) const {
        return (g % N + x % N) % N;
    }
    int64_t sample_uniform(Rng& rng) const {
        return static_cast<int64_t>(rng.below(static_cast<uint64_t>(N)));
    }
};

struct OrderCheckResult {
    bool pass = false;
    int64_t witness = 0;  // largest prime factor found
};

/// Pass iff the largest prime factor of N exceeds the bound (trial division;
/// desk scale N <= 1e9).
OrderCheckResult order_check(const ZnAction& action, int64_t bound);

using Vec = std::vector<int64_t>;
using Mat = std::vector<Vec>;  // row-major n x n

struct GAKey {
    int n = 0;
    int64_t B = 0;
    int64_t N = 0;
    Mat M;
    Vec m;
    Vec x0, y0, x1, y1;
};

struct GATrapdoor {
    std::vector<uint8_t> s;
    Vec t;
    Vec w;  // (1 - mu) * (u - v)
    int mode = 0;
};

/// The group-action dual-mode trapdoor function: domain [B]^n, image X^{2n},
/// f_{k,b}(r) = ([M r] * x_b, [M r + m . r] * y_b), D uniform over [B]^n.
/// Injective and invertible whenever every entry of m has order > B.
class GroupActionDtf final : public dtf::DtfInstance {
  public:
    GroupActionDtf(GAKey key, GATrapdoor trapdoor);

    std::string family() const override {
        return "ga";
    }
    int mode() const override {
        return trapdoor_.mode;
    }
    int domain_bits() const override {
        return key_.n * coord_bits_;
    }
    int image_bits() const override {
        return 2 * key_.n * image_coord_bits_;
    }
    const std::map<std::string, double>& dist(int b) const override;
    std::string sample_domain(int b, Rng& rng) const override;
    std::string eval(int b, const std::string& x) const override;
    std::vector<int> partial_invert(const std::string& y) const override;
    bool invertible() const override {
        return true;
    }
    std::vector<std::pair<int, std::string>> invert(const std::string& y) const override;
    double alpha(const std::string& y, const std::string& d, int b) const override;
    nlohmann::json key_json() const override;
    nlohmann::json trapdoor_json() const override;

    const GAKey& key() const {
        return key_;
    }
    const GATrapdoor& trapdoor() const {
        return trapdoor_;
    }

    // Vector-level interface mirroring the construction.
    std::pair<Vec, Vec> eval_vec(int b, const Vec& r) const;
    std::optional<Vec> invert_vec(int b, const Vec& z, const Vec& zp) const;

    std::string encode_domain(const Vec& r) const;
    Vec decode_domain(const std::string& label) const;
    std::string encode_image(const Vec& z, const Vec& zp) const;
    std::pair<Vec, Vec> decode_image(const std::string& label) const;

    /// Exact fraction of r in [B]^n with r - s outside [B]^n (the per-key
    /// claw-miss rate in lossy mode): 1 - ((B-1)/B)^wt(s).
    double exact_claw_miss_fraction() const;

  private:
    GAKey key_;
    GATrapdoor trapdoor_;
    int coord_bits_;
    int image_coord_bits_;
    mutable std::map<int, std::map<std::string, double>> dist_cache_;
};

std::unique_ptr<GroupActionDtf> ga_gen(const ZnAction& action, int n, int64_t B, int mode,
                                       Rng& rng);
dtf::DtfGen ga_family(int n, int64_t B, int64_t N);
std::unique_ptr<GroupActionDtf> ga_from_json(const nlohmann::json& key,
                                             const nlohmann::json& trapdoor);

/// One sample of the single-copy extended-linear-hidden-shift distributions:
/// which = 0 draws everything uniform, which = 1 draws the structured tuple.
struct ElhsSample {
    Mat M;
    Vec m;
    Vec x0, y0, x1, y1;
    // Structured-side witnesses (which = 1 only), for reconstruction checks.
    std::vector<uint8_t> s;
    Vec t;
};

ElhsSample elhs_sample(const ZnAction& action, int n, int which, Rng& rng);

}  // namespace qfhelab::ga

#endif
