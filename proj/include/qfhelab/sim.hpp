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

#ifndef QFHELAB_SIM_HPP
#define QFHELAB_SIM_HPP

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qfhelab/rng.hpp"

#include <json.hpp>

namespace qfhelab::sim {

using Amp = std::complex<double>;

// Labels are strings of '0'/'1'. Bit j of a wire's value sits at offset j
// within the wire's slice (little-endian), so integer x on a width-w wire
// renders as the w low bits of x in order bit0, bit1, ...
std::string label_of(uint64_t value, int width);
uint64_t value_of(const std::string& label);
int dot_f2(const std::string& a, const std::string& b);

struct WireId {
    uint32_t id = 0;
    int width = 0;

    bool operator==(const WireId& o) const {
        return id == o.id;
    }
    bool operator<(const WireId& o) const {
        return id < o.id;
    }
};

struct UnknownWire : std::runtime_error {
    explicit UnknownWire(uint32_t id)
        : std::runtime_error("unknown or dead wire id " + std::to_string(id)) {}
};
struct NonNormalized : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PartialFunction : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WireMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One entangled factor: amplitudes over the concatenated bits of its wires.
/// Amplitudes below the pruning threshold are dropped; each blob is kept
/// normalized to 1 within 1e-10.
struct SparseState {
    std::vector<WireId> wires;
    std::unordered_map<std::string, Amp> amps;

    int total_bits() const;
    int offset_of(uint32_t wire_id) const;  // -1 if absent
    double norm2() const;
    void prune_and_renormalize();
};

enum class Gate { H, P, Pdg, T, Tdg, X, Z };

Gate gate_from_name(const std::string& name);

/// A set of disjoint entangled factors over live wires. Operations keep the
/// partition tight: factors merge only when an operation spans them, and
/// measurements try to re-split the affected factor.
class StateBag {
  public:
    StateBag() = default;
    StateBag(const StateBag&);
    StateBag& operator=(const StateBag&) = delete;
    StateBag(StateBag&&) = default;
    StateBag& operator=(StateBag&&) = default;

    std::vector<WireId> alloc_plus(int n);
    WireId alloc_wire(int width, uint64_t basis_value = 0);

    /// New t-bit wire in state sum_x sqrt(dist[x]) |x>, nonnegative real amps.
    /// dist maps t-bit labels to probabilities and must sum to 1 within 1e-10.
    WireId prepare_superposition(const std::map<std::string, double>& dist);

    /// Conditional variant: the new wire is entangled with the control wires,
    /// holding the distribution selected by the controls' joint label.
    WireId prepare_superposition_controlled(
        const std::vector<WireId>& controls,
        const std::function<const std::map<std::string, double>&(const std::string&)>& dist_for);

    void apply_gate(Gate g, WireId wire);
    void apply_cnot(WireId control, WireId target);

    /// New u-bit wire entangled as sum alpha_x |x>|f(x)>; inputs unchanged.
    /// f must cover every in-support joint label of in_wires.
    WireId apply_classical_function(const std::vector<WireId>& in_wires,
                                    const std::function<std::string(const std::string&)>& f,
                                    int out_width);
    /// Table-driven variant; throws PartialFunction when an in-support label
    /// is missing from the table.
    WireId apply_classical_function(const std::vector<WireId>& in_wires,
                                    const std::map<std::string, std::string>& table,
                                    int out_width);

    std::string measure_standard(WireId wire, Rng& rng);

    /// Jointly sample f(in_wires) as if the function output had been written
    /// to a register and measured, collapsing the inputs accordingly, but
    /// without materializing the merged pre-measurement state. `preimages`
    /// must return every joint in-label mapping to the sampled image (the
    /// caller's inversion oracle). Born-exact.
    std::string measure_function(const std::vector<WireId>& in_wires,
                                 const std::function<std::string(const std::string&)>& f,
                                 const std::function<std::vector<std::string>(const std::string&)>&
                                     preimages,
                                 Rng& rng);
    /// Hadamard-basis measurement: returns d; the survivor keeps the relative
    /// phase (-1)^{d.x} folded over the measured wire's old value.
    std::string measure_hadamard(WireId wire, Rng& rng);
    /// Outcome (a, b) identifies the Bell state (I (x) X^b Z^a)|Phi+>.
    /// Both wires are consumed.
    std::pair<int, int> bell_measure(WireId a, WireId b, Rng& rng);

    bool is_live(WireId w) const;
    std::vector<WireId> live_wires() const;
    size_t blob_count() const;
    const SparseState& blob_of(WireId w) const;

    /// Collapse everything these wires touch and remove them. Only legal when
    /// their blobs contain no other live wires (asserted).
    void discard_exclusive(const std::vector<WireId>& wires);

    /// Merge the blobs of all given wires into one and return it.
    SparseState& merge_for(const std::vector<WireId>& wires);

    /// Joint state over exactly the given wires, in the given order. The
    /// wires' blobs must cover no other wires than the requested ones.
    SparseState joint_state(const std::vector<WireId>& wires) const;

  private:
    size_t blob_index(uint32_t wire_id) const;
    size_t merge(size_t a, size_t b);
    void try_split(size_t idx);
    bool try_peel(size_t idx, const std::vector<size_t>& part);
    void remove_wire_from_blob(size_t idx, WireId w);

    std::vector<std::unique_ptr<SparseState>> blobs_;
    std::unordered_map<uint32_t, size_t> where_;
    uint32_t next_id_ = 1;
};

/// |<s1|s2>|^2 after aligning wire order by id. Throws WireMismatch if the
/// wire sets differ.
double fidelity(const SparseState& s1, const SparseState& s2);

/// Classical record of pending X/Z corrections, one pair per 1-bit wire.
class PauliFrame {
  public:
    void flip_x(WireId w) {
        frame_[w.id].first ^= 1;
    }
    void flip_z(WireId w) {
        frame_[w.id].second ^= 1;
    }
    void set(WireId w, int x, int z) {
        frame_[w.id] = {x & 1, z & 1};
    }
    std::pair<int, int> get(WireId w) const;
    /// Apply X^x Z^z per recorded wire (Z first, then X) and clear the record.
    void undo(StateBag& bag, const std::vector<WireId>& wires);

  private:
    std::map<uint32_t, std::pair<int, int>> frame_;
};

nlohmann::json blob_to_json(const SparseState& s);

/// Numeric sanity of the gate set: G Gdag = I for all seven 1-qubit gates.
bool self_test();

}  // namespace qfhelab::sim

#endif
