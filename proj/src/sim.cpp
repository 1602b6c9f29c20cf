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

#include "qfhelab/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cassert>
#include <numbers>

namespace qfhelab::sim {

namespace {

constexpr double kPruneThreshold = 1e-14;
constexpr double kNormTolerance = 1e-10;

const Amp kInvSqrt2{1.0 / std::numbers::sqrt2, 0.0};

struct GateMatrix {
    Amp m00, m01, m10, m11;
};

GateMatrix matrix_of(Gate g) {
    const Amp i{0.0, 1.0};
    const Amp t{std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};  // e^{i pi/4}
    switch (g) {
        case Gate::H:
            return {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2};
        case Gate::P:
            return {1.0, 0.0, 0.0, i};
        case Gate::Pdg:
            return {1.0, 0.0, 0.0, -i};
        case Gate::T:
            return {1.0, 0.0, 0.0, t};
        case Gate::Tdg:
            return {1.0, 0.0, 0.0, std::conj(t)};
        case Gate::X:
            return {0.0, 1.0, 1.0, 0.0};
        case Gate::Z:
            return {1.0, 0.0, 0.0, -1.0};
    }
    throw std::logic_error("unreachable gate");
}

}  // namespace

std::string label_of(uint64_t value, int width) {
    std::string s(static_cast<size_t>(width), '0');
    for (int j = 0; j < width; ++j) {
        if ((value >> j) & 1u) {
            s[static_cast<size_t>(j)] = '1';
        }
    }
    return s;
}

uint64_t value_of(const std::string& label) {
    uint64_t v = 0;
    for (size_t j = 0; j < label.size(); ++j) {
        if (label[j] == '1') {
            v |= uint64_t{1} << j;
        }
    }
    return v;
}

int dot_f2(const std::string& a, const std::string& b) {
    int acc = 0;
    size_t n = std::min(a.size(), b.size());
    for (size_t j = 0; j < n; ++j) {
        acc ^= (a[j] == '1' && b[j] == '1') ? 1 : 0;
    }
    return acc;
}

Gate gate_from_name(const std::string& name) {
    if (name == "H") return Gate::H;
    if (name == "P") return Gate::P;
    if (name == "Pdg") return Gate::Pdg;
    if (name == "T") return Gate::T;
    if (name == "Tdg") return Gate::Tdg;
    if (name == "X") return Gate::X;
    if (name == "Z") return Gate::Z;
    throw std::invalid_argument("unknown gate name: " + name);
}

int SparseState::total_bits() const {
    int n = 0;
    for (const auto& w : wires) {
        n += w.width;
    }
    return n;
}

int SparseState::offset_of(uint32_t wire_id) const {
    int off = 0;
    for (const auto& w : wires) {
        if (w.id == wire_id) {
            return off;
        }
        off += w.width;
    }
    return -1;
}

double SparseState::norm2() const {
    double n = 0;
    for (const auto& [l, a] : amps) {
        n += std::norm(a);
    }
    return n;
}

void SparseState::prune_and_renormalize() {
    for (auto it = amps.begin(); it != amps.end();) {
        if (std::abs(it->second) < kPruneThreshold) {
            it = amps.erase(it);
        } else {
            ++it;
        }
    }
    double n = norm2();
    if (n <= 0) {
        throw NonNormalized("state collapsed to zero norm");
    }
    if (std::abs(n - 1.0) > 1e-13) {
        double s = 1.0 / std::sqrt(n);
        for (auto& [l, a] : amps) {
            a *= s;
        }
    }
}

StateBag::StateBag(const StateBag& o) : next_id_(o.next_id_) {
    blobs_.reserve(o.blobs_.size());
    for (const auto& b : o.blobs_) {
        blobs_.push_back(b ? std::make_unique<SparseState>(*b) : nullptr);
    }
    where_ = o.where_;
}

size_t StateBag::blob_index(uint32_t wire_id) const {
    auto it = where_.find(wire_id);
    if (it == where_.end()) {
        throw UnknownWire(wire_id);
    }
    return it->second;
}

std::vector<WireId> StateBag::alloc_plus(int n) {
    std::vector<WireId> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        WireId w{next_id_++, 1};
        auto blob = std::make_unique<SparseState>();
        blob->wires = {w};
        blob->amps["0"] = kInvSqrt2;
        blob->amps["1"] = kInvSqrt2;
        where_[w.id] = blobs_.size();
        blobs_.push_back(std::move(blob));
        out.push_back(w);
    }
    return out;
}

WireId StateBag::alloc_wire(int width, uint64_t basis_value) {
    if (width < 1) {
        throw std::invalid_argument("wire width must be >= 1");
    }
    WireId w{next_id_++, width};
    auto blob = std::make_unique<SparseState>();
    blob->wires = {w};
    blob->amps[label_of(basis_value, width)] = 1.0;
    where_[w.id] = blobs_.size();
    blobs_.push_back(std::move(blob));
    return w;
}

WireId StateBag::prepare_superposition(const std::map<std::string, double>& dist) {
    if (dist.empty()) {
        throw std::invalid_argument("empty distribution");
    }
    int width = static_cast<int>(dist.begin()->first.size());
    double total = 0;
    for (const auto& [label, p] : dist) {
        if (static_cast<int>(label.size()) != width) {
            throw std::invalid_argument("inconsistent label widths in distribution");
        }
        if (p < 0) {
            throw NonNormalized("negative probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kNormTolerance) {
        throw NonNormalized("distribution sums to " + std::to_string(total));
    }
    WireId w{next_id_++, width};
    auto blob = std::make_unique<SparseState>();
    blob->wires = {w};
    for (const auto& [label, p] : dist) {
        if (p > 0) {
            blob->amps[label] = std::sqrt(p);
        }
    }
    blob->prune_and_renormalize();
    where_[w.id] = blobs_.size();
    blobs_.push_back(std::move(blob));
    return w;
}

WireId StateBag::prepare_superposition_controlled(
    const std::vector<WireId>& controls,
    const std::function<const std::map<std::string, double>&(const std::string&)>& dist_for) {
    SparseState& blob = merge_for(controls);
    std::vector<int> offs;
    offs.reserve(controls.size());
    for (const auto& c : controls) {
        offs.push_back(blob.offset_of(c.id));
    }
    // Peek one control label to size the new wire.
    std::string probe;
    {
        const std::string& any = blob.amps.begin()->first;
        for (size_t i = 0; i < controls.size(); ++i) {
            probe += any.substr(static_cast<size_t>(offs[i]),
                                static_cast<size_t>(controls[i].width));
        }
    }
    int width = static_cast<int>(dist_for(probe).begin()->first.size());

    WireId w{next_id_++, width};
    std::unordered_map<std::string, Amp> next;
    for (const auto& [label, a] : blob.amps) {
        std::string ctrl;
        for (size_t i = 0; i < controls.size(); ++i) {
            ctrl += label.substr(static_cast<size_t>(offs[i]),
                                 static_cast<size_t>(controls[i].width));
        }
        const auto& dist = dist_for(ctrl);
        double total = 0;
        for (const auto& [x, p] : dist) {
            total += p;
        }
        if (std::abs(total - 1.0) > kNormTolerance) {
            throw NonNormalized("controlled distribution sums to " + std::to_string(total));
        }
        for (const auto& [x, p] : dist) {
            if (p > 0) {
                next.emplace(label + x, a * std::sqrt(p));
            }
        }
    }
    size_t idx = blob_index(controls.front().id);
    blobs_[idx]->wires.push_back(w);
    blobs_[idx]->amps = std::move(next);
    blobs_[idx]->prune_and_renormalize();
    where_[w.id] = idx;
    return w;
}

void StateBag::apply_gate(Gate g, WireId wire) {
    size_t idx = blob_index(wire.id);
    SparseState& blob = *blobs_[idx];
    int off = blob.offset_of(wire.id);
    if (off < 0 || wire.width != 1) {
        throw UnknownWire(wire.id);
    }
    GateMatrix m = matrix_of(g);
    std::unordered_map<std::string, Amp> next;
    next.reserve(blob.amps.size() * 2);
    size_t pos = static_cast<size_t>(off);
    for (const auto& [label, a] : blob.amps) {
        bool one = label[pos] == '1';
        Amp to0 = one ? m.m01 : m.m00;
        Amp to1 = one ? m.m11 : m.m10;
        if (to0 != Amp{0.0, 0.0}) {
            std::string l0 = label;
            l0[pos] = '0';
            next[l0] += a * to0;
        }
        if (to1 != Amp{0.0, 0.0}) {
            std::string l1 = label;
            l1[pos] = '1';
            next[l1] += a * to1;
        }
    }
    blob.amps = std::move(next);
    blob.prune_and_renormalize();
}

void StateBag::apply_cnot(WireId control, WireId target) {
    if (control.width != 1 || target.width != 1) {
        throw std::invalid_argument("cnot expects 1-bit wires");
    }
    if (control.id == target.id) {
        throw std::invalid_argument("cnot control equals target");
    }
    SparseState& blob = merge_for({control, target});
    size_t c = static_cast<size_t>(blob.offset_of(control.id));
    size_t t = static_cast<size_t>(blob.offset_of(target.id));
    std::unordered_map<std::string, Amp> next;
    next.reserve(blob.amps.size());
    for (const auto& [label, a] : blob.amps) {
        if (label[c] == '1') {
            std::string l = label;
            l[t] = l[t] == '1' ? '0' : '1';
            next[l] += a;
        } else {
            next[label] += a;
        }
    }
    blob.amps = std::move(next);
}

WireId StateBag::apply_classical_function(
    const std::vector<WireId>& in_wires,
    const std::function<std::string(const std::string&)>& f, int out_width) {
    SparseState& blob = merge_for(in_wires);
    std::vector<int> offs;
    offs.reserve(in_wires.size());
    for (const auto& w : in_wires) {
        offs.push_back(blob.offset_of(w.id));
    }
    WireId out{next_id_++, out_width};
    std::unordered_map<std::string, Amp> next;
    next.reserve(blob.amps.size());
    for (const auto& [label, a] : blob.amps) {
        std::string in;
        for (size_t i = 0; i < in_wires.size(); ++i) {
            in += label.substr(static_cast<size_t>(offs[i]),
                               static_cast<size_t>(in_wires[i].width));
        }
        std::string y = f(in);
        if (static_cast<int>(y.size()) != out_width) {
            throw PartialFunction("function output width mismatch on label " + in);
        }
        next.emplace(label + y, a);
    }
    size_t idx = blob_index(in_wires.front().id);
    blobs_[idx]->wires.push_back(out);
    blobs_[idx]->amps = std::move(next);
    where_[out.id] = idx;
    return out;
}

WireId StateBag::apply_classical_function(const std::vector<WireId>& in_wires,
                                          const std::map<std::string, std::string>& table,
                                          int out_width) {
    return apply_classical_function(
        in_wires,
        [&table](const std::string& in) {
            auto it = table.find(in);
            if (it == table.end()) {
                throw PartialFunction("no table entry for in-support label " + in);
            }
            return it->second;
        },
        out_width);
}

std::string StateBag::measure_standard(WireId wire, Rng& rng) {
    size_t idx = blob_index(wire.id);
    SparseState& blob = *blobs_[idx];
    size_t off = static_cast<size_t>(blob.offset_of(wire.id));
    size_t w = static_cast<size_t>(wire.width);

    std::map<std::string, double> marginal;
    for (const auto& [label, a] : blob.amps) {
        marginal[label.substr(off, w)] += std::norm(a);
    }
    double r = rng.uniform01();
    std::string outcome = marginal.rbegin()->first;
    double acc = 0;
    for (const auto& [v, p] : marginal) {
        acc += p;
        if (r < acc) {
            outcome = v;
            break;
        }
    }
    std::unordered_map<std::string, Amp> next;
    for (const auto& [label, a] : blob.amps) {
        if (label.compare(off, w, outcome) == 0) {
            std::string rest = label.substr(0, off) + label.substr(off + w);
            next[rest] += a;
        }
    }
    blob.amps = std::move(next);
    remove_wire_from_blob(idx, wire);
    return outcome;
}

std::string StateBag::measure_function(
    const std::vector<WireId>& in_wires, const std::function<std::string(const std::string&)>& f,
    const std::function<std::vector<std::string>(const std::string&)>& preimages, Rng& rng) {
    // Involved blobs in first-touch order.
    std::vector<size_t> involved;
    for (const auto& w : in_wires) {
        size_t idx = blob_index(w.id);
        if (std::find(involved.begin(), involved.end(), idx) == involved.end()) {
            involved.push_back(idx);
        }
    }
    // Sample one full label per blob; equivalent to sampling the product state.
    std::vector<std::string> sampled(involved.size());
    for (size_t i = 0; i < involved.size(); ++i) {
        const SparseState& blob = *blobs_[involved[i]];
        std::map<std::string, double> weights;
        for (const auto& [label, a] : blob.amps) {
            weights[label] = std::norm(a);
        }
        double r = rng.uniform01();
        double acc = 0;
        sampled[i] = weights.rbegin()->first;
        for (const auto& [label, p] : weights) {
            acc += p;
            if (r < acc) {
                sampled[i] = label;
                break;
            }
        }
    }
    // Extract the joint in-label from the samples and evaluate once.
    auto slice_of = [&](const WireId& w, size_t& blob_pos) -> std::pair<size_t, size_t> {
        size_t idx = blob_index(w.id);
        blob_pos = static_cast<size_t>(
            std::find(involved.begin(), involved.end(), idx) - involved.begin());
        return {static_cast<size_t>(blobs_[idx]->offset_of(w.id)),
                static_cast<size_t>(w.width)};
    };
    std::string in_label;
    for (const auto& w : in_wires) {
        size_t bp = 0;
        auto [off, wd] = slice_of(w, bp);
        in_label += sampled[bp].substr(off, wd);
    }
    std::string y = f(in_label);

    // Collapse: keep, in the merged state, exactly the labels whose in-slices
    // form a preimage of y; other wires of the involved blobs stay free.
    std::vector<std::string> pres = preimages(y);
    // Per preimage, per blob: the pinned bits.
    struct Pin {
        size_t blob_pos;
        size_t off;
        size_t wd;
        size_t in_off;  // offset within the joint in-label
    };
    std::vector<Pin> pins;
    size_t in_off = 0;
    for (const auto& w : in_wires) {
        size_t bp = 0;
        auto [off, wd] = slice_of(w, bp);
        pins.push_back({bp, off, wd, in_off});
        in_off += wd;
    }
    // Build the merged survivor state.
    SparseState merged;
    for (size_t i = 0; i < involved.size(); ++i) {
        const SparseState& blob = *blobs_[involved[i]];
        merged.wires.insert(merged.wires.end(), blob.wires.begin(), blob.wires.end());
    }
    for (const std::string& pre : pres) {
        // Candidate blob-label lists consistent with this preimage.
        std::vector<std::vector<std::pair<const std::string*, Amp>>> options(involved.size());
        for (size_t i = 0; i < involved.size(); ++i) {
            const SparseState& blob = *blobs_[involved[i]];
            for (const auto& [label, a] : blob.amps) {
                bool ok = true;
                for (const Pin& pin : pins) {
                    if (pin.blob_pos != i) {
                        continue;
                    }
                    if (label.compare(pin.off, pin.wd, pre, pin.in_off, pin.wd) != 0) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    options[i].emplace_back(&label, a);
                }
            }
        }
        // Product over blobs.
        std::vector<size_t> pick(involved.size(), 0);
        for (;;) {
            std::string label;
            Amp amp{1.0, 0.0};
            bool any = true;
            for (size_t i = 0; i < involved.size(); ++i) {
                if (options[i].empty()) {
                    any = false;
                    break;
                }
                label += *options[i][pick[i]].first;
                amp *= options[i][pick[i]].second;
            }
            if (!any) {
                break;
            }
            merged.amps[label] += amp;
            size_t i = 0;
            while (i < involved.size() && ++pick[i] == options[i].size()) {
                pick[i] = 0;
                ++i;
            }
            if (i == involved.size()) {
                break;
            }
        }
    }
    merged.prune_and_renormalize();
    // Swap the merged survivor in for the involved blobs.
    size_t keep = involved[0];
    for (size_t i = 1; i < involved.size(); ++i) {
        for (const auto& w : blobs_[involved[i]]->wires) {
            where_[w.id] = keep;
        }
        blobs_[involved[i]].reset();
    }
    *blobs_[keep] = std::move(merged);
    try_split(keep);
    return y;
}

std::string StateBag::measure_hadamard(WireId wire, Rng& rng) {
    // Bit by bit: apply H to bit j, measure bit j. Jointly identical to
    // transforming the whole wire first, and keeps intermediate supports small.
    size_t idx = blob_index(wire.id);
    std::string d(static_cast<size_t>(wire.width), '0');
    for (int j = 0; j < wire.width; ++j) {
        SparseState& blob = *blobs_[idx];
        size_t off = static_cast<size_t>(blob.offset_of(wire.id)) + static_cast<size_t>(j);
        std::unordered_map<std::string, Amp> next;
        next.reserve(blob.amps.size() * 2);
        for (const auto& [label, a] : blob.amps) {
            Amp sign = label[off] == '1' ? Amp{-1.0, 0.0} : Amp{1.0, 0.0};
            std::string l0 = label;
            l0[off] = '0';
            next[l0] += a * kInvSqrt2;
            std::string l1 = label;
            l1[off] = '1';
            next[l1] += a * sign * kInvSqrt2;
        }
        blob.amps = std::move(next);
        blob.prune_and_renormalize();

        double p1 = 0;
        for (const auto& [label, a] : blob.amps) {
            if (label[off] == '1') {
                p1 += std::norm(a);
            }
        }
        char bit = rng.uniform01() < p1 ? '1' : '0';
        d[static_cast<size_t>(j)] = bit;
        std::unordered_map<std::string, Amp> kept;
        for (const auto& [label, a] : blob.amps) {
            if (label[off] == bit) {
                kept[label] += a;
            }
        }
        blob.amps = std::move(kept);
        blob.prune_and_renormalize();
    }
    // Drop the now-classical wire.
    SparseState& blob = *blobs_[idx];
    size_t off = static_cast<size_t>(blob.offset_of(wire.id));
    size_t w = static_cast<size_t>(wire.width);
    std::unordered_map<std::string, Amp> next;
    for (const auto& [label, a] : blob.amps) {
        next[label.substr(0, off) + label.substr(off + w)] += a;
    }
    blob.amps = std::move(next);
    remove_wire_from_blob(idx, wire);
    return d;
}

std::pair<int, int> StateBag::bell_measure(WireId a, WireId b, Rng& rng) {
    apply_cnot(a, b);
    apply_gate(Gate::H, a);
    int za = measure_standard(a, rng)[0] == '1' ? 1 : 0;
    int xb = measure_standard(b, rng)[0] == '1' ? 1 : 0;
    return {za, xb};
}

bool StateBag::is_live(WireId w) const {
    return where_.count(w.id) > 0;
}

std::vector<WireId> StateBag::live_wires() const {
    std::vector<WireId> out;
    for (const auto& b : blobs_) {
        if (b) {
            out.insert(out.end(), b->wires.begin(), b->wires.end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

size_t StateBag::blob_count() const {
    size_t n = 0;
    for (const auto& b : blobs_) {
        if (b) {
            ++n;
        }
    }
    return n;
}

const SparseState& StateBag::blob_of(WireId w) const {
    return *blobs_[blob_index(w.id)];
}

void StateBag::discard_exclusive(const std::vector<WireId>& wires) {
    std::vector<uint32_t> ids;
    for (const auto& w : wires) {
        ids.push_back(w.id);
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& w : wires) {
        if (!is_live(w)) {
            continue;
        }
        size_t idx = blob_index(w.id);
        for (const auto& other : blobs_[idx]->wires) {
            if (!std::binary_search(ids.begin(), ids.end(), other.id)) {
                throw std::logic_error("discard_exclusive would trace out live wire " +
                                       std::to_string(other.id));
            }
        }
        for (const auto& other : blobs_[idx]->wires) {
            where_.erase(other.id);
        }
        blobs_[idx].reset();
    }
}

SparseState& StateBag::merge_for(const std::vector<WireId>& wires) {
    if (wires.empty()) {
        throw std::invalid_argument("merge_for needs at least one wire");
    }
    size_t idx = blob_index(wires.front().id);
    for (size_t i = 1; i < wires.size(); ++i) {
        size_t j = blob_index(wires[i].id);
        if (j != idx) {
            idx = merge(idx, j);
        }
    }
    return *blobs_[idx];
}

size_t StateBag::merge(size_t a, size_t b) {
    SparseState& A = *blobs_[a];
    SparseState& B = *blobs_[b];
    std::unordered_map<std::string, Amp> next;
    next.reserve(A.amps.size() * B.amps.size());
    for (const auto& [la, va] : A.amps) {
        for (const auto& [lb, vb] : B.amps) {
            next.emplace(la + lb, va * vb);
        }
    }
    A.wires.insert(A.wires.end(), B.wires.begin(), B.wires.end());
    A.amps = std::move(next);
    for (const auto& w : B.wires) {
        where_[w.id] = a;
    }
    blobs_[b].reset();
    return a;
}

void StateBag::remove_wire_from_blob(size_t idx, WireId w) {
    SparseState& blob = *blobs_[idx];
    blob.wires.erase(std::remove_if(blob.wires.begin(), blob.wires.end(),
                                    [&](const WireId& x) { return x.id == w.id; }),
                     blob.wires.end());
    where_.erase(w.id);
    if (blob.wires.empty()) {
        blobs_[idx].reset();
        return;
    }
    blob.prune_and_renormalize();
    try_split(idx);
}

bool StateBag::try_peel(size_t idx, const std::vector<size_t>& part) {
    SparseState& blob = *blobs_[idx];
    std::vector<char> in_part(blob.wires.size(), 0);
    for (size_t p : part) {
        in_part[p] = 1;
    }
    std::vector<std::pair<size_t, size_t>> offs;  // (offset, width) per wire
    size_t off = 0;
    for (const auto& w : blob.wires) {
        offs.emplace_back(off, static_cast<size_t>(w.width));
        off += static_cast<size_t>(w.width);
    }
    auto split_label = [&](const std::string& label, std::string& s, std::string& rest) {
        s.clear();
        rest.clear();
        for (size_t i = 0; i < blob.wires.size(); ++i) {
            (in_part[i] ? s : rest) += label.substr(offs[i].first, offs[i].second);
        }
    };

    // Anchor on the first label's rest-part, collect the part marginal there,
    // then demand every amplitude factors as part * rest over a full grid.
    std::string s, rest, anchor_rest;
    split_label(blob.amps.begin()->first, s, anchor_rest);
    std::unordered_map<std::string, Amp> part_amp;
    for (const auto& [label, a] : blob.amps) {
        split_label(label, s, rest);
        if (rest == anchor_rest) {
            part_amp[s] = a;
        }
    }
    double pnorm = 0;
    for (const auto& [l, a] : part_amp) {
        pnorm += std::norm(a);
    }
    if (pnorm < 1e-12) {
        return false;
    }
    double scale = std::sqrt(pnorm);
    std::unordered_map<std::string, Amp> rest_amp;
    for (const auto& [label, a] : blob.amps) {
        split_label(label, s, rest);
        auto it = part_amp.find(s);
        if (it == part_amp.end()) {
            return false;
        }
        Amp r = a * scale / it->second;
        auto [rit, inserted] = rest_amp.emplace(rest, r);
        if (!inserted && std::abs(rit->second - r) > 1e-11) {
            return false;
        }
    }
    if (rest_amp.size() * part_amp.size() != blob.amps.size()) {
        return false;
    }

    auto peeled = std::make_unique<SparseState>();
    for (size_t p : part) {
        peeled->wires.push_back(blob.wires[p]);
    }
    for (const auto& [l, a] : part_amp) {
        peeled->amps[l] = a / scale;
    }
    peeled->prune_and_renormalize();
    std::vector<WireId> kept;
    for (size_t i = 0; i < blob.wires.size(); ++i) {
        if (!in_part[i]) {
            kept.push_back(blob.wires[i]);
        }
    }
    blob.wires = std::move(kept);
    blob.amps = std::move(rest_amp);
    blob.prune_and_renormalize();
    for (const auto& w : peeled->wires) {
        where_[w.id] = blobs_.size();
    }
    blobs_.push_back(std::move(peeled));
    return true;
}

void StateBag::try_split(size_t idx) {
    // Peel off product factors, smallest subsets first. Subset sizes up to 3
    // cover the factors these protocols produce (Bell pairs, small chains);
    // larger residues stay merged, which is correct but slower downstream.
    bool progress = true;
    while (progress && blobs_[idx] && blobs_[idx]->wires.size() > 1) {
        progress = false;
        size_t n = blobs_[idx]->wires.size();
        for (size_t size = 1; size <= 3 && size * 2 <= n + 1 && !progress; ++size) {
            if (size >= 2 && (n > 12 || blobs_[idx]->amps.size() > 4096)) {
                break;
            }
            std::vector<size_t> part(size);
            std::function<bool(size_t, size_t)> walk = [&](size_t from, size_t depth) {
                if (depth == size) {
                    return try_peel(idx, part);
                }
                for (size_t i = from; i < n; ++i) {
                    part[depth] = i;
                    if (walk(i + 1, depth + 1)) {
                        return true;
                    }
                }
                return false;
            };
            progress = walk(0, 0);
        }
    }
}

SparseState StateBag::joint_state(const std::vector<WireId>& wires) const {
    // Work on a copy so the bag itself is untouched.
    StateBag copy(*this);
    SparseState& merged = copy.merge_for(wires);
    std::vector<uint32_t> want;
    for (const auto& w : wires) {
        want.push_back(w.id);
    }
    for (const auto& w : merged.wires) {
        if (std::find(want.begin(), want.end(), w.id) == want.end()) {
            throw WireMismatch("joint_state: blob carries extra wire " + std::to_string(w.id));
        }
    }
    // Reorder label bits to the requested wire order.
    SparseState out;
    out.wires.clear();
    std::vector<std::pair<int, int>> slices;  // offset,width per requested wire
    for (const auto& w : wires) {
        int off = merged.offset_of(w.id);
        if (off < 0) {
            throw WireMismatch("joint_state: missing wire " + std::to_string(w.id));
        }
        slices.emplace_back(off, w.width);
        out.wires.push_back(w);
    }
    for (const auto& [label, a] : merged.amps) {
        std::string l;
        for (auto [off, wd] : slices) {
            l += label.substr(static_cast<size_t>(off), static_cast<size_t>(wd));
        }
        out.amps[l] += a;
    }
    return out;
}

double fidelity(const SparseState& s1, const SparseState& s2) {
    auto sorted = [](const SparseState& s) {
        std::vector<WireId> w = s.wires;
        std::sort(w.begin(), w.end());
        return w;
    };
    std::vector<WireId> w1 = sorted(s1);
    std::vector<WireId> w2 = sorted(s2);
    if (w1.size() != w2.size()) {
        throw WireMismatch("fidelity: wire count differs");
    }
    for (size_t i = 0; i < w1.size(); ++i) {
        if (w1[i].id != w2[i].id || w1[i].width != w2[i].width) {
            throw WireMismatch("fidelity: wire sets differ");
        }
    }
    auto canonical = [&](const SparseState& s, const std::vector<WireId>& order) {
        std::unordered_map<std::string, Amp> out;
        std::vector<std::pair<int, int>> slices;
        for (const auto& w : order) {
            slices.emplace_back(s.offset_of(w.id), w.width);
        }
        for (const auto& [label, a] : s.amps) {
            std::string l;
            for (auto [off, wd] : slices) {
                l += label.substr(static_cast<size_t>(off), static_cast<size_t>(wd));
            }
            out[l] += a;
        }
        return out;
    };
    auto a1 = canonical(s1, w1);
    auto a2 = canonical(s2, w1);
    Amp inner{0.0, 0.0};
    for (const auto& [label, v] : a1) {
        auto it = a2.find(label);
        if (it != a2.end()) {
            inner += std::conj(v) * it->second;
        }
    }
    return std::norm(inner);
}

std::pair<int, int> PauliFrame::get(WireId w) const {
    auto it = frame_.find(w.id);
    if (it == frame_.end()) {
        return {0, 0};
    }
    return it->second;
}

void PauliFrame::undo(StateBag& bag, const std::vector<WireId>& wires) {
    for (const auto& w : wires) {
        auto [x, z] = get(w);
        if (z) {
            bag.apply_gate(Gate::Z, w);
        }
        if (x) {
            bag.apply_gate(Gate::X, w);
        }
        frame_.erase(w.id);
    }
}

nlohmann::json blob_to_json(const SparseState& s) {
    nlohmann::json j;
    j["wires"] = nlohmann::json::array();
    for (const auto& w : s.wires) {
        j["wires"].push_back({{"id", w.id}, {"width", w.width}});
    }
    nlohmann::json amps = nlohmann::json::object();
    std::map<std::string, Amp> ordered(s.amps.begin(), s.amps.end());
    for (const auto& [label, a] : ordered) {
        amps[label] = {a.real(), a.imag()};
    }
    j["amps"] = amps;
    return j;
}

bool self_test() {
    const Gate all[] = {Gate::H, Gate::P, Gate::Pdg, Gate::T, Gate::Tdg, Gate::X, Gate::Z};
    for (Gate g : all) {
        GateMatrix m = matrix_of(g);
        // G Gdag = I entrywise.
        Amp r00 = m.m00 * std::conj(m.m00) + m.m01 * std::conj(m.m01);
        Amp r01 = m.m00 * std::conj(m.m10) + m.m01 * std::conj(m.m11);
        Amp r10 = m.m10 * std::conj(m.m00) + m.m11 * std::conj(m.m01);
        Amp r11 = m.m10 * std::conj(m.m10) + m.m11 * std::conj(m.m11);
        if (std::abs(r00 - Amp{1, 0}) > 1e-15 || std::abs(r11 - Amp{1, 0}) > 1e-15 ||
            std::abs(r01) > 1e-15 || std::abs(r10) > 1e-15) {
            return false;
        }
    }
    return true;
}

}  // namespace qfhelab::sim
