// elements.hpp
// Optical elements as validated isometric linear maps acting on one photon's
// (polarization, path) pair. Blocked or filtered amplitude is never dropped:
// lossy elements route it to an explicit "loss" path label so that total
// probability over all branches, loss included, stays exactly 1.
#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qclone/state.hpp"

namespace qclone {

using Matrix2 = std::array<std::array<Complex, 2>, 2>;  // [row][col], h = 0, v = 1

inline Matrix2 pauli_x() { return {{{0.0, 1.0}, {1.0, 0.0}}}; }
inline Matrix2 identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

/// Half-wave plate at physical tilt angle (radians, within [0, pi/2]):
/// [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
inline Matrix2 hwp_jones(double tilt) {
    if (tilt < -kExactTol || tilt > M_PI / 2 + kExactTol)
        throw std::invalid_argument("hwp_jones: tilt outside [0, pi/2]");
    double c = std::cos(2 * tilt), s = std::sin(2 * tilt);
    return {{{c, s}, {s, -c}}};
}

/// Reflection-form plate matrix [[c, s], [s, -c]] from exact column entries.
inline Matrix2 hwp_reflection(double c, double s) {
    if (std::abs(c * c + s * s - 1.0) > kExactTol)
        throw std::invalid_argument("hwp_reflection: column not unit length");
    return {{{c, s}, {s, -c}}};
}

inline bool is_unitary(const Matrix2& u, double tol = kExactTol) {
    Complex c00 = std::conj(u[0][0]) * u[0][0] + std::conj(u[1][0]) * u[1][0];
    Complex c11 = std::conj(u[0][1]) * u[0][1] + std::conj(u[1][1]) * u[1][1];
    Complex c01 = std::conj(u[0][0]) * u[0][1] + std::conj(u[1][0]) * u[1][1];
    return std::abs(c00 - 1.0) < tol && std::abs(c11 - 1.0) < tol && std::abs(c01) < tol;
}

struct ValidationReport {
    std::string element;
    bool lossy = false;
    double max_deviation = 0.0;  // worst |(E^dag E - I)| entry over the full space
    bool ok = false;
};

struct ColumnEntry {
    std::string pol_in, path_in;
    struct Out {
        std::string pol_out, path_out;
        Complex coeff;
    };
    std::vector<Out> outs;
};

// A named linear map on one photon's (polarization, path) space. Inputs
// without a declared column are passed through unchanged.
class LinearElement {
public:
    const std::string& name() const { return name_; }
    int photon() const { return photon_; }
    bool lossy() const { return lossy_; }
    const RegistryPtr& registry() const { return registry_; }

    static LinearElement from_action(RegistryPtr reg, int photon, std::string name,
                                     const std::vector<ColumnEntry>& columns,
                                     bool lossy = false) {
        LinearElement e;
        e.registry_ = std::move(reg);
        e.photon_ = photon;
        e.name_ = std::move(name);
        e.lossy_ = lossy;
        e.pol_mode_ = e.registry_->index_of(photon, ModeKind::polarization);
        e.path_mode_ = e.registry_->index_of(photon, ModeKind::path);
        e.npaths_ = e.registry_->radix(e.path_mode_);
        for (const auto& col : columns) {
            std::uint32_t in = e.local_code(col.pol_in, col.path_in);
            if (e.columns_.count(in))
                throw std::invalid_argument(e.name_ + ": duplicate column for (" +
                                            col.pol_in + ", " + col.path_in + ")");
            std::vector<std::pair<std::uint32_t, Complex>> outs;
            for (const auto& o : col.outs)
                outs.emplace_back(e.local_code(o.pol_out, o.path_out), o.coeff);
            e.columns_[in] = std::move(outs);
        }
        for (const auto& [in, outs] : e.columns_)
            for (const auto& [out, c] : outs) e.output_support_.insert(out);
        return e;
    }

    /// Polarization unitary applied on one path (or every path).
    static LinearElement hwp(RegistryPtr reg, int photon, const std::string& path_condition,
                             const Matrix2& u, std::string name = "hwp") {
        if (!is_unitary(u)) throw std::invalid_argument(name + ": matrix not unitary");
        const auto& path_mode = reg->mode(reg->index_of(photon, ModeKind::path));
        std::vector<std::string> paths;
        if (path_condition == "all")
            paths = path_mode.labels;
        else
            paths = {path_condition};
        std::vector<ColumnEntry> cols;
        const std::array<std::string, 2> pol{"h", "v"};
        for (const auto& p : paths) {
            for (int j = 0; j < 2; ++j) {
                ColumnEntry col{pol[j], p, {}};
                for (int r = 0; r < 2; ++r)
                    if (std::abs(u[r][j]) > 0.0) col.outs.push_back({pol[r], p, u[r][j]});
                cols.push_back(col);
            }
        }
        return from_action(std::move(reg), photon, std::move(name), cols);
    }

    /// Path relabeling conditional on polarization. `routing` maps
    /// (polarization label, input path) to an output path; unrouted inputs
    /// pass through.
    static LinearElement pbs(
        RegistryPtr reg, int photon,
        const std::map<std::pair<std::string, std::string>, std::string>& routing,
        std::string name = "pbs") {
        std::set<std::pair<std::string, std::string>> targets;
        for (const auto& [in, out] : routing)
            if (!targets.insert({in.first, out}).second)
                throw std::invalid_argument(name + ": routing not injective per polarization");
        std::vector<ColumnEntry> cols;
        for (const auto& [in, out] : routing)
            cols.push_back({in.first, in.second, {{in.first, out, 1.0}}});
        return from_action(std::move(reg), photon, std::move(name), cols);
    }

    /// 50/50 beam splitter merging two paths:
    /// |p> -> (|r> + i|t>)/sqrt(2), |q> -> (i|r> + |t>)/sqrt(2).
    static LinearElement beam_splitter(RegistryPtr reg, int photon, const std::string& p,
                                       const std::string& q, const std::string& r,
                                       const std::string& t, std::string name = "bs") {
        std::set<std::string> distinct{p, q, r, t};
        if (distinct.size() != 4)
            throw std::invalid_argument(name + ": beam splitter labels must be distinct");
        const double inv = 1.0 / std::sqrt(2.0);
        const Complex i_inv{0.0, inv};
        std::vector<ColumnEntry> cols;
        for (const std::string pol : {"h", "v"}) {
            cols.push_back({pol, p, {{pol, r, inv}, {pol, t, i_inv}}});
            cols.push_back({pol, q, {{pol, r, i_inv}, {pol, t, inv}}});
        }
        return from_action(std::move(reg), photon, std::move(name), cols);
    }

    /// Polarization filter on one path; the blocked polarization is routed to
    /// the "loss" path label.
    static LinearElement polarizer(RegistryPtr reg, int photon, const std::string& path,
                                   const std::string& pass_pol, std::string name = "pol") {
        std::string blocked = pass_pol == "h" ? "v" : "h";
        if (pass_pol != "h" && pass_pol != "v")
            throw std::invalid_argument(name + ": pass polarization must be h or v");
        std::vector<ColumnEntry> cols;
        cols.push_back({pass_pol, path, {{pass_pol, path, 1.0}}});
        cols.push_back({blocked, path, {{blocked, "loss", 1.0}}});
        return from_action(std::move(reg), photon, std::move(name), cols, /*lossy=*/true);
    }

    /// Multiplies amplitudes on one path by e^{i phase}.
    static LinearElement phase_retarder(RegistryPtr reg, int photon, const std::string& path,
                                        double phase, std::string name = "retarder") {
        Complex f = std::exp(Complex{0.0, phase});
        std::vector<ColumnEntry> cols;
        for (const std::string pol : {"h", "v"})
            cols.push_back({pol, path, {{pol, path, f}}});
        return from_action(std::move(reg), photon, std::move(name), cols);
    }

    PureState apply(const PureState& s) const {
        if (*s.registry() != *registry_)
            throw std::invalid_argument(name_ + ": registry mismatch");
        PureState out(s.registry());
        for (const auto& [ket, amp] : s.amplitudes()) {
            auto idx = registry_->unpack(ket);
            std::uint32_t in = idx[pol_mode_] * npaths_ + idx[path_mode_];
            auto it = columns_.find(in);
            if (it == columns_.end()) {
                if (output_support_.count(in))
                    throw std::logic_error(name_ +
                                           ": pass-through input collides with an output port");
                out.accumulate_raw(ket, amp);
                continue;
            }
            for (const auto& [local_out, coeff] : it->second) {
                auto oidx = idx;
                oidx[pol_mode_] = local_out / npaths_;
                oidx[path_mode_] = local_out % npaths_;
                out.accumulate_raw(registry_->pack(oidx), coeff * amp);
            }
        }
        out.prune();
        return out;
    }

    /// Isometry check on the element's domain: declared columns together with
    /// every pass-through input that cannot collide with an output port
    /// (colliding pass-through inputs are rejected at apply time, so they lie
    /// outside the domain). Reports, never throws.
    ValidationReport validate() const {
        std::uint32_t n = 2 * npaths_;
        std::vector<std::vector<Complex>> cols;
        for (std::uint32_t j = 0; j < n; ++j) {
            std::vector<Complex> col(n, 0.0);
            auto it = columns_.find(j);
            if (it == columns_.end()) {
                if (output_support_.count(j)) continue;
                col[j] = 1.0;
            } else {
                for (const auto& [o, c] : it->second) col[o] += c;
            }
            cols.push_back(std::move(col));
        }
        double dev = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            for (std::size_t k = 0; k < cols.size(); ++k) {
                Complex g{0.0, 0.0};
                for (std::uint32_t r = 0; r < n; ++r) g += std::conj(cols[j][r]) * cols[k][r];
                double want = j == k ? 1.0 : 0.0;
                dev = std::max(dev, std::abs(g - want));
            }
        }
        return {name_, lossy_, dev, dev < kExactTol};
    }

    std::vector<ColumnEntry> columns_labeled() const {
        std::vector<ColumnEntry> out;
        const auto& pol_labels = registry_->mode(pol_mode_).labels;
        const auto& path_labels = registry_->mode(path_mode_).labels;
        for (const auto& [in, outs] : columns_) {
            ColumnEntry col{pol_labels[in / npaths_], path_labels[in % npaths_], {}};
            for (const auto& [o, c] : outs)
                col.outs.push_back({pol_labels[o / npaths_], path_labels[o % npaths_], c});
            out.push_back(col);
        }
        return out;
    }

private:
    std::uint32_t local_code(const std::string& pol, const std::string& path) const {
        std::uint32_t pi = registry_->label_index(pol_mode_, pol);
        std::uint32_t qi = registry_->label_index(path_mode_, path);
        return pi * npaths_ + qi;
    }

    std::string name_;
    int photon_ = 1;
    bool lossy_ = false;
    RegistryPtr registry_;
    std::size_t pol_mode_ = 0, path_mode_ = 0;
    std::uint32_t npaths_ = 0;
    std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, Complex>>> columns_;
    std::set<std::uint32_t> output_support_;
};

inline PureState apply(const LinearElement& e, const PureState& s) { return e.apply(s); }

inline ValidationReport validate(const LinearElement& e) { return e.validate(); }

}  // namespace qclone
