// state.hpp
// Sparse complex state vectors over labeled optical modes (polarization and
// propagation path of two photons). A state's squared norm carries the
// probability of the post-selection branch it describes, so projections stay
// unnormalized until a branch probability is read off. States are immutable
// values; every operation returns a new state.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace qclone {

using Complex = std::complex<double>;

/// Amplitudes with |a| below this are dropped from the sparse map.
inline constexpr double kPruneTol = 1e-14;
/// Tolerance for exact-identity checks (norms, probabilities, isometries).
inline constexpr double kExactTol = 1e-12;
/// Singular values below this count as zero in Schmidt decompositions;
/// a product state therefore reports a single coefficient.
inline constexpr double kSchmidtTol = 1e-12;

enum class ModeKind { polarization, path };

inline const char* to_string(ModeKind k) {
    return k == ModeKind::polarization ? "polarization" : "path";
}

struct Mode {
    int photon = 0;  // 1 or 2
    ModeKind kind = ModeKind::polarization;
    std::vector<std::string> labels;
};

// Ordered collection of modes. Canonical order is (photon 1 polarization,
// photon 1 path, photon 2 polarization, photon 2 path); basis kets are
// enumerated lexicographically in that order with alphabets as declared.
class ModeRegistry {
public:
    explicit ModeRegistry(std::vector<Mode> modes) : modes_(std::move(modes)) {
        std::sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
            if (a.photon != b.photon) return a.photon < b.photon;
            return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        });
        validate();
    }

    /// Two photons, fixed {h, v} polarization alphabets, circuit-specific
    /// path alphabets.
    static std::shared_ptr<const ModeRegistry> two_photon(
        std::vector<std::string> paths1, std::vector<std::string> paths2) {
        std::vector<Mode> m;
        m.push_back({1, ModeKind::polarization, {"h", "v"}});
        m.push_back({1, ModeKind::path, std::move(paths1)});
        m.push_back({2, ModeKind::polarization, {"h", "v"}});
        m.push_back({2, ModeKind::path, std::move(paths2)});
        return std::make_shared<const ModeRegistry>(std::move(m));
    }

    std::size_t size() const { return modes_.size(); }
    const Mode& mode(std::size_t i) const { return modes_.at(i); }

    std::size_t index_of(int photon, ModeKind kind) const {
        for (std::size_t i = 0; i < modes_.size(); ++i)
            if (modes_[i].photon == photon && modes_[i].kind == kind) return i;
        throw std::invalid_argument("ModeRegistry: no mode for photon " +
                                    std::to_string(photon) + " kind " + to_string(kind));
    }

    bool has(int photon, ModeKind kind) const {
        for (const auto& m : modes_)
            if (m.photon == photon && m.kind == kind) return true;
        return false;
    }

    std::uint32_t radix(std::size_t i) const {
        return static_cast<std::uint32_t>(modes_.at(i).labels.size());
    }

    std::uint32_t dim() const {
        std::uint32_t d = 1;
        for (std::size_t i = 0; i < modes_.size(); ++i) d *= radix(i);
        return d;
    }

    std::uint32_t label_index(std::size_t mode, const std::string& label) const {
        const auto& ls = modes_.at(mode).labels;
        auto it = std::find(ls.begin(), ls.end(), label);
        if (it == ls.end())
            throw std::invalid_argument("unknown label '" + label + "' for mode " +
                                        std::to_string(mode));
        return static_cast<std::uint32_t>(it - ls.begin());
    }

    std::uint32_t pack(const std::vector<std::uint32_t>& idx) const {
        if (idx.size() != modes_.size())
            throw std::invalid_argument("basis ket arity mismatch");
        std::uint32_t code = 0;
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            if (idx[i] >= radix(i)) throw std::out_of_range("label index out of range");
            code = code * radix(i) + idx[i];
        }
        return code;
    }

    std::vector<std::uint32_t> unpack(std::uint32_t code) const {
        std::vector<std::uint32_t> idx(modes_.size());
        for (std::size_t i = modes_.size(); i-- > 0;) {
            idx[i] = code % radix(i);
            code /= radix(i);
        }
        return idx;
    }

    std::vector<std::string> labels_of(std::uint32_t code) const {
        auto idx = unpack(code);
        std::vector<std::string> out(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = modes_[i].labels[idx[i]];
        return out;
    }

    bool operator==(const ModeRegistry& o) const {
        if (modes_.size() != o.modes_.size()) return false;
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            if (modes_[i].photon != o.modes_[i].photon) return false;
            if (modes_[i].kind != o.modes_[i].kind) return false;
            if (modes_[i].labels != o.modes_[i].labels) return false;
        }
        return true;
    }
    bool operator!=(const ModeRegistry& o) const { return !(*this == o); }

private:
    void validate() const {
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            const auto& m = modes_[i];
            if (m.photon != 1 && m.photon != 2)
                throw std::invalid_argument("photon id must be 1 or 2");
            if (m.labels.empty()) throw std::invalid_argument("empty mode alphabet");
            for (std::size_t a = 0; a < m.labels.size(); ++a)
                for (std::size_t b = a + 1; b < m.labels.size(); ++b)
                    if (m.labels[a] == m.labels[b])
                        throw std::invalid_argument("duplicate label '" + m.labels[a] + "'");
            if (m.kind == ModeKind::polarization &&
                m.labels != std::vector<std::string>{"h", "v"})
                throw std::invalid_argument("polarization alphabet must be {h, v}");
            for (std::size_t j = i + 1; j < modes_.size(); ++j)
                if (modes_[j].photon == m.photon && modes_[j].kind == m.kind)
                    throw std::invalid_argument("duplicate (photon, kind) mode");
        }
    }

    std::vector<Mode> modes_;
};

using RegistryPtr = std::shared_ptr<const ModeRegistry>;

class PureState {
public:
    explicit PureState(RegistryPtr registry) : registry_(std::move(registry)) {
        if (!registry_) throw std::invalid_argument("null registry");
    }

    static PureState basis_ket(RegistryPtr registry, const std::vector<std::string>& labels,
                               Complex amp = 1.0) {
        PureState s(std::move(registry));
        s.add(labels, amp);
        return s;
    }

    /// Accumulate an amplitude onto the basis ket given by one label per mode
    /// (canonical mode order).
    PureState& add(const std::vector<std::string>& labels, Complex amp) {
        const auto& reg = *registry_;
        if (labels.size() != reg.size())
            throw std::invalid_argument("expected one label per mode");
        std::vector<std::uint32_t> idx(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            idx[i] = reg.label_index(i, labels[i]);
        amps_[reg.pack(idx)] += amp;
        return *this;
    }

    const RegistryPtr& registry() const { return registry_; }
    const std::map<std::uint32_t, Complex>& amplitudes() const { return amps_; }
    bool empty() const { return amps_.empty(); }
    std::size_t term_count() const { return amps_.size(); }

    Complex amplitude(const std::vector<std::string>& labels) const {
        const auto& reg = *registry_;
        std::vector<std::uint32_t> idx(labels.size());
        if (labels.size() != reg.size())
            throw std::invalid_argument("expected one label per mode");
        for (std::size_t i = 0; i < labels.size(); ++i)
            idx[i] = reg.label_index(i, labels[i]);
        auto it = amps_.find(reg.pack(idx));
        return it == amps_.end() ? Complex{0.0, 0.0} : it->second;
    }

    double norm2() const {
        double n = 0.0;
        for (const auto& [k, a] : amps_) n += std::norm(a);
        return n;
    }

    PureState scaled(Complex f) const {
        PureState out(registry_);
        for (const auto& [k, a] : amps_) out.amps_[k] = f * a;
        out.prune();
        return out;
    }

    PureState& accumulate(const PureState& other, Complex f = 1.0) {
        if (*registry_ != *other.registry_)
            throw std::invalid_argument("registry mismatch");
        for (const auto& [k, a] : other.amps_) amps_[k] += f * a;
        prune();
        return *this;
    }

    void prune(double tol = kPruneTol) {
        for (auto it = amps_.begin(); it != amps_.end();) {
            if (std::abs(it->second) < tol)
                it = amps_.erase(it);
            else
                ++it;
        }
    }

    void set_raw(std::uint32_t code, Complex a) { amps_[code] = a; }
    void accumulate_raw(std::uint32_t code, Complex a) { amps_[code] += a; }

private:
    RegistryPtr registry_;
    std::map<std::uint32_t, Complex> amps_;  // packed ket -> amplitude
};

inline PureState tensor(const PureState& s1, const PureState& s2) {
    const auto& r1 = *s1.registry();
    const auto& r2 = *s2.registry();
    std::vector<Mode> merged;
    for (std::size_t i = 0; i < r1.size(); ++i) merged.push_back(r1.mode(i));
    for (std::size_t j = 0; j < r2.size(); ++j) {
        const auto& m = r2.mode(j);
        if (r1.has(m.photon, m.kind))
            throw std::invalid_argument("tensor: overlapping mode registries");
        merged.push_back(m);
    }
    auto reg = std::make_shared<const ModeRegistry>(std::move(merged));
    PureState out(reg);
    for (const auto& [k1, a1] : s1.amplitudes()) {
        auto labels1 = r1.labels_of(k1);
        for (const auto& [k2, a2] : s2.amplitudes()) {
            auto labels2 = r2.labels_of(k2);
            // recompose in the merged registry's canonical order
            std::vector<std::uint32_t> idx(reg->size());
            for (std::size_t i = 0; i < reg->size(); ++i) {
                const auto& m = reg->mode(i);
                if (r1.has(m.photon, m.kind))
                    idx[i] = reg->label_index(i, labels1[r1.index_of(m.photon, m.kind)]);
                else
                    idx[i] = reg->label_index(i, labels2[r2.index_of(m.photon, m.kind)]);
            }
            out.set_raw(reg->pack(idx), a1 * a2);
        }
    }
    out.prune();
    return out;
}

/// Conjugate-linear in the first argument.
inline Complex inner_product(const PureState& s1, const PureState& s2) {
    if (*s1.registry() != *s2.registry())
        throw std::invalid_argument("inner_product: registry mismatch");
    Complex acc{0.0, 0.0};
    const auto& a = s1.amplitudes();
    const auto& b = s2.amplitudes();
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (it != b.end()) acc += std::conj(v) * it->second;
    }
    return acc;
}

/// Unnormalized conditional state; its squared norm is the joint probability
/// of finding `label` on the given mode.
inline PureState project(const PureState& s, int photon, ModeKind kind,
                         const std::string& label) {
    const auto& reg = *s.registry();
    std::size_t mi = reg.index_of(photon, kind);
    std::uint32_t li = reg.label_index(mi, label);
    PureState out(s.registry());
    for (const auto& [k, a] : s.amplitudes())
        if (reg.unpack(k)[mi] == li) out.set_raw(k, a);
    return out;
}

/// Projection onto the subspace spanned by several labels of one mode.
inline PureState project_any(const PureState& s, int photon, ModeKind kind,
                             const std::vector<std::string>& labels) {
    const auto& reg = *s.registry();
    std::size_t mi = reg.index_of(photon, kind);
    std::vector<std::uint32_t> lis;
    for (const auto& l : labels) lis.push_back(reg.label_index(mi, l));
    PureState out(s.registry());
    for (const auto& [k, a] : s.amplitudes()) {
        auto v = reg.unpack(k)[mi];
        if (std::find(lis.begin(), lis.end(), v) != lis.end()) out.set_raw(k, a);
    }
    return out;
}

/// Complement of project(): drops every ket carrying `label` on the mode.
inline PureState remove_label(const PureState& s, int photon, ModeKind kind,
                              const std::string& label) {
    const auto& reg = *s.registry();
    std::size_t mi = reg.index_of(photon, kind);
    std::uint32_t li = reg.label_index(mi, label);
    PureState out(s.registry());
    for (const auto& [k, a] : s.amplitudes())
        if (reg.unpack(k)[mi] != li) out.set_raw(k, a);
    return out;
}

/// Returns the unit-norm state and the prior squared norm (the branch
/// probability accumulated so far).
inline std::pair<PureState, double> normalize(const PureState& s) {
    double n2 = s.norm2();
    if (n2 <= 0.0) throw std::domain_error("normalize: zero state");
    return {s.scaled(1.0 / std::sqrt(n2)), n2};
}

/// |<target|s>|^2. Both states must be normalized; invariant under a global
/// phase of either argument.
inline double fidelity_to(const PureState& s, const PureState& target) {
    if (std::abs(s.norm2() - 1.0) > 1e-9 || std::abs(target.norm2() - 1.0) > 1e-9)
        throw std::invalid_argument("fidelity_to: unnormalized input");
    return std::norm(inner_product(target, s));
}

/// Schmidt coefficients of a normalized state across the bipartition given by
/// a subset of modes. Non-negative, descending; squares sum to 1. Values
/// below kSchmidtTol are dropped, so a product state returns {1}.
inline std::vector<double> schmidt_coefficients(
    const PureState& s, const std::vector<std::pair<int, ModeKind>>& bipartition) {
    if (bipartition.empty())
        throw std::invalid_argument("schmidt_coefficients: empty bipartition");
    if (std::abs(s.norm2() - 1.0) > 1e-9)
        throw std::invalid_argument("schmidt_coefficients: state not normalized");
    const auto& reg = *s.registry();
    std::vector<bool> in_a(reg.size(), false);
    for (auto [p, k] : bipartition) in_a[reg.index_of(p, k)] = true;
    std::uint32_t da = 1, db = 1;
    for (std::size_t i = 0; i < reg.size(); ++i) (in_a[i] ? da : db) *= reg.radix(i);
    if (db == 1) throw std::invalid_argument("schmidt_coefficients: bipartition covers all modes");

    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(da, db);
    for (const auto& [k, a] : s.amplitudes()) {
        auto idx = reg.unpack(k);
        std::uint32_t ra = 0, rb = 0;
        for (std::size_t i = 0; i < reg.size(); ++i) {
            if (in_a[i])
                ra = ra * reg.radix(i) + idx[i];
            else
                rb = rb * reg.radix(i) + idx[i];
        }
        m(ra, rb) = a;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    std::vector<double> out;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        double v = svd.singularValues()(i);
        if (v > kSchmidtTol) out.push_back(v);
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

/// Extracts the factor living on `photon` when every other mode is in one
/// definite basis assignment (true for any post-detection branch).
inline PureState factor_photon(const PureState& s, int photon) {
    const auto& reg = *s.registry();
    if (s.empty()) throw std::domain_error("factor_photon: zero state");
    std::vector<Mode> kept;
    std::vector<std::size_t> kept_idx, other_idx;
    for (std::size_t i = 0; i < reg.size(); ++i) {
        if (reg.mode(i).photon == photon) {
            kept.push_back(reg.mode(i));
            kept_idx.push_back(i);
        } else {
            other_idx.push_back(i);
        }
    }
    if (kept.empty()) throw std::invalid_argument("factor_photon: photon not in registry");
    auto first = reg.unpack(s.amplitudes().begin()->first);
    for (const auto& [k, a] : s.amplitudes()) {
        auto idx = reg.unpack(k);
        for (std::size_t i : other_idx)
            if (idx[i] != first[i])
                throw std::domain_error("factor_photon: other photon not in a definite ket");
    }
    auto out_reg = std::make_shared<const ModeRegistry>(std::move(kept));
    PureState out(out_reg);
    for (const auto& [k, a] : s.amplitudes()) {
        auto idx = reg.unpack(k);
        std::vector<std::uint32_t> oidx;
        for (std::size_t i : kept_idx) oidx.push_back(idx[i]);
        out.set_raw(out_reg->pack(oidx), a);
    }
    return out;
}

/// Rebuilds the state over a different registry with the same (photon, kind)
/// modes, matching kets by label. Used to compare states produced by circuits
/// with different path alphabets.
inline PureState reindexed(const PureState& s, RegistryPtr target) {
    const auto& src = *s.registry();
    const auto& dst = *target;
    if (src.size() != dst.size())
        throw std::invalid_argument("reindexed: mode count mismatch");
    PureState out(target);
    for (const auto& [k, a] : s.amplitudes()) {
        auto labels = src.labels_of(k);
        std::vector<std::uint32_t> idx(dst.size());
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const auto& m = src.mode(i);
            std::size_t j = dst.index_of(m.photon, m.kind);
            idx[j] = dst.label_index(j, labels[i]);
        }
        out.set_raw(dst.pack(idx), a);
    }
    return out;
}

}  // namespace qclone
