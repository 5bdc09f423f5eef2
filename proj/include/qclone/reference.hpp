// reference.hpp
// Closed-form stage and branch states, written out directly as amplitude
// maps. These never touch the element machinery, so they serve as an
// independent reference path for checkpoint and branch verification.
#pragma once

#include "qclone/circuits.hpp"

namespace qclone::reference {

namespace detail {

// effective conclusive-branch weights after the filtering stage
struct Weights {
    double A = 0.0, B = 0.0, N = 0.0;
};

inline Weights filtered_weights(const CloneTask& t) {
    double n = std::pow(t.c_v * t.a(), 2) + std::pow(t.c_h * t.b(), 2);
    return {t.c_v * t.a() / std::sqrt(n), t.c_h * t.b() / std::sqrt(n), n};
}

}  // namespace detail

/// Photon-1 conditional states of the local circuit (i = 1..3), normalized
/// for i = 1, carrying their natural branch weights for i = 2, 3. Built on a
/// single-photon registry holding paths {0, 1}.
inline PureState lpc_phi(RegistryPtr reg, const CloneTask& t, int i) {
    auto ang = CloningAngles::from_theta(t.theta);
    auto w = detail::filtered_weights(t);
    const double inv = 1.0 / std::sqrt(2.0);
    PureState s(std::move(reg));
    if (i == 1) {
        s.add({"h", "0"}, ang.alpha);
        s.add({"v", "1"}, ang.beta);
        return s;
    }
    if (i != 2 && i != 3) throw std::out_of_range("lpc_phi: i must be 1..3");
    double u = i == 2 ? t.sign : -t.sign;
    s.add({"h", "0"}, w.A * ang.alpha_tilde * ang.alpha);
    s.add({"v", "1"}, w.A * ang.alpha_tilde * ang.beta);
    s.add({"h", "1"}, u * w.B * inv);
    s.add({"v", "0"}, u * w.B * inv);
    return s;
}

/// Stage states of the local circuit, k = 0..9, on its two-photon registry.
/// From the filtering stage on these are the normalized post-selected states.
inline PureState lpc_stage(RegistryPtr reg, const CloneTask& t, int k) {
    auto ang = CloningAngles::from_theta(t.theta);
    auto w = detail::filtered_weights(t);
    const double a = t.a(), b = t.b(), s = t.sign;
    const double inv = 1.0 / std::sqrt(2.0);
    PureState st(reg);
    switch (k) {
        case 0:
            st.add({"h", "0", "h", "0"}, t.c_h);
            st.add({"v", "1", "v", "1"}, t.c_v);
            return st;
        case 1:
            st.add({"h", "0", "h", "0"}, t.c_h);
            st.add({"h", "1", "v", "1"}, t.c_v);
            return st;
        case 2:
            st.add({"h", "0", "h", "0"}, a * t.c_h);
            st.add({"h", "1", "v", "1"}, a * t.c_v);
            st.add({"v", "0", "h", "0"}, s * b * t.c_h);
            st.add({"v", "1", "v", "1"}, s * b * t.c_v);
            return st;
        case 3:
            st.add({"h", "1", "v", "1"}, w.A);
            st.add({"v", "0", "h", "0"}, s * w.B);
            return st;
        case 4:
            st.add({"h", "1", "v", "1"}, w.A * ang.alpha);
            st.add({"v", "1", "v", "1"}, w.A * ang.beta);
            st.add({"h", "0", "h", "0"}, s * w.B * inv);
            st.add({"v", "0", "h", "0"}, s * w.B * inv);
            return st;
        case 5:
            st.add({"h", "0", "v", "1"}, w.A * ang.alpha);
            st.add({"v", "1", "v", "1"}, w.A * ang.beta);
            st.add({"h", "1", "h", "0"}, s * w.B * inv);
            st.add({"v", "0", "h", "0"}, s * w.B * inv);
            return st;
        case 6:
            st.add({"h", "0", "h", "1"}, w.A * ang.alpha);
            st.add({"v", "1", "h", "1"}, w.A * ang.beta);
            st.add({"h", "1", "h", "0"}, s * w.B * inv);
            st.add({"v", "0", "h", "0"}, s * w.B * inv);
            return st;
        case 7:
        case 8: {
            const std::string up = k == 7 ? "1" : "0'";
            for (auto [p1, q1, c1] : {std::tuple{"h", "0", w.A * ang.alpha},
                                      std::tuple{"v", "1", w.A * ang.beta}}) {
                st.add({p1, q1, "h", up}, c1 * ang.alpha_tilde);
                st.add({p1, q1, "v", "1"}, c1 * ang.beta_tilde);
            }
            Complex ib{0.0, s * w.B * inv};
            st.add({"h", "1", "h", "0"}, ib);
            st.add({"v", "0", "h", "0"}, ib);
            return st;
        }
        case 9: {
            auto reg1 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
                {1, ModeKind::polarization, {"h", "v"}}, {1, ModeKind::path, {"0", "1"}}});
            auto add_product = [&](const PureState& ph1, Complex f, const char* pol2,
                                   const char* path2) {
                const auto& r1 = *ph1.registry();
                for (const auto& [code, amp] : ph1.amplitudes()) {
                    auto labels = r1.labels_of(code);
                    st.add({labels[0], labels[1], pol2, path2}, f * amp);
                }
            };
            add_product(lpc_phi(reg1, t, 1), w.A * ang.beta_tilde, "v", "1");
            add_product(lpc_phi(reg1, t, 2), Complex{0.0, inv}, "h", "a");
            add_product(lpc_phi(reg1, t, 3), inv, "h", "b");
            return st;
        }
        default:
            throw std::out_of_range("lpc_stage: k must be 0..9");
    }
}

/// Photon-2 conditional states of the nonlocal circuit (i = 1..6) on a
/// single-photon registry holding paths {0, 1}.
inline PureState nlopc_phi(RegistryPtr reg, const CloneTask& t, int i) {
    auto ang = CloningAngles::from_theta(t.theta);
    const double a = t.a(), b = t.b(), s = t.sign;
    const double inv = 1.0 / std::sqrt(2.0);
    PureState st(std::move(reg));
    auto add_copy_pair = [&](double f) {
        st.add({"h", "0"}, f * ang.alpha);
        st.add({"v", "1"}, f * ang.beta);
    };
    auto add_uniform_pair = [&](double f) {
        st.add({"h", "1"}, f * inv);
        st.add({"v", "0"}, f * inv);
    };
    switch (i) {
        case 1: add_copy_pair(1.0); return st;
        case 2:
            add_copy_pair(a * t.c_v * ang.alpha_tilde);
            add_uniform_pair(s * b * t.c_h);
            return st;
        case 3:
            add_copy_pair(a * t.c_v * ang.alpha_tilde);
            add_uniform_pair(-s * b * t.c_h);
            return st;
        case 4: add_uniform_pair(1.0); return st;
        case 5:
            add_uniform_pair(a * t.c_h * ang.alpha_tilde);
            add_copy_pair(s * b * t.c_v);
            return st;
        case 6:
            add_uniform_pair(a * t.c_h * ang.alpha_tilde);
            add_copy_pair(-s * b * t.c_v);
            return st;
        default:
            throw std::out_of_range("nlopc_phi: i must be 1..6");
    }
}

/// Stage states of the nonlocal circuit, k = 0..3, on its two-photon
/// registry.
inline PureState nlopc_stage(RegistryPtr reg, const CloneTask& t, int k) {
    auto ang = CloningAngles::from_theta(t.theta);
    const double a = t.a(), b = t.b(), s = t.sign;
    const double inv = 1.0 / std::sqrt(2.0);
    PureState st(reg);
    auto add_pair2 = [&](const char* pol1, const char* path1, Complex f, bool copy_pair) {
        if (copy_pair) {
            st.add({pol1, path1, "h", "0"}, f * ang.alpha);
            st.add({pol1, path1, "v", "1"}, f * ang.beta);
        } else {
            st.add({pol1, path1, "h", "1"}, f * inv);
            st.add({pol1, path1, "v", "0"}, f * inv);
        }
    };
    switch (k) {
        case 0:
            st.add({"h", "0", "h", "0"}, t.c_h);
            st.add({"v", "1", "v", "1"}, t.c_v);
            return st;
        case 1:
            st.add({"h", "0", "h", "0"}, a * t.c_h);
            st.add({"h", "1", "v", "1"}, a * t.c_v);
            st.add({"v", "0", "h", "0"}, s * b * t.c_h);
            st.add({"v", "1", "v", "1"}, s * b * t.c_v);
            return st;
        case 2:
            add_pair2("h", "1", a * t.c_v, true);
            add_pair2("h", "0", s * b * t.c_h, false);
            add_pair2("h", "0~", a * t.c_h, false);
            add_pair2("h", "1~", s * b * t.c_v, true);
            return st;
        case 3: {
            auto reg2 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
                {2, ModeKind::polarization, {"h", "v"}}, {2, ModeKind::path, {"0", "1"}}});
            auto add_product = [&](const char* pol1, const char* path1, Complex f,
                                   const PureState& ph2) {
                const auto& r2 = *ph2.registry();
                for (const auto& [code, amp] : ph2.amplitudes()) {
                    auto labels = r2.labels_of(code);
                    st.add({pol1, path1, labels[0], labels[1]}, f * amp);
                }
            };
            Complex iinv{0.0, inv};
            add_product("v", "1", a * t.c_v * ang.beta_tilde, nlopc_phi(reg2, t, 1));
            add_product("h", "a", iinv, nlopc_phi(reg2, t, 2));
            add_product("h", "b", inv, nlopc_phi(reg2, t, 3));
            add_product("v", "0~", a * t.c_h * ang.beta_tilde, nlopc_phi(reg2, t, 4));
            add_product("h", "c", iinv, nlopc_phi(reg2, t, 5));
            add_product("h", "d", inv, nlopc_phi(reg2, t, 6));
            return st;
        }
        default:
            throw std::out_of_range("nlopc_stage: k must be 0..3");
    }
}

/// Discrimination input pair: |alpha+->|0> = (c_v|h> +- c_h|v>)|0> or the
/// tilde pair (c_h|h> +- c_v|v>)|1>, on a single-photon registry.
inline PureState alpha_pair(RegistryPtr reg, const CloneTask& t, bool tilde, int sign) {
    PureState st(std::move(reg));
    if (!tilde) {
        st.add({"h", "0"}, t.c_v);
        st.add({"v", "0"}, sign * t.c_h);
    } else {
        st.add({"h", "1"}, t.c_h);
        st.add({"v", "1"}, sign * t.c_v);
    }
    return st;
}

/// Output of the discrimination stage on the primary conclusive branch:
/// clone term plus the two inconclusive ports (unnormalized, per unit input).
inline PureState corrected_phi2(RegistryPtr reg, const CloneTask& t) {
    const double a = t.a(), b = t.b(), s = t.sign;
    const double inv2a = 1.0 / (std::sqrt(2.0) * a);
    const double root = std::sqrt(std::max(0.0, t.c_v * t.c_v - t.c_h * t.c_h));
    PureState st(std::move(reg));
    st.add({"h", "0'"}, t.c_h * inv2a * a * a);
    st.add({"h", "1'"}, s * t.c_h * inv2a * a * b);
    st.add({"v", "0'"}, s * t.c_h * inv2a * a * b);
    st.add({"v", "1'"}, t.c_h * inv2a * b * b);
    st.add({"v", "2'"}, root * inv2a * a * a);
    st.add({"h", "3'"}, root * inv2a * b * b);
    return st;
}

/// The channel-independent inconclusive state of the discrimination stage,
/// normalized.
inline PureState usd_failure_state(RegistryPtr reg, const CloneTask& t) {
    const double a2 = t.a() * t.a(), b2 = t.b() * t.b();
    const double norm = std::sqrt(a2 * a2 + b2 * b2);
    PureState st(std::move(reg));
    st.add({"v", "2'"}, a2 / norm);
    st.add({"h", "3'"}, b2 / norm);
    return st;
}

}  // namespace qclone::reference
