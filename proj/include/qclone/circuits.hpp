// circuits.hpp
// The three cloning experiments assembled stage by stage from optical
// elements, with per-stage checkpoint states, detector-branch bookkeeping,
// the recovery unitary, and the conditional-interferometer discrimination
// stage that turns partially entangled channels into perfect clones.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qclone/elements.hpp"

namespace qclone {

// ---------------------------------------------------------------------------
// Problem instance and derived plate settings
// ---------------------------------------------------------------------------

struct CloneTask {
    double theta = 0.0;  // input-pair angle, radians, in (0, pi/2]
    int sign = +1;       // selects which of the two nonorthogonal inputs
    double c_h = 0.0;    // channel Schmidt coefficients, c_h <= c_v
    double c_v = 0.0;

    double a() const { return std::cos(theta / 2); }
    double b() const { return std::sin(theta / 2); }
    bool maximal() const { return std::abs(c_h - 1.0 / std::sqrt(2.0)) <= kExactTol; }

    static CloneTask make(double theta, int sign, double c_h) {
        if (!(c_h >= 0.0 && c_h <= 1.0 / std::sqrt(2.0) + kExactTol))
            throw std::invalid_argument("CloneTask: need 0 <= c_h <= c_v");
        return make_full(theta, sign, c_h, std::sqrt(std::max(0.0, 1.0 - c_h * c_h)));
    }

    static CloneTask make_full(double theta, int sign, double c_h, double c_v) {
        if (!(theta > 0.0 && theta <= M_PI / 2 + kExactTol))
            throw std::invalid_argument("CloneTask: theta outside (0, pi/2]");
        if (sign != +1 && sign != -1)
            throw std::invalid_argument("CloneTask: sign must be +1 or -1");
        if (std::abs(c_h * c_h + c_v * c_v - 1.0) > kExactTol)
            throw std::invalid_argument("CloneTask: c_h^2 + c_v^2 must be 1");
        if (c_h < -kExactTol || c_h > c_v + kExactTol)
            throw std::invalid_argument("CloneTask: need 0 <= c_h <= c_v");
        return {theta, sign, c_h, c_v};
    }
};

// alpha, beta fix the copy-branch weights; alpha~, beta~ the ancilla split.
struct CloningAngles {
    double alpha = 0.0, beta = 0.0, alpha_tilde = 0.0, beta_tilde = 0.0;

    static CloningAngles from_theta(double theta) {
        double t2 = std::pow(std::tan(theta / 2), 2);
        double k = std::sqrt(1.0 + t2 * t2);
        CloningAngles c;
        c.alpha = 1.0 / k;
        c.beta = t2 / k;
        c.alpha_tilde = k / std::sqrt(2.0);
        c.beta_tilde = std::sqrt(std::max(0.0, 1.0 - t2 * t2) / 2.0);
        return c;
    }
};

// Plate angle of the conditional interferometers, gamma = arccos(c_h/c_v)/2.
struct CorrectionSpec {
    double gamma = 0.0;
    double chi = 0.0;

    static CorrectionSpec from_task(const CloneTask& t) {
        double r = t.c_v > 0.0 ? std::clamp(t.c_h / t.c_v, 0.0, 1.0) : 1.0;
        return {0.5 * std::acos(r), 0.0};
    }
};

// ---------------------------------------------------------------------------
// Branch bookkeeping
// ---------------------------------------------------------------------------

enum class BranchClass { success, success_after_ruo, failure, inconclusive, loss };

inline const char* to_string(BranchClass c) {
    switch (c) {
        case BranchClass::success: return "success";
        case BranchClass::success_after_ruo: return "success_after_ruo";
        case BranchClass::failure: return "failure";
        case BranchClass::inconclusive: return "inconclusive";
        case BranchClass::loss: return "loss";
    }
    return "?";
}

struct OutcomeBranch {
    std::string detector_label;
    PureState state;  // normalized conditional state (zero state if p == 0)
    double probability = 0.0;
    BranchClass classification = BranchClass::failure;
};

struct Stage {
    std::string name;
    std::vector<LinearElement> elements;
};

struct CircuitRun {
    std::string circuit;
    CloneTask task;
    bool corrected = false;
    RegistryPtr registry;
    int clone_photon = 1;       // photon carrying the clones at the output
    bool primed_output = false; // clone path encoding uses 0'/1' after the CIs
    std::vector<Stage> stages;
    std::vector<PureState> states;  // unnormalized state after each stage
    std::vector<OutcomeBranch> branches;
};

/// State after a given stage with any loss component removed, normalized.
inline PureState checkpoint(const CircuitRun& run, std::size_t index) {
    if (index >= run.states.size())
        throw std::out_of_range("checkpoint: stage index out of range");
    PureState s = run.states[index];
    const auto& reg = *run.registry;
    for (int photon : {1, 2}) {
        std::size_t mi = reg.index_of(photon, ModeKind::path);
        const auto& labels = reg.mode(mi).labels;
        if (std::find(labels.begin(), labels.end(), "loss") != labels.end())
            s = remove_label(s, photon, ModeKind::path, "loss");
    }
    return normalize(s).first;
}

inline std::vector<ValidationReport> validate_all(const CircuitRun& run) {
    std::vector<ValidationReport> out;
    for (const auto& st : run.stages)
        for (const auto& e : st.elements) out.push_back(e.validate());
    return out;
}

// ---------------------------------------------------------------------------
// Reference output targets
// ---------------------------------------------------------------------------

/// Perfect clone pair (a|h> +- b|v>)(a|p0> +- b|p1>) on a single-photon
/// registry; primed selects the interferometer output encoding 0'/1'.
inline PureState clone_target(RegistryPtr reg, const CloneTask& task, bool primed) {
    const double a = task.a(), b = task.b();
    const double s = task.sign;
    const std::string p0 = primed ? "0'" : "0";
    const std::string p1 = primed ? "1'" : "1";
    PureState t(std::move(reg));
    t.add({"h", p0}, a * a);
    t.add({"h", p1}, s * a * b);
    t.add({"v", p0}, s * a * b);
    t.add({"v", p1}, b * b);
    return t;
}

/// The two states every conclusive branch decomposes over: the weighted
/// copy-pair alpha|h,0> + beta|v,1> and the uniform pair (|h,1> + |v,0>)/sqrt2.
inline PureState copy_pair_state(RegistryPtr reg, double theta) {
    auto ang = CloningAngles::from_theta(theta);
    PureState t(std::move(reg));
    t.add({"h", "0"}, ang.alpha);
    t.add({"v", "1"}, ang.beta);
    return t;
}

inline PureState uniform_pair_state(RegistryPtr reg) {
    PureState t(std::move(reg));
    t.add({"h", "1"}, 1.0 / std::sqrt(2.0));
    t.add({"v", "0"}, 1.0 / std::sqrt(2.0));
    return t;
}

// ---------------------------------------------------------------------------
// Recovery unitary and conditional interferometers
// ---------------------------------------------------------------------------

/// Recovery unitary: a pi retarder on path 1 followed by half-wave plates at
/// tilt zero on every path. Net effect is a sign flip on |v> together with a
/// sign flip on path |1>, which maps the wrong-sign clone pair onto the
/// right-sign one. Involution.
inline PureState apply_ruo(const PureState& s, int photon) {
    auto reg = s.registry();
    auto ret = LinearElement::phase_retarder(reg, photon, "1", M_PI, "ruo_retarder");
    auto plates = LinearElement::hwp(reg, photon, "all", hwp_jones(0.0), "ruo_hwp");
    return plates.apply(ret.apply(s));
}

enum class CiPort { zero, one };

/// Conditional interferometer element. The standard orientation realizes
///   |h,0> -> cos2g |h,0'> + sin2g |v,2'>,   |v,0> -> e^{i chi} |v,0'>
/// (and the path-1 analogue); the mirrored orientation puts the plate in the
/// other arm, attenuating the opposite polarization.
inline LinearElement ci_element(RegistryPtr reg, int photon, CiPort port,
                                double cos2g, double chi, bool mirror,
                                std::string name = "") {
    if (cos2g < -kExactTol || cos2g > 1.0 + kExactTol)
        throw std::invalid_argument("ci_element: cos(2 gamma) outside [0, 1]");
    cos2g = std::clamp(cos2g, 0.0, 1.0);
    double sin2g = std::sqrt(std::max(0.0, 1.0 - cos2g * cos2g));
    Complex eta = std::exp(Complex{0.0, chi});
    const bool zero = port == CiPort::zero;
    const std::string in = zero ? "0" : "1";
    const std::string ok = zero ? "0'" : "1'";
    const std::string fail = zero ? "2'" : "3'";
    // polarization whose amplitude passes the plate arm
    std::string rot = zero ? "h" : "v";
    std::string thru = zero ? "v" : "h";
    if (mirror) std::swap(rot, thru);
    std::string rot_out = rot == "h" ? "v" : "h";
    if (name.empty()) name = std::string(zero ? "ci0" : "ci1") + (mirror ? "_mirror" : "");
    std::vector<ColumnEntry> cols;
    cols.push_back({rot, in, {{rot, ok, cos2g}, {rot_out, fail, sin2g}}});
    cols.push_back({thru, in, {{thru, ok, eta}}});
    return LinearElement::from_action(std::move(reg), photon, std::move(name), cols);
}

/// Discrimination transform for one output port, standard orientation.
inline PureState apply_ci(const PureState& s, int photon, CiPort port,
                          const CorrectionSpec& spec) {
    if (spec.gamma < -kExactTol || spec.gamma > M_PI / 4 + kExactTol)
        throw std::invalid_argument("apply_ci: gamma outside [0, pi/4]");
    auto e = ci_element(s.registry(), photon, port, std::cos(2 * spec.gamma), spec.chi,
                        /*mirror=*/false);
    return e.apply(s);
}

// ---------------------------------------------------------------------------
// Abstract cloning machine
// ---------------------------------------------------------------------------

struct AbstractMachineResult {
    RegistryPtr registry;
    PureState joint_state;    // after the machine unitary, before measurement
    PureState success_state;  // normalized, ancilla projected onto |0>
    double success_probability = 0.0;
    PureState failure_state;  // normalized entangled leftover
    double failure_probability = 0.0;
};

/// Unitary-plus-measurement machine on original (photon 1 polarization),
/// copy (photon 1 path) and ancilla (photon 2 polarization) qubits, starting
/// from the blank state |0>_c |0>_a.
inline AbstractMachineResult abstract_machine(const CloneTask& task) {
    auto reg = ModeRegistry::two_photon({"0", "1"}, {"0"});
    auto ang = CloningAngles::from_theta(task.theta);
    // images of the two basis inputs under the machine unitary
    PureState u0(reg), u1(reg);
    u0.add({"h", "0", "h", "0"}, ang.alpha_tilde * ang.alpha);
    u0.add({"v", "1", "h", "0"}, ang.alpha_tilde * ang.beta);
    u0.add({"h", "0", "v", "0"}, ang.beta_tilde * ang.alpha);
    u0.add({"v", "1", "v", "0"}, ang.beta_tilde * ang.beta);
    u1.add({"h", "1", "h", "0"}, 1.0 / std::sqrt(2.0));
    u1.add({"v", "0", "h", "0"}, 1.0 / std::sqrt(2.0));

    PureState out(reg);
    out.accumulate(u0, task.a());
    out.accumulate(u1, task.sign * task.b());

    auto good = project(out, 2, ModeKind::polarization, "h");
    auto bad = project(out, 2, ModeKind::polarization, "v");
    const double ps = good.norm2(), pf = bad.norm2();
    return {reg, out,   normalize(good).first, ps,
            pf > 0.0 ? normalize(bad).first : bad, pf};
}

/// Abstract machine packaged as a two-branch run so reporting and sampling
/// treat it like the optical circuits.
inline CircuitRun run_oracle(const CloneTask& task) {
    auto r = abstract_machine(task);
    CircuitRun run;
    run.circuit = "oracle";
    run.task = task;
    run.registry = r.registry;
    run.clone_photon = 1;
    PureState source(r.registry);
    source.add({"h", "0", "h", "0"}, task.a());
    source.add({"v", "0", "h", "0"}, task.sign * task.b());
    run.states.push_back(source);
    run.states.push_back(r.joint_state);
    run.branches.push_back(
        {"success", r.success_state, r.success_probability, BranchClass::success});
    run.branches.push_back(
        {"failure", r.failure_state, r.failure_probability, BranchClass::failure});
    return run;
}

// ---------------------------------------------------------------------------
// Local circuit (both the maximally and the partially entangled channel)
// ---------------------------------------------------------------------------

inline RegistryPtr lpc_registry() {
    return ModeRegistry::two_photon({"0", "1", "0'", "1'", "2'", "3'", "loss"},
                                    {"0", "1", "0'", "a", "b"});
}

inline RegistryPtr nlopc_registry() {
    return ModeRegistry::two_photon({"0", "1", "0~", "1~", "0'", "0~'", "a", "b", "c", "d"},
                                    {"0", "1", "0'", "1'", "2'", "3'"});
}

namespace detail {

struct CircuitOptions {
    bool flip_bs_phase = false;  // diagnostic: breaks the beam-splitter phase
};

inline LinearElement make_bs(RegistryPtr reg, int photon, const std::string& p,
                             const std::string& q, const std::string& r,
                             const std::string& t, const CircuitOptions& opt,
                             std::string name) {
    if (!opt.flip_bs_phase)
        return LinearElement::beam_splitter(reg, photon, p, q, r, t, std::move(name));
    // swapped i-placement; still unitary, but the output phases are wrong
    return LinearElement::beam_splitter(reg, photon, q, p, r, t, std::move(name));
}

inline std::vector<Stage> lpc_stages(const RegistryPtr& reg, const CloneTask& task,
                                     const CircuitOptions& opt) {
    auto ang = CloningAngles::from_theta(task.theta);
    const double inv = 1.0 / std::sqrt(2.0);
    std::vector<Stage> st;
    st.push_back({"pbs1+pbs2",
                  {LinearElement::pbs(reg, 1,
                                      {{{"h", "0"}, "0"}, {{"h", "1"}, "1"},
                                       {{"v", "0"}, "1"}, {{"v", "1"}, "0"}},
                                      "pbs1"),
                   LinearElement::pbs(reg, 2,
                                      {{{"h", "0"}, "0"}, {{"h", "1"}, "1"},
                                       {{"v", "0"}, "1"}, {{"v", "1"}, "0"}},
                                      "pbs2")}});
    st.push_back({"hwp1", {LinearElement::hwp(reg, 1, "1", pauli_x(), "hwp1")}});
    st.push_back({"hwp_s",
                  {LinearElement::hwp(reg, 1, "all",
                                      hwp_reflection(task.a(), task.sign * task.b()),
                                      "hwp_s")}});
    st.push_back({"filter",
                  {LinearElement::polarizer(reg, 1, "0", "v", "pol_v"),
                   LinearElement::polarizer(reg, 1, "1", "h", "pol_h")}});
    st.push_back({"hwp3+hwp4",
                  {LinearElement::hwp(reg, 1, "0", hwp_reflection(-inv, inv), "hwp3"),
                   LinearElement::hwp(reg, 1, "1", hwp_reflection(ang.alpha, ang.beta),
                                      "hwp4")}});
    st.push_back({"pbs4",
                  {LinearElement::pbs(reg, 1,
                                      {{{"h", "0"}, "1"}, {{"h", "1"}, "0"},
                                       {{"v", "0"}, "0"}, {{"v", "1"}, "1"}},
                                      "pbs4")}});
    st.push_back({"hwp0", {LinearElement::hwp(reg, 2, "1", pauli_x(), "hwp0")}});
    st.push_back({"hwp2+retarder",
                  {LinearElement::hwp(reg, 2, "1",
                                      hwp_reflection(ang.alpha_tilde, ang.beta_tilde),
                                      "hwp2"),
                   LinearElement::phase_retarder(reg, 2, "0", M_PI / 2, "retarder")}});
    st.push_back({"pbs3",
                  {LinearElement::pbs(reg, 2, {{{"h", "1"}, "0'"}, {{"h", "0'"}, "1"}},
                                      "pbs3")}});
    st.push_back({"bs", {make_bs(reg, 2, "0", "0'", "a", "b", opt, "bs")}});
    return st;
}

inline PureState channel_source(const RegistryPtr& reg, const CloneTask& task) {
    PureState s(reg);
    s.add({"h", "0", "h", "0"}, task.c_h);
    s.add({"v", "0", "v", "0"}, task.c_v);
    return s;
}

inline OutcomeBranch make_branch(std::string label, BranchClass cls,
                                 const PureState& unnormalized) {
    double p = unnormalized.norm2();
    OutcomeBranch br{std::move(label), unnormalized, p, cls};
    if (p > 0.0) br.state = normalize(unnormalized).first;
    return br;
}

/// Splits a post-discrimination state into the conclusive part (paths 0'/1')
/// and the two inconclusive detector ports.
inline void split_usd(std::vector<OutcomeBranch>& out, const PureState& s, int photon,
                      const std::string& parent, BranchClass success_class) {
    out.push_back(make_branch(
        parent, success_class, project_any(s, photon, ModeKind::path, {"0'", "1'"})));
    out.push_back(make_branch(parent + ":usd_fail_2'", BranchClass::inconclusive,
                              project(s, photon, ModeKind::path, "2'")));
    out.push_back(make_branch(parent + ":usd_fail_3'", BranchClass::inconclusive,
                              project(s, photon, ModeKind::path, "3'")));
}

inline CircuitRun run_lpc(const CloneTask& task, bool partial, bool correct,
                          const CircuitOptions& opt) {
    CircuitRun run;
    run.circuit = partial ? "lpc-partial" : "lpc-max";
    run.task = task;
    run.corrected = correct;
    run.registry = lpc_registry();
    run.clone_photon = 1;
    run.primed_output = partial && correct;
    run.stages = lpc_stages(run.registry, task, opt);

    PureState state = channel_source(run.registry, task);
    for (const auto& st : run.stages) {
        for (const auto& e : st.elements) state = e.apply(state);
        run.states.push_back(state);
    }

    const auto& last = run.states.back();
    auto loss = project(last, 1, ModeKind::path, "loss");
    auto kept = remove_label(last, 1, ModeKind::path, "loss");
    auto fail = project(kept, 2, ModeKind::path, "1");
    auto a_raw = project(kept, 2, ModeKind::path, "a");
    auto b_raw = project(kept, 2, ModeKind::path, "b");

    run.branches.push_back(make_branch("loss", BranchClass::loss, loss));
    run.branches.push_back(make_branch("path_1", BranchClass::failure, fail));
    if (!correct) {
        run.branches.push_back(make_branch("path_a", BranchClass::success, a_raw));
        auto b_state = partial ? b_raw : apply_ruo(b_raw, 1);
        run.branches.push_back(
            make_branch("path_b", BranchClass::success_after_ruo, b_state));
    } else {
        auto spec = CorrectionSpec::from_task(task);
        auto ci = [&](const PureState& s) {
            return apply_ci(apply_ci(s, 1, CiPort::zero, spec), 1, CiPort::one, spec);
        };
        split_usd(run.branches, ci(a_raw), 1, "path_a", BranchClass::success);
        split_usd(run.branches, ci(apply_ruo(b_raw, 1)), 1, "path_b",
                  BranchClass::success_after_ruo);
    }
    return run;
}

}  // namespace detail

/// Maximally entangled channel; clones end on photon 1 (polarization, path),
/// with the recovery unitary already applied on the path-b branch.
inline CircuitRun run_lpc_max(const CloneTask& task) {
    if (!task.maximal())
        throw std::invalid_argument("run_lpc_max: requires c_h = c_v = 1/sqrt(2)");
    return detail::run_lpc(task, /*partial=*/false, /*correct=*/false, {});
}

/// Partially entangled channel. With correct=false the raw detector branches
/// are returned; with correct=true the conclusive branches pass through the
/// conditional interferometers (recovery unitary first on path b) and split
/// into a perfect-clone branch plus the two inconclusive ports.
inline CircuitRun run_lpc_partial(const CloneTask& task, bool correct) {
    return detail::run_lpc(task, /*partial=*/true, correct, {});
}

// ---------------------------------------------------------------------------
// Nonlocal circuit
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Stage> nlopc_stages(const RegistryPtr& reg, const CloneTask& task,
                                       const CircuitOptions& opt) {
    auto ang = CloningAngles::from_theta(task.theta);
    std::vector<Stage> st;
    st.push_back({"pbs1+pbs2",
                  {LinearElement::pbs(reg, 1,
                                      {{{"h", "0"}, "0"}, {{"h", "1"}, "1"},
                                       {{"v", "0"}, "1"}, {{"v", "1"}, "0"}},
                                      "pbs1"),
                   LinearElement::pbs(reg, 2,
                                      {{{"h", "0"}, "0"}, {{"h", "1"}, "1"},
                                       {{"v", "0"}, "1"}, {{"v", "1"}, "0"}},
                                      "pbs2")}});
    st.push_back({"codification",
                  {LinearElement::hwp(reg, 1, "1", pauli_x(), "hwp1"),
                   LinearElement::hwp(reg, 1, "all",
                                      hwp_reflection(task.a(), task.sign * task.b()),
                                      "hwp_s")}});
    // photon 1: sort the four (polarization, path) inputs onto four paths and
    // erase the polarization; photon 2: rotate the channel kets onto the
    // copy-pair and uniform-pair states.
    const double inv = 1.0 / std::sqrt(2.0);
    st.push_back(
        {"clone_basis_prep",
         {LinearElement::pbs(reg, 1,
                             {{{"h", "0"}, "0~"}, {{"h", "1"}, "1"},
                              {{"v", "0"}, "0"}, {{"v", "1"}, "1~"}},
                             "pbs_sort"),
          LinearElement::hwp(reg, 1, "0", pauli_x(), "hwp_flip0"),
          LinearElement::hwp(reg, 1, "1~", pauli_x(), "hwp_flip1t"),
          LinearElement::from_action(
              reg, 2, "pair_prep",
              {{"h", "0", {{"h", "1", inv}, {"v", "0", inv}}},
               {"v", "1",
                {{"h", "0", CloningAngles::from_theta(task.theta).alpha},
                 {"v", "1", CloningAngles::from_theta(task.theta).beta}}},
               {"v", "0", {{"h", "1", inv}, {"v", "0", -inv}}},
               {"h", "1",
                {{"h", "0", CloningAngles::from_theta(task.theta).beta},
                 {"v", "1", -CloningAngles::from_theta(task.theta).alpha}}}})}});
    st.push_back(
        {"interferometers",
         {LinearElement::hwp(reg, 1, "1",
                             hwp_reflection(ang.alpha_tilde, ang.beta_tilde), "hwp_i1"),
          LinearElement::pbs(reg, 1, {{{"h", "1"}, "0'"}, {{"h", "0'"}, "1"}}, "pbs_i1"),
          LinearElement::phase_retarder(reg, 1, "0", M_PI / 2, "ret_i1"),
          make_bs(reg, 1, "0", "0'", "a", "b", opt, "bs_i1"),
          LinearElement::hwp(reg, 1, "0~",
                             hwp_reflection(ang.alpha_tilde, ang.beta_tilde), "hwp_i2"),
          LinearElement::pbs(reg, 1, {{{"h", "0~"}, "0~'"}, {{"h", "0~'"}, "0~"}},
                             "pbs_i2"),
          LinearElement::phase_retarder(reg, 1, "1~", M_PI / 2, "ret_i2"),
          make_bs(reg, 1, "1~", "0~'", "c", "d", opt, "bs_i2")}});
    return st;
}

inline CircuitRun nlopc_front_end(const CloneTask& task, const CircuitOptions& opt) {
    CircuitRun run;
    run.circuit = "nlopc-partial";
    run.task = task;
    run.registry = nlopc_registry();
    run.clone_photon = 2;
    run.stages = nlopc_stages(run.registry, task, opt);
    PureState state = channel_source(run.registry, task);
    for (const auto& st : run.stages) {
        for (const auto& e : st.elements) state = e.apply(state);
        run.states.push_back(state);
    }
    return run;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Derived correction for the c/d branches
// ---------------------------------------------------------------------------

/// A correction of conditional-interferometer form for a conclusive branch:
/// optional recovery unitary, optional swap of the copy-pair and uniform-pair
/// states, then one interferometer per path with its own orientation.
struct CdCorrection {
    bool pre_ruo = false;
    bool mode_swap = false;
    bool mirror_ci0 = false, mirror_ci1 = false;
    double cos2g0 = 1.0, cos2g1 = 1.0;
    double chi = 0.0;
    double success_probability = 0.0;  // per normalized branch input
    double residual = 0.0;             // worst clone infidelity over both signs
};

namespace detail {

/// Unitary interchanging the copy-pair state alpha|h,0> + beta|v,1> with the
/// uniform pair (|h,1> + |v,0>)/sqrt(2) (and likewise their orthogonal
/// complements). Realizes the basis change the second interferometer pair
/// needs before the discrimination stage.
inline LinearElement mode_swap_element(RegistryPtr reg, int photon, double theta) {
    auto ang = CloningAngles::from_theta(theta);
    const double sp = (ang.alpha + ang.beta) / std::sqrt(2.0);
    const double sm = (ang.alpha - ang.beta) / std::sqrt(2.0);
    std::vector<ColumnEntry> cols;
    cols.push_back({"h", "0", {{"h", "1", sp}, {"v", "0", sm}}});
    cols.push_back({"v", "0", {{"h", "0", sm}, {"v", "1", sp}}});
    cols.push_back({"h", "1", {{"h", "0", sp}, {"v", "1", -sm}}});
    cols.push_back({"v", "1", {{"h", "1", -sm}, {"v", "0", sp}}});
    return LinearElement::from_action(std::move(reg), photon, "mode_swap", cols);
}

inline PureState apply_cd(const CdCorrection& cd, const PureState& s, int photon,
                          double theta) {
    PureState cur = s;
    if (cd.pre_ruo) cur = apply_ruo(cur, photon);
    if (cd.mode_swap) cur = mode_swap_element(cur.registry(), photon, theta).apply(cur);
    cur = ci_element(cur.registry(), photon, CiPort::zero, cd.cos2g0, cd.chi, cd.mirror_ci0)
              .apply(cur);
    cur = ci_element(cur.registry(), photon, CiPort::one, cd.cos2g1, cd.chi, cd.mirror_ci1)
              .apply(cur);
    return cur;
}

}  // namespace detail

/// Searches a family of interferometric corrections for one that maps the
/// first extra conclusive branch (and, after the recovery unitary, the
/// second) onto perfect clones at the protocol's branch yield. Candidates
/// without the pair swap are tried first; none of them can hold the required
/// yield across the parameter range because the interferometers preserve
/// per-path amplitude mass while the branch state carries the wrong path
/// distribution, so the search settles on the swapped family with the same
/// plate angle as the primary correction.
inline CdCorrection derive_cd_correction(const CloneTask& task) {
    if (task.c_h <= 0.0)
        throw std::invalid_argument("derive_cd_correction: requires c_h > 0");
    const double a = task.a(), b = task.b();
    auto reg2 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {2, ModeKind::polarization, {"h", "v"}},
        {2, ModeKind::path, {"0", "1", "0'", "1'", "2'", "3'"}}});

    // branch-c conditional states for both signs
    std::array<PureState, 2> inputs{PureState(reg2), PureState(reg2)};
    std::array<PureState, 2> targets{PureState(reg2), PureState(reg2)};
    std::array<double, 2> branch_mass{0.0, 0.0};
    for (int i = 0; i < 2; ++i) {
        CloneTask t = task;
        t.sign = i == 0 ? +1 : -1;
        auto front = detail::nlopc_front_end(t, {});
        auto c_raw = project(front.states.back(), 1, ModeKind::path, "c");
        branch_mass[i] = c_raw.norm2();
        inputs[i] = reindexed(factor_photon(normalize(c_raw).first, 2), reg2);
        targets[i] = clone_target(reg2, t, /*primed=*/true);
    }
    // each of the four conclusive branches must contribute exactly
    // c_h^2 / (4 a^2) so that their sum reproduces the protocol total
    const double joint_budget = task.c_h * task.c_h / (4.0 * a * a);

    auto comp = [&](const PureState& s, const char* pol, const char* path) {
        return s.amplitude({pol, path});
    };

    double best_residual = 1.0;
    for (bool swap : {false, true}) {
        for (bool pre_ruo : {false, true}) {
            for (bool m0 : {false, true}) {
                for (bool m1 : {false, true}) {
                    for (double chi : {0.0, M_PI}) {
                        CdCorrection cd;
                        cd.pre_ruo = pre_ruo;
                        cd.mode_swap = swap;
                        cd.mirror_ci0 = m0;
                        cd.mirror_ci1 = m1;
                        cd.chi = chi;
                        // pre-stage on the + input, then solve the plate
                        // angles from the amplitude-matching conditions
                        PureState w = inputs[0];
                        if (pre_ruo) w = apply_ruo(w, 2);
                        if (swap)
                            w = detail::mode_swap_element(reg2, 2, task.theta).apply(w);
                        Complex h0 = comp(w, "h", "0"), v0 = comp(w, "v", "0");
                        Complex h1 = comp(w, "h", "1"), v1 = comp(w, "v", "1");
                        Complex eta = std::exp(Complex{0.0, chi});
                        double scale = std::max({std::abs(h0), std::abs(v0),
                                                 std::abs(h1), std::abs(v1), 1e-30});
                        auto solve_k = [&](Complex need, Complex denom,
                                           bool& ok) -> double {
                            if (std::abs(denom) < 1e-12 * scale) {
                                if (std::abs(need) < 1e-12 * scale) return 0.0;
                                ok = false;
                                return 0.0;
                            }
                            Complex k = need / denom;
                            if (std::abs(k.imag()) > 1e-9 || k.real() < -1e-9 ||
                                k.real() > 1.0 + 1e-9)
                                ok = false;
                            return std::clamp(k.real(), 0.0, 1.0);
                        };
                        bool ok = true;
                        Complex lambda;
                        if (!m0)
                            lambda = eta * v0 / (a * b);  // g0 known
                        else
                            lambda = eta * h0 / (a * a);  // f0 known
                        cd.cos2g0 = m0 ? solve_k(lambda * a * b, v0, ok)
                                       : solve_k(lambda * a * a, h0, ok);
                        cd.cos2g1 = m1 ? solve_k(lambda * a * b, h1, ok)
                                       : solve_k(lambda * b * b, v1, ok);
                        // remaining known-factor consistency
                        Complex known_lhs = m1 ? eta * v1 : eta * h1;
                        Complex known_rhs = m1 ? lambda * b * b : lambda * a * b;
                        if (std::abs(known_lhs - known_rhs) > 1e-9 * std::max(scale, 1.0))
                            ok = false;
                        if (!ok) continue;

                        // oracle check on both signs
                        double worst = 0.0, prob = 1.0;
                        bool valid = true, have_fail_ref = false;
                        PureState fail_ref(reg2);
                        for (int i = 0; i < 2 && valid; ++i) {
                            auto out = detail::apply_cd(cd, inputs[i], 2, task.theta);
                            auto good = project_any(out, 2, ModeKind::path, {"0'", "1'"});
                            double p = good.norm2();
                            if (i == 0) prob = p;
                            if (std::abs(p - prob) > 1e-10) valid = false;
                            // reject members whose clone yield misses the
                            // protocol's branch budget (the family also holds
                            // fidelity-1 members of the wrong yield)
                            if (std::abs(p * branch_mass[i] - joint_budget) > 1e-11)
                                valid = false;
                            if (p > 1e-20) {
                                double f = fidelity_to(normalize(good).first, targets[i]);
                                worst = std::max(worst, 1.0 - f);
                                if (1.0 - f > 1e-10) valid = false;
                            }
                            auto failed = project_any(out, 2, ModeKind::path,
                                                      {"2'", "3'"});
                            if (failed.norm2() > 1e-20) {
                                auto fn = normalize(failed).first;
                                if (!have_fail_ref) {
                                    fail_ref = fn;
                                    have_fail_ref = true;
                                } else if (fidelity_to(fn, fail_ref) < 1.0 - kExactTol) {
                                    valid = false;  // must not depend on the input state
                                }
                            }
                        }
                        if (!valid) {
                            best_residual = std::min(best_residual, worst);
                            continue;
                        }
                        cd.success_probability = prob;
                        cd.residual = worst;
                        return cd;
                    }
                }
            }
        }
    }
    throw std::runtime_error(
        "derive_cd_correction: no valid correction found within the searched family"
        " (best clone infidelity " +
        std::to_string(best_residual) + ")");
}

/// Nonlocal circuit over a partially entangled channel. Photon 1 is measured
/// over six paths; photon 2 carries the clones. With correct=true the four
/// conclusive branches are post-processed: paths a/b by the standard
/// conditional interferometers (recovery unitary first on b), paths c/d by
/// the derived correction (recovery unitary first on d).
inline CircuitRun run_nlopc_partial(const CloneTask& task, bool correct) {
    auto run = detail::nlopc_front_end(task, {});
    run.corrected = correct;
    run.primed_output = correct;
    const auto& last = run.states.back();

    auto fail1 = project(last, 1, ModeKind::path, "1");
    auto fail0t = project(last, 1, ModeKind::path, "0~");
    auto a_raw = project(last, 1, ModeKind::path, "a");
    auto b_raw = project(last, 1, ModeKind::path, "b");
    auto c_raw = project(last, 1, ModeKind::path, "c");
    auto d_raw = project(last, 1, ModeKind::path, "d");

    run.branches.push_back(detail::make_branch("path_1", BranchClass::failure, fail1));
    if (!correct) {
        run.branches.push_back(detail::make_branch("path_a", BranchClass::success, a_raw));
        run.branches.push_back(
            detail::make_branch("path_b", BranchClass::success_after_ruo, b_raw));
        run.branches.push_back(
            detail::make_branch("path_0tilde", BranchClass::failure, fail0t));
        run.branches.push_back(detail::make_branch("path_c", BranchClass::success, c_raw));
        run.branches.push_back(
            detail::make_branch("path_d", BranchClass::success_after_ruo, d_raw));
        return run;
    }

    auto spec = CorrectionSpec::from_task(task);
    auto ci = [&](const PureState& s) {
        return apply_ci(apply_ci(s, 2, CiPort::zero, spec), 2, CiPort::one, spec);
    };
    detail::split_usd(run.branches, ci(a_raw), 2, "path_a", BranchClass::success);
    detail::split_usd(run.branches, ci(apply_ruo(b_raw, 2)), 2, "path_b",
                      BranchClass::success_after_ruo);
    run.branches.push_back(
        detail::make_branch("path_0tilde", BranchClass::failure, fail0t));
    if (task.c_h > 0.0) {
        auto cd = derive_cd_correction(task);
        detail::split_usd(run.branches, detail::apply_cd(cd, c_raw, 2, task.theta), 2,
                          "path_c", BranchClass::success);
        detail::split_usd(run.branches,
                          detail::apply_cd(cd, apply_ruo(d_raw, 2), 2, task.theta), 2,
                          "path_d", BranchClass::success_after_ruo);
    } else {
        // product channel: the plate angle degenerates to pi/4 and every
        // conclusive attempt ends in the inconclusive ports (zero clone yield)
        CdCorrection cd0;
        cd0.mode_swap = true;
        cd0.mirror_ci0 = cd0.mirror_ci1 = true;
        cd0.cos2g0 = cd0.cos2g1 = 0.0;
        detail::split_usd(run.branches, detail::apply_cd(cd0, c_raw, 2, task.theta), 2,
                          "path_c", BranchClass::success);
        detail::split_usd(run.branches,
                          detail::apply_cd(cd0, apply_ruo(d_raw, 2), 2, task.theta), 2,
                          "path_d", BranchClass::success_after_ruo);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Reference fidelities for reporting
// ---------------------------------------------------------------------------

/// Fidelity of a branch's conditional state against its declared reference:
/// perfect clones for conclusive branches, the known channel-independent
/// states for failure branches. Loss and inconclusive ports have none.
inline std::optional<double> branch_reference_fidelity(const CircuitRun& run,
                                                       const OutcomeBranch& br) {
    if (br.probability <= 1e-20) return std::nullopt;
    if (br.classification == BranchClass::loss ||
        br.classification == BranchClass::inconclusive)
        return std::nullopt;
    auto f = factor_photon(br.state, run.clone_photon);
    auto reg = f.registry();
    if (br.classification == BranchClass::failure) {
        PureState target = br.detector_label == "path_0tilde"
                               ? uniform_pair_state(reg)
                               : copy_pair_state(reg, run.task.theta);
        return fidelity_to(f, target);
    }
    bool primed = run.primed_output;
    if (run.circuit == "lpc-partial" && !run.corrected) primed = false;
    return fidelity_to(f, clone_target(reg, run.task, primed));
}

}  // namespace qclone
