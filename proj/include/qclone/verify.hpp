// verify.hpp
// The acceptance suite: every analytic claim the simulator must reproduce,
// each with its tolerance pinned here. Shared by the `verify` CLI command and
// the acceptance test binary.
#pragma once

#include <chrono>
#include <functional>

#include "qclone/analysis.hpp"
#include "qclone/montecarlo.hpp"
#include "qclone/reference.hpp"

namespace qclone::verify {

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    double worst = 0.0;  // largest deviation encountered (criterion specific)
    std::string detail;
};

namespace detail {

inline std::vector<double> theta_grid(int n) {
    std::vector<double> out;
    for (int k = 1; k <= n; ++k) out.push_back(k * (M_PI / 2) / n);
    return out;
}

inline std::vector<double> ch_grid(int n) {
    std::vector<double> out;
    for (int j = 0; j < n; ++j) out.push_back(j * (1.0 / std::sqrt(2.0)) / (n - 1));
    return out;
}

inline double total_success(const CircuitRun& run) {
    double p = 0.0;
    for (const auto& br : run.branches)
        if (br.classification == BranchClass::success ||
            br.classification == BranchClass::success_after_ruo)
            p += br.probability;
    return p;
}

inline double branch_probability(const CircuitRun& run, const std::string& label) {
    for (const auto& br : run.branches)
        if (br.detector_label == label) return br.probability;
    throw std::logic_error("verify: missing branch " + label);
}

inline const OutcomeBranch& branch(const CircuitRun& run, const std::string& label) {
    for (const auto& br : run.branches)
        if (br.detector_label == label) return br;
    throw std::logic_error("verify: missing branch " + label);
}

inline double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// 1. Machine success probability equals 1/(1+|cos|) on a 50-point grid.
inline CriterionResult c1_optimal_probability() {
    auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double theta : detail::theta_grid(50)) {
        for (int sign : {+1, -1}) {
            auto r = abstract_machine(CloneTask::make(theta, sign, 0.5));
            worst = std::max(worst, std::abs(r.success_probability - p_opt(theta)));
        }
    }
    double secs = detail::elapsed_seconds(start);
    bool pass = worst < 1e-12 && secs < 1.0;
    return {1, "optimal-probability", pass, worst,
            "50-point grid, both signs, " + format_g15(secs) + " s"};
}

/// 2. Local maximally entangled totals equal p_opt/2 with unit clone
/// fidelity.
inline CriterionResult c2_lpc_max_totals() {
    double worst_p = 0.0, worst_f = 0.0;
    for (double theta : detail::theta_grid(50)) {
        for (int sign : {+1, -1}) {
            auto t = CloneTask::make(theta, sign, 1 / std::sqrt(2.0));
            auto run = run_lpc_max(t);
            worst_p = std::max(worst_p,
                               std::abs(detail::total_success(run) - p_opt(theta) / 2));
            for (const char* label : {"path_a", "path_b"}) {
                auto f = branch_reference_fidelity(run, detail::branch(run, label));
                if (f) worst_f = std::max(worst_f, 1.0 - *f);
            }
        }
    }
    bool pass = worst_p < 1e-12 && worst_f < 1e-10;
    return {2, "lpc-max-totals", pass, std::max(worst_p, worst_f),
            "probability dev " + format_g15(worst_p) + ", clone infidelity " +
                format_g15(worst_f)};
}

/// 3. Every stage state matches its closed form. Failures name the stage.
inline CriterionResult c3_golden_checkpoints() {
    double worst = 0.0;
    std::string failing;
    for (double theta : {M_PI / 6, M_PI / 3, M_PI / 2}) {
        for (int sign : {+1, -1}) {
            auto t = CloneTask::make(theta, sign, 1 / std::sqrt(2.0));
            auto run = run_lpc_max(t);
            for (int k = 0; k <= 9; ++k) {
                auto want = normalize(reference::lpc_stage(run.registry, t, k)).first;
                double dev = 1.0 - fidelity_to(checkpoint(run, k), want);
                if (dev >= 1e-12)
                    failing += " stage " + std::to_string(k) + " (theta=" +
                               format_g15(theta) + ", sign=" + (sign > 0 ? "+)" : "-)");
                worst = std::max(worst, dev);
            }
        }
    }
    return {3, "golden-checkpoints", worst < 1e-12, worst,
            failing.empty() ? "stages 0..9 at three angles, both signs"
                            : "mismatch at" + failing};
}

/// 4. Partially entangled local totals and the discrimination rate.
inline CriterionResult c4_lpc_partial_totals() {
    double worst = 0.0, worst_ci = 0.0;
    auto reg1 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {1, ModeKind::polarization, {"h", "v"}},
        {1, ModeKind::path, {"0", "1", "0'", "1'", "2'", "3'"}}});
    for (double theta : detail::theta_grid(10)) {
        for (double ch : detail::ch_grid(10)) {
            auto t = CloneTask::make(theta, +1, ch);
            auto run = run_lpc_partial(t, true);
            double total = detail::total_success(run);
            double closed = ch * ch / (1.0 + std::cos(theta));
            auto s = summarize(t);
            double via_overlaps = 0.5 * (1.0 - std::abs(s.overlap_alpha)) /
                                  (1.0 + std::abs(s.overlap_psi));
            worst = std::max({worst, std::abs(total - closed),
                              std::abs(total - via_overlaps)});
            // discrimination success per interferometer on the pair states
            auto spec = CorrectionSpec::from_task(t);
            for (int sign : {+1, -1}) {
                auto p0 = project(apply_ci(reference::alpha_pair(reg1, t, false, sign), 1,
                                           CiPort::zero, spec),
                                  1, ModeKind::path, "0'")
                              .norm2();
                auto p1 = project(apply_ci(reference::alpha_pair(reg1, t, true, sign), 1,
                                           CiPort::one, spec),
                                  1, ModeKind::path, "1'")
                              .norm2();
                worst_ci = std::max({worst_ci, std::abs(p0 - 2 * ch * ch),
                                     std::abs(p1 - 2 * ch * ch)});
            }
        }
    }
    bool pass = worst < 1e-12 && worst_ci < 1e-12;
    return {4, "lpc-partial-totals", pass, std::max(worst, worst_ci),
            "total dev " + format_g15(worst) + ", discrimination dev " +
                format_g15(worst_ci)};
}

/// 5. Nonlocal totals: primary branches exact, derived branches to 1e-10,
/// and the maximally entangled case reproduces p_opt.
inline CriterionResult c5_nlopc_totals() {
    double worst_ab = 0.0, worst_cd = 0.0, worst_total = 0.0, worst_max = 0.0;
    for (double theta : detail::theta_grid(10)) {
        for (double ch : detail::ch_grid(10)) {
            auto t = CloneTask::make(theta, +1, ch);
            auto run = run_nlopc_partial(t, true);
            double each = ch * ch / (4.0 * t.a() * t.a());
            for (const char* label : {"path_a", "path_b"})
                worst_ab = std::max(
                    worst_ab, std::abs(detail::branch_probability(run, label) - each));
            for (const char* label : {"path_c", "path_d"})
                worst_cd = std::max(
                    worst_cd, std::abs(detail::branch_probability(run, label) - each));
            worst_total =
                std::max(worst_total, std::abs(detail::total_success(run) -
                                               2 * ch * ch / (1.0 + std::cos(theta))));
        }
        auto tmax = CloneTask::make(theta, +1, 1 / std::sqrt(2.0));
        worst_max = std::max(worst_max, std::abs(detail::total_success(run_nlopc_partial(
                                                     tmax, true)) -
                                                 p_opt(theta)));
    }
    bool pass =
        worst_ab < 1e-12 && worst_cd < 1e-10 && worst_total < 1e-10 && worst_max < 1e-12;
    return {5, "nlopc-totals", pass,
            std::max({worst_ab, worst_cd, worst_total, worst_max}),
            "a/b dev " + format_g15(worst_ab) + ", c/d dev " + format_g15(worst_cd) +
                ", maximal dev " + format_g15(worst_max)};
}

/// 6. Failure branches and inconclusive states carry no information about
/// the input sign.
inline CriterionResult c6_failure_independence() {
    double worst = 0.0;
    auto reg1 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {1, ModeKind::polarization, {"h", "v"}},
        {1, ModeKind::path, {"0", "1", "0'", "1'", "2'", "3'"}}});
    auto reg2 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {2, ModeKind::polarization, {"h", "v"}},
        {2, ModeKind::path, {"0", "1", "0'", "1'", "2'", "3'"}}});
    for (double theta : {M_PI / 6, M_PI / 3, M_PI / 2}) {
        for (double ch : {0.3, 0.6}) {
            auto tp = CloneTask::make(theta, +1, ch);
            auto tm = CloneTask::make(theta, -1, ch);

            auto lp = run_lpc_partial(tp, true);
            auto lm = run_lpc_partial(tm, true);
            worst = std::max(worst, 1.0 - fidelity_to(detail::branch(lp, "path_1").state,
                                                      detail::branch(lm, "path_1").state));

            auto np = run_nlopc_partial(tp, false);
            auto nm = run_nlopc_partial(tm, false);
            for (const char* label : {"path_1", "path_0tilde"})
                worst = std::max(worst,
                                 1.0 - fidelity_to(detail::branch(np, label).state,
                                                   detail::branch(nm, label).state));

            // inconclusive discrimination states, local circuit
            auto spec = CorrectionSpec::from_task(tp);
            auto usd_state = [&](const CircuitRun& raw) {
                auto phi2 = reindexed(
                    factor_photon(detail::branch(raw, "path_a").state, 1), reg1);
                auto after = apply_ci(apply_ci(phi2, 1, CiPort::zero, spec), 1,
                                      CiPort::one, spec);
                return normalize(project_any(after, 1, ModeKind::path, {"2'", "3'"})).first;
            };
            auto fp = usd_state(run_lpc_partial(tp, false));
            auto fm = usd_state(run_lpc_partial(tm, false));
            worst = std::max(worst, 1.0 - fidelity_to(fp, fm));
            worst = std::max(
                worst, 1.0 - fidelity_to(fp, reference::usd_failure_state(reg1, tp)));

            // inconclusive states of the derived correction, nonlocal circuit
            auto cd = derive_cd_correction(tp);
            auto cd_fail = [&](const CircuitRun& raw) {
                auto phi5 = reindexed(
                    factor_photon(detail::branch(raw, "path_c").state, 2), reg2);
                auto out = qclone::detail::apply_cd(cd, phi5, 2, theta);
                return normalize(project_any(out, 2, ModeKind::path, {"2'", "3'"})).first;
            };
            worst = std::max(worst, 1.0 - fidelity_to(cd_fail(np), cd_fail(nm)));
        }
    }
    return {6, "failure-independence", worst < 1e-12, worst,
            "failure and inconclusive branches, both circuits"};
}

/// 7. Merit crossover at |cos theta| = 1/5.
inline CriterionResult c7_fxp_crossover() {
    auto tie = fxp_crossover_check(std::acos(0.2));
    double worst = std::abs(tie.margin);
    bool grid_ok = true;
    for (int k = 1; k <= 1000; ++k) {
        double theta = k * (M_PI / 2) / 1000;
        if (fxp_crossover_check(theta).probabilistic_wins !=
            (p_opt(theta) > kUniversalFxp))
            grid_ok = false;
    }
    bool pass = worst < 1e-15 && grid_ok;
    return {7, "fxp-crossover", pass, worst,
            std::string("tie margin ") + format_g15(tie.margin) + ", 1000-point grid " +
                (grid_ok ? "consistent" : "inconsistent")};
}

/// 8. Branch probabilities, loss included, sum to 1 everywhere.
inline CriterionResult c8_probability_conservation() {
    double worst = 0.0;
    auto check = [&](const CircuitRun& run) {
        double sum = 0.0;
        for (const auto& br : run.branches) sum += br.probability;
        worst = std::max(worst, std::abs(sum - 1.0));
    };
    for (double theta : detail::theta_grid(10)) {
        for (int sign : {+1, -1}) {
            check(run_lpc_max(CloneTask::make(theta, sign, 1 / std::sqrt(2.0))));
            check(run_oracle(CloneTask::make(theta, sign, 0.5)));
            for (double ch : detail::ch_grid(10)) {
                auto t = CloneTask::make(theta, sign, ch);
                check(run_lpc_partial(t, false));
                check(run_lpc_partial(t, true));
                check(run_nlopc_partial(t, false));
                check(run_nlopc_partial(t, true));
            }
        }
    }
    return {8, "probability-conservation", worst < 1e-12, worst,
            "all circuits, corrected and raw, 10x10 grid, both signs"};
}

/// 9. Shot statistics cover the exact probabilities.
inline CriterionResult c9_monte_carlo() {
    auto start = std::chrono::steady_clock::now();
    auto run = run_lpc_max(CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0)));
    int covered = 0;
    const std::uint64_t n = 100000;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto table = sample(run.branches, {n, seed});
        bool all_in = true;
        for (std::size_t i = 0; i < run.branches.size(); ++i) {
            double p = run.branches[i].probability;
            double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
            if (std::abs(table.rows[i].rate - p) > 3 * sigma) all_in = false;
        }
        if (all_in) ++covered;
    }
    double secs = detail::elapsed_seconds(start);
    bool pass = covered >= 99 && secs < 30.0;
    return {9, "monte-carlo", pass, static_cast<double>(100 - covered),
            std::to_string(covered) + "/100 seeds covered, " + format_g15(secs) + " s"};
}

/// 10. Every element validates: isometries exact, sinks conserving.
inline CriterionResult c10_element_validation() {
    double worst = 0.0;
    bool loss_flagged = true;
    auto absorb = [&](const CircuitRun& run) {
        for (const auto& rep : validate_all(run)) {
            worst = std::max(worst, rep.max_deviation);
            if (rep.element.rfind("pol", 0) == 0 && !rep.lossy) loss_flagged = false;
        }
    };
    for (double theta : {M_PI / 6, M_PI / 3, M_PI / 2}) {
        for (double ch : {0.3, 0.6, 1 / std::sqrt(2.0)}) {
            auto t = CloneTask::make(theta, +1, ch);
            absorb(run_lpc_partial(t, true));
            absorb(run_nlopc_partial(t, true));
            // correction elements
            auto reg2 = std::make_shared<const ModeRegistry>(std::vector<Mode>{
                {2, ModeKind::polarization, {"h", "v"}},
                {2, ModeKind::path, {"0", "1", "0'", "1'", "2'", "3'"}}});
            double cos2g = std::cos(2 * CorrectionSpec::from_task(t).gamma);
            for (bool mirror : {false, true})
                for (auto port : {CiPort::zero, CiPort::one})
                    worst = std::max(
                        worst,
                        ci_element(reg2, 2, port, cos2g, 0.0, mirror).validate().max_deviation);
            worst = std::max(worst, qclone::detail::mode_swap_element(reg2, 2, theta)
                                        .validate()
                                        .max_deviation);
        }
    }
    bool pass = worst < 1e-12 && loss_flagged;
    return {10, "element-validation", pass, worst,
            "stage, correction and swap elements across the grid"};
}

struct VerifyOptions {
    std::string only;  // substring filter on criterion names; empty runs all
};

inline std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt = {}) {
    using Fn = std::function<CriterionResult()>;
    const std::vector<std::pair<std::string, Fn>> criteria = {
        {"optimal-probability", c1_optimal_probability},
        {"lpc-max-totals", c2_lpc_max_totals},
        {"golden-checkpoints", c3_golden_checkpoints},
        {"lpc-partial-totals", c4_lpc_partial_totals},
        {"nlopc-totals", c5_nlopc_totals},
        {"failure-independence", c6_failure_independence},
        {"fxp-crossover", c7_fxp_crossover},
        {"probability-conservation", c8_probability_conservation},
        {"monte-carlo", c9_monte_carlo},
        {"element-validation", c10_element_validation},
    };
    std::vector<CriterionResult> out;
    for (const auto& [name, fn] : criteria) {
        if (!opt.only.empty() && name.find(opt.only) == std::string::npos) continue;
        out.push_back(fn());
    }
    return out;
}

}  // namespace qclone::verify
