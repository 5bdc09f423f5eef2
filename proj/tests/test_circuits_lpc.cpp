#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qclone/circuits.hpp"
#include "qclone/reference.hpp"

using namespace qclone;
using Catch::Approx;

namespace {

const OutcomeBranch& find_branch(const CircuitRun& run, const std::string& label) {
    for (const auto& br : run.branches)
        if (br.detector_label == label) return br;
    FAIL("no branch " << label);
    throw std::logic_error("unreachable");
}

double total_success(const CircuitRun& run) {
    double p = 0.0;
    for (const auto& br : run.branches)
        if (br.classification == BranchClass::success ||
            br.classification == BranchClass::success_after_ruo)
            p += br.probability;
    return p;
}

double branch_sum(const CircuitRun& run) {
    double p = 0.0;
    for (const auto& br : run.branches) p += br.probability;
    return p;
}

RegistryPtr photon1_reg(std::vector<std::string> paths) {
    return std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {1, ModeKind::polarization, {"h", "v"}}, {1, ModeKind::path, std::move(paths)}});
}

}  // namespace

TEST_CASE("clone task validation") {
    CHECK_THROWS_AS(CloneTask::make(0.0, +1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(CloneTask::make(2.0, +1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(CloneTask::make(1.0, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(CloneTask::make(1.0, +1, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(CloneTask::make_full(1.0, +1, 0.5, 0.5), std::invalid_argument);

    auto t = CloneTask::make(M_PI / 3, -1, 0.6);
    CHECK(t.c_v == Approx(0.8));
    CHECK(t.a() == Approx(std::cos(M_PI / 6)));
    CHECK(t.b() == Approx(0.5));
    CHECK_FALSE(t.maximal());
    CHECK(CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0)).maximal());
}

TEST_CASE("cloning angles at theta = pi/3") {
    auto ang = CloningAngles::from_theta(M_PI / 3);
    CHECK(ang.alpha == Approx(0.9486832980505138).margin(1e-14));
    CHECK(ang.beta == Approx(0.31622776601683794).margin(1e-14));
    CHECK(ang.alpha_tilde == Approx(0.7453559924999299).margin(1e-14));
    CHECK(ang.beta_tilde == Approx(2.0 / 3.0).margin(1e-14));
    CHECK(ang.alpha * ang.alpha + ang.beta * ang.beta == Approx(1.0).margin(1e-14));

    auto border = CloningAngles::from_theta(M_PI / 2);
    CHECK(border.beta_tilde == Approx(0.0).margin(1e-7));
    CHECK(border.alpha == Approx(border.beta).margin(1e-12));
}

TEST_CASE("correction spec angle") {
    auto spec = CorrectionSpec::from_task(CloneTask::make(1.0, +1, 0.6));
    CHECK(spec.gamma == Approx(0.5 * std::acos(0.75)).margin(1e-15));
    CHECK(spec.chi == 0.0);
    auto flat = CorrectionSpec::from_task(CloneTask::make(1.0, +1, 1 / std::sqrt(2.0)));
    CHECK(std::cos(2 * flat.gamma) == Approx(1.0).margin(1e-12));
}

TEST_CASE("abstract machine success probability") {
    CHECK(abstract_machine(CloneTask::make(M_PI / 2, +1, 0.5)).success_probability ==
          Approx(1.0).margin(1e-12));
    CHECK(abstract_machine(CloneTask::make(M_PI / 3, +1, 0.5)).success_probability ==
          Approx(2.0 / 3.0).margin(1e-13));
    CHECK(abstract_machine(CloneTask::make(1e-4, -1, 0.5)).success_probability ==
          Approx(0.5).margin(1e-6));
}

TEST_CASE("abstract machine produces perfect clones and a task-independent leftover") {
    for (int sign : {+1, -1}) {
        auto t = CloneTask::make(M_PI / 3, sign, 0.5);
        auto r = abstract_machine(t);
        auto clones = factor_photon(r.success_state, 1);
        CHECK(fidelity_to(clones, clone_target(clones.registry(), t, false)) ==
              Approx(1.0).margin(1e-12));
        CHECK(r.success_probability + r.failure_probability == Approx(1.0).margin(1e-12));
    }
    auto plus = abstract_machine(CloneTask::make(M_PI / 3, +1, 0.5));
    auto minus = abstract_machine(CloneTask::make(M_PI / 3, -1, 0.5));
    CHECK(fidelity_to(plus.failure_state, minus.failure_state) ==
          Approx(1.0).margin(1e-12));
    auto cs = schmidt_coefficients(
        factor_photon(plus.failure_state, 1), {{1, ModeKind::polarization}});
    REQUIRE(cs.size() == 2);
    CHECK(cs[0] == Approx(3.0 / std::sqrt(10.0)).margin(1e-12));
    CHECK(cs[1] == Approx(1.0 / std::sqrt(10.0)).margin(1e-12));
}

TEST_CASE("maximally entangled local run reproduces the branch table") {
    auto t = CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0));
    auto run = run_lpc_max(t);
    CHECK(branch_sum(run) == Approx(1.0).margin(1e-12));
    CHECK(find_branch(run, "loss").probability == Approx(0.5).margin(1e-12));
    CHECK(find_branch(run, "path_1").probability == Approx(1.0 / 6.0).margin(1e-12));
    CHECK(find_branch(run, "path_a").probability == Approx(1.0 / 6.0).margin(1e-12));
    CHECK(find_branch(run, "path_b").probability == Approx(1.0 / 6.0).margin(1e-12));
    CHECK(total_success(run) == Approx(1.0 / 3.0).margin(1e-12));

    CHECK(find_branch(run, "loss").classification == BranchClass::loss);
    CHECK(find_branch(run, "path_1").classification == BranchClass::failure);
    CHECK(find_branch(run, "path_b").classification == BranchClass::success_after_ruo);

    for (const char* label : {"path_a", "path_b"}) {
        auto f = branch_reference_fidelity(run, find_branch(run, label));
        REQUIRE(f.has_value());
        CHECK(*f == Approx(1.0).margin(1e-10));
    }

    CHECK_THROWS_AS(run_lpc_max(CloneTask::make(M_PI / 3, +1, 0.6)),
                    std::invalid_argument);
}

TEST_CASE("failure port vanishes for orthogonal inputs") {
    auto run = run_lpc_max(CloneTask::make(M_PI / 2, +1, 1 / std::sqrt(2.0)));
    CHECK(find_branch(run, "path_1").probability == Approx(0.0).margin(1e-12));
    CHECK(total_success(run) == Approx(0.5).margin(1e-12));
}

TEST_CASE("golden checkpoints of the local circuit") {
    for (double theta : {M_PI / 6, M_PI / 3, M_PI / 2}) {
        for (int sign : {+1, -1}) {
            auto t = CloneTask::make(theta, sign, 1 / std::sqrt(2.0));
            auto run = run_lpc_max(t);
            REQUIRE(run.states.size() == 10);
            for (int k = 0; k <= 9; ++k) {
                auto want = normalize(reference::lpc_stage(run.registry, t, k)).first;
                INFO("theta=" << theta << " sign=" << sign << " stage=" << k);
                CHECK(fidelity_to(checkpoint(run, k), want) >= 1.0 - 1e-12);
            }
        }
    }
    auto run = run_lpc_max(CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0)));
    CHECK_THROWS_AS(checkpoint(run, 10), std::out_of_range);
}

TEST_CASE("checkpoint zero is the dual-rail source and stage 3 the filtered state") {
    auto t = CloneTask::make(M_PI / 3, +1, 0.6);
    auto run = run_lpc_partial(t, false);
    auto c0 = checkpoint(run, 0);
    CHECK(c0.amplitude({"h", "0", "h", "0"}).real() == Approx(0.6));
    CHECK(c0.amplitude({"v", "1", "v", "1"}).real() == Approx(0.8));

    // filtering passes with probability N = (c_v a)^2 + (c_h b)^2 = 0.57;
    // the blocked amplitude stays on the loss label, so the full norm is 1
    CHECK(run.states[3].norm2() == Approx(1.0).margin(1e-12));
    CHECK(remove_label(run.states[3], 1, ModeKind::path, "loss").norm2() ==
          Approx(0.57).margin(1e-12));
    auto want = normalize(reference::lpc_stage(run.registry, t, 3)).first;
    CHECK(fidelity_to(checkpoint(run, 3), want) >= 1.0 - 1e-12);
}

TEST_CASE("flipping the beam-splitter phase convention breaks the last checkpoint") {
    auto t = CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0));
    detail::CircuitOptions opt;
    opt.flip_bs_phase = true;
    auto run = detail::run_lpc(t, false, false, opt);
    auto want = normalize(reference::lpc_stage(run.registry, t, 9)).first;
    CHECK(fidelity_to(checkpoint(run, 9), want) < 1.0 - 1e-6);
}

TEST_CASE("recovery unitary maps the wrong-sign pair onto the right-sign one") {
    auto reg = photon1_reg({"0", "1"});
    for (double theta : {M_PI / 6, M_PI / 3, M_PI / 2}) {
        for (int sign : {+1, -1}) {
            auto t = CloneTask::make(theta, sign, 0.5);
            auto flipped = t;
            flipped.sign = -sign;
            auto wrong = clone_target(reg, flipped, false);
            CHECK(fidelity_to(apply_ruo(wrong, 1), clone_target(reg, t, false)) ==
                  Approx(1.0).margin(1e-12));
            // involution
            CHECK(fidelity_to(apply_ruo(apply_ruo(wrong, 1), 1), wrong) ==
                  Approx(1.0).margin(1e-12));
        }
    }
    // no |v> or path-1 component: left alone
    auto h0 = PureState::basis_ket(reg, {"h", "0"});
    CHECK(fidelity_to(apply_ruo(h0, 1), h0) == Approx(1.0).margin(1e-14));
}

TEST_CASE("conditional interferometer discriminates the nonorthogonal pair") {
    auto reg = photon1_reg({"0", "1", "0'", "1'", "2'", "3'"});
    auto t = CloneTask::make(M_PI / 3, +1, 0.6);
    auto spec = CorrectionSpec::from_task(t);

    for (int sign : {+1, -1}) {
        auto in = reference::alpha_pair(reg, t, false, sign);
        auto out = apply_ci(in, 1, CiPort::zero, spec);
        CHECK(out.norm2() == Approx(1.0).margin(1e-12));
        auto ok = project(out, 1, ModeKind::path, "0'");
        CHECK(ok.norm2() == Approx(0.72).margin(1e-12));  // 2 c_h^2
        PureState even(reg);
        even.add({"h", "0'"}, 1 / std::sqrt(2.0)).add({"v", "0'"}, sign / std::sqrt(2.0));
        CHECK(std::norm(inner_product(even, out)) == Approx(0.72).margin(1e-12));
        CHECK(project(out, 1, ModeKind::path, "2'").norm2() ==
              Approx(0.28).margin(1e-12));

        auto tin = reference::alpha_pair(reg, t, true, sign);
        auto tout = apply_ci(tin, 1, CiPort::one, spec);
        CHECK(project(tout, 1, ModeKind::path, "1'").norm2() ==
              Approx(0.72).margin(1e-12));
        CHECK(project(tout, 1, ModeKind::path, "3'").norm2() ==
              Approx(0.28).margin(1e-12));
    }

    // maximal entanglement: gamma = 0 and the interferometer is a relabel
    auto flat = CorrectionSpec::from_task(CloneTask::make(1.0, +1, 1 / std::sqrt(2.0)));
    auto relabel =
        apply_ci(PureState::basis_ket(reg, {"h", "0"}), 1, CiPort::zero, flat);
    CHECK(relabel.amplitude({"h", "0'"}).real() == Approx(1.0).margin(1e-12));

    CHECK_THROWS_AS(apply_ci(PureState::basis_ket(reg, {"h", "0"}), 1, CiPort::zero,
                             CorrectionSpec{1.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("partially entangled local run, raw branch table") {
    auto t = CloneTask::make(M_PI / 3, +1, 0.6);
    auto run = run_lpc_partial(t, false);
    CHECK(branch_sum(run) == Approx(1.0).margin(1e-12));
    CHECK(find_branch(run, "loss").probability == Approx(0.43).margin(1e-12));
    CHECK(find_branch(run, "path_1").probability ==
          Approx(0.21333333333333333).margin(1e-12));
    CHECK(find_branch(run, "path_a").probability ==
          Approx(0.17833333333333334).margin(1e-12));
    CHECK(find_branch(run, "path_b").probability ==
          Approx(0.17833333333333334).margin(1e-12));

    // conditional states match the closed forms
    auto reg1 = photon1_reg({"0", "1"});
    for (int i : {1, 2, 3}) {
        const char* label = i == 1 ? "path_1" : (i == 2 ? "path_a" : "path_b");
        auto got = factor_photon(find_branch(run, label).state, 1);
        auto want = normalize(reference::lpc_phi(reg1, t, i)).first;
        CHECK(fidelity_to(reindexed(got, reg1), want) == Approx(1.0).margin(1e-12));
    }

    // final stage matches the assembled closed form
    auto want9 = normalize(reference::lpc_stage(run.registry, t, 9)).first;
    CHECK(fidelity_to(checkpoint(run, 9), want9) >= 1.0 - 1e-12);
}

TEST_CASE("discrimination stage turns the partial channel into perfect clones") {
    auto t = CloneTask::make(M_PI / 3, +1, 0.6);
    auto run = run_lpc_partial(t, true);
    CHECK(branch_sum(run) == Approx(1.0).margin(1e-12));
    CHECK(find_branch(run, "path_a").probability == Approx(0.12).margin(1e-12));
    CHECK(find_branch(run, "path_b").probability == Approx(0.12).margin(1e-12));
    CHECK(total_success(run) == Approx(0.24).margin(1e-12));  // c_h^2/(1+cos)
    CHECK(find_branch(run, "path_a:usd_fail_2'").probability ==
          Approx(0.0525).margin(1e-12));
    CHECK(find_branch(run, "path_a:usd_fail_3'").probability ==
          Approx(0.005833333333333334).margin(1e-12));

    for (const char* label : {"path_a", "path_b"}) {
        auto f = branch_reference_fidelity(run, find_branch(run, label));
        REQUIRE(f.has_value());
        CHECK(*f == Approx(1.0).margin(1e-10));
    }

    // at maximal entanglement the correction is a pass-through
    auto tmax = CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0));
    auto rmax = run_lpc_partial(tmax, true);
    CHECK(total_success(rmax) == Approx(1.0 / 3.0).margin(1e-12));
    CHECK(find_branch(rmax, "path_a:usd_fail_2'").probability ==
          Approx(0.0).margin(1e-12));
}

TEST_CASE("corrected totals over a parameter grid") {
    for (int i = 1; i <= 5; ++i) {
        double theta = i * M_PI / 10;
        for (double ch : {0.15, 0.45, 0.6, 1 / std::sqrt(2.0)}) {
            for (int sign : {+1, -1}) {
                auto t = CloneTask::make(theta, sign, ch);
                auto run = run_lpc_partial(t, true);
                INFO("theta=" << theta << " ch=" << ch << " sign=" << sign);
                CHECK(branch_sum(run) == Approx(1.0).margin(1e-12));
                CHECK(total_success(run) ==
                      Approx(ch * ch / (1.0 + std::cos(theta))).margin(1e-12));
                for (const char* label : {"path_a", "path_b"}) {
                    auto f = branch_reference_fidelity(run, find_branch(run, label));
                    REQUIRE(f.has_value());
                    CHECK(*f >= 1.0 - 1e-10);
                }
            }
        }
    }
}

TEST_CASE("failure branches do not depend on the input state") {
    auto tp = CloneTask::make(M_PI / 3, +1, 0.6);
    auto tm = CloneTask::make(M_PI / 3, -1, 0.6);
    auto rp = run_lpc_partial(tp, true);
    auto rm = run_lpc_partial(tm, true);
    CHECK(fidelity_to(find_branch(rp, "path_1").state, find_branch(rm, "path_1").state) ==
          Approx(1.0).margin(1e-12));

    // joint inconclusive state equals the closed form for both signs
    auto reg1 = photon1_reg({"0", "1", "0'", "1'", "2'", "3'"});
    auto spec = CorrectionSpec::from_task(tp);
    for (const auto* run : {&rp, &rm}) {
        auto raw_run = run_lpc_partial(run->task, false);
        auto phi2 = reindexed(factor_photon(find_branch(raw_run, "path_a").state, 1), reg1);
        auto after = apply_ci(apply_ci(phi2, 1, CiPort::zero, spec), 1, CiPort::one, spec);
        auto failed = normalize(project_any(after, 1, ModeKind::path, {"2'", "3'"})).first;
        CHECK(fidelity_to(failed, reference::usd_failure_state(reg1, run->task)) ==
              Approx(1.0).margin(1e-12));
        // and the full discrimination output matches the closed form
        auto want = normalize(reference::corrected_phi2(reg1, run->task)).first;
        CHECK(fidelity_to(normalize(after).first, want) == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("local circuit agrees with the abstract machine on the success branch") {
    for (int sign : {+1, -1}) {
        auto t = CloneTask::make(M_PI / 3, sign, 1 / std::sqrt(2.0));
        auto run = run_lpc_max(t);
        auto machine = abstract_machine(t);
        auto circuit_state = factor_photon(find_branch(run, "path_a").state, 1);
        auto machine_state = factor_photon(machine.success_state, 1);
        CHECK(fidelity_to(reindexed(circuit_state, machine_state.registry()),
                          machine_state) == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("every element used by the local circuit validates") {
    auto run = run_lpc_partial(CloneTask::make(M_PI / 3, +1, 0.6), true);
    for (const auto& rep : validate_all(run)) {
        INFO(rep.element);
        CHECK(rep.max_deviation < 1e-12);
    }
}
