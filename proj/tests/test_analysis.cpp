#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qclone/analysis.hpp"
#include "qclone/reference.hpp"

using namespace qclone;
using Catch::Approx;

TEST_CASE("optimal probability endpoints") {
    CHECK(p_opt(M_PI / 2) == Approx(1.0).margin(1e-15));
    CHECK(p_opt(M_PI / 3) == Approx(2.0 / 3.0).margin(1e-15));
    CHECK(p_opt(1e-9) == Approx(0.5).margin(1e-9));
    CHECK_THROWS_AS(p_opt(0.0), std::invalid_argument);
    CHECK_THROWS_AS(p_opt(2.0), std::invalid_argument);
}

TEST_CASE("merit crossover sits exactly at cos theta = 1/5") {
    auto tie = fxp_crossover_check(std::acos(0.2));
    CHECK(std::abs(tie.margin) < 1e-15);

    auto wins = fxp_crossover_check(M_PI / 2);
    CHECK(wins.probabilistic_wins);
    CHECK(wins.margin == Approx(1.0 / 6.0).margin(1e-15));

    auto loses = fxp_crossover_check(std::acos(0.4));
    CHECK_FALSE(loses.probabilistic_wins);
    CHECK(loses.margin == Approx(-0.11904761904761904).margin(1e-12));
}

TEST_CASE("crossover flag agrees with the direct comparison on a fine grid") {
    for (int k = 1; k <= 1000; ++k) {
        double theta = k * (M_PI / 2) / 1000;
        auto r = fxp_crossover_check(theta);
        bool direct = p_opt(theta) > kUniversalFxp;
        INFO("theta=" << theta);
        CHECK(r.probabilistic_wins == direct);
    }
}

TEST_CASE("discrimination probability and its two forms") {
    CHECK(usd_probability(1 / std::sqrt(2.0)) == Approx(1.0).margin(1e-12));
    CHECK(usd_probability(0.6) == Approx(0.72).margin(1e-15));
    CHECK(usd_probability(0.0) == 0.0);
    CHECK_THROWS_AS(usd_probability(0.9), std::invalid_argument);
}

TEST_CASE("discrimination probability equals one minus the pair overlap") {
    auto reg = std::make_shared<const ModeRegistry>(std::vector<Mode>{
        {1, ModeKind::polarization, {"h", "v"}}, {1, ModeKind::path, {"0", "1"}}});
    for (double ch : {0.0, 0.2, 0.45, 0.6, 1 / std::sqrt(2.0)}) {
        auto t = CloneTask::make(1.0, +1, ch);
        auto ap = reference::alpha_pair(reg, t, false, +1);
        auto am = reference::alpha_pair(reg, t, false, -1);
        double overlap = std::abs(inner_product(ap, am).real());
        INFO("ch=" << ch);
        CHECK(1.0 - overlap == Approx(usd_probability(ch)).margin(1e-12));
    }
}

TEST_CASE("summary fields at the reference point") {
    auto s = summarize(CloneTask::make(M_PI / 3, +1, 0.6));
    CHECK(s.p_opt == Approx(2.0 / 3.0).margin(1e-15));
    CHECK(s.p_total_me == Approx(1.0 / 3.0).margin(1e-15));
    CHECK(s.p_total_pe_local == Approx(0.24).margin(1e-15));
    CHECK(s.p_total_pe_nonlocal == Approx(0.48).margin(1e-15));
    CHECK(s.p_d == Approx(0.72).margin(1e-15));
    CHECK(s.overlap_psi == Approx(0.5).margin(1e-15));
    CHECK(s.overlap_alpha == Approx(0.28).margin(1e-15));
    CHECK(s.gamma == Approx(0.5 * std::acos(0.75)).margin(1e-15));
    CHECK(s.d_plus == Approx(0.6830127018922193).margin(1e-14));
    CHECK(s.d_minus == Approx(0.18301270189221933).margin(1e-14));
    CHECK(s.fxp_universal == Approx(5.0 / 6.0));

    auto m = summarize(CloneTask::make(M_PI / 2, +1, 1 / std::sqrt(2.0)));
    CHECK(m.p_opt == Approx(1.0).margin(1e-12));
    CHECK(m.p_total_me == Approx(0.5).margin(1e-12));
}

TEST_CASE("summary identities hold across the parameter grid") {
    for (int i = 1; i <= 10; ++i) {
        for (int j = 0; j <= 9; ++j) {
            auto t = CloneTask::make(i * M_PI / 20, +1, j / (9.0 * std::sqrt(2.0)));
            auto s = summarize(t);
            CHECK(2 * s.p_total_pe_local == Approx(s.p_total_pe_nonlocal).margin(1e-15));
            CHECK(1.0 - std::abs(s.overlap_alpha) == Approx(s.p_d).margin(1e-12));
        }
        // maximal entanglement reproduces the optimal probability
        auto smax = summarize(CloneTask::make(i * M_PI / 20, +1, 1 / std::sqrt(2.0)));
        CHECK(smax.p_total_pe_nonlocal == Approx(smax.p_opt).margin(1e-12));
    }
}

TEST_CASE("comparison report passes on an exact run and flags perturbations") {
    auto t = CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0));
    auto run = run_lpc_max(t);
    auto rep = compare(run, summarize(t));
    CHECK(rep.pass);
    CHECK(rep.max_abs_deviation < 1e-12);
    CHECK(rep.probability_sum == Approx(1.0).margin(1e-12));

    auto tampered = run;
    tampered.branches[1].probability += 1e-6;
    auto bad = compare(tampered, summarize(t));
    CHECK_FALSE(bad.pass);

    CHECK_THROWS_AS(compare(run, summarize(CloneTask::make(M_PI / 4, +1, 0.5))),
                    std::invalid_argument);
}

TEST_CASE("comparison report covers the corrected circuits") {
    for (const auto& t : {CloneTask::make(M_PI / 3, +1, 0.6),
                          CloneTask::make(M_PI / 6, -1, 0.3)}) {
        CHECK(compare(run_lpc_partial(t, false), summarize(t)).pass);
        CHECK(compare(run_lpc_partial(t, true), summarize(t)).pass);
        CHECK(compare(run_nlopc_partial(t, false), summarize(t)).pass);
        CHECK(compare(run_nlopc_partial(t, true), summarize(t)).pass);
    }
}

TEST_CASE("csv rows are deterministic and formatted at 15 significant digits") {
    auto t = CloneTask::make(M_PI / 3, +1, 1 / std::sqrt(2.0));
    auto rep = compare(run_lpc_max(t), summarize(t));
    std::string a = csv_header() + "\n", b = a;
    append_csv_rows(a, rep);
    append_csv_rows(b, rep);
    CHECK(a == b);
    CHECK(a.find("lpc-max,1.0471975511966,+,") != std::string::npos);
    CHECK(a.find("0.166666666666667") != std::string::npos);  // 1/6 branches
    // no montecarlo columns without shots
    CHECK(a.find(",,,,") != std::string::npos);
}
