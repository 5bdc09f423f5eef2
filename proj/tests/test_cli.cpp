#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env + " " + std::string(QCLONE_CLI_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult r;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
        r.output.append(buf.data(), n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("run emits the branch table and exits zero on a passing task") {
    auto r = run_cli("run --circuit lpc-max --theta 60deg --sign +");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("circuit,theta,sign,c_h,c_v,corrected,branch") != std::string::npos);
    CHECK(r.output.find("lpc-max,1.0471975511966,+,") != std::string::npos);
    CHECK(r.output.find("0.166666666666667") != std::string::npos);
}

TEST_CASE("oracle run reports certain success for orthogonal inputs") {
    auto r = run_cli("run --circuit oracle --theta 90deg");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("oracle,") != std::string::npos);
    CHECK(r.output.find("success,1,1,") != std::string::npos);
}

TEST_CASE("corrected nonlocal run passes at the published total") {
    auto r = run_cli(
        "run --circuit nlopc-partial --theta 60deg --ch 0.6 --correct --output json");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"pass\": true") != std::string::npos);
    CHECK(r.output.find("\"p_analytic\": 0.12") != std::string::npos);
}

TEST_CASE("usage errors exit with code one") {
    CHECK(run_cli("run --circuit lpc-max --theta 60").exit_code == 1);
    CHECK(run_cli("run --circuit bogus --theta 60deg").exit_code == 1);
    CHECK(run_cli("run --theta 60deg").exit_code == 1);          // missing circuit
    CHECK(run_cli("run --circuit lpc-max --theta 60deg --ch 0.3").exit_code == 1);
    CHECK(run_cli("run --circuit lpc-max --theta 60deg --checkpoints").exit_code == 1);
    CHECK(run_cli("bogus-subcommand").exit_code == 1);
}

TEST_CASE("sweeps are deterministic byte for byte") {
    const std::string args =
        "sweep --thetas 30deg,60deg,90deg --chs 0.3,0.6 "
        "--circuits lpc-partial,nlopc-partial --correct --shots 20000 --seed 7";
    auto a = run_cli(args + " --out /tmp/qclone_sweep_a.csv");
    auto b = run_cli(args + " --out /tmp/qclone_sweep_b.csv");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    auto ca = slurp("/tmp/qclone_sweep_a.csv");
    CHECK(ca == slurp("/tmp/qclone_sweep_b.csv"));
    CHECK(ca.find("nlopc-partial") != std::string::npos);
    CHECK(ca.rfind("\n") == ca.size() - 1);
}

TEST_CASE("single point sweep matches the run output") {
    auto sweep = run_cli(
        "sweep --thetas 60deg --chs 0.6 --circuits lpc-partial --correct");
    auto run = run_cli("run --circuit lpc-partial --theta 60deg --ch 0.6 --correct");
    CHECK(sweep.exit_code == 0);
    CHECK(sweep.output == run.output);
}

TEST_CASE("verify subsets run and pass") {
    auto r = run_cli("verify --only crossover");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(r.output.find("ACCEPTED") != std::string::npos);

    auto sub = run_cli("verify --only probabilities");
    CHECK(sub.exit_code == 0);
    CHECK(sub.output.find("optimal-probability") != std::string::npos);
    CHECK(sub.output.find("probability-conservation") != std::string::npos);
    CHECK(sub.output.find("monte-carlo") == std::string::npos);

    CHECK(run_cli("verify --only nonexistent-criterion").exit_code == 1);
}

TEST_CASE("json run can embed the per-stage states") {
    auto r = run_cli(
        "run --circuit lpc-partial --theta 45deg --ch 0.5 --correct "
        "--output json --checkpoints");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"checkpoints\"") != std::string::npos);
    CHECK(r.output.find("\"stage\": \"filter\"") != std::string::npos);
}

TEST_CASE("dump subcommands emit JSON catalogs") {
    auto e = run_cli("dump-elements --circuit lpc-max --theta 60deg");
    CHECK(e.exit_code == 0);
    CHECK(e.output.find("\"name\": \"pbs1\"") != std::string::npos);
    CHECK(e.output.find("\"isometric\": true") != std::string::npos);

    auto c = run_cli("dump-checkpoints --circuit nlopc-partial --theta 60deg --ch 0.6");
    CHECK(c.exit_code == 0);
    CHECK(c.output.find("\"stage\": \"clone_basis_prep\"") != std::string::npos);
    CHECK(c.output.find("\"ket\"") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override them") {
    {
        std::ofstream cfg("/tmp/qclone_cfg.json");
        cfg << R"({"circuit": "lpc-max", "theta": "60deg", "sign": "+"})";
    }
    auto r = run_cli("run --config /tmp/qclone_cfg.json");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("lpc-max,") != std::string::npos);

    auto overridden = run_cli("run --config /tmp/qclone_cfg.json --circuit oracle");
    CHECK(overridden.exit_code == 0);
    CHECK(overridden.output.find("oracle,") != std::string::npos);

    CHECK(run_cli("run --config /tmp/qclone_missing.json").exit_code == 1);
}

TEST_CASE("environment variable provides the default seed") {
    const std::string args = "run --circuit lpc-max --theta 60deg --shots 5000";
    auto via_env = run_cli(args, "QCLONE_SEED=99");
    auto via_flag = run_cli(args + " --seed 99");
    CHECK(via_env.exit_code == 0);
    CHECK(via_env.output == via_flag.output);
    auto other = run_cli(args + " --seed 100");
    CHECK(via_env.output != other.output);
}
