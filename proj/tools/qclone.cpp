// qclone: state-vector simulator for probabilistic-cloning optical circuits.
// Subcommands: run, sweep, verify, dump-elements, dump-checkpoints.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include "qclone/serialize.hpp"
#include "qclone/verify.hpp"

using namespace qclone;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("QCLONE_SEED")) {
        char* end = nullptr;
        auto v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
    }
    return 1;
}

// Angles require an explicit unit suffix: "60deg" or "1.0472rad".
double parse_angle(const std::string& text) {
    auto parse_with = [&](const std::string& suffix, double scale) -> double {
        std::string num = text.substr(0, text.size() - suffix.size());
        std::size_t used = 0;
        double v = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing characters");
        return v * scale;
    };
    if (text.size() > 3 && text.rfind("deg") == text.size() - 3)
        return parse_with("deg", M_PI / 180.0);
    if (text.size() > 3 && text.rfind("rad") == text.size() - 3)
        return parse_with("rad", 1.0);
    throw std::invalid_argument("angle '" + text + "' needs a deg or rad suffix");
}

int parse_sign(const std::string& text) {
    if (text == "+") return +1;
    if (text == "-") return -1;
    throw std::invalid_argument("sign must be + or -");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        if (comma > pos) out.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

struct Settings {
    std::string circuit;
    std::string theta = "60deg";
    std::string sign = "+";
    double ch = 1.0 / std::sqrt(2.0);
    bool correct = false;
    std::uint64_t shots = 0;  // 0 disables sampling
    std::uint64_t seed = default_seed();
    std::string output = "csv";
    bool checkpoints = false;
    std::string out_path;
};

void load_config(const std::string& path, Settings& s) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    Json j = Json::parse(in);
    if (j.contains("circuit")) s.circuit = j["circuit"].get<std::string>();
    if (j.contains("theta")) s.theta = j["theta"].get<std::string>();
    if (j.contains("sign")) s.sign = j["sign"].get<std::string>();
    if (j.contains("ch")) s.ch = j["ch"].get<double>();
    if (j.contains("correct")) s.correct = j["correct"].get<bool>();
    if (j.contains("shots")) s.shots = j["shots"].get<std::uint64_t>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output")) s.output = j["output"].get<std::string>();
    if (j.contains("checkpoints")) s.checkpoints = j["checkpoints"].get<bool>();
    if (j.contains("out")) s.out_path = j["out"].get<std::string>();
}

CircuitRun run_circuit(const std::string& circuit, const CloneTask& task, bool correct) {
    if (circuit == "oracle") return run_oracle(task);
    if (circuit == "lpc-max") return run_lpc_max(task);
    if (circuit == "lpc-partial") return run_lpc_partial(task, correct);
    if (circuit == "nlopc-partial") return run_nlopc_partial(task, correct);
    throw std::invalid_argument("unknown circuit '" + circuit +
                                "' (oracle, lpc-max, lpc-partial, nlopc-partial)");
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + out_path);
    out << text;
}

std::map<std::string, McColumns> mc_columns(const CountTable& table) {
    std::map<std::string, McColumns> out;
    for (const auto& r : table.rows)
        out[r.label] = {r.count, r.rate, r.ci_low, r.ci_high};
    return out;
}

int cmd_run(const Settings& s) {
    auto task = CloneTask::make(parse_angle(s.theta), parse_sign(s.sign), s.ch);
    auto run = run_circuit(s.circuit, task, s.correct);
    auto rep = compare(run, summarize(task));
    std::optional<CountTable> counts;
    if (s.shots > 0) counts = sample(run.branches, {s.shots, s.seed});

    if (s.output == "csv") {
        if (s.checkpoints)
            throw std::invalid_argument("--checkpoints requires --output json");
        std::string text = csv_header() + "\n";
        auto mc = counts ? mc_columns(*counts) : std::map<std::string, McColumns>{};
        append_csv_rows(text, rep, counts ? &mc : nullptr);
        write_output(text, s.out_path);
    } else if (s.output == "json") {
        Json j = report_json(rep, counts ? &*counts : nullptr);
        if (s.checkpoints) j["checkpoints"] = checkpoints_json(run);
        write_output(j.dump(2) + "\n", s.out_path);
    } else {
        throw std::invalid_argument("output must be csv or json");
    }
    return rep.pass ? kExitOk : kExitVerification;
}

struct SweepSpec {
    std::string thetas;
    std::string chs = "0.7071067811865476";
    std::string circuits = "oracle,lpc-max,lpc-partial,nlopc-partial";
    Settings base;
};

int cmd_sweep(const SweepSpec& spec) {
    struct Job {
        std::string circuit;
        CloneTask task;
    };
    std::vector<Job> jobs;
    auto thetas = split_list(spec.thetas);
    auto chs = split_list(spec.chs);
    if (thetas.empty() || chs.empty())
        throw std::invalid_argument("sweep needs nonempty --thetas and --chs");
    const int sign = parse_sign(spec.base.sign);
    for (const auto& circuit : split_list(spec.circuits)) {
        const bool uses_ch = circuit == "lpc-partial" || circuit == "nlopc-partial";
        for (const auto& theta_text : thetas) {
            double theta = parse_angle(theta_text);
            if (uses_ch)
                for (const auto& ch_text : chs)
                    jobs.push_back({circuit,
                                    CloneTask::make(theta, sign, std::stod(ch_text))});
            else
                jobs.push_back(
                    {circuit, CloneTask::make(theta, sign, 1.0 / std::sqrt(2.0))});
        }
    }

    struct Row {
        ComparisonReport rep;
        std::optional<CountTable> counts;
    };
    std::vector<std::optional<Row>> results(jobs.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(jobs.size())));
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
            for (std::size_t i = w; i < jobs.size(); i += workers) {
                auto run = run_circuit(jobs[i].circuit, jobs[i].task, spec.base.correct);
                Row row{compare(run, summarize(jobs[i].task)), std::nullopt};
                if (spec.base.shots > 0)
                    row.counts = sample(
                        run.branches,
                        {spec.base.shots, rng::derive_stream_seed(spec.base.seed, i)});
                results[i] = std::move(row);
            }
        }));
    }
    for (auto& f : futures) f.get();

    std::string text = csv_header() + "\n";
    bool all_pass = true;
    for (const auto& r : results) {
        auto mc = r->counts ? mc_columns(*r->counts) : std::map<std::string, McColumns>{};
        append_csv_rows(text, r->rep, r->counts ? &mc : nullptr);
        all_pass = all_pass && r->rep.pass;
    }
    write_output(text, spec.base.out_path);
    return all_pass ? kExitOk : kExitVerification;
}

int cmd_verify(const std::string& only) {
    // trim the filter tail until it matches, so e.g. "probabilities" selects
    // the probability criteria
    std::string filter = only;
    auto results = verify::run_acceptance({filter});
    while (results.empty() && filter.size() > 3) {
        filter.pop_back();
        results = verify::run_acceptance({filter});
    }
    if (results.empty()) throw std::invalid_argument("no criterion matches '" + only + "'");
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  %2d %-26s worst=%-12.3g %s\n", r.pass ? "PASS" : "FAIL",
                    r.index, r.name.c_str(), r.worst, r.detail.c_str());
        all = all && r.pass;
    }
    std::printf("%s\n", all ? "ACCEPTED" : "REJECTED");
    return all ? kExitOk : kExitVerification;
}

int cmd_dump(const Settings& s, bool elements) {
    auto task = CloneTask::make(parse_angle(s.theta), parse_sign(s.sign), s.ch);
    auto run = run_circuit(s.circuit, task, s.correct);
    Json j = elements ? elements_json(run) : Json{{"circuit", run.circuit},
                                                  {"checkpoints", checkpoints_json(run)}};
    write_output(j.dump(2) + "\n", s.out_path);
    return kExitOk;
}

void add_task_options(CLI::App* cmd, Settings& s, bool need_circuit) {
    auto* c = cmd->add_option("--circuit", s.circuit,
                              "oracle | lpc-max | lpc-partial | nlopc-partial");
    if (need_circuit && s.circuit.empty()) c->required();
    cmd->add_option("--theta", s.theta, "input-pair angle with unit suffix, e.g. 60deg");
    cmd->add_option("--sign", s.sign, "which input state, + or -");
    cmd->add_option("--ch", s.ch, "channel Schmidt coefficient c_h (<= 1/sqrt 2)");
    cmd->add_flag("--correct", s.correct, "apply the discrimination correction");
    cmd->add_option("--out", s.out_path, "write output to a file instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
    // a config file provides defaults; explicit flags override them
    Settings settings;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        try {
            if (arg == "--config" && i + 1 < argc) {
                load_config(argv[i + 1], settings);
            } else if (arg.rfind("--config=", 0) == 0) {
                load_config(arg.substr(9), settings);
            }
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }

    CLI::App app{"State-vector simulator for probabilistic-cloning optical circuits"};
    app.require_subcommand(1);
    std::string config_path;

    auto* run_cmd = app.add_subcommand("run", "run one experiment and compare "
                                              "against the closed forms");
    add_task_options(run_cmd, settings, /*need_circuit=*/true);
    run_cmd->add_option("--config", config_path, "JSON file with default settings");
    run_cmd->add_option("--shots", settings.shots, "sample detector statistics");
    run_cmd->add_option("--seed", settings.seed, "sampling seed (env QCLONE_SEED)");
    run_cmd->add_option("--output", settings.output, "csv | json");
    run_cmd->add_flag("--checkpoints", settings.checkpoints,
                      "include per-stage states (json output)");

    SweepSpec sweep;
    sweep.base = settings;
    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid, one CSV row "
                                                  "per branch");
    sweep_cmd->add_option("--thetas", sweep.thetas, "comma list of angles")->required();
    sweep_cmd->add_option("--chs", sweep.chs, "comma list of c_h values");
    sweep_cmd->add_option("--circuits", sweep.circuits, "comma list of circuits");
    sweep_cmd->add_option("--sign", sweep.base.sign, "which input state, + or -");
    sweep_cmd->add_flag("--correct", sweep.base.correct,
                        "apply the discrimination correction");
    sweep_cmd->add_option("--shots", sweep.base.shots, "sample per task");
    sweep_cmd->add_option("--seed", sweep.base.seed, "base seed for per-task streams");
    sweep_cmd->add_option("--out", sweep.base.out_path, "output file");

    std::string only;
    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance criteria");
    verify_cmd->add_option("--only", only, "substring filter on criterion names");

    Settings dump_settings = settings;
    auto* de_cmd = app.add_subcommand("dump-elements", "element catalog as JSON");
    add_task_options(de_cmd, dump_settings, true);
    auto* dc_cmd = app.add_subcommand("dump-checkpoints", "per-stage states as JSON");
    add_task_options(dc_cmd, dump_settings, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" ? kExitOk : kExitUsage;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(settings);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep);
        if (verify_cmd->parsed()) return cmd_verify(only);
        if (de_cmd->parsed()) return cmd_dump(dump_settings, true);
        if (dc_cmd->parsed()) return cmd_dump(dump_settings, false);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerification;
    }
    return kExitUsage;
}
