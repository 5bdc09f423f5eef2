// serialize.hpp
// JSON views of states, elements, runs and reports. Objects serialize with
// sorted keys and amplitudes in canonical ket order, so dumps are byte
// stable.
#pragma once

#include <json.hpp>

#include "qclone/analysis.hpp"
#include "qclone/montecarlo.hpp"

namespace qclone {

using Json = nlohmann::json;

inline Json state_json(const PureState& s) {
    const auto& reg = *s.registry();
    Json modes = Json::array();
    for (std::size_t i = 0; i < reg.size(); ++i) {
        const auto& m = reg.mode(i);
        modes.push_back(
            {{"photon", m.photon}, {"kind", to_string(m.kind)}, {"labels", m.labels}});
    }
    Json amps = Json::array();
    for (const auto& [code, a] : s.amplitudes())
        amps.push_back({{"ket", reg.labels_of(code)}, {"re", a.real()}, {"im", a.imag()}});
    return {{"modes", modes}, {"amplitudes", amps}};
}

inline Json element_json(const LinearElement& e) {
    Json cols = Json::array();
    for (const auto& col : e.columns_labeled()) {
        Json outs = Json::array();
        for (const auto& o : col.outs)
            outs.push_back({{"pol", o.pol_out},
                            {"path", o.path_out},
                            {"re", o.coeff.real()},
                            {"im", o.coeff.imag()}});
        cols.push_back({{"pol_in", col.pol_in}, {"path_in", col.path_in}, {"outs", outs}});
    }
    auto rep = e.validate();
    return {{"name", e.name()},
            {"photon", e.photon()},
            {"lossy", e.lossy()},
            {"columns", cols},
            {"validation",
             {{"max_deviation", rep.max_deviation}, {"isometric", rep.ok}}}};
}

inline Json elements_json(const CircuitRun& run) {
    Json stages = Json::array();
    for (const auto& st : run.stages) {
        Json elems = Json::array();
        for (const auto& e : st.elements) elems.push_back(element_json(e));
        stages.push_back({{"stage", st.name}, {"elements", elems}});
    }
    return {{"circuit", run.circuit}, {"stages", stages}};
}

inline Json checkpoints_json(const CircuitRun& run) {
    Json out = Json::array();
    for (std::size_t k = 0; k < run.states.size(); ++k) {
        out.push_back({{"index", k},
                       {"stage", k < run.stages.size() ? run.stages[k].name : ""},
                       {"state", state_json(checkpoint(run, k))}});
    }
    return out;
}

inline Json count_table_json(const CountTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"branch", r.label},
                        {"count", r.count},
                        {"rate", r.rate},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high}});
    return {{"n_shots", t.n}, {"rows", rows}};
}

inline Json report_json(const ComparisonReport& rep, const CountTable* counts = nullptr) {
    Json rows = Json::array();
    for (const auto& row : rep.rows) {
        Json r{{"branch", row.label},
               {"classification", row.classification},
               {"p_sim", row.p_sim},
               {"p_analytic", row.p_analytic},
               {"pass", row.pass}};
        if (row.fidelity)
            r["fidelity"] = *row.fidelity;
        else
            r["fidelity"] = nullptr;
        if (counts) {
            for (const auto& mc : counts->rows) {
                if (mc.label == row.label) {
                    r["count"] = mc.count;
                    r["rate"] = mc.rate;
                    r["ci_low"] = mc.ci_low;
                    r["ci_high"] = mc.ci_high;
                    break;
                }
            }
        }
        rows.push_back(std::move(r));
    }
    return {{"circuit", rep.circuit},
            {"task",
             {{"theta", rep.task.theta},
              {"sign", rep.task.sign > 0 ? "+" : "-"},
              {"c_h", rep.task.c_h},
              {"c_v", rep.task.c_v},
              {"corrected", rep.corrected}}},
            {"branches", rows},
            {"probability_sum", rep.probability_sum},
            {"max_abs_deviation", rep.max_abs_deviation},
            {"pass", rep.pass}};
}

}  // namespace qclone
