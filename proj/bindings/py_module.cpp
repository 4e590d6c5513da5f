// py_module.cpp - pybind11 surface over the main operations. Structured
// values cross the boundary as JSON-shaped dicts, mirroring the file formats.
#include "magrisk/baselines.hpp"
#include "magrisk/engine.hpp"
#include "magrisk/inject.hpp"
#include "magrisk/judge.hpp"
#include "magrisk/metrics.hpp"
#include "magrisk/scenarios.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace magrisk;

namespace {

Json pyToJson(const py::handle& obj) {
    return parseJson(py::cast<std::string>(py::module_::import("json").attr("dumps")(obj)));
}

py::object jsonToPy(const Json& j) {
    return py::module_::import("json").attr("loads")(canonicalDump(j));
}

core::ScenarioSpec specFromPy(const py::dict& spec) {
    return core::scenarioFromJson(pyToJson(spec));
}

Json runResultJson(const engine::RunResult& result) {
    Json milestones = Json::object();
    for (const auto& [name, step] : result.milestonesHit) milestones[name] = step;
    Json taint = Json::object();
    for (const auto& [agent, step] : result.taintReport) taint[agent] = step;
    return Json{{"status", core::toString(result.status)},
                {"statusReason", result.statusReason},
                {"milestonesHit", milestones},
                {"taintReport", taint},
                {"traceDigest", core::traceDigest(result.trace)},
                {"seed", result.trace.seed},
                {"events", static_cast<int>(result.trace.events.size())},
                {"trace", core::serializeTrace(result.trace)}};
}

metrics::OutcomeSpace outcomeSpaceFromPy(const py::list& outcomes) {
    metrics::OutcomeSpace space;
    for (const auto& item : outcomes) {
        const auto pair = py::cast<py::tuple>(item);
        metrics::Outcome o;
        o.label = py::cast<std::string>(pair[0]);
        for (const auto& u : py::cast<py::list>(pair[1])) o.utilities.push_back(py::cast<double>(u));
        space.outcomes.push_back(std::move(o));
    }
    return space;
}

} // namespace

PYBIND11_MODULE(_magrisk, m) {
    m.doc() = "Deterministic multi-agent failure-mode simulation and risk metrics";

    m.def("scenario_names", [] { return scenarios::scenarioNames(); });

    m.def("load_scenario", [](const std::string& name) {
        const auto pkg = scenarios::loadScenario(name);
        Json j{{"spec", core::toJson(pkg.spec)},
               {"pinnedSeed", pkg.pinnedSeed},
               {"narrative", pkg.narrative},
               {"oracle", pkg.oracle},
               {"rulesetText", pkg.rulesetText},
               {"costPerTaintedAction", pkg.costPerTaintedAction}};
        return jsonToPy(j);
    });

    m.def("validate", [](const py::dict& spec) {
        Json out = Json::array();
        for (const auto& v : core::validate(specFromPy(spec))) {
            out.push_back(Json{{"path", v.path}, {"message", v.message}});
        }
        return jsonToPy(out);
    });

    m.def(
        "run_once",
        [](const py::dict& spec, std::uint64_t seed) {
            return jsonToPy(runResultJson(engine::runOnce(specFromPy(spec), seed)));
        },
        py::arg("spec"), py::arg("seed"));

    m.def(
        "run_ensemble",
        [](const py::dict& spec, int n, std::uint64_t seed_base, int jobs) {
            const auto ensemble =
                engine::runEnsemble(specFromPy(spec), n, seed_base, nullptr, jobs);
            Json statuses = Json::array();
            for (const auto& run : ensemble.runs) statuses.push_back(core::toString(run.status));
            return jsonToPy(Json{{"n", ensemble.runs.size()},
                                 {"failures", ensemble.failures},
                                 {"failureRate", ensemble.failureRate},
                                 {"wilson95",
                                  Json::array({ensemble.interval.lo, ensemble.interval.hi})},
                                 {"statuses", statuses}});
        },
        py::arg("spec"), py::arg("n"), py::arg("seed_base") = 1, py::arg("jobs") = 1);

    m.def(
        "replay_check",
        [](const std::string& traceText, const py::dict& spec) {
            engine::replay(core::traceFromLines(traceText), specFromPy(spec));
            return true;
        },
        py::arg("trace_text"), py::arg("spec"));

    m.def(
        "probe_agent",
        [](const py::dict& spec, std::uint64_t seed, int step, const std::string& agent,
           const std::string& question) {
            return engine::probeAgent(specFromPy(spec), seed, step, agent, question);
        },
        py::arg("spec"), py::arg("seed"), py::arg("step"), py::arg("agent"), py::arg("question"));

    m.def(
        "sweep",
        [](const py::dict& spec, const std::string& label, const std::string& param,
           const py::list& values, int n_per_point, std::uint64_t seed_base) {
            inject::SweepAxis axis;
            axis.label = label;
            axis.param = param;
            for (const auto& v : values) axis.values.push_back(pyToJson(v));
            Json out = Json::array();
            for (const auto& point :
                 inject::sweep(specFromPy(spec), axis, n_per_point, seed_base)) {
                out.push_back(Json{{"value", point.value},
                                   {"failureRate", point.ensemble.failureRate},
                                   {"failures", point.ensemble.failures},
                                   {"n", point.ensemble.runs.size()}});
            }
            return jsonToPy(out);
        },
        py::arg("spec"), py::arg("label"), py::arg("param"), py::arg("values"),
        py::arg("n_per_point"), py::arg("seed_base") = 1);

    // ---- metrics ----
    m.def(
        "pairwise_similarity",
        [](const std::vector<std::string>& texts) {
            std::vector<std::pair<core::AgentId, std::string>> responses;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                responses.emplace_back("agent" + std::to_string(i), texts[i]);
            }
            const auto result = metrics::pairwiseSimilarity(metrics::makeResponseSet(responses));
            return py::make_tuple(result.matrix, result.meanOffDiagonal);
        },
        py::arg("texts"));

    m.def(
        "response_entropy",
        [](const std::vector<std::string>& texts, double threshold) {
            std::vector<std::pair<core::AgentId, std::string>> responses;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                responses.emplace_back("agent" + std::to_string(i), texts[i]);
            }
            return metrics::responseEntropy(metrics::makeResponseSet(responses), threshold);
        },
        py::arg("texts"), py::arg("threshold") = 0.95);

    m.def("disagreement_rate", &metrics::disagreementRate, py::arg("stances"));

    m.def(
        "pareto_frontier",
        [](const py::list& outcomes) { return metrics::paretoFrontier(outcomeSpaceFromPy(outcomes)); },
        py::arg("outcomes"));

    m.def(
        "cooperation_index",
        [](const std::vector<double>& achieved, const py::list& outcomes) {
            return metrics::cooperationIndex(achieved, outcomeSpaceFromPy(outcomes));
        },
        py::arg("achieved"), py::arg("outcomes"));

    m.def("apply_safety_factor", &metrics::applySafetyFactor, py::arg("p"), py::arg("n"));

    m.def(
        "tom_score",
        [](const std::string& traceText) {
            const auto score = metrics::tomScore(core::traceFromLines(traceText));
            Json acc = Json::object();
            for (const auto& [agent, a] : score.accuracyPerAgent) acc[agent] = a;
            Json out{{"hasData", score.hasData},
                     {"overallAccuracy", score.overallAccuracy},
                     {"resolved", score.resolved},
                     {"accuracyPerAgent", acc}};
            if (score.brier) out["brier"] = *score.brier;
            return jsonToPy(out);
        },
        py::arg("trace_text"));

    m.def(
        "cascade_stats",
        [](const std::string& traceText, const std::string& label, double costPerTaintedAction) {
            const auto stats =
                metrics::cascadeStats(core::traceFromLines(traceText), label, costPerTaintedAction);
            Json steps = Json::object();
            for (const auto& [agent, step] : stats.firstContaminationSteps) steps[agent] = step;
            return jsonToPy(Json{{"agentsReached", stats.agentsReached},
                                 {"maxChainDepth", stats.maxChainDepth},
                                 {"firstContaminationSteps", steps},
                                 {"taintedActions", stats.taintedActions},
                                 {"amplification", stats.amplification}});
        },
        py::arg("trace_text"), py::arg("label"), py::arg("cost_per_tainted_action") = 0.0);

    m.def(
        "classify",
        [](const std::vector<std::string>& texts, const std::string& rulesetText) {
            judge::ClassifyConfig config;
            config.ruleset = rulesetText.empty() ? judge::defaultRuleset()
                                                 : judge::rulesetFromText(rulesetText);
            std::vector<core::Message> messages;
            for (const auto& t : texts) {
                core::Message msg;
                msg.content = t;
                messages.push_back(std::move(msg));
            }
            std::vector<std::string> out;
            for (const auto& label : judge::classify(config, messages)) {
                out.push_back(label.category);
            }
            return out;
        },
        py::arg("texts"), py::arg("ruleset_text") = "");

    m.def("trace_digest", [](const std::string& traceText) {
        return core::traceDigest(core::traceFromLines(traceText));
    });
}
