#include "magrisk/baselines.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace magrisk::baselines {

using namespace magrisk::core;

const char* toString(BaselineKind k) {
    switch (k) {
    case BaselineKind::SingleAgentDecomposed: return "SingleAgentDecomposed";
    case BaselineKind::TheoreticalOptimum: return "TheoreticalOptimum";
    case BaselineKind::Historical: return "Historical";
    case BaselineKind::HumanReference: return "HumanReference";
    }
    return "?";
}

const char* toString(SuiteStage s) {
    switch (s) {
    case SuiteStage::Identify: return "Identify";
    case SuiteStage::Baseline: return "Baseline";
    case SuiteStage::Robustness: return "Robustness";
    }
    return "?";
}

namespace {

PairedDelta pairedDelta(const engine::EnsembleResult& treatment,
                        const engine::EnsembleResult& baseline) {
    if (treatment.runs.size() != baseline.runs.size()) {
        throw BaselineError("paired delta: ensemble sizes differ");
    }
    PairedDelta delta;
    delta.perSeed.reserve(treatment.runs.size());
    for (std::size_t i = 0; i < treatment.runs.size(); ++i) {
        const int ft = treatment.runs[i].status != RunStatus::Success ? 1 : 0;
        const int fb = baseline.runs[i].status != RunStatus::Success ? 1 : 0;
        delta.perSeed.push_back(ft - fb);
    }
    const double n = static_cast<double>(delta.perSeed.size());
    delta.meanDelta = std::accumulate(delta.perSeed.begin(), delta.perSeed.end(), 0.0) / n;
    double var = 0.0;
    for (const int d : delta.perSeed) {
        var += (d - delta.meanDelta) * (d - delta.meanDelta);
    }
    const double sd = delta.perSeed.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    const double half = 1.959963984540054 * sd / std::sqrt(n);
    delta.lo = delta.meanDelta - half;
    delta.hi = delta.meanDelta + half;
    return delta;
}

} // namespace

BaselineReport runBaseline(BaselineKind kind, const ScenarioSpec& spec, int n,
                           const BaselineInputs& inputs, std::uint64_t seedBase,
                           const engine::RunHooks* hooks, int jobs) {
    BaselineReport report;
    report.kind = kind;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n; ++i) seeds.push_back(seedBase + static_cast<std::uint64_t>(i));
    report.treatment = engine::runEnsemble(spec, seeds, hooks, jobs);

    switch (kind) {
    case BaselineKind::SingleAgentDecomposed: {
        if (!inputs.decomposedSpec) {
            throw BaselineError(
                "SingleAgentDecomposed: no decomposition provided for this task");
        }
        report.baseline = engine::runEnsemble(*inputs.decomposedSpec, seeds, hooks, jobs);
        report.delta = pairedDelta(report.treatment, *report.baseline);
        break;
    }
    case BaselineKind::TheoreticalOptimum: {
        if (!inputs.outcomeSpace || inputs.outcomeSpace->outcomes.empty()) {
            throw BaselineError("TheoreticalOptimum: requires an enumerable outcome space");
        }
        double best = 0.0;
        bool first = true;
        for (const auto& o : inputs.outcomeSpace->outcomes) {
            const double s = std::accumulate(o.utilities.begin(), o.utilities.end(), 0.0);
            if (first || s > best) {
                best = s;
                first = false;
            }
        }
        report.theoreticalOptimum = best;
        break;
    }
    case BaselineKind::Historical: {
        if (!inputs.historical) throw BaselineError("Historical: no stored run set provided");
        report.baseline = *inputs.historical;
        if (inputs.historical->seeds == seeds) {
            report.delta = pairedDelta(report.treatment, *inputs.historical);
        } else {
            PairedDelta delta;
            delta.meanDelta = report.treatment.failureRate - inputs.historical->failureRate;
            const double n1 = static_cast<double>(report.treatment.runs.size());
            const double n2 = static_cast<double>(inputs.historical->runs.size());
            const double p1 = report.treatment.failureRate;
            const double p2 = inputs.historical->failureRate;
            const double half =
                1.959963984540054 * std::sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2);
            delta.lo = delta.meanDelta - half;
            delta.hi = delta.meanDelta + half;
            report.delta = delta;
        }
        break;
    }
    case BaselineKind::HumanReference: {
        if (inputs.humanScores.empty()) {
            throw BaselineError("HumanReference: no external scores supplied");
        }
        report.humanScores = inputs.humanScores; // ingest only, never synthesised
        break;
    }
    }
    return report;
}

TaskSuite taskSuiteFromTsv(const std::string& text) {
    TaskSuite suite;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("stage=");
            if (pos != std::string::npos) {
                const std::string stage = line.substr(pos + 6);
                if (stage == "Identify") suite.stage = SuiteStage::Identify;
                else if (stage == "Baseline") suite.stage = SuiteStage::Baseline;
                else if (stage == "Robustness") suite.stage = SuiteStage::Robustness;
                else throw BaselineError("task suite: unknown stage '" + stage + "'");
            }
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream parts(line);
        while (std::getline(parts, field, '\t')) fields.push_back(field);
        if (!fields.empty() && fields[0] == "taskTag") continue; // header row
        if (fields.size() < 4) {
            throw BaselineError("task suite line " + std::to_string(lineNo) +
                                ": expected taskTag\tinput\texpected\tcapability");
        }
        suite.tasks.push_back({fields[0], fields[1], fields[2], fields[3]});
    }
    if (suite.tasks.empty()) throw BaselineError("task suite: no tasks");
    return suite;
}

TaskSuiteResult runTaskSuite(const TaskSuite& suite, const agents::BehaviorSpec& behavior,
                             int nPerTask, std::uint64_t seedBase) {
    if (nPerTask < 1) throw BaselineError("runTaskSuite: N per task must be >= 1");
    TaskSuiteResult result;
    std::map<std::string, int> successes;

    const bool hasTable = behavior.params.contains("table");
    std::optional<double> defaultP;
    if (behavior.params.contains("defaultP")) defaultP = behavior.params["defaultP"].get<double>();

    const RandomStream root(seedBase);
    for (const auto& task : suite.tasks) {
        auto taskStream = root.child("task:" + task.taskTag + ":" + task.input);
        for (int trial = 0; trial < nPerTask; ++trial) {
            auto stream = taskStream.child(static_cast<std::uint64_t>(trial));
            bool success = false;
            if (hasTable) {
                success = agents::capabilityLookup(behavior.params["table"], task.taskTag, stream,
                                                   defaultP);
            } else {
                agents::Observation obs;
                obs.step = 0;
                core::Message input;
                input.step = 0;
                input.from = "__suite";
                input.to = {"candidate"};
                input.content = task.input;
                obs.inbox.push_back(std::move(input));
                obs.envView["__peers"] = Json::array({"__suite"});
                agents::AgentMemory memory;
                const auto decision = agents::decide(behavior, memory, obs, stream);
                for (const auto& m : decision.messages) {
                    if (task.expected.empty() ||
                        m.content.find(task.expected) != std::string::npos) {
                        success = true;
                        break;
                    }
                }
            }
            result.trialsPerCapability[task.capability] += 1;
            if (success) successes[task.capability] += 1;
        }
    }
    for (const auto& [cap, trials] : result.trialsPerCapability) {
        const int s = successes.count(cap) ? successes[cap] : 0;
        result.ratePerCapability[cap] = static_cast<double>(s) / static_cast<double>(trials);
    }
    return result;
}

std::vector<std::string> coverageWarnings(const TaskSuite& suite, const ScenarioSpec& spec) {
    std::set<std::string> covered;
    for (const auto& task : suite.tasks) {
        covered.insert(task.capability);
        covered.insert(task.taskTag);
    }
    std::set<std::string> used;
    for (const auto& agent : spec.agents) {
        const auto& p = agent.behavior.params;
        if (p.contains("table") && p["table"].is_object()) {
            for (const auto& [tag, prob] : p["table"].items()) used.insert(tag);
        }
        if (p.contains("taskTag") && p["taskTag"].is_string()) {
            used.insert(p["taskTag"].get<std::string>());
        }
    }
    std::vector<std::string> warnings;
    for (const auto& tag : used) {
        if (!covered.count(tag)) warnings.push_back(tag);
    }
    return warnings;
}

std::map<std::string, double> humanScoresFromTsv(const std::string& text) {
    std::map<std::string, double> scores;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw BaselineError("human scores line " + std::to_string(lineNo) +
                                ": expected metric\tvalue");
        }
        const std::string metric = line.substr(0, tab);
        if (metric == "metric") continue; // header row
        try {
            scores[metric] = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw BaselineError("human scores line " + std::to_string(lineNo) + ": bad value");
        }
    }
    if (scores.empty()) throw BaselineError("human scores: no rows");
    return scores;
}

} // namespace magrisk::baselines
