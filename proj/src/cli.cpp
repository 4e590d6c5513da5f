// cli.cpp - config loading, subcommand orchestration and artifact emission.
// Every artifact embeds the producing command and the config digest; re-runs
// with identical inputs produce byte-identical primary artifacts.
#include "magrisk/cli.hpp"

#include "magrisk/baselines.hpp"
#include "magrisk/digest.hpp"
#include "magrisk/engine.hpp"
#include "magrisk/inject.hpp"
#include "magrisk/judge.hpp"
#include "magrisk/metrics.hpp"
#include "magrisk/scenarios.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace magrisk::cli {

namespace fs = std::filesystem;
using namespace magrisk::core;

namespace {

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw std::runtime_error("cannot write " + path);
    out << content;
}

Trace loadTraceFile(const std::string& path) { return traceFromLines(readFile(path)); }

// External judge over HTTP; endpoint and key come only from the environment,
// never from config files.
class HttpJudgeTransport final : public judge::JudgeTransport {
public:
    HttpJudgeTransport() {
        const char* endpoint = std::getenv("MAGRISK_JUDGE_ENDPOINT");
        if (!endpoint || !*endpoint) {
            throw judge::JudgeError("external judge requested but MAGRISK_JUDGE_ENDPOINT is unset");
        }
        const std::string url = endpoint;
        const auto schemeEnd = url.find("://");
        const auto pathStart = url.find('/', schemeEnd == std::string::npos ? 0 : schemeEnd + 3);
        base_ = pathStart == std::string::npos ? url : url.substr(0, pathStart);
        path_ = pathStart == std::string::npos ? "/" : url.substr(pathStart);
        const char* key = std::getenv("MAGRISK_JUDGE_KEY");
        if (key) key_ = key;
    }

    std::string classifyText(const std::string& content) override {
        httplib::Client client(base_);
        client.set_read_timeout(10, 0);
        httplib::Headers headers;
        if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
        auto res = client.Post(path_, headers, content, "text/plain");
        if (!res || res->status != 200) {
            throw judge::JudgeError("judge endpoint error (status " +
                                    std::to_string(res ? res->status : 0) + ")");
        }
        std::string category = res->body;
        while (!category.empty() && (category.back() == '\n' || category.back() == '\r')) {
            category.pop_back();
        }
        return category;
    }

private:
    std::string base_;
    std::string path_;
    std::string key_;
};

struct JudgeSetup {
    judge::ClassifyConfig config;
    std::unique_ptr<HttpJudgeTransport> transport;
    std::unique_ptr<judge::JudgeCache> cache;
    int responseWindow = 2;
};

JudgeSetup makeJudge(const Json& judgeJson, const std::string& baseDir, const std::string& outDir) {
    JudgeSetup setup;
    const std::string kind = judgeJson.value("kind", "RuleBased");
    setup.responseWindow = judgeJson.value("responseWindow", 2);
    if (judgeJson.contains("rulesetFile")) {
        const fs::path p = fs::path(baseDir) / judgeJson["rulesetFile"].get<std::string>();
        setup.config.ruleset = judge::rulesetFromText(readFile(p.string()));
    } else {
        setup.config.ruleset = judge::defaultRuleset();
    }
    if (kind == "ExternalAdapter") {
        setup.config.kind = judge::JudgeKind::ExternalAdapter;
        setup.transport = std::make_unique<HttpJudgeTransport>();
        setup.config.adapter = setup.transport.get();
        setup.cache = std::make_unique<judge::JudgeCache>();
        if (!outDir.empty()) {
            setup.cache->loadFile((fs::path(outDir) / "judge_cache.json").string());
        }
        setup.config.cache = setup.cache.get();
    }
    return setup;
}

// --- metric registry --------------------------------------------------------

struct MetricContext {
    const ExperimentConfig& config;
    const engine::EnsembleResult& ensemble;
    const engine::RunResult& baseRun;
    const judge::ClassifyConfig& judgeConfig;
    int responseWindow;
};

Json computeMetric(const std::string& name, const Json& params, const MetricContext& ctx) {
    const Trace& trace = ctx.baseRun.trace;
    if (name == "cascade") {
        const std::string label = params.value("label", "");
        if (label.empty()) return Json{{"available", false}, {"note", "no taint label configured"}};
        const double cost = params.value("costPerTaintedAction", 0.0);
        try {
            const auto stats = metrics::cascadeStats(trace, label, cost);
            Json steps = Json::object();
            for (const auto& [agent, step] : stats.firstContaminationSteps) steps[agent] = step;
            return Json{{"available", true},
                        {"label", label},
                        {"agentsReached", stats.agentsReached},
                        {"maxChainDepth", stats.maxChainDepth},
                        {"firstContaminationSteps", steps},
                        {"taintedActions", stats.taintedActions},
                        {"amplification", stats.amplification}};
        } catch (const metrics::MetricError& e) {
            return Json{{"available", false}, {"note", e.what()}};
        }
    }
    if (name == "responseEntropy" || name == "pairwiseSimilarity" || name == "disagreement") {
        const int step = params.value("step", 0);
        const auto kind = messageKindFromString(params.value("kind", "Statement"));
        const auto responses = metrics::responsesAt(trace, step, kind);
        if (responses.empty()) {
            return Json{{"available", false}, {"note", "no responses at the requested step"}};
        }
        if (name == "disagreement") {
            std::vector<std::string> stances;
            for (const auto& [agent, content] : responses) stances.push_back(content);
            return Json{{"available", true}, {"rate", metrics::disagreementRate(stances)}};
        }
        const auto rs = metrics::makeResponseSet(responses);
        if (name == "responseEntropy") {
            return Json{{"available", true},
                        {"bits", metrics::responseEntropy(rs, params.value("threshold", 0.95))}};
        }
        if (rs.items.size() < 2) {
            return Json{{"available", false}, {"note", "need at least two responses"}};
        }
        const auto sim = metrics::pairwiseSimilarity(rs);
        return Json{{"available", true}, {"meanOffDiagonal", sim.meanOffDiagonal}};
    }
    if (name == "tomScore") {
        const auto score = metrics::tomScore(trace);
        if (!score.hasData) return Json{{"available", false}, {"note", "no prediction events"}};
        Json acc = Json::object();
        for (const auto& [agent, a] : score.accuracyPerAgent) acc[agent] = a;
        Json out{{"available", true},
                 {"overallAccuracy", score.overallAccuracy},
                 {"resolved", score.resolved},
                 {"accuracyPerAgent", acc}};
        if (score.brier) {
            out["brier"] = *score.brier;
            out["brierCount"] = score.brierCount;
        }
        return out;
    }
    if (name == "coordination") {
        const auto stats = metrics::coordinationStats(trace, &ctx.judgeConfig);
        Json dist = Json::object();
        for (const auto& [cat, n] : stats.messageCategoryDistribution) dist[cat] = n;
        Json out{{"available", true},
                 {"taskCompletion", stats.taskCompletion},
                 {"impasseRounds", stats.impasseRounds},
                 {"roundsExecuted", stats.roundsExecuted},
                 {"conflictFrequency", stats.conflictFrequency},
                 {"messageCategoryDistribution", dist}};
        if (stats.timeToSuccess) out["timeToSuccess"] = *stats.timeToSuccess;
        return out;
    }
    if (name == "ignoredRequests") {
        const auto messages = metrics::messagesFromTrace(trace);
        const int window = params.value("window", ctx.responseWindow);
        const auto flagged = judge::detectIgnoredRequests(messages, window);
        Json items = Json::array();
        for (const auto& f : flagged) {
            Json to = Json::array();
            for (const auto& r : f.request.to) to.push_back(r);
            items.push_back(Json{{"step", f.request.step},
                                 {"from", f.request.from},
                                 {"to", to},
                                 {"windowChecked", f.windowChecked}});
        }
        return Json{{"available", true}, {"count", items.size()}, {"requests", items}};
    }
    if (name == "judgeDistribution") {
        const auto messages = metrics::messagesFromTrace(trace);
        if (messages.empty()) return Json{{"available", false}, {"note", "no messages"}};
        const auto labels = judge::classify(ctx.judgeConfig, messages);
        Json dist = Json::object();
        for (const auto& l : labels) {
            dist[l.category] = dist.value(l.category, 0) + 1;
        }
        return Json{{"available", true}, {"distribution", dist}};
    }
    if (name == "safetyFactor") {
        const double n = params.value("n", 1.0);
        return Json{{"available", true},
                    {"n", n},
                    {"simulatedFailureRate", ctx.ensemble.failureRate},
                    {"estimatedDeploymentRate",
                     metrics::applySafetyFactor(ctx.ensemble.failureRate, n)}};
    }
    if (name == "abandonmentCurve") {
        if (ctx.config.scenario.name != "strategist-conformity") {
            return Json{{"available", false},
                        {"note", "pressure-curve probe is defined for strategist-conformity"}};
        }
        const int maxPressure = params.value("maxPressure", 5);
        const auto trials = scenarios::conformityTrials(maxPressure, ctx.ensemble.seeds.front());
        const auto result = metrics::abandonmentRate(trials);
        Json curve = Json::object();
        for (const auto& [size, rate] : result.ratePerPressureSize) {
            curve[std::to_string(size)] = rate;
        }
        Json out{{"available", true}, {"overallRate", result.overallRate}, {"curve", curve}};
        if (result.conformityThreshold) out["conformityThreshold"] = *result.conformityThreshold;
        return out;
    }
    return Json{{"available", false}, {"note", "unknown metric '" + name + "'"}};
}

FailureMode metricFailureMode(const std::string& name) {
    if (name == "cascade" || name == "safetyFactor") return FailureMode::CascadingReliability;
    if (name == "ignoredRequests" || name == "judgeDistribution") return FailureMode::InterAgentComms;
    if (name == "responseEntropy" || name == "pairwiseSimilarity" || name == "disagreement") {
        return FailureMode::MonocultureCollapse;
    }
    if (name == "abandonmentCurve") return FailureMode::ConformityBias;
    if (name == "tomScore") return FailureMode::DeficientTheoryOfMind;
    return FailureMode::MixedMotiveDynamics;
}

std::vector<Json> defaultMetricsFor(const ScenarioSpec& spec) {
    // One representative metric block per failure mode the setting is exposed
    // to; the cascade label defaults to the first injection.
    std::vector<Json> out;
    std::string label;
    if (!spec.injections.empty()) label = spec.injections.front().label;
    const auto& fmap =
        spec.settingFailureMap.empty() ? defaultFailureMap(spec.topology.kind) : spec.settingFailureMap;
    for (const auto& [mode, exposure] : fmap) {
        if (exposure == Exposure::None) continue;
        switch (mode) {
        case FailureMode::CascadingReliability:
            out.push_back(Json{{"name", "cascade"}, {"params", Json{{"label", label}}}});
            break;
        case FailureMode::InterAgentComms:
            out.push_back(Json{{"name", "ignoredRequests"}, {"params", Json::object()}});
            out.push_back(Json{{"name", "judgeDistribution"}, {"params", Json::object()}});
            break;
        case FailureMode::MonocultureCollapse:
            out.push_back(Json{{"name", "responseEntropy"}, {"params", Json::object()}});
            out.push_back(Json{{"name", "pairwiseSimilarity"}, {"params", Json::object()}});
            break;
        case FailureMode::ConformityBias:
            out.push_back(Json{{"name", "abandonmentCurve"}, {"params", Json::object()}});
            break;
        case FailureMode::DeficientTheoryOfMind:
            out.push_back(Json{{"name", "tomScore"}, {"params", Json::object()}});
            break;
        case FailureMode::MixedMotiveDynamics:
            out.push_back(Json{{"name", "coordination"}, {"params", Json::object()}});
            break;
        }
    }
    return out;
}

// Salient-first ordering: High exposure modes precede Exposed ones.
std::vector<Json> orderMetrics(const ExperimentConfig& config, std::vector<Json> requested) {
    const auto& fmap = config.scenario.settingFailureMap;
    auto exposureRank = [&](const Json& metric) {
        const FailureMode mode = metricFailureMode(metric.value("name", ""));
        auto it = fmap.find(mode);
        const Exposure e = it == fmap.end() ? Exposure::None : it->second;
        switch (e) {
        case Exposure::High: return 0;
        case Exposure::Exposed: return 1;
        case Exposure::None: return 2;
        }
        return 2;
    };
    std::stable_sort(requested.begin(), requested.end(),
                     [&](const Json& a, const Json& b) { return exposureRank(a) < exposureRank(b); });
    return requested;
}

Json failureMapJson(const ScenarioSpec& spec) {
    Json out = Json::array();
    std::vector<std::pair<FailureMode, Exposure>> entries(spec.settingFailureMap.begin(),
                                                          spec.settingFailureMap.end());
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return static_cast<int>(a.second) > static_cast<int>(b.second);
    });
    for (const auto& [mode, exposure] : entries) {
        out.push_back(Json{{"mode", toString(mode)}, {"exposure", toString(exposure)}});
    }
    return out;
}

std::string tsvHeaderComment(const std::string& command, const std::string& digest) {
    return "# magrisk " + command + " config=" + digest + "\n";
}

void writeRunsTable(const std::string& path, const std::string& command,
                    const ExperimentConfig& config, const engine::EnsembleResult& ensemble) {
    std::ostringstream out;
    out << tsvHeaderComment(command, config.configDigest);
    out << "seed\tstatus\tendStep\ttimeToSuccess\tmilestonesHit\ttaintedAgents\n";
    for (std::size_t i = 0; i < ensemble.runs.size(); ++i) {
        const auto& run = ensemble.runs[i];
        int endStep = 0;
        for (const auto& e : run.trace.events) {
            if (std::holds_alternative<RunEnded>(e.payload)) endStep = e.step;
        }
        int timeToSuccess = -1;
        if (run.status == RunStatus::Success) {
            timeToSuccess = endStep;
            int last = -1;
            for (const auto& [name, step] : run.milestonesHit) last = std::max(last, step);
            if (last >= 0) timeToSuccess = last;
        }
        out << ensemble.seeds[i] << '\t' << toString(run.status) << '\t' << endStep << '\t';
        if (timeToSuccess >= 0) {
            out << timeToSuccess;
        } else {
            out << "none";
        }
        out << '\t' << run.milestonesHit.size() << '\t' << run.taintReport.size() << '\n';
    }
    writeFile(path, out.str());
}

int mapException(const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (dynamic_cast<const ParseError*>(&e)) return exit_code::ConfigParse;
    if (dynamic_cast<const SpecError*>(&e)) return exit_code::Validation;
    if (dynamic_cast<const scenarios::ScenarioError*>(&e)) return exit_code::Validation;
    return exit_code::Runtime;
}

struct CommonFlags {
    std::string configPath;
    std::optional<int> runs;
    std::optional<std::uint64_t> seedBase;
    std::optional<std::string> outDir;
    std::optional<int> jobs;
};

ExperimentConfig loadWithOverrides(const CommonFlags& flags) {
    ExperimentConfig config = loadExperimentConfig(flags.configPath);
    if (flags.runs) config.runs = *flags.runs;
    if (flags.seedBase) config.seedBase = *flags.seedBase;
    if (flags.outDir) config.outDir = *flags.outDir;
    if (flags.jobs) config.jobs = *flags.jobs;
    return config;
}

int validateOrReport(const ScenarioSpec& spec) {
    const auto violations = validate(spec);
    if (violations.empty()) return exit_code::Ok;
    std::cerr << "scenario validation failed:\n";
    for (const auto& v : violations) {
        std::cerr << "  " << v.path << ": " << v.message << '\n';
    }
    return exit_code::Validation;
}

Json reportSkeleton(const std::string& command, const ExperimentConfig& config) {
    return Json{{"schema", "magrisk-report/1"},
                {"command", command},
                {"configDigest", config.configDigest},
                {"stage", config.stage},
                {"scenario", Json{{"name", config.scenario.name},
                                  {"digest", scenarioDigest(config.scenario)}}},
                {"salientFailureModes", failureMapJson(config.scenario)}};
}

int cmdRun(const CommonFlags& flags) {
    const ExperimentConfig config = loadWithOverrides(flags);
    if (config.stage == "Pilot" || config.stage == "Deployment") {
        std::cerr << "error: stage " << config.stage
                  << " annotates ingested external traces only; the engine does not execute it. "
                     "Use the report command with tracesIn.\n";
        return exit_code::Validation;
    }
    if (const int rc = validateOrReport(config.scenario); rc != exit_code::Ok) return rc;

    fs::create_directories(config.outDir);
    fs::create_directories(fs::path(config.outDir) / "traces");

    const auto ensemble =
        engine::runEnsemble(config.scenario, config.runs, config.seedBase, nullptr, config.jobs);

    JudgeSetup judgeSetup = makeJudge(config.judgeConfig, ".", config.outDir);
    MetricContext ctx{config, ensemble, ensemble.runs.front(), judgeSetup.config,
                      judgeSetup.responseWindow};

    auto requested = config.metricsRequested;
    if (requested.empty()) requested = defaultMetricsFor(config.scenario);
    requested = orderMetrics(config, std::move(requested));

    Json metricsJson = Json::array();
    for (const auto& m : requested) {
        const std::string name = m.value("name", "");
        Json entry{{"name", name},
                   {"failureMode", toString(metricFailureMode(name))},
                   {"values", computeMetric(name, m.value("params", Json::object()), ctx)}};
        metricsJson.push_back(std::move(entry));
    }

    Json report = reportSkeleton("run", config);
    report["ensemble"] = Json{{"n", ensemble.runs.size()},
                              {"failures", ensemble.failures},
                              {"failureRate", ensemble.failureRate},
                              {"wilson95", Json::array({ensemble.interval.lo, ensemble.interval.hi})},
                              {"seedBase", config.seedBase}};
    report["metrics"] = metricsJson;

    Json traceFiles = Json::array();
    const int keep = std::min<int>(config.saveTraces, static_cast<int>(ensemble.runs.size()));
    for (int i = 0; i < keep; ++i) {
        const auto rel = "traces/run_" + std::to_string(ensemble.seeds[i]) + ".trace.jsonl";
        writeFile((fs::path(config.outDir) / rel).string(),
                  serializeTrace(ensemble.runs[i].trace));
        traceFiles.push_back(rel);
    }
    report["traces"] = traceFiles;
    report["runsTable"] = "runs.tsv";

    writeRunsTable((fs::path(config.outDir) / "runs.tsv").string(), "run", config, ensemble);
    writeFile((fs::path(config.outDir) / "report.json").string(), report.dump(2) + "\n");
    if (judgeSetup.cache) {
        judgeSetup.cache->saveFile((fs::path(config.outDir) / "judge_cache.json").string());
    }

    std::cout << "scenario: " << config.scenario.name << " (stage " << config.stage << ")\n";
    std::cout << "runs: " << ensemble.runs.size() << "  failures: " << ensemble.failures
              << "  failureRate: " << ensemble.failureRate << "  wilson95: ["
              << ensemble.interval.lo << ", " << ensemble.interval.hi << "]\n";
    for (const auto& m : metricsJson) {
        std::cout << "metric " << m["name"].get<std::string>() << " ["
                  << m["failureMode"].get<std::string>() << "]: " << m["values"].dump() << '\n';
    }
    std::cout << "artifacts: " << config.outDir << "/report.json\n";
    return exit_code::Ok;
}

int cmdSweep(const CommonFlags& flags) {
    const ExperimentConfig config = loadWithOverrides(flags);
    if (config.sweepAxis.is_null() || !config.sweepAxis.contains("values")) {
        std::cerr << "error: sweep command requires a 'sweep' axis in the config\n";
        return exit_code::Validation;
    }
    if (const int rc = validateOrReport(config.scenario); rc != exit_code::Ok) return rc;

    inject::SweepAxis axis;
    axis.label = config.sweepAxis.value("label", "");
    axis.param = config.sweepAxis.value("param", "");
    for (const auto& v : config.sweepAxis["values"]) axis.values.push_back(v);

    const auto points = inject::sweep(config.scenario, axis, config.runs, config.seedBase,
                                      nullptr, config.jobs);

    fs::create_directories(config.outDir);
    std::ostringstream table;
    table << tsvHeaderComment("sweep", config.configDigest);
    table << "axisValue\tn\tfailures\tfailureRate\twilsonLo\twilsonHi\n";
    Json pointsJson = Json::array();
    for (const auto& p : points) {
        table << p.value.dump() << '\t' << p.ensemble.runs.size() << '\t' << p.ensemble.failures
              << '\t' << p.ensemble.failureRate << '\t' << p.ensemble.interval.lo << '\t'
              << p.ensemble.interval.hi << '\n';
        pointsJson.push_back(Json{{"value", p.value},
                                  {"n", p.ensemble.runs.size()},
                                  {"failures", p.ensemble.failures},
                                  {"failureRate", p.ensemble.failureRate},
                                  {"wilson95",
                                   Json::array({p.ensemble.interval.lo, p.ensemble.interval.hi})}});
    }
    writeFile((fs::path(config.outDir) / "sweep.tsv").string(), table.str());

    Json report = reportSkeleton("sweep", config);
    report["axis"] = config.sweepAxis;
    report["points"] = pointsJson;
    report["sweepTable"] = "sweep.tsv";
    writeFile((fs::path(config.outDir) / "sweep_report.json").string(), report.dump(2) + "\n");

    std::cout << "sweep over " << axis.label << '.' << axis.param << ": " << points.size()
              << " points written to " << config.outDir << "/sweep.tsv\n";
    return exit_code::Ok;
}

int cmdReplay(const CommonFlags& flags, const std::string& tracePath) {
    const ExperimentConfig config = loadWithOverrides(flags);
    const Trace trace = loadTraceFile(tracePath);
    const std::string expected = scenarioDigest(config.scenario);
    if (trace.scenarioDigest != expected) {
        std::cerr << "error: config digest mismatch: trace was produced from scenario digest "
                  << trace.scenarioDigest << ", config resolves to " << expected << '\n';
        return exit_code::Validation;
    }
    try {
        engine::replay(trace, config.scenario);
    } catch (const engine::EngineError& e) {
        std::cerr << "replay failed: " << e.what() << '\n';
        return exit_code::Runtime;
    }
    std::cout << "replay ok: zero divergence over " << trace.events.size() << " events (seed "
              << trace.seed << ")\n";
    return exit_code::Ok;
}

int cmdProbe(const CommonFlags& flags, std::uint64_t seed, int step, const std::string& agent,
             const std::string& question) {
    const ExperimentConfig config = loadWithOverrides(flags);
    if (const int rc = validateOrReport(config.scenario); rc != exit_code::Ok) return rc;
    const std::string answer = engine::probeAgent(config.scenario, seed, step, agent, question);
    std::cout << answer << '\n';
    return exit_code::Ok;
}

int cmdCalibrateJudge(const std::string& annotationsPath, const std::string& rulesetPath,
                      const std::string& outPath, bool external) {
    const auto annotations = judge::annotationsFromTsv(readFile(annotationsPath));
    const fs::path baseDir = fs::path(annotationsPath).parent_path();

    std::map<std::string, Trace> traces;
    for (const auto& item : annotations.items) {
        if (traces.count(item.traceFile)) continue;
        fs::path p = item.traceFile;
        if (p.is_relative()) p = baseDir / p;
        traces[item.traceFile] = loadTraceFile(p.string());
    }

    judge::ClassifyConfig config;
    std::unique_ptr<HttpJudgeTransport> transport;
    judge::JudgeCache cache;
    if (external) {
        config.kind = judge::JudgeKind::ExternalAdapter;
        transport = std::make_unique<HttpJudgeTransport>();
        config.adapter = transport.get();
        config.cache = &cache;
    } else if (!rulesetPath.empty()) {
        config.ruleset = judge::rulesetFromText(readFile(rulesetPath));
    } else {
        config.ruleset = judge::defaultRuleset();
    }

    const auto annotated = judge::resolveAnnotations(annotations, traces);
    auto report = judge::calibrate(config, annotated);
    report.scenarioDigest = traces.begin()->second.scenarioDigest;

    std::cout << "items: " << report.total << "\naccuracy: " << report.accuracy << "\nkappa: ";
    if (report.kappaDefined) {
        std::cout << report.kappa << '\n';
    } else {
        std::cout << "undefined (fewer than 2 classes present)\n";
    }
    if (!outPath.empty()) {
        writeFile(outPath, judge::toJson(report).dump(2) + "\n");
        std::cout << "written: " << outPath << '\n';
    }
    return exit_code::Ok;
}

int cmdReport(const CommonFlags& flags, const std::vector<std::string>& traceArgs,
              const std::string& calibrationPath) {
    const ExperimentConfig config = loadWithOverrides(flags);
    std::vector<std::string> tracePaths = traceArgs;
    for (const auto& t : config.tracesIn) tracePaths.push_back(t);
    if (tracePaths.empty()) {
        std::cerr << "error: report requires stored traces (--trace or tracesIn in the config)\n";
        return exit_code::Validation;
    }
    const std::string expectedDigest = scenarioDigest(config.scenario);

    std::vector<Trace> traces;
    for (const auto& path : tracePaths) {
        Trace t = loadTraceFile(path);
        if (t.scenarioDigest != expectedDigest) {
            std::cerr << "error: trace " << path << " carries scenario digest " << t.scenarioDigest
                      << " but the config resolves to " << expectedDigest << '\n';
            return exit_code::Validation;
        }
        traces.push_back(std::move(t));
    }

    Json report = reportSkeleton("report", config);

    if (!calibrationPath.empty()) {
        const Json calibration = parseJson(readFile(calibrationPath), "calibration report");
        const std::string calDigest = calibration.value("scenarioDigest", "");
        report["calibration"] = calibration;
        if (calDigest != expectedDigest) {
            // Judged results may not transfer across scenario changes.
            report["staleCalibrationWarning"] =
                "calibration was computed for scenario digest " + calDigest +
                "; current digest is " + expectedDigest + " - recalibrate";
        }
    }

    JudgeSetup judgeSetup = makeJudge(config.judgeConfig, ".", config.outDir);
    Json perTrace = Json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        engine::RunResult pseudo;
        pseudo.trace = traces[i];
        engine::EnsembleResult single;
        single.runs.push_back(pseudo);
        single.seeds.push_back(traces[i].seed);
        single.failures = 0;
        single.failureRate = 0.0;
        single.interval = engine::wilson95(0, 1);
        MetricContext ctx{config, single, single.runs.front(), judgeSetup.config,
                          judgeSetup.responseWindow};
        auto requested = config.metricsRequested;
        if (requested.empty()) requested = defaultMetricsFor(config.scenario);
        requested = orderMetrics(config, std::move(requested));
        Json metricsJson = Json::array();
        for (const auto& m : requested) {
            const std::string name = m.value("name", "");
            if (name == "safetyFactor" || name == "abandonmentCurve") continue; // ensemble-only
            metricsJson.push_back(Json{{"name", name},
                                       {"failureMode", toString(metricFailureMode(name))},
                                       {"values",
                                        computeMetric(name, m.value("params", Json::object()), ctx)}});
        }
        perTrace.push_back(Json{{"trace", tracePaths[i]},
                                {"seed", traces[i].seed},
                                {"metrics", metricsJson}});
    }
    report["perTrace"] = perTrace;

    fs::create_directories(config.outDir);
    const auto outPath = fs::path(config.outDir) / "report.json";
    writeFile(outPath.string(), report.dump(2) + "\n");
    if (report.contains("staleCalibrationWarning")) {
        std::cout << "warning: " << report["staleCalibrationWarning"].get<std::string>() << '\n';
    }
    std::cout << "report over " << traces.size() << " trace(s): " << outPath.string() << '\n';
    return exit_code::Ok;
}

int cmdScenario(const std::string& action, const std::string& name, const std::string& outPath) {
    if (action == "list") {
        for (const auto& n : scenarios::scenarioNames()) {
            const auto pkg = scenarios::loadScenario(n);
            std::cout << n << " - " << pkg.narrative << '\n';
        }
        return exit_code::Ok;
    }
    if (action == "export") {
        const auto pkg = scenarios::loadScenario(name);
        const std::string text = toJson(pkg.spec).dump(2) + "\n";
        if (outPath.empty()) {
            std::cout << text;
        } else {
            writeFile(outPath, text);
            std::cout << "written: " << outPath << '\n';
        }
        return exit_code::Ok;
    }
    std::cerr << "error: unknown scenario action '" << action << "' (use list or export)\n";
    return exit_code::Usage;
}

} // namespace

ExperimentConfig loadExperimentConfig(const std::string& path) {
    ExperimentConfig config;
    const std::string text = readFile(path);
    config.raw = parseJson(text, path);
    const Json& j = config.raw;
    if (j.value("schema", "") != std::string(kExperimentSchema)) {
        throw SpecError("config: expected schema '" + std::string(kExperimentSchema) + "'");
    }
    config.configDigest = sha256Hex(canonicalDump(config.raw));
    config.stage = j.value("stage", "Simulation");
    static const std::set<std::string> stages = {"Simulation", "Sandbox", "Pilot", "Deployment"};
    if (!stages.count(config.stage)) throw SpecError("config: unknown stage '" + config.stage + "'");

    const fs::path baseDir = fs::path(path).parent_path();
    if (!j.contains("scenario")) throw SpecError("config: missing 'scenario'");
    const Json& sc = j["scenario"];
    if (sc.is_string()) {
        config.scenario = scenarios::loadScenario(sc.get<std::string>()).spec;
    } else if (sc.is_object() && sc.contains("file")) {
        fs::path p = sc["file"].get<std::string>();
        if (p.is_relative()) p = baseDir / p;
        config.scenario = scenarioFromJson(parseJson(readFile(p.string()), p.string()));
    } else if (sc.is_object() && sc.contains("inline")) {
        config.scenario = scenarioFromJson(sc["inline"]);
    } else {
        throw SpecError("config: 'scenario' must be a shipped name, {file: path} or {inline: spec}");
    }

    config.runs = j.value("runs", 10);
    config.seedBase = j.value("seedBase", std::uint64_t{1});
    config.jobs = j.value("jobs", 1);
    config.saveTraces = j.value("saveTraces", 100);
    config.outDir = j.value("out", "out");
    for (const auto& m : j.value("metrics", Json::array())) config.metricsRequested.push_back(m);
    config.judgeConfig = j.value("judge", Json::object());
    config.sweepAxis = j.value("sweep", Json(nullptr));
    for (const auto& t : j.value("tracesIn", Json::array())) {
        fs::path p = t.get<std::string>();
        if (p.is_relative()) p = baseDir / p;
        config.tracesIn.push_back(p.string());
    }
    if (config.runs < 1) throw SpecError("config: runs must be >= 1");
    return config;
}

int runMain(int argc, char** argv) {
    CLI::App app{"magrisk - deterministic multi-agent failure-mode simulation and risk metrics"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto addCommon = [&](CLI::App* cmd, bool configRequired = true) {
        auto* opt = cmd->add_option("--config", flags.configPath, "experiment config file");
        if (configRequired) opt->required();
        cmd->add_option("--runs", [&flags](const CLI::results_t& r) {
            flags.runs = std::stoi(r.front());
            return true;
        }, "override ensemble size");
        cmd->add_option("--seed-base", [&flags](const CLI::results_t& r) {
            flags.seedBase = std::stoull(r.front());
            return true;
        }, "override base seed");
        cmd->add_option("--out", [&flags](const CLI::results_t& r) {
            flags.outDir = r.front();
            return true;
        }, "override output directory");
        cmd->add_option("--jobs", [&flags](const CLI::results_t& r) {
            flags.jobs = std::stoi(r.front());
            return true;
        }, "parallel workers across ensemble runs");
    };

    auto* run = app.add_subcommand("run", "run an experiment and emit traces, report, plot tables");
    addCommon(run);

    auto* sweep = app.add_subcommand("sweep", "sweep an injection parameter with paired seeds");
    addCommon(sweep);

    auto* replay = app.add_subcommand("replay", "re-execute a stored trace and verify equality");
    addCommon(replay);
    std::string tracePath;
    replay->add_option("--trace", tracePath, "stored trace file")->required();

    auto* probe = app.add_subcommand("probe", "query an agent mid-run without perturbing it");
    addCommon(probe);
    std::uint64_t probeSeed = 42;
    int probeStep = 0;
    std::string probeAgentName, probeQuestion;
    probe->add_option("--seed", probeSeed, "run seed");
    probe->add_option("--step", probeStep, "step to probe at")->required();
    probe->add_option("--agent", probeAgentName, "agent to probe")->required();
    probe->add_option("--question", probeQuestion, "question text")->required();

    auto* calibrate = app.add_subcommand("calibrate-judge",
                                         "calibrate the judge against human annotations");
    std::string annotationsPath, rulesetPath, calibrationOut;
    bool externalJudge = false;
    calibrate->add_option("--annotations", annotationsPath, "annotation TSV")->required();
    calibrate->add_option("--ruleset", rulesetPath, "ruleset pattern file");
    calibrate->add_option("--out", calibrationOut, "write the calibration report JSON here");
    calibrate->add_flag("--external", externalJudge,
                        "use the external judge endpoint (MAGRISK_JUDGE_ENDPOINT)");

    auto* report = app.add_subcommand("report", "recompute metrics over stored traces");
    addCommon(report);
    std::vector<std::string> reportTraces;
    std::string calibrationPath;
    report->add_option("--trace", reportTraces, "stored trace file(s)");
    report->add_option("--calibration", calibrationPath, "calibration report to attach");

    auto* scenario = app.add_subcommand("scenario", "list or export shipped scenarios");
    std::string scenarioAction = "list", scenarioName, scenarioOut;
    scenario->add_option("action", scenarioAction, "list or export");
    scenario->add_option("--name", scenarioName, "scenario to export");
    scenario->add_option("--out", scenarioOut, "write the scenario config here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_code::Ok : exit_code::Usage;
    }

    try {
        if (run->parsed()) return cmdRun(flags);
        if (sweep->parsed()) return cmdSweep(flags);
        if (replay->parsed()) return cmdReplay(flags, tracePath);
        if (probe->parsed()) return cmdProbe(flags, probeSeed, probeStep, probeAgentName, probeQuestion);
        if (calibrate->parsed()) {
            return cmdCalibrateJudge(annotationsPath, rulesetPath, calibrationOut, externalJudge);
        }
        if (report->parsed()) return cmdReport(flags, reportTraces, calibrationPath);
        if (scenario->parsed()) return cmdScenario(scenarioAction, scenarioName, scenarioOut);
    } catch (const std::exception& e) {
        return mapException(e);
    }
    return exit_code::Usage;
}

} // namespace magrisk::cli
