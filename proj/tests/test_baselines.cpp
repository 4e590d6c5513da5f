// test_baselines.cpp - paired-seed baseline comparisons and task suites.
#include <doctest.h>

#include "magrisk/baselines.hpp"

#include <cmath>

using namespace magrisk;
using namespace magrisk::core;
using namespace magrisk::baselines;

namespace {

ScenarioSpec capabilityTeam(const std::string& workerName, bool withHelper, double p) {
    ScenarioSpec spec;
    spec.name = withHelper ? "team" : "solo";
    AgentDecl worker;
    worker.name = workerName;
    worker.behavior.kind = agents::BehaviorKind::TableStochastic;
    worker.behavior.params =
        Json{{"table", Json{{"t", p}}},
             {"taskTag", "t"},
             {"onSuccess", Json{{"action", Json{{"name", "done"},
                                                {"args", Json{{"set", Json{{"ok", true}}}}}}}}}};
    spec.agents.push_back(worker);
    if (withHelper) {
        AgentDecl helper;
        helper.name = "helper";
        helper.behavior.kind = agents::BehaviorKind::Scripted;
        helper.behavior.params = Json{{"rules", Json::array()}};
        spec.agents.push_back(helper);
        TopologySpec topo;
        topo.kind = TopologyKind::TaskForce;
        topo.edges = {{workerName, "helper"}, {"helper", workerName}};
        spec.topology = topo;
    } else {
        spec.topology.kind = TopologyKind::SingleAgent;
    }
    spec.protocol.rounds = 1;
    spec.horizon = 2;
    spec.milestones.push_back({"done", "ok", "eq", Json(true), true});
    return spec;
}

} // namespace

TEST_CASE("behaviourally identical treatment and baseline give delta exactly zero") {
    const auto spec = capabilityTeam("worker", true, 0.5);
    BaselineInputs inputs;
    const auto decomposed = spec; // identical configuration
    inputs.decomposedSpec = &decomposed;
    const auto report = runBaseline(BaselineKind::SingleAgentDecomposed, spec, 40, inputs, 7);
    REQUIRE(report.delta.has_value());
    CHECK(report.delta->meanDelta == 0.0);
    CHECK(report.delta->lo == 0.0);
    CHECK(report.delta->hi == 0.0);
    for (const int d : report.delta->perSeed) CHECK(d == 0);
}

TEST_CASE("same scripted capability in team and solo decomposition: delta 0 within CI") {
    // The worker keeps its name across both specs, so its per-seed capability
    // draws are identical and the paired delta vanishes exactly.
    const auto team = capabilityTeam("worker", true, 0.8);
    const auto solo = capabilityTeam("worker", false, 0.8);
    BaselineInputs inputs;
    inputs.decomposedSpec = &solo;
    const auto report = runBaseline(BaselineKind::SingleAgentDecomposed, team, 200, inputs, 11);
    REQUIRE(report.delta.has_value());
    CHECK(report.delta->meanDelta == 0.0);
    CHECK(report.delta->lo <= 0.0);
    CHECK(report.delta->hi >= 0.0);
    CHECK(std::abs(report.treatment.failureRate - 0.2) < 0.1);
}

TEST_CASE("decomposition is required for the single-agent baseline") {
    const auto spec = capabilityTeam("worker", true, 0.5);
    BaselineInputs inputs; // no decomposition provided
    CHECK_THROWS_AS((void)runBaseline(BaselineKind::SingleAgentDecomposed, spec, 5, inputs),
                    BaselineError);
}

TEST_CASE("the theoretical optimum is the frontier's best collective utility") {
    const auto spec = capabilityTeam("worker", true, 1.0);
    metrics::OutcomeSpace space;
    space.outcomes = {{"cooperate", {10.0, 10.0}},
                      {"split", {6.0, 6.0}},
                      {"lopsided", {12.0, 3.0}}};
    BaselineInputs inputs;
    inputs.outcomeSpace = &space;
    const auto report = runBaseline(BaselineKind::TheoreticalOptimum, spec, 3, inputs);
    REQUIRE(report.theoreticalOptimum.has_value());
    CHECK(*report.theoreticalOptimum == 20.0);

    BaselineInputs empty;
    CHECK_THROWS_AS((void)runBaseline(BaselineKind::TheoreticalOptimum, spec, 3, empty),
                    BaselineError);
}

TEST_CASE("a historical run set drifts by zero against an identical rerun") {
    const auto spec = capabilityTeam("worker", true, 0.5);
    const auto stored = engine::runEnsemble(spec, 30, 3);
    BaselineInputs inputs;
    inputs.historical = &stored;
    const auto report = runBaseline(BaselineKind::Historical, spec, 30, inputs, 3);
    REQUIRE(report.delta.has_value());
    CHECK(report.delta->meanDelta == 0.0);
    CHECK(report.delta->lo == 0.0);
    CHECK(report.delta->hi == 0.0);
}

TEST_CASE("human reference scores are ingest-only") {
    const auto spec = capabilityTeam("worker", true, 1.0);
    BaselineInputs inputs;
    inputs.humanScores = {{"taskCompletion", 0.92}};
    const auto report = runBaseline(BaselineKind::HumanReference, spec, 3, inputs);
    CHECK(report.humanScores.at("taskCompletion") == 0.92);

    BaselineInputs empty;
    CHECK_THROWS_AS((void)runBaseline(BaselineKind::HumanReference, spec, 3, empty), BaselineError);
}

TEST_CASE("task suites parse from delimited text with a stage directive") {
    const std::string tsv =
        "# stage=Robustness\n"
        "taskTag\tinput\texpected\tcapability\n"
        "chartRead\tq4 bar chart\t\tvision\n"
        "summarise\tlong memo\t\tlanguage\n";
    const auto suite = taskSuiteFromTsv(tsv);
    CHECK((suite.stage == SuiteStage::Robustness));
    REQUIRE(suite.tasks.size() == 2);
    CHECK(suite.tasks[0].taskTag == "chartRead");
    CHECK(suite.tasks[1].capability == "language");

    CHECK_THROWS_AS((void)taskSuiteFromTsv("# stage=Wrong\nx\ty\tz\tw\n"), BaselineError);
    CHECK_THROWS_AS((void)taskSuiteFromTsv("only\ttwo\n"), BaselineError);
}

TEST_CASE("a perfect capability table aces every suite tag") {
    TaskSuite suite;
    suite.tasks = {{"a", "in", "", "capA"}, {"b", "in", "", "capB"}};
    agents::BehaviorSpec behavior{agents::BehaviorKind::TableStochastic,
                                  Json{{"table", Json{{"a", 1.0}, {"b", 1.0}}}}};
    const auto result = runTaskSuite(suite, behavior, 50);
    CHECK(result.ratePerCapability.at("capA") == 1.0);
    CHECK(result.ratePerCapability.at("capB") == 1.0);
}

TEST_CASE("mixed capability rates converge within two points at N=5000") {
    TaskSuite suite;
    suite.tasks = {{"a", "in", "", "capA"}, {"b", "in", "", "capB"}};
    agents::BehaviorSpec behavior{agents::BehaviorKind::TableStochastic,
                                  Json{{"table", Json{{"a", 0.9}, {"b", 0.1}}}}};
    const auto result = runTaskSuite(suite, behavior, 5000);
    CHECK(std::abs(result.ratePerCapability.at("capA") - 0.9) <= 0.02);
    CHECK(std::abs(result.ratePerCapability.at("capB") - 0.1) <= 0.02);
}

TEST_CASE("coverage warnings list scenario capability tags the suite misses") {
    TaskSuite suite;
    suite.tasks = {{"a", "in", "", "capA"}};
    const auto spec = capabilityTeam("worker", true, 0.5); // uses tag "t"
    const auto warnings = coverageWarnings(suite, spec);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0] == "t");

    TaskSuite covering;
    covering.tasks = {{"t", "in", "", "capT"}};
    CHECK(coverageWarnings(covering, spec).empty());
}

TEST_CASE("scripted behaviours are driven through decide with the task input") {
    TaskSuite suite;
    suite.tasks = {{"greet", "ping", "pong", "protocol"}};
    agents::BehaviorSpec behavior{
        agents::BehaviorKind::Scripted,
        Json{{"rules", Json::array({Json{{"contains", "ping"},
                                         {"reply", Json{{"content", "pong"}}}}})}}};
    const auto result = runTaskSuite(suite, behavior, 10);
    CHECK(result.ratePerCapability.at("protocol") == 1.0);

    TaskSuite mismatched;
    mismatched.tasks = {{"greet", "ping", "salute", "protocol"}};
    const auto failed = runTaskSuite(mismatched, behavior, 10);
    CHECK(failed.ratePerCapability.at("protocol") == 0.0);
}

TEST_CASE("human score files parse to a metric map") {
    const auto scores = humanScoresFromTsv("metric\tvalue\ntaskCompletion\t0.93\ntimeToSuccess\t4\n");
    CHECK(scores.at("taskCompletion") == 0.93);
    CHECK(scores.at("timeToSuccess") == 4.0);
    CHECK_THROWS_AS((void)humanScoresFromTsv("bad line no tab\n"), BaselineError);
}
