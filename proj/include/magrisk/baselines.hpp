// baselines.hpp - baseline comparisons for multi-agent ensembles and the
// three-stage capability benchmark loop over user-supplied task suites.
#pragma once

#include "magrisk/agents.hpp"
#include "magrisk/core.hpp"
#include "magrisk/engine.hpp"
#include "magrisk/metrics.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace magrisk::baselines {

struct BaselineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BaselineKind { SingleAgentDecomposed, TheoreticalOptimum, Historical, HumanReference };
const char* toString(BaselineKind k);

struct BaselineInputs {
    const core::ScenarioSpec* decomposedSpec = nullptr;     // SingleAgentDecomposed
    const metrics::OutcomeSpace* outcomeSpace = nullptr;    // TheoreticalOptimum
    const engine::EnsembleResult* historical = nullptr;     // Historical
    std::map<std::string, double> humanScores;              // HumanReference (ingest only)
};

// Per-seed failure-indicator differences (treatment - baseline), so a
// behaviourally identical pair yields exactly zero.
struct PairedDelta {
    double meanDelta = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<int> perSeed;
};

struct BaselineReport {
    BaselineKind kind = BaselineKind::SingleAgentDecomposed;
    engine::EnsembleResult treatment;
    std::optional<engine::EnsembleResult> baseline;
    std::optional<PairedDelta> delta;
    std::optional<double> theoreticalOptimum; // max collective utility
    std::map<std::string, double> humanScores;
};

// Baselines share base seeds with the treatment ensemble (variance-reduced
// paired deltas). SingleAgentDecomposed requires a provided decomposition.
BaselineReport runBaseline(BaselineKind kind, const core::ScenarioSpec& spec, int n,
                           const BaselineInputs& inputs, std::uint64_t seedBase = 1,
                           const engine::RunHooks* hooks = nullptr, int jobs = 1);

// ---------------------------------------------------------------------------
// Task suites

enum class SuiteStage { Identify, Baseline, Robustness };
const char* toString(SuiteStage s);

struct TaskSpec {
    std::string taskTag;
    std::string input;
    std::string expected;   // substring predicate over emitted output; empty = any
    std::string capability; // capability tag this task exercises
};

struct TaskSuite {
    SuiteStage stage = SuiteStage::Baseline;
    std::vector<TaskSpec> tasks;
};

// Tab-separated columns: taskTag, input, expected, capability. A line
// "# stage=<Identify|Baseline|Robustness>" sets the stage; a header row
// naming the first column "taskTag" is skipped.
TaskSuite taskSuiteFromTsv(const std::string& text);

struct TaskSuiteResult {
    std::map<std::string, double> ratePerCapability;
    std::map<std::string, int> trialsPerCapability;
    std::vector<std::string> uncoveredCapabilities; // warnings; never silent
};

// For behaviours carrying a capability table, task success is the Bernoulli
// capability draw for the task's tag. Other behaviours are driven through
// decide() with the task input as an inbound message, and success means some
// emitted content contains `expected` (any emission when empty).
TaskSuiteResult runTaskSuite(const TaskSuite& suite, const agents::BehaviorSpec& behavior,
                             int nPerTask, std::uint64_t seedBase = 1);

// Capability tags used by scenario agents but absent from the suite.
std::vector<std::string> coverageWarnings(const TaskSuite& suite, const core::ScenarioSpec& spec);

std::map<std::string, double> humanScoresFromTsv(const std::string& text);

} // namespace magrisk::baselines
