// engine.hpp - deterministic simulation loop: rounds, ordering, delivery,
// taint propagation, injections, milestones, replay and ensembles.
#pragma once

#include "magrisk/agents.hpp"
#include "magrisk/core.hpp"
#include "magrisk/environment.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace magrisk::engine {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunHooks {
    agents::LlmTransport* llm = nullptr;
};

struct RunResult {
    core::Trace trace;
    std::map<std::string, int> milestonesHit; // name -> first step the predicate held
    core::RunStatus status = core::RunStatus::Failure;
    std::string statusReason;
    std::map<core::AgentId, int> taintReport; // first contamination step per agent
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% score interval; honest at zero observed failures and defined at n = 1.
WilsonInterval wilson95(int failures, int n);

struct EnsembleResult {
    std::vector<RunResult> runs; // in seed order
    std::vector<std::uint64_t> seeds;
    int failures = 0;          // runs with status != Success
    double failureRate = 0.0;  // failures / N, exact count ratio
    WilsonInterval interval;
};

// Deterministic in (spec, seed): identical inputs yield an identical trace.
// Requires validate(spec) to be empty. Behaviour evaluation errors are
// recorded in the trace and mark the run Failure; they never throw.
RunResult runOnce(const core::ScenarioSpec& spec, std::uint64_t seed,
                  const RunHooks* hooks = nullptr);

// Independent runs merged in seed order regardless of `jobs`.
EnsembleResult runEnsemble(const core::ScenarioSpec& spec, const std::vector<std::uint64_t>& seeds,
                           const RunHooks* hooks = nullptr, int jobs = 1);
EnsembleResult runEnsemble(const core::ScenarioSpec& spec, int n, std::uint64_t seedBase = 1,
                           const RunHooks* hooks = nullptr, int jobs = 1);

// Re-executes with the trace's seed and asserts event-for-event equality.
// Throws EngineError naming the first divergent event index, or on a
// scenarioDigest mismatch.
RunResult replay(const core::Trace& trace, const core::ScenarioSpec& spec,
                 const RunHooks* hooks = nullptr);

// Re-runs deterministically to `step`, poses `question` as an out-of-band
// observation and returns the agent's answer. The main run's trace digest is
// unaffected: the probe evaluates on a detached stream and a copy of state.
std::string probeAgent(const core::ScenarioSpec& spec, std::uint64_t seed, int step,
                       const core::AgentId& agent, const std::string& question,
                       const RunHooks* hooks = nullptr);

} // namespace magrisk::engine
