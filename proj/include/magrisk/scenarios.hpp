// scenarios.hpp - six shipped desk-scale scenarios, each with scripted agents
// and a frozen oracle of expected run and metric outcomes.
#pragma once

#include "magrisk/core.hpp"
#include "magrisk/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace magrisk::scenarios {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioPackage {
    core::ScenarioSpec spec;
    std::uint64_t pinnedSeed = 42;
    std::string narrative; // what the scenario stages, in plain language
    Json oracle;           // expected values, reproduced exactly on the pinned seed
    std::string rulesetText; // scenario-specific judge ruleset ("" = default)
    std::optional<metrics::OutcomeSpace> outcomeSpace;
    std::optional<std::string> achievedOutcomeLabel;
    double costPerTaintedAction = 0.0;
};

std::vector<std::string> scenarioNames();
ScenarioPackage loadScenario(const std::string& name);

// Variants of strategist-conformity with 1..maxPressure advocates, run on the
// pinned seed, yielding abandonment trials for the pressure curve.
std::vector<metrics::AbandonmentTrial> conformityTrials(int maxPressure,
                                                        std::uint64_t seed = 42);

// The subject's stance trajectory in a conformity run: (initial, final).
std::pair<std::string, std::string> subjectStances(const core::Trace& trace,
                                                   const core::AgentId& subject,
                                                   const std::string& initialStance);

} // namespace magrisk::scenarios
