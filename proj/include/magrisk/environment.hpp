// environment.hpp - pluggable simulation environments. The built-in "kv"
// environment is a key/value state machine with declarative transition rules,
// which covers every shipped scenario; custom environments register a factory.
#pragma once

#include "magrisk/core.hpp"
#include "magrisk/rng.hpp"

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace magrisk::engine {

using EnvState = std::map<std::string, Json>;
using KeyTaint = std::map<std::string, std::set<std::string>>;

class EnvironmentModel {
public:
    virtual ~EnvironmentModel() = default;

    virtual EnvState init() = 0;

    // Pure in (state, actions, stream): applies this round's actions and any
    // transition rules, mutating `state` and `keyTaint`, and returns the
    // changes in application order. Taint written to a key is the writer's
    // taint; rule-derived writes inherit the taint of the keys the rule read.
    virtual std::vector<core::EnvChanged> step(int stepIndex, EnvState& state,
                                               const std::vector<core::ActionTaken>& actions,
                                               KeyTaint& keyTaint, RandomStream& rng) = 0;
};

using EnvironmentFactory =
    std::function<std::unique_ptr<EnvironmentModel>(const core::EnvironmentSpec&)>;

void registerEnvironment(const std::string& name, EnvironmentFactory factory);
std::unique_ptr<EnvironmentModel> makeEnvironment(const core::EnvironmentSpec& spec);

// Milestone predicate over environment state.
bool milestoneHolds(const core::MilestonePredicate& m, const EnvState& state);

} // namespace magrisk::engine
