// behavior_spec.hpp - declarative agent behaviour descriptions.
#pragma once

#include "magrisk/json.hpp"

#include <string>
#include <vector>

namespace magrisk::agents {

enum class BehaviorKind { Scripted, TableStochastic, Sycophant, Contrarian, LLMAdapter };

const char* toString(BehaviorKind k);
BehaviorKind behaviorKindFromString(const std::string& s);

// A behaviour is pure data: a kind plus kind-specific parameters. Parameter
// schemas (checked by validateParams):
//
//   Scripted        rules: ordered list of {step?, contains?, fromAgent?, once?}
//                   with effects {messages[], reply{}, forward{}, echo, action{},
//                   predictions{}, memory}; optional probeAnswer (supports the
//                   "{memory}" placeholder).
//   TableStochastic table: taskTag -> probability, optional defaultP, taskTag,
//                   onSuccess/onFailure effect blocks, optional failureTaintLabel.
//   Sycophant       stance, switchProbability in [0,1], optional threshold >= 1
//                   (peer count needed before a switch is considered),
//                   optional emitKind (Statement|Vote).
//   Contrarian      stance, optional emitKind.
//   LLMAdapter      optional system text, optional parser name; requires a
//                   transport at run time (excluded from deterministic tests).
struct BehaviorSpec {
    BehaviorKind kind = BehaviorKind::Scripted;
    Json params = Json::object();
};

Json toJson(const BehaviorSpec& spec);
BehaviorSpec behaviorFromJson(const Json& j);

// Returns one message per malformed or missing parameter; empty means valid.
std::vector<std::string> validateParams(const BehaviorSpec& spec);

} // namespace magrisk::agents
