// perturbation.hpp - red-team interventions applied to a running scenario.
#pragma once

#include "magrisk/json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace magrisk::inject {

enum class TriggerKind { AtStep, AfterStep, OnMessageContains };

struct TriggerSpec {
    TriggerKind kind = TriggerKind::AtStep;
    int step = 0;      // AtStep / AfterStep
    std::string text;  // OnMessageContains
};

enum class ActionKind {
    CorruptMessage,
    DropChannel,
    InsertAgent,
    ContradictObjective,
    WithholdEnvKeys,
    DisableTool,
    DeadlinePressure,
};

const char* toString(ActionKind k);
ActionKind actionKindFromString(const std::string& s);

// Kind-specific fields live in `params`:
//   CorruptMessage      find, replace, optional from, optional to
//   DropChannel         from, to, duration (steps the channel stays cut)
//   InsertAgent         name, behavior, optional objective, optional envKeys
//   ContradictObjective agent, objective
//   WithholdEnvKeys     agent, keys[]
//   DisableTool         agent, taskTag, duration
//   DeadlinePressure    horizon (new effective horizon)
struct ActionSpec {
    ActionKind kind = ActionKind::CorruptMessage;
    Json params = Json::object();
};

struct PerturbationSpec {
    std::string label; // unique; also the taint label this injection seeds
    TriggerSpec trigger;
    ActionSpec action;
    bool repeating = false;
    double probability = 1.0; // applied per trigger firing
};

Json toJson(const PerturbationSpec& spec);
PerturbationSpec perturbationFromJson(const Json& j);

std::vector<std::string> validateParams(const PerturbationSpec& spec);

} // namespace magrisk::inject
