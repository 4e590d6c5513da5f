#include "magrisk/perturbation.hpp"

namespace magrisk::inject {

const char* toString(ActionKind k) {
    switch (k) {
    case ActionKind::CorruptMessage: return "CorruptMessage";
    case ActionKind::DropChannel: return "DropChannel";
    case ActionKind::InsertAgent: return "InsertAgent";
    case ActionKind::ContradictObjective: return "ContradictObjective";
    case ActionKind::WithholdEnvKeys: return "WithholdEnvKeys";
    case ActionKind::DisableTool: return "DisableTool";
    case ActionKind::DeadlinePressure: return "DeadlinePressure";
    }
    return "?";
}

ActionKind actionKindFromString(const std::string& s) {
    if (s == "CorruptMessage") return ActionKind::CorruptMessage;
    if (s == "DropChannel") return ActionKind::DropChannel;
    if (s == "InsertAgent") return ActionKind::InsertAgent;
    if (s == "ContradictObjective") return ActionKind::ContradictObjective;
    if (s == "WithholdEnvKeys") return ActionKind::WithholdEnvKeys;
    if (s == "DisableTool") return ActionKind::DisableTool;
    if (s == "DeadlinePressure") return ActionKind::DeadlinePressure;
    throw std::runtime_error("injection: unknown action kind '" + s + "'");
}

namespace {

const char* toString(TriggerKind k) {
    switch (k) {
    case TriggerKind::AtStep: return "atStep";
    case TriggerKind::AfterStep: return "afterStep";
    case TriggerKind::OnMessageContains: return "onMessageContains";
    }
    return "?";
}

TriggerKind triggerKindFromString(const std::string& s) {
    if (s == "atStep") return TriggerKind::AtStep;
    if (s == "afterStep") return TriggerKind::AfterStep;
    if (s == "onMessageContains") return TriggerKind::OnMessageContains;
    throw std::runtime_error("injection: unknown trigger kind '" + s + "'");
}

} // namespace

Json toJson(const PerturbationSpec& spec) {
    Json trigger{{"kind", toString(spec.trigger.kind)}};
    if (spec.trigger.kind == TriggerKind::OnMessageContains) {
        trigger["text"] = spec.trigger.text;
    } else {
        trigger["step"] = spec.trigger.step;
    }
    Json action = spec.action.params;
    action["kind"] = toString(spec.action.kind);
    return Json{{"label", spec.label},
                {"trigger", trigger},
                {"action", action},
                {"repeating", spec.repeating},
                {"probability", spec.probability}};
}

PerturbationSpec perturbationFromJson(const Json& j) {
    PerturbationSpec s;
    s.label = j.at("label").get<std::string>();
    const Json& t = j.at("trigger");
    s.trigger.kind = triggerKindFromString(t.at("kind").get<std::string>());
    s.trigger.step = t.value("step", 0);
    s.trigger.text = t.value("text", "");
    Json a = j.at("action");
    s.action.kind = actionKindFromString(a.at("kind").get<std::string>());
    a.erase("kind");
    s.action.params = std::move(a);
    s.repeating = j.value("repeating", false);
    s.probability = j.value("probability", 1.0);
    return s;
}

std::vector<std::string> validateParams(const PerturbationSpec& spec) {
    std::vector<std::string> out;
    const Json& p = spec.action.params;
    auto needString = [&](const char* field) {
        if (!p.contains(field) || !p[field].is_string() || p[field].get<std::string>().empty()) {
            out.push_back(std::string(toString(spec.action.kind)) + ": requires string '" + field + "'");
        }
    };
    auto needDuration = [&] {
        if (!p.contains("duration") || !p["duration"].is_number_integer() || p["duration"].get<int>() < 1) {
            out.push_back(std::string(toString(spec.action.kind)) + ": 'duration' must be an integer >= 1");
        }
    };
    switch (spec.action.kind) {
    case ActionKind::CorruptMessage:
        needString("find");
        if (!p.contains("replace") || !p["replace"].is_string()) {
            out.push_back("CorruptMessage: requires string 'replace'");
        }
        break;
    case ActionKind::DropChannel:
        needString("from");
        needString("to");
        needDuration();
        break;
    case ActionKind::InsertAgent:
        needString("name");
        if (!p.contains("behavior")) out.push_back("InsertAgent: requires 'behavior'");
        break;
    case ActionKind::ContradictObjective:
        needString("agent");
        needString("objective");
        break;
    case ActionKind::WithholdEnvKeys:
        needString("agent");
        if (!p.contains("keys") || !p["keys"].is_array() || p["keys"].empty()) {
            out.push_back("WithholdEnvKeys: requires a non-empty 'keys' array");
        }
        break;
    case ActionKind::DisableTool:
        needString("agent");
        needString("taskTag");
        needDuration();
        break;
    case ActionKind::DeadlinePressure:
        if (!p.contains("horizon") || !p["horizon"].is_number_integer() || p["horizon"].get<int>() < 0) {
            out.push_back("DeadlinePressure: 'horizon' must be an integer >= 0");
        }
        break;
    }
    if (spec.probability < 0.0 || spec.probability > 1.0) {
        out.push_back("injection probability must be in [0,1]");
    }
    if (spec.trigger.kind == TriggerKind::OnMessageContains && spec.trigger.text.empty()) {
        out.push_back("onMessageContains trigger requires non-empty text");
    }
    return out;
}

} // namespace magrisk::inject
