// inject.cpp - the perturbation catalog's runtime semantics.
#include "magrisk/inject.hpp"

#include <algorithm>

namespace magrisk::inject {

using namespace magrisk::core;

namespace {

bool triggerMatches(const PerturbationSpec& inj, int step, const InjectionHost& host) {
    switch (inj.trigger.kind) {
    case TriggerKind::AtStep: return step == inj.trigger.step;
    case TriggerKind::AfterStep: return step >= inj.trigger.step;
    case TriggerKind::OnMessageContains:
        for (const auto& e : host.committedEvents()) {
            if (const auto* sent = std::get_if<MessageSent>(&e.payload)) {
                if (sent->msg.content.find(inj.trigger.text) != std::string::npos) return true;
            }
        }
        return false;
    }
    return false;
}

void applyAction(const PerturbationSpec& inj, int step, InjectionHost& host) {
    const Json& p = inj.action.params;
    InjectionFired fired;
    fired.label = inj.label;
    fired.action = toString(inj.action.kind);

    switch (inj.action.kind) {
    case ActionKind::CorruptMessage: {
        const std::string find = p.at("find").get<std::string>();
        const std::string replace = p.at("replace").get<std::string>();
        const std::string fromFilter = p.value("from", "");
        const std::string toFilter = p.value("to", "");
        Json altered = Json::array(); // delivered-as content, for cascade reconstruction
        for (auto& m : host.pendingMessages()) {
            if (!fromFilter.empty() && m.from != fromFilter) continue;
            if (!toFilter.empty() && !m.to.count(toFilter)) continue;
            if (m.content.find(find) == std::string::npos) continue;
            std::size_t pos = 0;
            while ((pos = m.content.find(find, pos)) != std::string::npos) {
                m.content.replace(pos, find.size(), replace);
                pos += replace.size();
            }
            m.taint.insert(inj.label);
            if (!fired.seedAgent) fired.seedAgent = m.from;
            host.contaminate(m.from, inj.label); // its output is wrong from here on
            Json to = Json::array();
            for (const auto& r : m.to) to.push_back(r);
            altered.push_back(Json{{"from", m.from}, {"to", to}, {"content", m.content}});
        }
        fired.details = Json{{"corrupted", altered.size()}, {"messages", altered}};
        break;
    }
    case ActionKind::DropChannel: {
        const AgentId from = p.at("from").get<std::string>();
        const AgentId to = p.at("to").get<std::string>();
        const int until = step + p.at("duration").get<int>();
        host.cutChannel(from, to, until);
        fired.details = Json{{"from", from}, {"to", to}, {"until", until}};
        break;
    }
    case ActionKind::InsertAgent: {
        AgentDecl decl;
        decl.name = p.at("name").get<std::string>();
        decl.behavior = agents::behaviorFromJson(p.at("behavior"));
        decl.objective = p.value("objective", "");
        for (const auto& k : p.value("envKeys", Json::array())) {
            decl.envKeys.push_back(k.get<std::string>());
        }
        const std::string policy = host.insertAgent(decl);
        host.contaminate(decl.name, inj.label); // adversarial insert seeds its own taint
        fired.seedAgent = decl.name;
        fired.details = Json{{"edgePolicy", policy}};
        break;
    }
    case ActionKind::ContradictObjective: {
        const AgentId agent = p.at("agent").get<std::string>();
        if (!host.agentKnown(agent)) throw InjectError("ContradictObjective: unknown agent '" + agent + "'");
        host.overrideObjective(agent, p.at("objective").get<std::string>());
        fired.details = Json{{"agent", agent}};
        break;
    }
    case ActionKind::WithholdEnvKeys: {
        const AgentId agent = p.at("agent").get<std::string>();
        if (!host.agentKnown(agent)) throw InjectError("WithholdEnvKeys: unknown agent '" + agent + "'");
        std::vector<std::string> keys;
        for (const auto& k : p.at("keys")) keys.push_back(k.get<std::string>());
        host.withholdKeys(agent, keys);
        fired.details = Json{{"agent", agent}, {"keys", p.at("keys")}};
        break;
    }
    case ActionKind::DisableTool: {
        const AgentId agent = p.at("agent").get<std::string>();
        if (!host.agentKnown(agent)) throw InjectError("DisableTool: unknown agent '" + agent + "'");
        const std::string tag = p.at("taskTag").get<std::string>();
        const int until = step + p.at("duration").get<int>();
        host.disableTool(agent, tag, until);
        fired.details = Json{{"agent", agent}, {"taskTag", tag}, {"until", until}};
        break;
    }
    case ActionKind::DeadlinePressure: {
        const int horizon = p.at("horizon").get<int>();
        host.setHorizon(horizon);
        fired.details = Json{{"newHorizon", horizon}};
        break;
    }
    }
    host.recordFired(std::move(fired));
}

} // namespace

void applyInjections(const std::vector<PerturbationSpec>& specs, int step,
                     std::set<std::size_t>& firedOnce, InjectionHost& host) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& inj = specs[i];
        if (!inj.repeating && firedOnce.count(i)) continue;
        if (!triggerMatches(inj, step, host)) continue;
        auto stream = host.injectionStream(inj.label, step);
        if (!inj.repeating) firedOnce.insert(i); // trigger consumed even if the draw declines
        if (!stream.bernoulli(inj.probability)) continue;
        applyAction(inj, step, host);
    }
}

std::vector<SweepPoint> sweep(const ScenarioSpec& base, const SweepAxis& axis, int nPerPoint,
                              std::uint64_t seedBase, const engine::RunHooks* hooks, int jobs) {
    if (axis.values.empty()) throw InjectError("sweep: axis has no values");
    if (nPerPoint < 1) throw InjectError("sweep: N per point must be >= 1");

    bool labelKnown = std::any_of(base.injections.begin(), base.injections.end(),
                                  [&](const PerturbationSpec& s) { return s.label == axis.label; });
    if (!labelKnown) throw InjectError("sweep: no injection labelled '" + axis.label + "'");

    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(nPerPoint));
    for (int i = 0; i < nPerPoint; ++i) seeds.push_back(seedBase + static_cast<std::uint64_t>(i));

    std::vector<SweepPoint> points;
    points.reserve(axis.values.size());
    for (const auto& value : axis.values) {
        ScenarioSpec variant = base;
        for (auto it = variant.injections.begin(); it != variant.injections.end(); ++it) {
            if (it->label != axis.label) continue;
            const bool disables = (axis.param == "duration" || axis.param == "horizon") &&
                                  value.is_number() && value.get<double>() == 0.0;
            if (disables) {
                variant.injections.erase(it); // the uninjected baseline point
            } else if (axis.param == "probability") {
                it->probability = value.get<double>();
            } else if (axis.param == "step") {
                it->trigger.step = value.get<int>();
            } else if (axis.param == "repeating") {
                it->repeating = value.get<bool>();
            } else {
                it->action.params[axis.param] = value;
            }
            break;
        }
        SweepPoint point;
        point.value = value;
        point.ensemble = engine::runEnsemble(variant, seeds, hooks, jobs);
        points.push_back(std::move(point));
    }
    return points;
}

} // namespace magrisk::inject
