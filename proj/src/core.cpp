// core.cpp - topology helpers, validation and the failure-exposure map.
#include "magrisk/core.hpp"

#include <algorithm>

namespace magrisk::core {

TopologySpec starTopology(const AgentId& hub, const std::vector<AgentId>& spokes) {
    TopologySpec t;
    t.kind = TopologyKind::Orchestrator;
    t.hub = hub;
    for (const auto& s : spokes) {
        t.edges.insert({hub, s});
        t.edges.insert({s, hub});
    }
    return t;
}

TopologySpec swarmTopology(const std::vector<AgentId>& agents) {
    TopologySpec t;
    t.kind = TopologyKind::Swarm;
    for (const auto& a : agents) {
        for (const auto& b : agents) {
            if (a != b) t.edges.insert({a, b});
        }
    }
    return t;
}

TopologySpec chainTopology(const std::vector<AgentId>& agents) {
    TopologySpec t;
    t.kind = TopologyKind::TaskForce;
    for (std::size_t i = 0; i + 1 < agents.size(); ++i) {
        t.edges.insert({agents[i], agents[i + 1]});
    }
    return t;
}

std::map<FailureMode, Exposure> defaultFailureMap(TopologyKind kind) {
    using FM = FailureMode;
    std::map<FM, Exposure> m;
    switch (kind) {
    case TopologyKind::SingleAgent:
        m[FM::CascadingReliability] = Exposure::High;
        break;
    case TopologyKind::Orchestrator:
        m[FM::CascadingReliability] = Exposure::High;
        m[FM::InterAgentComms] = Exposure::High;
        m[FM::MonocultureCollapse] = Exposure::High;
        m[FM::ConformityBias] = Exposure::Exposed;
        m[FM::DeficientTheoryOfMind] = Exposure::Exposed;
        m[FM::MixedMotiveDynamics] = Exposure::Exposed;
        break;
    case TopologyKind::Swarm:
        m[FM::CascadingReliability] = Exposure::High;
        m[FM::InterAgentComms] = Exposure::High;
        m[FM::MonocultureCollapse] = Exposure::High;
        m[FM::ConformityBias] = Exposure::High;
        m[FM::DeficientTheoryOfMind] = Exposure::High;
        m[FM::MixedMotiveDynamics] = Exposure::Exposed;
        break;
    case TopologyKind::TaskForce:
        m[FM::CascadingReliability] = Exposure::High;
        m[FM::InterAgentComms] = Exposure::High;
        m[FM::MonocultureCollapse] = Exposure::High;
        m[FM::ConformityBias] = Exposure::High;
        m[FM::DeficientTheoryOfMind] = Exposure::High;
        m[FM::MixedMotiveDynamics] = Exposure::High;
        break;
    }
    return m;
}

std::set<AgentId> allowedRecipients(const TopologySpec& topology, const AgentId& sender) {
    bool known = false;
    std::set<AgentId> out;
    for (const auto& [from, to] : topology.edges) {
        if (from == sender) {
            known = true;
            out.insert(to);
        }
        if (to == sender) known = true;
    }
    if (topology.hub && *topology.hub == sender) known = true;
    if (topology.kind == TopologyKind::SingleAgent) {
        // The sole agent has no peers; any declared sender is known.
        return {};
    }
    if (!known) throw SpecError("allowedRecipients: unknown sender '" + sender + "'");
    return out;
}

namespace {

bool declared(const ScenarioSpec& spec, const AgentId& name) {
    return std::any_of(spec.agents.begin(), spec.agents.end(),
                       [&](const AgentDecl& a) { return a.name == name; });
}

} // namespace

std::vector<Violation> validate(const ScenarioSpec& spec) {
    std::vector<Violation> v;
    auto add = [&](std::string path, std::string msg) {
        v.push_back({std::move(path), std::move(msg)});
    };

    // Agent declarations
    std::set<AgentId> names;
    for (std::size_t i = 0; i < spec.agents.size(); ++i) {
        const auto& a = spec.agents[i];
        const std::string path = "agents[" + std::to_string(i) + "]";
        if (a.name.empty()) add(path + ".name", "agent name must be non-empty");
        if (!names.insert(a.name).second) add(path + ".name", "duplicate agent name '" + a.name + "'");
        for (const auto& msg : agents::validateParams(a.behavior)) {
            add(path + ".behavior", msg);
        }
    }
    if (spec.agents.empty()) add("agents", "at least one agent must be declared");

    // Topology invariants
    const auto& topo = spec.topology;
    for (const auto& [from, to] : topo.edges) {
        if (!declared(spec, from)) add("topology.edges", "edge endpoint '" + from + "' is not a declared agent");
        if (!declared(spec, to)) add("topology.edges", "edge endpoint '" + to + "' is not a declared agent");
        if (from == to) add("topology.edges", "self-loop on '" + from + "' is not allowed");
    }
    switch (topo.kind) {
    case TopologyKind::SingleAgent:
        if (spec.agents.size() != 1) add("agents", "SingleAgent topology requires exactly one agent");
        if (!topo.edges.empty()) add("topology.edges", "SingleAgent topology must have no edges");
        break;
    case TopologyKind::Orchestrator: {
        if (!topo.hub) {
            add("topology.hub", "Orchestrator topology requires a hub");
        } else {
            if (!declared(spec, *topo.hub)) add("topology.hub", "hub '" + *topo.hub + "' is not a declared agent");
            for (const auto& [from, to] : topo.edges) {
                if (from != *topo.hub && to != *topo.hub) {
                    add("topology.edges", "edge " + from + "->" + to + " does not touch the hub");
                }
            }
        }
        break;
    }
    case TopologyKind::Swarm:
        for (const auto& [from, to] : topo.edges) {
            if (!topo.edges.count({to, from})) {
                add("topology.edges", "swarm edge " + from + "->" + to + " lacks its reverse");
            }
        }
        break;
    case TopologyKind::TaskForce:
        break;
    }

    // Protocol. horizon == 0 is the degenerate no-budget case (the run ends
    // immediately, HorizonExceeded); any other horizon must cover the rounds.
    if (spec.protocol.rounds < 1) add("protocol.rounds", "rounds must be >= 1");
    if (spec.horizon < 0) add("horizon", "horizon must be >= 0");
    if (spec.horizon > 0 && spec.horizon < spec.protocol.rounds) {
        add("horizon", "horizon must be >= protocol.rounds (or 0)");
    }

    // Injections
    std::set<std::string> labels;
    for (std::size_t i = 0; i < spec.injections.size(); ++i) {
        const auto& inj = spec.injections[i];
        const std::string path = "injections[" + std::to_string(i) + "]";
        if (inj.label.empty()) add(path + ".label", "label must be non-empty");
        if (!labels.insert(inj.label).second) add(path + ".label", "duplicate injection label '" + inj.label + "'");
        for (const auto& msg : inject::validateParams(inj)) {
            add(path, msg);
        }
        // Agent references inside actions
        const auto& p = inj.action.params;
        auto checkAgent = [&](const char* field) {
            if (p.contains(field) && p[field].is_string() && !declared(spec, p[field].get<std::string>())) {
                add(path + ".action." + field, "unknown agent '" + p[field].get<std::string>() + "'");
            }
        };
        switch (inj.action.kind) {
        case inject::ActionKind::CorruptMessage:
            checkAgent("from");
            checkAgent("to");
            break;
        case inject::ActionKind::DropChannel:
            checkAgent("from");
            checkAgent("to");
            break;
        case inject::ActionKind::ContradictObjective:
        case inject::ActionKind::WithholdEnvKeys:
        case inject::ActionKind::DisableTool:
            checkAgent("agent");
            break;
        case inject::ActionKind::InsertAgent: {
            if (p.contains("name") && p["name"].is_string() && declared(spec, p["name"].get<std::string>())) {
                add(path + ".action.name", "inserted agent '" + p["name"].get<std::string>() + "' is already declared");
            }
            break;
        }
        case inject::ActionKind::DeadlinePressure:
            break;
        }
    }

    // Milestones
    std::set<std::string> milestoneNames;
    for (std::size_t i = 0; i < spec.milestones.size(); ++i) {
        const auto& m = spec.milestones[i];
        const std::string path = "milestones[" + std::to_string(i) + "]";
        if (m.name.empty()) add(path + ".name", "milestone name must be non-empty");
        if (!milestoneNames.insert(m.name).second) add(path + ".name", "duplicate milestone '" + m.name + "'");
        if (m.key.empty()) add(path + ".key", "milestone key must be non-empty");
        static const std::set<std::string> ops = {"eq", "ne", "lt", "le", "gt", "ge", "exists", "absent"};
        if (!ops.count(m.op)) add(path + ".op", "unknown milestone op '" + m.op + "'");
    }

    return v;
}

} // namespace magrisk::core
