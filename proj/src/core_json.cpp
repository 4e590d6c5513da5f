// core_json.cpp - canonical (de)serialisation of core types, traces, digests.
#include "magrisk/core.hpp"
#include "magrisk/digest.hpp"

#include <sstream>

namespace magrisk::core {

namespace {

template <typename E>
E enumFromString(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
                 const char* what) {
    for (const auto& [name, value] : table) {
        if (s == name) return value;
    }
    throw SpecError(std::string(what) + ": unknown value '" + s + "'");
}

Json taintToJson(const std::set<std::string>& taint) {
    Json arr = Json::array();
    for (const auto& t : taint) arr.push_back(t);
    return arr;
}

std::set<std::string> taintFromJson(const Json& j) {
    std::set<std::string> out;
    for (const auto& t : j) out.insert(t.get<std::string>());
    return out;
}

} // namespace

const char* toString(TopologyKind k) {
    switch (k) {
    case TopologyKind::SingleAgent: return "SingleAgent";
    case TopologyKind::Orchestrator: return "Orchestrator";
    case TopologyKind::Swarm: return "Swarm";
    case TopologyKind::TaskForce: return "TaskForce";
    }
    return "?";
}
const char* toString(Ordering o) {
    switch (o) {
    case Ordering::Fixed: return "Fixed";
    case Ordering::Rotating: return "Rotating";
    case Ordering::Random: return "Random";
    }
    return "?";
}
const char* toString(CommModel c) {
    switch (c) {
    case CommModel::Pairwise: return "Pairwise";
    case CommModel::Broadcast: return "Broadcast";
    case CommModel::Multicast: return "Multicast";
    }
    return "?";
}
const char* toString(Aggregation a) {
    switch (a) {
    case Aggregation::None: return "None";
    case Aggregation::MajorityVote: return "MajorityVote";
    case Aggregation::Judge: return "Judge";
    }
    return "?";
}
const char* toString(MessageKind k) {
    switch (k) {
    case MessageKind::Statement: return "Statement";
    case MessageKind::Request: return "Request";
    case MessageKind::Response: return "Response";
    case MessageKind::Vote: return "Vote";
    case MessageKind::Prediction: return "Prediction";
    case MessageKind::Reflection: return "Reflection";
    }
    return "?";
}
const char* toString(RunStatus s) {
    switch (s) {
    case RunStatus::Success: return "Success";
    case RunStatus::Failure: return "Failure";
    case RunStatus::HorizonExceeded: return "HorizonExceeded";
    }
    return "?";
}
const char* toString(FailureMode m) {
    switch (m) {
    case FailureMode::CascadingReliability: return "CascadingReliability";
    case FailureMode::InterAgentComms: return "InterAgentComms";
    case FailureMode::MonocultureCollapse: return "MonocultureCollapse";
    case FailureMode::ConformityBias: return "ConformityBias";
    case FailureMode::DeficientTheoryOfMind: return "DeficientTheoryOfMind";
    case FailureMode::MixedMotiveDynamics: return "MixedMotiveDynamics";
    }
    return "?";
}
const char* toString(Exposure e) {
    switch (e) {
    case Exposure::None: return "None";
    case Exposure::Exposed: return "Exposed";
    case Exposure::High: return "High";
    }
    return "?";
}

MessageKind messageKindFromString(const std::string& s) {
    return enumFromString<MessageKind>(s,
                                       {{"Statement", MessageKind::Statement},
                                        {"Request", MessageKind::Request},
                                        {"Response", MessageKind::Response},
                                        {"Vote", MessageKind::Vote},
                                        {"Prediction", MessageKind::Prediction},
                                        {"Reflection", MessageKind::Reflection}},
                                       "message kind");
}
RunStatus runStatusFromString(const std::string& s) {
    return enumFromString<RunStatus>(s,
                                     {{"Success", RunStatus::Success},
                                      {"Failure", RunStatus::Failure},
                                      {"HorizonExceeded", RunStatus::HorizonExceeded}},
                                     "run status");
}

Json toJson(const TopologySpec& t) {
    Json edges = Json::array();
    for (const auto& [from, to] : t.edges) edges.push_back(Json::array({from, to}));
    Json j{{"kind", toString(t.kind)}, {"edges", edges}};
    if (t.hub) j["hub"] = *t.hub;
    return j;
}

TopologySpec topologyFromJson(const Json& j) {
    TopologySpec t;
    t.kind = enumFromString<TopologyKind>(j.at("kind").get<std::string>(),
                                          {{"SingleAgent", TopologyKind::SingleAgent},
                                           {"Orchestrator", TopologyKind::Orchestrator},
                                           {"Swarm", TopologyKind::Swarm},
                                           {"TaskForce", TopologyKind::TaskForce}},
                                          "topology kind");
    for (const auto& e : j.value("edges", Json::array())) {
        t.edges.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    }
    if (j.contains("hub") && !j["hub"].is_null()) t.hub = j["hub"].get<std::string>();
    return t;
}

Json toJson(const ProtocolConfig& p) {
    return Json{{"rounds", p.rounds},
                {"ordering", toString(p.ordering)},
                {"commModel", toString(p.commModel)},
                {"reflection", p.reflection},
                {"aggregation", toString(p.aggregation)}};
}

ProtocolConfig protocolFromJson(const Json& j) {
    ProtocolConfig p;
    p.rounds = j.value("rounds", 1);
    p.ordering = enumFromString<Ordering>(j.value("ordering", "Fixed"),
                                          {{"Fixed", Ordering::Fixed},
                                           {"Rotating", Ordering::Rotating},
                                           {"Random", Ordering::Random}},
                                          "ordering");
    p.commModel = enumFromString<CommModel>(j.value("commModel", "Multicast"),
                                            {{"Pairwise", CommModel::Pairwise},
                                             {"Broadcast", CommModel::Broadcast},
                                             {"Multicast", CommModel::Multicast}},
                                            "commModel");
    p.reflection = j.value("reflection", false);
    p.aggregation = enumFromString<Aggregation>(j.value("aggregation", "None"),
                                                {{"None", Aggregation::None},
                                                 {"MajorityVote", Aggregation::MajorityVote},
                                                 {"Judge", Aggregation::Judge}},
                                                "aggregation");
    return p;
}

Json toJson(const Message& m) {
    Json to = Json::array();
    for (const auto& r : m.to) to.push_back(r);
    return Json{{"step", m.step},     {"from", m.from},
                {"to", to},           {"content", m.content},
                {"kind", toString(m.kind)}, {"taint", taintToJson(m.taint)}};
}

Message messageFromJson(const Json& j) {
    Message m;
    m.step = j.at("step").get<int>();
    m.from = j.at("from").get<std::string>();
    for (const auto& r : j.at("to")) m.to.insert(r.get<std::string>());
    m.content = j.at("content").get<std::string>();
    m.kind = messageKindFromString(j.at("kind").get<std::string>());
    m.taint = taintFromJson(j.value("taint", Json::array()));
    return m;
}

Json toJson(const Event& e) {
    Json j{{"step", e.step}, {"seq", e.seq}};
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MessageSent>) {
                j["type"] = "MessageSent";
                j["msg"] = toJson(p.msg);
            } else if constexpr (std::is_same_v<T, MessageDropped>) {
                j["type"] = "MessageDropped";
                j["msg"] = toJson(p.msg);
                j["reason"] = p.reason;
            } else if constexpr (std::is_same_v<T, ActionTaken>) {
                j["type"] = "ActionTaken";
                j["agent"] = p.agent;
                j["name"] = p.name;
                j["args"] = p.args;
                j["taint"] = taintToJson(p.taint);
            } else if constexpr (std::is_same_v<T, EnvChanged>) {
                j["type"] = "EnvChanged";
                j["key"] = p.key;
                j["value"] = p.value;
                j["taint"] = taintToJson(p.taint);
            } else if constexpr (std::is_same_v<T, MilestoneReached>) {
                j["type"] = "MilestoneReached";
                j["name"] = p.name;
            } else if constexpr (std::is_same_v<T, InjectionFired>) {
                j["type"] = "InjectionFired";
                j["label"] = p.label;
                j["action"] = p.action;
                if (p.seedAgent) j["seedAgent"] = *p.seedAgent;
                j["details"] = p.details;
            } else if constexpr (std::is_same_v<T, AgentInternal>) {
                j["type"] = "AgentInternal";
                j["agent"] = p.agent;
                j["note"] = p.note;
                j["memorySize"] = p.memorySize;
            } else if constexpr (std::is_same_v<T, RunEnded>) {
                j["type"] = "RunEnded";
                j["status"] = toString(p.status);
                j["reason"] = p.reason;
            }
        },
        e.payload);
    return j;
}

Event eventFromJson(const Json& j) {
    Event e;
    e.step = j.at("step").get<int>();
    e.seq = j.at("seq").get<int>();
    const std::string type = j.at("type").get<std::string>();
    if (type == "MessageSent") {
        e.payload = MessageSent{messageFromJson(j.at("msg"))};
    } else if (type == "MessageDropped") {
        e.payload = MessageDropped{messageFromJson(j.at("msg")), j.value("reason", "")};
    } else if (type == "ActionTaken") {
        e.payload = ActionTaken{j.at("agent").get<std::string>(), j.at("name").get<std::string>(),
                                j.value("args", Json::object()),
                                taintFromJson(j.value("taint", Json::array()))};
    } else if (type == "EnvChanged") {
        e.payload = EnvChanged{j.at("key").get<std::string>(), j.at("value"),
                               taintFromJson(j.value("taint", Json::array()))};
    } else if (type == "MilestoneReached") {
        e.payload = MilestoneReached{j.at("name").get<std::string>()};
    } else if (type == "InjectionFired") {
        InjectionFired f;
        f.label = j.at("label").get<std::string>();
        f.action = j.at("action").get<std::string>();
        if (j.contains("seedAgent")) f.seedAgent = j["seedAgent"].get<std::string>();
        f.details = j.value("details", Json::object());
        e.payload = std::move(f);
    } else if (type == "AgentInternal") {
        e.payload = AgentInternal{j.at("agent").get<std::string>(), j.value("note", ""),
                                  j.value("memorySize", 0)};
    } else if (type == "RunEnded") {
        e.payload = RunEnded{runStatusFromString(j.at("status").get<std::string>()), j.value("reason", "")};
    } else {
        throw SpecError("event: unknown type '" + type + "'");
    }
    return e;
}

Json toJson(const MilestonePredicate& m) {
    return Json{{"name", m.name}, {"key", m.key}, {"op", m.op}, {"value", m.value}, {"required", m.required}};
}

MilestonePredicate milestoneFromJson(const Json& j) {
    MilestonePredicate m;
    m.name = j.at("name").get<std::string>();
    m.key = j.at("key").get<std::string>();
    m.op = j.value("op", "eq");
    m.value = j.value("value", Json(nullptr));
    m.required = j.value("required", true);
    return m;
}

Json toJson(const AgentDecl& a) {
    Json keys = Json::array();
    for (const auto& k : a.envKeys) keys.push_back(k);
    return Json{{"name", a.name},
                {"behavior", agents::toJson(a.behavior)},
                {"objective", a.objective},
                {"envKeys", keys}};
}

AgentDecl agentDeclFromJson(const Json& j) {
    AgentDecl a;
    a.name = j.at("name").get<std::string>();
    a.behavior = agents::behaviorFromJson(j.at("behavior"));
    a.objective = j.value("objective", "");
    for (const auto& k : j.value("envKeys", Json::array())) a.envKeys.push_back(k.get<std::string>());
    return a;
}

Json toJson(const ScenarioSpec& s) {
    Json agentsArr = Json::array();
    for (const auto& a : s.agents) agentsArr.push_back(toJson(a));
    Json injArr = Json::array();
    for (const auto& i : s.injections) injArr.push_back(inject::toJson(i));
    Json milArr = Json::array();
    for (const auto& m : s.milestones) milArr.push_back(toJson(m));
    Json fmap = Json::object();
    const auto& effective = s.settingFailureMap.empty() ? defaultFailureMap(s.topology.kind)
                                                        : s.settingFailureMap;
    for (const auto& [mode, exp] : effective) fmap[toString(mode)] = toString(exp);
    return Json{{"schema", kScenarioSchema},
                {"name", s.name},
                {"topology", toJson(s.topology)},
                {"agents", agentsArr},
                {"protocol", toJson(s.protocol)},
                {"environment", Json{{"name", s.environment.name}, {"params", s.environment.params}}},
                {"injections", injArr},
                {"milestones", milArr},
                {"horizon", s.horizon},
                {"settingFailureMap", fmap}};
}

ScenarioSpec scenarioFromJson(const Json& j) {
    if (j.value("schema", kScenarioSchema) != std::string(kScenarioSchema)) {
        throw SpecError("scenario: unsupported schema '" + j.value("schema", "") + "'");
    }
    ScenarioSpec s;
    s.name = j.value("name", "");
    s.topology = topologyFromJson(j.at("topology"));
    for (const auto& a : j.at("agents")) s.agents.push_back(agentDeclFromJson(a));
    s.protocol = protocolFromJson(j.value("protocol", Json::object()));
    if (j.contains("environment")) {
        s.environment.name = j["environment"].value("name", "kv");
        s.environment.params = j["environment"].value("params", Json::object());
    }
    for (const auto& i : j.value("injections", Json::array())) {
        s.injections.push_back(inject::perturbationFromJson(i));
    }
    for (const auto& m : j.value("milestones", Json::array())) {
        s.milestones.push_back(milestoneFromJson(m));
    }
    s.horizon = j.value("horizon", 1);
    if (j.contains("settingFailureMap") && j["settingFailureMap"].is_object()) {
        static const std::pair<const char*, FailureMode> modes[] = {
            {"CascadingReliability", FailureMode::CascadingReliability},
            {"InterAgentComms", FailureMode::InterAgentComms},
            {"MonocultureCollapse", FailureMode::MonocultureCollapse},
            {"ConformityBias", FailureMode::ConformityBias},
            {"DeficientTheoryOfMind", FailureMode::DeficientTheoryOfMind},
            {"MixedMotiveDynamics", FailureMode::MixedMotiveDynamics}};
        for (const auto& [key, value] : j["settingFailureMap"].items()) {
            for (const auto& [name, mode] : modes) {
                if (key == name) {
                    const std::string ev = value.get<std::string>();
                    s.settingFailureMap[mode] = ev == "High"      ? Exposure::High
                                                : ev == "Exposed" ? Exposure::Exposed
                                                                  : Exposure::None;
                }
            }
        }
    }
    if (s.settingFailureMap.empty()) s.settingFailureMap = defaultFailureMap(s.topology.kind);
    return s;
}

std::string scenarioDigest(const ScenarioSpec& spec) {
    return sha256Hex(canonicalDump(toJson(spec)));
}

std::string serializeTrace(const Trace& trace) {
    std::ostringstream out;
    out << canonicalDump(Json{{"schema", kTraceSchema},
                              {"scenarioDigest", trace.scenarioDigest},
                              {"seed", trace.seed}})
        << '\n';
    for (const auto& e : trace.events) {
        out << canonicalDump(toJson(e)) << '\n';
    }
    return out.str();
}

Trace traceFromLines(const std::string& text) {
    Trace t;
    std::istringstream in(text);
    std::string line;
    bool haveHeader = false;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        const Json j = parseJson(line, "trace line " + std::to_string(lineNo));
        if (!haveHeader) {
            if (j.value("schema", "") != std::string(kTraceSchema)) {
                throw SpecError("trace: missing or unsupported header schema");
            }
            t.scenarioDigest = j.at("scenarioDigest").get<std::string>();
            t.seed = j.at("seed").get<std::uint64_t>();
            haveHeader = true;
        } else {
            t.events.push_back(eventFromJson(j));
        }
    }
    if (!haveHeader) throw SpecError("trace: empty input");
    return t;
}

std::string traceDigest(const Trace& trace) {
    if (trace.events.empty() || !std::holds_alternative<RunEnded>(trace.events.back().payload)) {
        throw SpecError("traceDigest: trace is not terminated by RunEnded");
    }
    int runEndedCount = 0;
    for (const auto& e : trace.events) {
        if (std::holds_alternative<RunEnded>(e.payload)) ++runEndedCount;
    }
    if (runEndedCount != 1) throw SpecError("traceDigest: trace must contain exactly one RunEnded");
    return sha256Hex(serializeTrace(trace));
}

} // namespace magrisk::core
