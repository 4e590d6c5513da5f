// core.hpp - domain types shared by every module: topology, protocol,
// messages, the event/trace model and scenario specifications.
#pragma once

#include "magrisk/behavior_spec.hpp"
#include "magrisk/json.hpp"
#include "magrisk/perturbation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace magrisk::core {

using AgentId = std::string;

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Topology and protocol

enum class TopologyKind { SingleAgent, Orchestrator, Swarm, TaskForce };
enum class Ordering { Fixed, Rotating, Random };
enum class CommModel { Pairwise, Broadcast, Multicast };
enum class Aggregation { None, MajorityVote, Judge };

struct TopologySpec {
    TopologyKind kind = TopologyKind::SingleAgent;
    std::set<std::pair<AgentId, AgentId>> edges; // ordered sender -> receiver channels
    std::optional<AgentId> hub;                  // required iff kind == Orchestrator
};

// Convenience constructors for the common shapes.
TopologySpec starTopology(const AgentId& hub, const std::vector<AgentId>& spokes);
TopologySpec swarmTopology(const std::vector<AgentId>& agents);
TopologySpec chainTopology(const std::vector<AgentId>& agents); // TaskForce line

struct ProtocolConfig {
    int rounds = 1;
    Ordering ordering = Ordering::Fixed;
    CommModel commModel = CommModel::Multicast;
    bool reflection = false;
    Aggregation aggregation = Aggregation::None;
};

// ---------------------------------------------------------------------------
// Messages and events

enum class MessageKind { Statement, Request, Response, Vote, Prediction, Reflection };

struct Message {
    int step = 0;
    AgentId from;
    std::set<AgentId> to;
    std::string content;
    MessageKind kind = MessageKind::Statement;
    std::set<std::string> taint; // injection labels carried by this message
};

enum class RunStatus { Success, Failure, HorizonExceeded };

struct MessageSent {
    Message msg;
};
struct MessageDropped {
    Message msg;
    std::string reason;
};
struct ActionTaken {
    AgentId agent;
    std::string name; // categorical action label (also the ToM vocabulary)
    Json args = Json::object();
    std::set<std::string> taint;
};
struct EnvChanged {
    std::string key;
    Json value;
    std::set<std::string> taint;
};
struct MilestoneReached {
    std::string name;
};
struct InjectionFired {
    std::string label;
    std::string action;
    std::optional<AgentId> seedAgent; // agent contaminated at depth 0, if any
    Json details = Json::object();
};
struct AgentInternal {
    AgentId agent;
    std::string note; // memory append / reflection text
    int memorySize = 0;
};
struct RunEnded {
    RunStatus status = RunStatus::Failure;
    std::string reason;
};

using EventPayload = std::variant<MessageSent, MessageDropped, ActionTaken, EnvChanged,
                                  MilestoneReached, InjectionFired, AgentInternal, RunEnded>;

struct Event {
    int step = 0;
    int seq = 0; // total order within a trace is (step, seq)
    EventPayload payload;
};

struct Trace {
    std::string scenarioDigest;
    std::uint64_t seed = 0;
    std::vector<Event> events;
};

inline constexpr const char* kTraceSchema = "magrisk-trace/1";
inline constexpr const char* kScenarioSchema = "magrisk-scenario/1";

// ---------------------------------------------------------------------------
// Scenario specification

enum class FailureMode {
    CascadingReliability,
    InterAgentComms,
    MonocultureCollapse,
    ConformityBias,
    DeficientTheoryOfMind,
    MixedMotiveDynamics,
};
enum class Exposure { None, Exposed, High };

// Advisory exposure map per topology kind; drives report emphasis only.
std::map<FailureMode, Exposure> defaultFailureMap(TopologyKind kind);

struct AgentDecl {
    AgentId name;
    agents::BehaviorSpec behavior;
    std::string objective;
    std::vector<std::string> envKeys; // keys of environment state this agent may view
};

struct EnvironmentSpec {
    std::string name = "kv";
    Json params = Json::object();
};

struct MilestonePredicate {
    std::string name;
    std::string key;
    std::string op = "eq"; // eq ne lt le gt ge exists absent
    Json value;
    bool required = true;
};

struct ScenarioSpec {
    std::string name;
    TopologySpec topology;
    std::vector<AgentDecl> agents;
    ProtocolConfig protocol;
    EnvironmentSpec environment;
    std::vector<inject::PerturbationSpec> injections;
    std::vector<MilestonePredicate> milestones;
    int horizon = 1;
    std::map<FailureMode, Exposure> settingFailureMap; // empty -> defaulted at parse/digest time
};

struct Violation {
    std::string path; // location within the spec, e.g. "topology.hub"
    std::string message;
};

// Pure and idempotent; returns every violated invariant, never mutates.
std::vector<Violation> validate(const ScenarioSpec& spec);

// Exact out-neighbour set of `sender`; throws SpecError for an undeclared sender.
std::set<AgentId> allowedRecipients(const TopologySpec& topology, const AgentId& sender);

// ---------------------------------------------------------------------------
// Canonical serialisation and digests

Json toJson(const TopologySpec&);
Json toJson(const ProtocolConfig&);
Json toJson(const Message&);
Json toJson(const Event&);
Json toJson(const MilestonePredicate&);
Json toJson(const AgentDecl&);
Json toJson(const ScenarioSpec&);

TopologySpec topologyFromJson(const Json&);
ProtocolConfig protocolFromJson(const Json&);
Message messageFromJson(const Json&);
Event eventFromJson(const Json&);
MilestonePredicate milestoneFromJson(const Json&);
AgentDecl agentDeclFromJson(const Json&);
ScenarioSpec scenarioFromJson(const Json&);

const char* toString(TopologyKind);
const char* toString(Ordering);
const char* toString(CommModel);
const char* toString(Aggregation);
const char* toString(MessageKind);
const char* toString(RunStatus);
const char* toString(FailureMode);
const char* toString(Exposure);
MessageKind messageKindFromString(const std::string&);
RunStatus runStatusFromString(const std::string&);

// Content hash of the fully resolved spec (failure map defaults applied).
std::string scenarioDigest(const ScenarioSpec& spec);

// Line-delimited canonical form: header record first, then one event per line.
std::string serializeTrace(const Trace& trace);
Trace traceFromLines(const std::string& text);

// SHA-256 of the canonical serialisation. Requires a terminated trace
// (exactly one RunEnded, as the final event); throws SpecError otherwise.
std::string traceDigest(const Trace& trace);

} // namespace magrisk::core
