// agents.hpp - pluggable agent behaviours: observation/decision contract,
// bounded memory, capability tables and the live-LLM adapter port.
#pragma once

#include "magrisk/behavior_spec.hpp"
#include "magrisk/core.hpp"
#include "magrisk/rng.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace magrisk::agents {

struct BehaviorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// What one agent sees at one step. envView holds only keys the scenario
// grants this agent, plus engine-provided pseudo-keys:
//   __peers          array of agent names this agent may message
//   __disabled_tools array of task tags currently disabled by injections
//   __phase          "reflection" during a private reflection step
struct Observation {
    int step = 0;
    std::vector<core::Message> inbox;
    std::map<std::string, Json> envView;
    std::string objective;
};

// Sender name used when the engine poses an out-of-band probe question.
inline constexpr const char* kProbeSender = "__probe";

struct AgentMemory {
    std::vector<std::pair<int, std::string>> entries; // (step, text), oldest first
    int capacity = 64;
};

// Appends an entry, evicting oldest-first beyond capacity.
void remember(AgentMemory& memory, int step, const std::string& text);

// Keeps the most recent `budget` entries; deterministic and idempotent.
AgentMemory truncateContext(const AgentMemory& memory, int budget);

std::string memoryDigest(const AgentMemory& memory);

struct EnvAction {
    std::string name; // categorical label; also the ToM prediction vocabulary
    Json args = Json::object();
};

struct AgentDecision {
    std::vector<core::Message> messages; // engine fills step/from and unions agent taint
    std::optional<EnvAction> action;
    std::map<core::AgentId, std::string> prediction; // about -> label or "a=0.6;b=0.4"
    std::string memoryAppend;
};

// ---------------------------------------------------------------------------
// Live-LLM adapter port. The core ships no vendor client; anything crossing
// this boundary is excluded from deterministic acceptance tests.

struct LlmMessage {
    std::string role;
    std::string content;
};
struct LlmRequest {
    std::vector<LlmMessage> messages;
};

class LlmTransport {
public:
    virtual ~LlmTransport() = default;
    // Throws on timeout or transport failure; the engine records the error
    // in the trace rather than substituting a default decision.
    virtual std::string complete(const LlmRequest& request) = 0;
};

struct DecideHooks {
    LlmTransport* llm = nullptr;
};

// Pure function of (behavior, memory, obs, stream state): identical inputs
// produce identical decisions. Throws BehaviorError on malformed parameters
// or adapter failures.
AgentDecision decide(const BehaviorSpec& behavior, const AgentMemory& memory,
                     const Observation& obs, RandomStream& rand,
                     const DecideHooks* hooks = nullptr);

// Bernoulli draw from the tag's probability in `table` ({tag: p}, optional
// "defaultP" via the defaultP argument). Throws if the tag is missing and no
// default exists.
bool capabilityLookup(const Json& table, const std::string& taskTag, RandomStream& rand,
                      std::optional<double> defaultP = std::nullopt);

} // namespace magrisk::agents
