// inject.hpp - trigger evaluation and action application for red-team
// perturbations, plus parameter sweeps with paired seeds.
#pragma once

#include "magrisk/core.hpp"
#include "magrisk/engine.hpp"
#include "magrisk/perturbation.hpp"
#include "magrisk/rng.hpp"

#include <set>
#include <vector>

namespace magrisk::inject {

struct InjectError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// State surface the engine exposes to injection actions.
class InjectionHost {
public:
    virtual ~InjectionHost() = default;
    virtual std::vector<core::Message>& pendingMessages() = 0;
    virtual const std::vector<core::Event>& committedEvents() const = 0;
    virtual bool agentKnown(const core::AgentId& agent) const = 0;
    virtual void contaminate(const core::AgentId& agent, const std::string& label) = 0;
    virtual void cutChannel(const core::AgentId& from, const core::AgentId& to, int untilStep) = 0;
    // Returns the edge policy applied ("spoke" or "full-links").
    virtual std::string insertAgent(const core::AgentDecl& decl) = 0;
    virtual void overrideObjective(const core::AgentId& agent, const std::string& objective) = 0;
    virtual void withholdKeys(const core::AgentId& agent, const std::vector<std::string>& keys) = 0;
    virtual void disableTool(const core::AgentId& agent, const std::string& taskTag, int untilStep) = 0;
    virtual void setHorizon(int horizon) = 0;
    virtual RandomStream injectionStream(const std::string& label, int step) = 0;
    virtual void recordFired(core::InjectionFired fired) = 0;
};

// Evaluates triggers over the already-committed event prefix only (list
// order, no lookahead) and applies firing actions at `step`. `firedOnce`
// carries trigger consumption across steps for non-repeating specs. Every
// firing is recorded through the host; CorruptMessage attaches the spec's
// label as taint to each altered in-flight message.
void applyInjections(const std::vector<PerturbationSpec>& specs, int step,
                     std::set<std::size_t>& firedOnce, InjectionHost& host);

// One injection parameter varied over a finite range. `param` names either
// an action parameter (duration, horizon, find, replace, ...) or one of the
// spec-level fields "probability", "step", "repeating". A duration or
// horizon value of 0 removes the injection at that point (the uninjected
// baseline).
struct SweepAxis {
    std::string label; // injection to vary
    std::string param;
    std::vector<Json> values;
};

struct SweepPoint {
    Json value;
    engine::EnsembleResult ensemble;
};

// One ensemble per axis value; all points share the same base seeds so
// per-seed deltas are attributable to the axis alone.
std::vector<SweepPoint> sweep(const core::ScenarioSpec& base, const SweepAxis& axis, int nPerPoint,
                              std::uint64_t seedBase = 1, const engine::RunHooks* hooks = nullptr,
                              int jobs = 1);

} // namespace magrisk::inject
