// engine.cpp - the simulation loop.
//
// Scheduling: within a step, agents are evaluated in the protocol-defined
// order; messages emitted at step t are delivered at t+1 (synchronous
// rounds). Random streams split hierarchically (run seed -> per-agent ->
// per-step), so inserting an agent does not shift any other agent's draws.
//
// Taint rule: an agent is contaminated when it reads a tainted message or a
// tainted env key (or when an injection corrupts its own emission, seeding
// depth 0); every subsequent emission carries the union of its taints. This
// over-approximates real contamination on purpose.
#include "magrisk/engine.hpp"

#include "magrisk/inject.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace magrisk::engine {

using namespace magrisk::core;

namespace {

struct AgentState {
    AgentDecl decl;
    std::string objectiveOverride; // empty -> decl.objective
    agents::AgentMemory memory;
    std::set<std::string> taints;
    std::optional<int> firstContamination;
};

struct ProbeQuery {
    int step = 0;
    AgentId agent;
    std::string question;
    std::string answer;
    bool answered = false;
};

class Runner final : public inject::InjectionHost {
public:
    Runner(const ScenarioSpec& spec, std::uint64_t seed, const RunHooks* hooks, ProbeQuery* probe)
        : spec_(spec), seed_(seed), hooks_(hooks), probe_(probe), root_(seed) {}

    RunResult run() {
        for (const auto& m : spec_.milestones) {
            if (m.required) ++requiredCount_;
        }
        const auto violations = validate(spec_);
        if (!violations.empty()) {
            std::string msg = "runOnce: invalid scenario:";
            for (const auto& v : violations) msg += "\n  " + v.path + ": " + v.message;
            throw EngineError(msg);
        }
        if (probe_) {
            bool known = std::any_of(spec_.agents.begin(), spec_.agents.end(),
                                     [&](const AgentDecl& a) { return a.name == probe_->agent; });
            if (!known) throw EngineError("probeAgent: unknown agent '" + probe_->agent + "'");
            if (probe_->step >= spec_.horizon) {
                throw EngineError("probeAgent: step beyond horizon");
            }
        }

        topology_ = spec_.topology;
        for (const auto& decl : spec_.agents) {
            order_.push_back(decl.name);
            states_[decl.name] = AgentState{decl, "", {}, {}, {}};
        }
        env_ = makeEnvironment(spec_.environment);
        envState_ = env_->init();
        effHorizon_ = spec_.horizon;

        evaluateMilestones(0);
        int t = 0;
        while (true) {
            if (requiredCount_ > 0 && requiredHit_ == requiredCount_) {
                return finish(t, RunStatus::Success, "all required milestones reached");
            }
            if (t >= spec_.protocol.rounds) {
                const bool ok = requiredHit_ == requiredCount_;
                return finish(t, ok ? RunStatus::Success : RunStatus::Failure,
                              ok ? "completed all rounds" : "rounds exhausted with milestones unmet");
            }
            if (t >= effHorizon_) {
                return finish(t, RunStatus::HorizonExceeded, "horizon exceeded");
            }
            if (auto failure = round(t)) {
                return finish(t, RunStatus::Failure, *failure);
            }
            ++t;
        }
    }

private:
    // --- event recording ---------------------------------------------------
    void record(int step, EventPayload payload) {
        events_.push_back(Event{step, seq_++, std::move(payload)});
    }

    RunResult finish(int step, RunStatus status, std::string reason) {
        if (probe_ && !probe_->answered) {
            throw EngineError("probeAgent: step " + std::to_string(probe_->step) +
                              " beyond run end (ended at step " + std::to_string(step) + ")");
        }
        record(step, RunEnded{status, reason});
        RunResult result;
        result.trace.scenarioDigest = scenarioDigest(spec_);
        result.trace.seed = seed_;
        result.trace.events = std::move(events_);
        result.milestonesHit = milestonesHit_;
        result.status = status;
        result.statusReason = std::move(reason);
        for (const auto& [name, st] : states_) {
            if (st.firstContamination) result.taintReport[name] = *st.firstContamination;
        }
        return result;
    }

    // --- taint bookkeeping -------------------------------------------------
    void contaminateAt(const AgentId& agent, const std::set<std::string>& labels, int step) {
        if (labels.empty()) return;
        auto& st = states_.at(agent);
        for (const auto& l : labels) st.taints.insert(l);
        if (!st.firstContamination) st.firstContamination = step;
    }

    // --- inject::InjectionHost ----------------------------------------------
    std::vector<Message>& pendingMessages() override { return pending_; }
    const std::vector<Event>& committedEvents() const override { return events_; }
    bool agentKnown(const AgentId& agent) const override { return states_.count(agent) > 0; }
    void contaminate(const AgentId& agent, const std::string& label) override {
        contaminateAt(agent, {label}, currentStep_);
    }
    void cutChannel(const AgentId& from, const AgentId& to, int untilStep) override {
        auto& until = channelCutUntil_[{from, to}];
        until = std::max(until, untilStep);
    }
    std::string insertAgent(const AgentDecl& decl) override {
        // Edge policy by topology kind: spoke for Orchestrator, full links
        // otherwise.
        std::string policy;
        if (topology_.kind == TopologyKind::Orchestrator && topology_.hub) {
            topology_.edges.insert({*topology_.hub, decl.name});
            topology_.edges.insert({decl.name, *topology_.hub});
            policy = "spoke";
        } else {
            for (const auto& existing : order_) {
                topology_.edges.insert({existing, decl.name});
                topology_.edges.insert({decl.name, existing});
            }
            policy = "full-links";
        }
        order_.push_back(decl.name);
        states_[decl.name] = AgentState{decl, "", {}, {}, {}};
        return policy;
    }
    void overrideObjective(const AgentId& agent, const std::string& objective) override {
        states_.at(agent).objectiveOverride = objective;
    }
    void withholdKeys(const AgentId& agent, const std::vector<std::string>& keys) override {
        for (const auto& k : keys) withheld_[agent].insert(k);
    }
    void disableTool(const AgentId& agent, const std::string& taskTag, int untilStep) override {
        auto& until = toolDisabledUntil_[agent][taskTag];
        until = std::max(until, untilStep);
    }
    void setHorizon(int horizon) override { effHorizon_ = horizon; }
    RandomStream injectionStream(const std::string& label, int step) override {
        return root_.child("inject:" + label).child(static_cast<std::uint64_t>(step));
    }
    void recordFired(InjectionFired fired) override { record(currentStep_, std::move(fired)); }

    // --- observation assembly ------------------------------------------------
    agents::Observation buildObservation(const AgentId& name, int t,
                                         const std::vector<Message>& inbox, bool reflection) {
        const auto& st = states_.at(name);
        agents::Observation obs;
        obs.step = t;
        obs.inbox = inbox;
        obs.objective = st.objectiveOverride.empty() ? st.decl.objective : st.objectiveOverride;

        const auto& withheld = withheld_[name];
        for (const auto& key : st.decl.envKeys) {
            if (withheld.count(key)) continue;
            auto it = envState_.find(key);
            if (it != envState_.end()) obs.envView[key] = it->second;
        }
        Json peers = Json::array();
        for (const auto& r : allowedRecipients(topology_, name)) peers.push_back(r);
        obs.envView["__peers"] = std::move(peers);
        Json disabled = Json::array();
        auto toolIt = toolDisabledUntil_.find(name);
        if (toolIt != toolDisabledUntil_.end()) {
            for (const auto& [tag, until] : toolIt->second) {
                if (t < until) disabled.push_back(tag);
            }
        }
        obs.envView["__disabled_tools"] = std::move(disabled);
        if (reflection) obs.envView["__phase"] = "reflection";
        return obs;
    }

    // Absorb taint from everything the agent reads this round.
    void absorbTaints(const AgentId& name, int t, const std::vector<Message>& inbox) {
        const auto& st = states_.at(name);
        std::set<std::string> incoming;
        for (const auto& m : inbox) incoming.insert(m.taint.begin(), m.taint.end());
        const auto& withheld = withheld_[name];
        for (const auto& key : st.decl.envKeys) {
            if (withheld.count(key)) continue;
            auto it = keyTaint_.find(key);
            if (it != keyTaint_.end() && envState_.count(key)) {
                incoming.insert(it->second.begin(), it->second.end());
            }
        }
        contaminateAt(name, incoming, t);
    }

    // --- round ----------------------------------------------------------------
    std::vector<AgentId> roundOrder(int t) {
        std::vector<AgentId> order = order_;
        switch (spec_.protocol.ordering) {
        case Ordering::Fixed: break;
        case Ordering::Rotating:
            if (!order.empty()) {
                std::rotate(order.begin(), order.begin() + (t % static_cast<int>(order.size())),
                            order.end());
            }
            break;
        case Ordering::Random: {
            auto stream = root_.child("ordering").child(static_cast<std::uint64_t>(t));
            stream.shuffle(order);
            break;
        }
        }
        return order;
    }

    // Returns a failure reason if a behaviour error ended the round.
    std::optional<std::string> round(int t) {
        currentStep_ = t;
        inject::applyInjections(spec_.injections, t, fired_, *this);

        std::map<AgentId, std::vector<Message>> inboxes;
        for (const auto& m : pending_) {
            for (const auto& r : m.to) {
                if (states_.count(r)) inboxes[r].push_back(m);
            }
        }
        pending_.clear();

        if (probe_ && probe_->step == t && !probe_->answered) {
            answerProbe(t, inboxes[probe_->agent]);
        }

        std::vector<ActionTaken> actions;
        for (const auto& name : roundOrder(t)) {
            auto& st = states_.at(name);
            const auto& inbox = inboxes[name];
            absorbTaints(name, t, inbox);

            const agents::Observation obs = buildObservation(name, t, inbox, false);
            auto stream = root_.child("agent:" + name).child(static_cast<std::uint64_t>(t));
            agents::AgentDecision decision;
            agents::DecideHooks dh;
            dh.llm = hooks_ ? hooks_->llm : nullptr;
            try {
                decision = agents::decide(st.decl.behavior, st.memory, obs, stream, &dh);
            } catch (const std::exception& e) {
                record(t, AgentInternal{name, std::string("behavior-error: ") + e.what(),
                                        static_cast<int>(st.memory.entries.size())});
                return std::string("behavior error (") + name + "): " + e.what();
            }

            // Predictions become Prediction-kind messages to the predicted agent.
            const auto allowed = allowedRecipients(topology_, name);
            for (const auto& [about, label] : decision.prediction) {
                if (!allowed.count(about)) {
                    record(t, AgentInternal{name, "behavior-error: prediction about non-visible agent '" + about + "'",
                                            static_cast<int>(st.memory.entries.size())});
                    return std::string("behavior error (") + name + "): prediction about non-visible agent '" +
                           about + "'";
                }
                Message pm;
                pm.to = {about};
                pm.content = label;
                pm.kind = MessageKind::Prediction;
                decision.messages.push_back(std::move(pm));
            }

            for (auto& m : decision.messages) {
                m.step = t;
                m.from = name;
                // Behaviour-declared taint on an emission is a scenario-declared
                // seed error; the emitter is contaminated at depth 0.
                std::set<std::string> declared;
                for (const auto& l : m.taint) {
                    if (!st.taints.count(l)) declared.insert(l);
                }
                contaminateAt(name, declared, t);
                m.taint.insert(st.taints.begin(), st.taints.end());

                if (m.to.empty() && spec_.protocol.commModel == CommModel::Broadcast) {
                    m.to = allowed;
                }
                if (m.to.empty()) continue;

                std::set<AgentId> sent, cut, bad;
                for (const auto& r : m.to) {
                    if (!allowed.count(r)) {
                        bad.insert(r);
                    } else if (channelCut(name, r, t)) {
                        cut.insert(r);
                    } else {
                        sent.insert(r);
                    }
                }
                if (!sent.empty()) {
                    Message out = m;
                    out.to = sent;
                    record(t, MessageSent{out});
                    pending_.push_back(std::move(out));
                }
                if (!cut.empty()) {
                    Message dropped = m;
                    dropped.to = cut;
                    record(t, MessageDropped{std::move(dropped), "channel-cut"});
                }
                if (!bad.empty()) {
                    Message dropped = m;
                    dropped.to = bad;
                    record(t, MessageDropped{std::move(dropped), "recipient-not-allowed"});
                }
            }

            if (decision.action) {
                ActionTaken action{name, decision.action->name, decision.action->args, st.taints};
                record(t, action);
                actions.push_back(std::move(action));
            }
            if (!decision.memoryAppend.empty()) {
                agents::remember(st.memory, t, decision.memoryAppend);
                record(t, AgentInternal{name, decision.memoryAppend,
                                        static_cast<int>(st.memory.entries.size())});
            }
            for (const auto& m : decision.messages) {
                if (m.kind == MessageKind::Vote) lastVote_[name] = m.content;
            }
        }

        auto envStream = root_.child("env").child(static_cast<std::uint64_t>(t));
        for (const auto& change : env_->step(t, envState_, actions, keyTaint_, envStream)) {
            record(t, change);
        }

        if (spec_.protocol.reflection) {
            reflectionPhase(t);
        }
        applyAggregation(t);
        evaluateMilestones(t);
        return std::nullopt;
    }

    void reflectionPhase(int t) {
        for (const auto& name : roundOrder(t)) {
            auto& st = states_.at(name);
            const agents::Observation obs = buildObservation(name, t, {}, true);
            auto stream = root_.child("reflect:" + name).child(static_cast<std::uint64_t>(t));
            agents::AgentDecision decision;
            try {
                decision = agents::decide(st.decl.behavior, st.memory, obs, stream, nullptr);
            } catch (const std::exception&) {
                continue; // reflection is optional; failures are not fatal
            }
            // Only private effects are honoured during reflection.
            if (!decision.memoryAppend.empty()) {
                agents::remember(st.memory, t, decision.memoryAppend);
                record(t, AgentInternal{name, decision.memoryAppend,
                                        static_cast<int>(st.memory.entries.size())});
            }
        }
    }

    void applyAggregation(int t) {
        if (spec_.protocol.aggregation == Aggregation::None || lastVote_.empty()) return;
        std::string verdict;
        if (spec_.protocol.aggregation == Aggregation::MajorityVote) {
            std::map<std::string, int> counts;
            for (const auto& [agent, vote] : lastVote_) counts[vote] += 1;
            int best = 0;
            for (const auto& [vote, n] : counts) {
                if (n > best) {
                    best = n;
                    verdict = vote;
                }
            }
        } else { // Judge: the hub (or first declared agent) adjudicates
            const AgentId judge = topology_.hub ? *topology_.hub : order_.front();
            auto it = lastVote_.find(judge);
            if (it == lastVote_.end()) return;
            verdict = it->second;
        }
        const char* key = spec_.protocol.aggregation == Aggregation::MajorityVote
                              ? "__consensus"
                              : "__judge_verdict";
        auto it = envState_.find(key);
        if (it != envState_.end() && it->second == verdict) return;
        envState_[key] = verdict;
        record(t, EnvChanged{key, Json(verdict), {}});
    }

    void evaluateMilestones(int t) {
        for (const auto& m : spec_.milestones) {
            if (milestonesHit_.count(m.name)) continue;
            if (milestoneHolds(m, envState_)) {
                milestonesHit_[m.name] = t;
                record(t, MilestoneReached{m.name});
                if (m.required) ++requiredHit_;
            }
        }
    }

    bool channelCut(const AgentId& from, const AgentId& to, int t) const {
        auto it = channelCutUntil_.find({from, to});
        return it != channelCutUntil_.end() && t < it->second;
    }

    void answerProbe(int t, const std::vector<Message>& inbox) {
        auto& st = states_.at(probe_->agent);
        std::vector<Message> withQuestion = inbox;
        Message q;
        q.step = t;
        q.from = agents::kProbeSender;
        q.to = {probe_->agent};
        q.content = probe_->question;
        q.kind = MessageKind::Request;
        withQuestion.push_back(std::move(q));

        agents::Observation obs = buildObservation(probe_->agent, t, withQuestion, false);
        auto stream = root_.child("probe").child(static_cast<std::uint64_t>(t));
        agents::AgentMemory memoryCopy = st.memory;
        agents::DecideHooks dh;
        dh.llm = hooks_ ? hooks_->llm : nullptr;
        const auto decision = agents::decide(st.decl.behavior, memoryCopy, obs, stream, &dh);
        for (const auto& m : decision.messages) {
            if (m.to.count(agents::kProbeSender)) {
                probe_->answer = m.content;
                break;
            }
        }
        probe_->answered = true;
    }

    const ScenarioSpec& spec_;
    std::uint64_t seed_;
    const RunHooks* hooks_;
    ProbeQuery* probe_;
    RandomStream root_;

    TopologySpec topology_;
    std::vector<AgentId> order_;
    std::map<AgentId, AgentState> states_;
    std::unique_ptr<EnvironmentModel> env_;
    EnvState envState_;
    KeyTaint keyTaint_;
    std::vector<Message> pending_;
    std::map<std::pair<AgentId, AgentId>, int> channelCutUntil_;
    std::map<AgentId, std::map<std::string, int>> toolDisabledUntil_;
    std::map<AgentId, std::set<std::string>> withheld_;
    std::map<AgentId, std::string> lastVote_;
    std::set<std::size_t> fired_;
    int effHorizon_ = 1;
    int currentStep_ = 0;
    std::vector<Event> events_;
    int seq_ = 0;
    std::map<std::string, int> milestonesHit_;
    int requiredHit_ = 0;
    int requiredCount_ = 0;
};

} // namespace

RunResult runOnce(const ScenarioSpec& spec, std::uint64_t seed, const RunHooks* hooks) {
    Runner runner(spec, seed, hooks, nullptr);
    return runner.run();
}

WilsonInterval wilson95(int failures, int n) {
    if (n < 1) throw EngineError("wilson95: n must be >= 1");
    constexpr double z = 1.959963984540054; // 97.5th percentile of the standard normal
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(failures) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (phat + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    WilsonInterval w;
    w.lo = std::max(0.0, centre - half);
    w.hi = std::min(1.0, centre + half);
    return w;
}

EnsembleResult runEnsemble(const ScenarioSpec& spec, const std::vector<std::uint64_t>& seeds,
                           const RunHooks* hooks, int jobs) {
    if (seeds.empty()) throw EngineError("runEnsemble: need at least one seed");
    EnsembleResult result;
    result.seeds = seeds;
    result.runs.resize(seeds.size());

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            result.runs[i] = runOnce(spec, seeds[i], hooks);
        }
    } else {
        std::vector<std::thread> threads;
        std::atomic<std::size_t> next{0};
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= seeds.size()) break;
                    result.runs[i] = runOnce(spec, seeds[i], hooks);
                }
            });
        }
        for (auto& th : threads) th.join();
    }

    for (const auto& run : result.runs) {
        if (run.status != RunStatus::Success) ++result.failures;
    }
    result.failureRate = static_cast<double>(result.failures) / static_cast<double>(seeds.size());
    result.interval = wilson95(result.failures, static_cast<int>(seeds.size()));
    return result;
}

EnsembleResult runEnsemble(const ScenarioSpec& spec, int n, std::uint64_t seedBase,
                           const RunHooks* hooks, int jobs) {
    if (n < 1) throw EngineError("runEnsemble: N must be >= 1");
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seeds.push_back(seedBase + static_cast<std::uint64_t>(i));
    return runEnsemble(spec, seeds, hooks, jobs);
}

RunResult replay(const Trace& trace, const ScenarioSpec& spec, const RunHooks* hooks) {
    const std::string expected = scenarioDigest(spec);
    if (trace.scenarioDigest != expected) {
        throw EngineError("replay: scenarioDigest mismatch (trace " + trace.scenarioDigest +
                          ", spec " + expected + ")");
    }
    RunResult fresh = runOnce(spec, trace.seed, hooks);
    const std::size_t n = std::min(fresh.trace.events.size(), trace.events.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (canonicalDump(toJson(fresh.trace.events[i])) != canonicalDump(toJson(trace.events[i]))) {
            throw EngineError("replay: divergence at event index " + std::to_string(i));
        }
    }
    if (fresh.trace.events.size() != trace.events.size()) {
        throw EngineError("replay: divergence at event index " + std::to_string(n) +
                          " (event count mismatch)");
    }
    return fresh;
}

std::string probeAgent(const ScenarioSpec& spec, std::uint64_t seed, int step,
                       const AgentId& agent, const std::string& question, const RunHooks* hooks) {
    ProbeQuery probe;
    probe.step = step;
    probe.agent = agent;
    probe.question = question;
    Runner runner(spec, seed, hooks, &probe);
    runner.run();
    return probe.answer;
}

} // namespace magrisk::engine
