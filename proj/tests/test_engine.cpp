// test_engine.cpp - determinism, delivery semantics, milestones, ensembles,
// replay and mid-run probing.
#include <doctest.h>

#include "magrisk/engine.hpp"

#include <cmath>

using namespace magrisk;
using namespace magrisk::core;
using namespace magrisk::engine;

namespace {

// Two agents bouncing a ping forever.
ScenarioSpec echoPair(int rounds = 4) {
    ScenarioSpec spec;
    spec.name = "echo-pair";
    TopologySpec topo;
    topo.kind = TopologyKind::TaskForce;
    topo.edges = {{"a", "b"}, {"b", "a"}};
    spec.topology = topo;

    AgentDecl a;
    a.name = "a";
    a.behavior.kind = agents::BehaviorKind::Scripted;
    a.behavior.params =
        Json{{"rules", Json::array({Json{{"step", 0},
                                         {"messages", Json::array({Json{{"to", Json::array({"b"})},
                                                                        {"content", "ping"}}})}},
                                    Json{{"contains", "ping"}, {"echo", true}}})}};
    spec.agents.push_back(a);

    AgentDecl b;
    b.name = "b";
    b.behavior.kind = agents::BehaviorKind::Scripted;
    b.behavior.params = Json{{"rules", Json::array({Json{{"contains", "ping"}, {"echo", true}}})}};
    spec.agents.push_back(b);

    spec.protocol.rounds = rounds;
    spec.horizon = rounds + 2;
    return spec;
}

// Single agent whose run succeeds iff one capability draw succeeds.
ScenarioSpec bernoulliScenario(double p) {
    ScenarioSpec spec;
    spec.name = "bernoulli";
    spec.topology.kind = TopologyKind::SingleAgent;
    AgentDecl worker;
    worker.name = "worker";
    worker.behavior.kind = agents::BehaviorKind::TableStochastic;
    worker.behavior.params =
        Json{{"table", Json{{"task", p}}},
             {"taskTag", "task"},
             {"onSuccess", Json{{"action", Json{{"name", "done"},
                                                {"args", Json{{"set", Json{{"ok", true}}}}}}}}}};
    spec.agents.push_back(worker);
    spec.protocol.rounds = 1;
    spec.horizon = 2;
    spec.milestones.push_back({"done", "ok", "eq", Json(true), true});
    return spec;
}

int countMessagesFrom(const Trace& trace, const AgentId& from) {
    int n = 0;
    for (const auto& e : trace.events) {
        if (const auto* sent = std::get_if<MessageSent>(&e.payload)) {
            if (sent->msg.from == from) ++n;
        }
    }
    return n;
}

} // namespace

TEST_CASE("identical spec and seed produce identical digests") {
    const auto spec = echoPair();
    const auto r1 = runOnce(spec, 7);
    const auto r2 = runOnce(spec, 7);
    CHECK(traceDigest(r1.trace) == traceDigest(r2.trace));
    CHECK(r1.trace.scenarioDigest == scenarioDigest(spec));
}

TEST_CASE("different seeds diverge on a stochastic agent") {
    const auto spec = bernoulliScenario(0.5);
    // Seeds 1 and 2 happen to draw differently; the digests must differ.
    std::string d1, d2;
    std::uint64_t seed2 = 2;
    const auto r1 = runOnce(spec, 1);
    d1 = traceDigest(r1.trace);
    for (; seed2 < 50; ++seed2) {
        const auto r2 = runOnce(spec, seed2);
        d2 = traceDigest(r2.trace);
        if (r2.status != r1.status) break;
    }
    CHECK(d1 != d2);
}

TEST_CASE("horizon zero ends immediately with an empty message log") {
    auto spec = echoPair();
    spec.horizon = 0;
    const auto result = runOnce(spec, 3);
    CHECK((result.status == RunStatus::HorizonExceeded));
    for (const auto& e : result.trace.events) {
        CHECK_FALSE(std::holds_alternative<MessageSent>(e.payload));
    }
    REQUIRE(result.trace.events.size() == 1); // just RunEnded
}

TEST_CASE("messages are delivered one step later and honour the topology") {
    const auto result = runOnce(echoPair(3), 11);
    // a sends at 0; b echoes at 1; a echoes back at 2.
    bool sawAat0 = false, sawBat1 = false, sawAat2 = false;
    for (const auto& e : result.trace.events) {
        if (const auto* sent = std::get_if<MessageSent>(&e.payload)) {
            if (e.step == 0 && sent->msg.from == "a") sawAat0 = true;
            if (e.step == 1 && sent->msg.from == "b") sawBat1 = true;
            if (e.step == 2 && sent->msg.from == "a" && sent->msg.content == "ping") sawAat2 = true;
            const auto allowed = allowedRecipients(echoPair(3).topology, sent->msg.from);
            for (const auto& r : sent->msg.to) CHECK(allowed.count(r));
        }
    }
    CHECK(sawAat0);
    CHECK(sawBat1);
    CHECK(sawAat2);
}

TEST_CASE("event order keys are strictly increasing") {
    const auto result = runOnce(echoPair(5), 13);
    for (std::size_t i = 1; i < result.trace.events.size(); ++i) {
        const auto& prev = result.trace.events[i - 1];
        const auto& cur = result.trace.events[i];
        CHECK((cur.step > prev.step || (cur.step == prev.step && cur.seq > prev.seq)));
    }
}

TEST_CASE("a behaviour evaluation error marks the run Failure with a reason") {
    ScenarioSpec spec = echoPair();
    spec.agents[1].behavior.kind = agents::BehaviorKind::LLMAdapter;
    spec.agents[1].behavior.params = Json::object(); // no transport configured
    const auto result = runOnce(spec, 5);
    CHECK((result.status == RunStatus::Failure));
    CHECK(result.statusReason.find("behavior error (b)") != std::string::npos);
    CHECK(traceDigest(result.trace) == traceDigest(runOnce(spec, 5).trace));
}

TEST_CASE("runOnce rejects invalid specs") {
    ScenarioSpec spec = echoPair();
    spec.topology.edges.insert({"ghost", "a"});
    CHECK_THROWS_AS((void)runOnce(spec, 1), EngineError);
}

TEST_CASE("ensemble failure rate is an exact count ratio with a Wilson interval") {
    // Always-success scenario: N=10 gives p=0 and the documented upper bound.
    const auto spec = bernoulliScenario(1.0);
    const auto ensemble = runEnsemble(spec, 10, 1);
    CHECK(ensemble.failures == 0);
    CHECK(ensemble.failureRate == 0.0);
    CHECK(ensemble.interval.lo == 0.0);
    CHECK(std::abs(ensemble.interval.hi - 0.2775) < 5e-4);

    // Independent oracle: the upper bound is the larger root of
    // (phat - p)^2 = z^2 p(1-p)/n, found by bisection. For phat = 0 the
    // score is negative below the root and positive above it.
    const double z = 1.959963984540054;
    auto score = [&](double p, double phat, double n) {
        return (phat - p) * (phat - p) - z * z * p * (1 - p) / n;
    };
    double lo = 1e-9, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = (lo + hi) / 2;
        if (score(mid, 0.0, 10.0) < 0) lo = mid; else hi = mid;
    }
    CHECK(std::abs(ensemble.interval.hi - hi) < 1e-9);
}

TEST_CASE("wilson interval is defined at n=1 and contains the point estimate") {
    const auto w0 = wilson95(0, 1);
    CHECK(w0.lo == 0.0);
    CHECK(w0.hi > 0.0);
    CHECK(w0.hi < 1.0);
    const auto w1 = wilson95(1, 1);
    CHECK(w1.hi == 1.0);
    for (int n : {1, 5, 50}) {
        for (int f = 0; f <= n; ++f) {
            const auto w = wilson95(f, n);
            const double phat = static_cast<double>(f) / n;
            CHECK(w.lo <= phat + 1e-12);
            CHECK(w.hi >= phat - 1e-12);
        }
    }
    CHECK_THROWS_AS((void)wilson95(0, 0), EngineError);
}

TEST_CASE("ensemble rate converges for a fair capability draw") {
    const auto spec = bernoulliScenario(0.5);
    const auto ensemble = runEnsemble(spec, 10000, 1, nullptr, 4);
    CHECK(std::abs(ensemble.failureRate - 0.5) <= 0.015);
    CHECK(ensemble.runs.size() == 10000);
}

TEST_CASE("parallel ensembles merge identically to sequential ones") {
    const auto spec = bernoulliScenario(0.5);
    const auto seq = runEnsemble(spec, 64, 5, nullptr, 1);
    const auto par = runEnsemble(spec, 64, 5, nullptr, 8);
    REQUIRE(seq.runs.size() == par.runs.size());
    CHECK(seq.failures == par.failures);
    for (std::size_t i = 0; i < seq.runs.size(); ++i) {
        CHECK(traceDigest(seq.runs[i].trace) == traceDigest(par.runs[i].trace));
    }
}

TEST_CASE("replay reproduces stored traces and flags divergence") {
    const auto spec = echoPair(6);
    const auto result = runOnce(spec, 21);

    // Round-trip through the line format, then replay with zero divergence.
    const Trace loaded = traceFromLines(serializeTrace(result.trace));
    const auto replayed = replay(loaded, spec);
    CHECK(traceDigest(replayed.trace) == traceDigest(result.trace));

    // An edited spec no longer matches the trace digest.
    ScenarioSpec edited = spec;
    edited.horizon += 1;
    CHECK_THROWS_WITH_AS((void)replay(loaded, edited), doctest::Contains("scenarioDigest mismatch"),
                         EngineError);

    // Corrupting event 5 is reported at index 5.
    Trace corrupted = result.trace;
    REQUIRE(corrupted.events.size() > 5);
    if (auto* sent = std::get_if<MessageSent>(&corrupted.events[5].payload)) {
        sent->msg.content += "!";
    } else if (auto* internal = std::get_if<AgentInternal>(&corrupted.events[5].payload)) {
        internal->note += "!";
    } else if (auto* action = std::get_if<ActionTaken>(&corrupted.events[5].payload)) {
        action->name += "!";
    } else if (auto* env = std::get_if<EnvChanged>(&corrupted.events[5].payload)) {
        env->key += "!";
    } else {
        corrupted.events[5].seq += 100;
    }
    CHECK_THROWS_WITH_AS((void)replay(corrupted, spec), doctest::Contains("index 5"), EngineError);
}

TEST_CASE("rotating and random orderings are deterministic per seed") {
    ScenarioSpec spec = echoPair(4);
    spec.protocol.ordering = Ordering::Rotating;
    CHECK(traceDigest(runOnce(spec, 9).trace) == traceDigest(runOnce(spec, 9).trace));
    spec.protocol.ordering = Ordering::Random;
    CHECK(traceDigest(runOnce(spec, 9).trace) == traceDigest(runOnce(spec, 9).trace));
}

TEST_CASE("probing an agent mid-run answers without perturbing the main trace") {
    ScenarioSpec spec = echoPair(4);
    // b remembers every ping it answers.
    spec.agents[1].behavior.params =
        Json{{"rules", Json::array({Json{{"contains", "ping"},
                                         {"echo", true},
                                         {"memory", "answered at {step}"}}})}};

    const std::string baseline = traceDigest(runOnce(spec, 33).trace);

    const std::string atZero = probeAgent(spec, 33, 0, "b", "what do you remember?");
    CHECK(atZero.empty()); // empty memory at step 0

    const std::string later = probeAgent(spec, 33, 3, "b", "what do you remember?");
    CHECK(later.find("answered at 1") != std::string::npos);

    CHECK(traceDigest(runOnce(spec, 33).trace) == baseline);
    CHECK_THROWS_AS((void)probeAgent(spec, 33, 0, "ghost", "?"), EngineError);
    CHECK_THROWS_AS((void)probeAgent(spec, 33, 99, "b", "?"), EngineError);
}

TEST_CASE("reflection appends private notes without emitting messages") {
    ScenarioSpec spec = echoPair(3);
    spec.protocol.reflection = true;
    spec.agents[0].behavior.params["rules"].push_back(
        Json{{"phase", "reflection"}, {"memory", "reflected at {step}"}});
    const auto result = runOnce(spec, 2);
    int reflections = 0;
    for (const auto& e : result.trace.events) {
        if (const auto* internal = std::get_if<AgentInternal>(&e.payload)) {
            if (internal->note.rfind("reflected", 0) == 0) ++reflections;
        }
    }
    CHECK(reflections == 3);
    CHECK(countMessagesFrom(result.trace, "a") >= 1);
}

TEST_CASE("majority-vote aggregation writes the consensus env key") {
    ScenarioSpec spec;
    spec.name = "vote";
    spec.topology = swarmTopology({"v1", "v2", "v3"});
    for (const auto& name : {"v1", "v2", "v3"}) {
        AgentDecl a;
        a.name = name;
        a.behavior.kind = agents::BehaviorKind::Contrarian;
        a.behavior.params = Json{{"stance", std::string(name) == "v3" ? "blue" : "red"},
                                 {"emitKind", "Vote"}};
        spec.agents.push_back(a);
    }
    spec.protocol.rounds = 2;
    spec.protocol.aggregation = Aggregation::MajorityVote;
    spec.horizon = 3;
    spec.milestones.push_back({"consensus", "__consensus", "eq", Json("red"), true});
    const auto result = runOnce(spec, 1);
    CHECK((result.status == RunStatus::Success));
    CHECK(result.milestonesHit.count("consensus"));
}

TEST_CASE("milestone hit step is recorded and drives time-to-success") {
    ScenarioSpec spec = bernoulliScenario(1.0);
    spec.protocol.rounds = 4;
    spec.horizon = 8;
    // The capability draw runs every round; success lands at round 0.
    const auto result = runOnce(spec, 3);
    CHECK((result.status == RunStatus::Success));
    REQUIRE(result.milestonesHit.count("done"));
    CHECK(result.milestonesHit.at("done") == 0);
}
