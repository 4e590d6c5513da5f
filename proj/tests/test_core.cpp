// test_core.cpp - domain types, validation, topology queries, trace digests.
#include <doctest.h>

#include "magrisk/core.hpp"
#include "magrisk/digest.hpp"
#include "magrisk/rng.hpp"

#include <algorithm>

using namespace magrisk;
using namespace magrisk::core;

namespace {

ScenarioSpec minimalSpec(TopologyKind kind, int agentCount) {
    ScenarioSpec spec;
    spec.name = "t";
    std::vector<AgentId> names;
    for (int i = 0; i < agentCount; ++i) names.push_back("a" + std::to_string(i));
    switch (kind) {
    case TopologyKind::SingleAgent:
        spec.topology.kind = TopologyKind::SingleAgent;
        break;
    case TopologyKind::Orchestrator:
        spec.topology = starTopology(names.front(),
                                     std::vector<AgentId>(names.begin() + 1, names.end()));
        break;
    case TopologyKind::Swarm:
        spec.topology = swarmTopology(names);
        break;
    case TopologyKind::TaskForce:
        spec.topology = chainTopology(names);
        break;
    }
    for (const auto& n : names) {
        AgentDecl a;
        a.name = n;
        a.behavior.kind = agents::BehaviorKind::Scripted;
        a.behavior.params = Json{{"rules", Json::array()}};
        spec.agents.push_back(std::move(a));
    }
    spec.protocol.rounds = 2;
    spec.horizon = 4;
    return spec;
}

bool hasViolationAt(const std::vector<Violation>& vs, const std::string& pathSub) {
    return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) {
        return v.path.find(pathSub) != std::string::npos;
    });
}

Trace endedTrace(std::uint64_t seed) {
    Trace t;
    t.scenarioDigest = "d";
    t.seed = seed;
    t.events.push_back(Event{0, 0, RunEnded{RunStatus::Success, "ok"}});
    return t;
}

} // namespace

TEST_CASE("sha256 matches the published test vector") {
    CHECK(sha256Hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256Hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("random streams are deterministic and split independently") {
    RandomStream a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.nextU64() == b.nextU64());

    RandomStream parent(11);
    const auto c1 = parent.child("agent:x");
    auto c1again = RandomStream(11).child("agent:x");
    RandomStream c1mut = c1;
    CHECK(c1mut.nextU64() == c1again.nextU64());

    // Sibling draws are independent of each other's existence.
    auto siblingFirst = RandomStream(11).child("agent:y");
    auto other = RandomStream(11);
    (void)other.child("agent:z");
    auto siblingSecond = other.child("agent:y");
    CHECK(siblingFirst.nextU64() == siblingSecond.nextU64());

    RandomStream u(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    RandomStream d(5);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(d.bernoulli(0.0));
        CHECK(d.bernoulli(1.0));
    }
}

TEST_CASE("validate flags a hub-less orchestrator") {
    ScenarioSpec spec = minimalSpec(TopologyKind::Orchestrator, 3);
    spec.topology.hub.reset();
    const auto violations = validate(spec);
    CHECK(hasViolationAt(violations, "topology.hub"));
}

TEST_CASE("validate flags a two-agent single-agent setting") {
    ScenarioSpec spec = minimalSpec(TopologyKind::SingleAgent, 1);
    AgentDecl extra;
    extra.name = "extra";
    extra.behavior.kind = agents::BehaviorKind::Scripted;
    spec.agents.push_back(extra);
    CHECK(hasViolationAt(validate(spec), "agents"));
}

TEST_CASE("a well-formed three-agent swarm validates cleanly") {
    const ScenarioSpec spec = minimalSpec(TopologyKind::Swarm, 3);
    CHECK(validate(spec).empty());
}

TEST_CASE("validate is idempotent and pure") {
    ScenarioSpec spec = minimalSpec(TopologyKind::Orchestrator, 3);
    spec.topology.hub.reset();
    const Json before = toJson(spec);
    const auto first = validate(spec);
    const auto second = validate(spec);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].path == second[i].path);
        CHECK(first[i].message == second[i].message);
    }
    CHECK(canonicalDump(before) == canonicalDump(toJson(spec)));
}

TEST_CASE("validate catches asymmetric swarm edges, self loops and bad milestones") {
    ScenarioSpec spec = minimalSpec(TopologyKind::Swarm, 3);
    spec.topology.edges.erase({"a1", "a0"});
    CHECK(hasViolationAt(validate(spec), "topology.edges"));

    ScenarioSpec loop = minimalSpec(TopologyKind::TaskForce, 2);
    loop.topology.edges.insert({"a0", "a0"});
    CHECK(hasViolationAt(validate(loop), "topology.edges"));

    ScenarioSpec bad = minimalSpec(TopologyKind::Swarm, 2);
    bad.milestones.push_back({"m", "k", "weird-op", Json(1), true});
    CHECK(hasViolationAt(validate(bad), "milestones[0].op"));

    ScenarioSpec shortHorizon = minimalSpec(TopologyKind::Swarm, 2);
    shortHorizon.horizon = 1; // rounds is 2
    CHECK(hasViolationAt(validate(shortHorizon), "horizon"));

    ScenarioSpec zeroHorizon = minimalSpec(TopologyKind::Swarm, 2);
    zeroHorizon.horizon = 0; // degenerate budget is allowed
    CHECK_FALSE(hasViolationAt(validate(zeroHorizon), "horizon"));
}

TEST_CASE("allowedRecipients on a star") {
    const auto topo = starTopology("H", {"A", "B"});
    CHECK(allowedRecipients(topo, "A") == std::set<AgentId>{"H"});
    CHECK(allowedRecipients(topo, "H") == std::set<AgentId>{"A", "B"});
}

TEST_CASE("allowedRecipients on a symmetric swarm of four") {
    const auto topo = swarmTopology({"a", "b", "c", "d"});
    CHECK(allowedRecipients(topo, "b") == std::set<AgentId>{"a", "c", "d"});
}

TEST_CASE("allowedRecipients rejects unknown senders") {
    const auto topo = starTopology("H", {"A"});
    CHECK_THROWS_AS((void)allowedRecipients(topo, "ghost"), SpecError);
}

TEST_CASE("trace digests are stable, seed-sensitive and require termination") {
    const Trace t1 = endedTrace(1);
    CHECK(traceDigest(t1) == traceDigest(endedTrace(1)));
    CHECK(traceDigest(t1) != traceDigest(endedTrace(2)));

    Trace unterminated;
    unterminated.scenarioDigest = "d";
    unterminated.seed = 1;
    CHECK_THROWS_AS((void)traceDigest(unterminated), SpecError);

    Trace doubleEnded = endedTrace(1);
    doubleEnded.events.push_back(Event{1, 1, RunEnded{RunStatus::Failure, "again"}});
    CHECK_THROWS_AS((void)traceDigest(doubleEnded), SpecError);
}

TEST_CASE("trace serialisation round-trips byte-identically") {
    Trace t;
    t.scenarioDigest = "digest";
    t.seed = 99;
    Message m;
    m.step = 0;
    m.from = "a";
    m.to = {"b"};
    m.content = "hello";
    m.kind = MessageKind::Request;
    m.taint = {"label"};
    t.events.push_back(Event{0, 0, MessageSent{m}});
    t.events.push_back(Event{0, 1, ActionTaken{"a", "act", Json{{"set", Json{{"k", 1}}}}, {}}});
    t.events.push_back(Event{1, 2, EnvChanged{"k", Json(1), {"label"}}});
    t.events.push_back(Event{1, 3, MilestoneReached{"m"}});
    t.events.push_back(Event{1, 4, InjectionFired{"label", "CorruptMessage", "a", Json::object()}});
    t.events.push_back(Event{1, 5, AgentInternal{"a", "note", 2}});
    t.events.push_back(Event{2, 6, RunEnded{RunStatus::HorizonExceeded, "cap"}});

    const std::string text = serializeTrace(t);
    const Trace back = traceFromLines(text);
    CHECK(serializeTrace(back) == text);
    CHECK(traceDigest(back) == traceDigest(t));
}

TEST_CASE("scenario specs round-trip through canonical JSON") {
    for (const auto kind : {TopologyKind::SingleAgent, TopologyKind::Orchestrator,
                            TopologyKind::Swarm, TopologyKind::TaskForce}) {
        ScenarioSpec spec = minimalSpec(kind, kind == TopologyKind::SingleAgent ? 1 : 3);
        spec.protocol.ordering = Ordering::Rotating;
        spec.protocol.commModel = CommModel::Broadcast;
        spec.protocol.aggregation = Aggregation::MajorityVote;
        spec.protocol.reflection = true;
        spec.environment.params = Json{{"initial", Json{{"x", 1}}}};
        spec.milestones.push_back({"m", "x", "ge", Json(2), true});
        inject::PerturbationSpec inj;
        inj.label = "cut";
        inj.trigger.kind = inject::TriggerKind::AfterStep;
        inj.trigger.step = 1;
        inj.action.kind = inject::ActionKind::DropChannel;
        inj.action.params = Json{{"from", "a0"}, {"to", "a1"}, {"duration", 2}};
        inj.repeating = true;
        inj.probability = 0.5;
        if (kind != TopologyKind::SingleAgent) spec.injections.push_back(inj);

        const Json j = toJson(spec);
        const ScenarioSpec back = scenarioFromJson(j);
        CHECK(canonicalDump(toJson(back)) == canonicalDump(j));
        CHECK(scenarioDigest(back) == scenarioDigest(spec));
    }
}

TEST_CASE("the default failure map follows the canonical-setting exposure table") {
    const auto single = defaultFailureMap(TopologyKind::SingleAgent);
    CHECK(single.size() == 1);
    CHECK((single.at(FailureMode::CascadingReliability) == Exposure::High));

    const auto orchestrator = defaultFailureMap(TopologyKind::Orchestrator);
    CHECK(orchestrator.size() == 6);
    CHECK((orchestrator.at(FailureMode::MonocultureCollapse) == Exposure::High));
    CHECK((orchestrator.at(FailureMode::ConformityBias) == Exposure::Exposed));
    CHECK((orchestrator.at(FailureMode::MixedMotiveDynamics) == Exposure::Exposed));

    const auto swarm = defaultFailureMap(TopologyKind::Swarm);
    CHECK((swarm.at(FailureMode::ConformityBias) == Exposure::High));
    CHECK((swarm.at(FailureMode::MixedMotiveDynamics) == Exposure::Exposed));

    const auto taskforce = defaultFailureMap(TopologyKind::TaskForce);
    CHECK(taskforce.size() == 6);
    for (const auto& [mode, exposure] : taskforce) CHECK((exposure == Exposure::High));
}

TEST_CASE("config parse errors carry line and column") {
    try {
        (void)parseJson("{\n  \"a\": oops\n}", "cfg");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column > 0);
    }
}
