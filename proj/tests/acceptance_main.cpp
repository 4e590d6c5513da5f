// acceptance_main.cpp - the acceptance gate. Eight criteria, one PASS/FAIL
// line each; exits nonzero if any criterion fails. Tolerances are pinned in
// code next to each check.
#include "magrisk/baselines.hpp"
#include "magrisk/engine.hpp"
#include "magrisk/inject.hpp"
#include "magrisk/judge.hpp"
#include "magrisk/metrics.hpp"
#include "magrisk/rng.hpp"
#include "magrisk/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

using namespace magrisk;
using namespace magrisk::core;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name << " - "
              << detail << "\n";
    if (!ok) ++failures;
}

double elapsedSeconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Check {
    bool ok = true;
    std::ostringstream detail;
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "FAILED{" << what << "} ";
        }
    }
};

// --- criterion 1: determinism over random (scenario, seed) pairs -------------

void criterion1() {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    const auto names = scenarios::scenarioNames();
    RandomStream rng(20260810);
    for (int i = 0; i < 100; ++i) {
        const auto& name = names[rng.below(names.size())];
        const std::uint64_t seed = rng.nextU64();
        const auto pkg = scenarios::loadScenario(name);
        const auto first = engine::runOnce(pkg.spec, seed);
        const auto second = engine::runOnce(pkg.spec, seed);
        c.expect(traceDigest(first.trace) == traceDigest(second.trace),
                 name + " seed " + std::to_string(seed));
        if (!c.ok) break;
    }
    const double secs = elapsedSeconds(start);
    c.expect(secs < 60.0, "runtime under 60s");
    c.detail << "100 pairs replayed identically in " << secs << "s";
    report(1, "determinism", c.ok, c.detail.str());
}

// --- criterion 2: golden scenarios -------------------------------------------

void criterion2() {
    Check c;

    { // supply-chain-cascade
        const auto pkg = scenarios::loadScenario("supply-chain-cascade");
        const auto run = engine::runOnce(pkg.spec, pkg.pinnedSeed);
        c.expect(run.status == RunStatus::Failure, "cascade status Failure");
        const auto stats =
            metrics::cascadeStats(run.trace, "chart-misread", pkg.costPerTaintedAction);
        c.expect(stats.agentsReached == 4, "cascade reach 4");
        c.expect(stats.maxChainDepth == 3, "cascade depth 3");
    }
    { // fraud-monoculture
        const auto pkg = scenarios::loadScenario("fraud-monoculture");
        const auto run = engine::runOnce(pkg.spec, pkg.pinnedSeed);
        const auto rs =
            metrics::makeResponseSet(metrics::responsesAt(run.trace, 0, MessageKind::Statement));
        c.expect(metrics::responseEntropy(rs) == 0.0, "monoculture entropy 0.0");
        c.expect(metrics::pairwiseSimilarity(rs).meanOffDiagonal == 1.0,
                 "monoculture similarity 1.0");
    }
    { // strategist-conformity
        const auto pkg = scenarios::loadScenario("strategist-conformity");
        const auto trials = scenarios::conformityTrials(5, pkg.pinnedSeed);
        const auto result = metrics::abandonmentRate(trials);
        c.expect(result.ratePerPressureSize.at(1) == 0.0, "curve(1)=0");
        c.expect(result.ratePerPressureSize.at(2) == 0.0, "curve(2)=0");
        c.expect(result.ratePerPressureSize.at(3) == 1.0, "curve(3)=1");
        c.expect(result.ratePerPressureSize.at(4) == 1.0, "curve(4)=1");
        c.expect(result.ratePerPressureSize.at(5) == 1.0, "curve(5)=1");
        c.expect(result.conformityThreshold && *result.conformityThreshold == 3, "threshold 3");
    }
    { // inventory-cashflow
        const auto pkg = scenarios::loadScenario("inventory-cashflow");
        const auto run = engine::runOnce(pkg.spec, pkg.pinnedSeed);
        const auto stats = metrics::coordinationStats(run.trace);
        c.expect(stats.impasseRounds == 2, "two impasses");
        c.expect(std::abs(stats.conflictFrequency - 2.0 / 6.0) < 1e-12, "conflictFrequency 2/6");
        c.expect(!metrics::isParetoOptimal(*pkg.outcomeSpace, *pkg.achievedOutcomeLabel),
                 "equilibrium Pareto-suboptimal");
    }
    { // power-grid-ambiguity
        const auto pkg = scenarios::loadScenario("power-grid-ambiguity");
        const auto run = engine::runOnce(pkg.spec, pkg.pinnedSeed);
        const auto messages = metrics::messagesFromTrace(run.trace);
        c.expect(judge::detectIgnoredRequests(messages, 2).size() == 1, "one ignored request");
        judge::ClassifyConfig config;
        config.ruleset = judge::rulesetFromText(pkg.rulesetText);
        int ambiguous = 0;
        for (const auto& label : judge::classify(config, messages)) {
            if (label.category == "AmbiguousTerm") ++ambiguous;
        }
        c.expect(ambiguous == 1, "ambiguity flag raised");
        c.expect(run.status == RunStatus::Failure, "secondary blackout failure");
    }
    { // retail-tom
        const auto pkg = scenarios::loadScenario("retail-tom");
        const auto run = engine::runOnce(pkg.spec, pkg.pinnedSeed);
        const auto score = metrics::tomScore(run.trace);
        c.expect(score.hasData, "tom has data");
        c.expect(score.overallAccuracy == 0.25, "tom overall accuracy 0.25");
        c.expect(score.accuracyPerAgent.at("sales") == 0.5, "sales accuracy 0.5");
        c.expect(score.accuracyPerAgent.at("inventory") == 0.0, "inventory accuracy 0");
        c.expect(score.accuracyPerAgent.at("pricing") == 0.0, "pricing accuracy 0");
        c.expect(score.brier && std::abs(*score.brier - 0.32) < 1e-12, "brier 0.32");
    }
    c.detail << "all six scenario oracles reproduced";
    report(2, "golden scenarios", c.ok, c.detail.str());
}

// --- criterion 3: metric oracles ----------------------------------------------

std::set<std::string> frontierBruteForce(const metrics::OutcomeSpace& space) {
    std::set<std::string> out;
    for (std::size_t i = 0; i < space.outcomes.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < space.outcomes.size() && !dominated; ++j) {
            if (i == j) continue;
            bool geAll = true, gtOne = false;
            for (std::size_t k = 0; k < space.outcomes[i].utilities.size(); ++k) {
                if (space.outcomes[j].utilities[k] < space.outcomes[i].utilities[k]) geAll = false;
                if (space.outcomes[j].utilities[k] > space.outcomes[i].utilities[k]) gtOne = true;
            }
            dominated = geAll && gtOne;
        }
        if (!dominated) out.insert(space.outcomes[i].label);
    }
    return out;
}

void criterion3() {
    Check c;

    // Pareto: 1,000 random instances, n <= 200, agents <= 5, zero mismatches.
    RandomStream rng(333);
    int mismatches = 0;
    for (int instance = 0; instance < 1000; ++instance) {
        metrics::OutcomeSpace space;
        const int n = 1 + static_cast<int>(rng.below(200));
        const int agents = 2 + static_cast<int>(rng.below(4));
        for (int i = 0; i < n; ++i) {
            metrics::Outcome o;
            o.label = "o" + std::to_string(i);
            for (int a = 0; a < agents; ++a) {
                o.utilities.push_back(static_cast<double>(rng.below(12)));
            }
            space.outcomes.push_back(std::move(o));
        }
        const auto fast = metrics::paretoFrontier(space);
        if (std::set<std::string>(fast.begin(), fast.end()) != frontierBruteForce(space)) {
            ++mismatches;
        }
    }
    c.expect(mismatches == 0, "pareto mismatches=" + std::to_string(mismatches));

    // Entropy within 1e-9 of the hand formula on constructed sets.
    auto entropyOf = [](const std::vector<std::string>& texts) {
        std::vector<std::pair<AgentId, std::string>> items;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            items.emplace_back("a" + std::to_string(i), texts[i]);
        }
        return metrics::responseEntropy(metrics::makeResponseSet(items));
    };
    auto handEntropy = [](const std::vector<int>& clusterSizes) {
        double n = 0;
        for (const int s : clusterSizes) n += s;
        double h = 0;
        for (const int s : clusterSizes) h -= (s / n) * std::log2(s / n);
        return h;
    };
    c.expect(std::abs(entropyOf({"x", "x", "x"}) - handEntropy({3})) < 1e-9, "entropy {3}");
    c.expect(std::abs(entropyOf({"aa bb", "aa bb", "cc dd", "ee ff"}) - handEntropy({2, 1, 1})) <
                 1e-9,
             "entropy {2,1,1}");
    c.expect(std::abs(entropyOf({"p q", "p q", "r s", "r s", "t u", "t u"}) -
                      handEntropy({2, 2, 2})) < 1e-9,
             "entropy {2,2,2}");
    c.expect(std::abs(entropyOf({"one a", "two b", "three c", "four d"}) -
                      handEntropy({1, 1, 1, 1})) < 1e-9,
             "entropy {1,1,1,1}");

    // Cosine matrix within 1e-9 of brute-force dot products.
    const std::vector<std::string> texts = {
        "reroute freight through the northern depot", "northern depot is saturated",
        "hold freight until saturation clears", "escalate to the duty planner",
        "duty planner approved the reroute"};
    std::vector<std::pair<AgentId, std::string>> items;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        items.emplace_back("a" + std::to_string(i), texts[i]);
    }
    const auto rs = metrics::makeResponseSet(items);
    const auto sim = metrics::pairwiseSimilarity(rs);
    double worst = 0.0;
    for (std::size_t i = 0; i < rs.items.size(); ++i) {
        for (std::size_t j = 0; j < rs.items.size(); ++j) {
            double dot = 0, ni = 0, nj = 0;
            for (std::size_t k = 0; k < rs.items[i].vector.size(); ++k) {
                dot += rs.items[i].vector[k] * rs.items[j].vector[k];
                ni += rs.items[i].vector[k] * rs.items[i].vector[k];
                nj += rs.items[j].vector[k] * rs.items[j].vector[k];
            }
            worst = std::max(worst, std::abs(sim.matrix[i][j] - dot / std::sqrt(ni * nj)));
        }
    }
    c.expect(worst < 1e-9, "cosine vs brute force");

    c.detail << "pareto 1000/1000, entropy and cosine within 1e-9";
    report(3, "metric oracles", c.ok, c.detail.str());
}

// --- criterion 4: statistical convergence -------------------------------------

void criterion4() {
    const auto start = std::chrono::steady_clock::now();
    Check c;

    { // Sycophant(q=0.3) abandonment at N=10,000 within +-0.02 of 0.30.
        agents::BehaviorSpec spec{agents::BehaviorKind::Sycophant,
                                  Json{{"stance", "X"}, {"switchProbability", 0.3}}};
        agents::Observation obs;
        obs.step = 1;
        obs.envView["__peers"] = Json::array({"p1", "p2", "p3"});
        for (int p = 1; p <= 3; ++p) {
            Message m;
            m.from = "p" + std::to_string(p);
            m.to = {"subject"};
            m.content = "Y";
            m.kind = MessageKind::Statement;
            obs.inbox.push_back(std::move(m));
        }
        RandomStream root(8881);
        std::vector<metrics::AbandonmentTrial> trials;
        for (int i = 0; i < 10000; ++i) {
            agents::AgentMemory memory;
            auto stream = root.child(static_cast<std::uint64_t>(i));
            const auto decision = agents::decide(spec, memory, obs, stream);
            trials.push_back({"X", true, 3, decision.memoryAppend.empty() ? "X" : "Y"});
        }
        const auto result = metrics::abandonmentRate(trials);
        c.expect(std::abs(result.overallRate - 0.30) <= 0.02,
                 "sycophant rate " + std::to_string(result.overallRate));
    }

    { // Uniform ToM predictor, k=4: accuracy within +-0.02 of 0.25.
        RandomStream rng(4242);
        const std::vector<std::string> labels = {"up", "down", "left", "right"};
        Trace trace;
        trace.scenarioDigest = "synthetic";
        trace.seed = 0;
        int seq = 0;
        for (int i = 0; i < 10000; ++i) {
            const int step = 2 * i;
            Message m;
            m.step = step;
            m.from = "watcher";
            m.to = {"actor"};
            m.content = labels[rng.below(4)];
            m.kind = MessageKind::Prediction;
            trace.events.push_back(Event{step, seq++, MessageSent{m}});
            trace.events.push_back(
                Event{step + 1, seq++, ActionTaken{"actor", labels[rng.below(4)], Json::object(), {}}});
        }
        trace.events.push_back(Event{20000, seq, RunEnded{RunStatus::Success, ""}});
        const auto score = metrics::tomScore(trace);
        c.expect(score.hasData && std::abs(score.overallAccuracy - 0.25) <= 0.02,
                 "tom accuracy " + std::to_string(score.overallAccuracy));
    }

    { // Bernoulli capability rates within 3-sigma binomial bands at N=10,000.
        for (const double p : {0.1, 0.5, 0.9}) {
            const Json table{{"t", p}};
            RandomStream root(static_cast<std::uint64_t>(p * 1000) + 17);
            int successes = 0;
            const int n = 10000;
            for (int i = 0; i < n; ++i) {
                auto stream = root.child(static_cast<std::uint64_t>(i));
                if (agents::capabilityLookup(table, "t", stream)) ++successes;
            }
            const double rate = static_cast<double>(successes) / n;
            const double sigma = std::sqrt(p * (1 - p) / n);
            c.expect(std::abs(rate - p) <= 3 * sigma,
                     "capability p=" + std::to_string(p) + " rate=" + std::to_string(rate));
        }
    }

    const double secs = elapsedSeconds(start);
    c.expect(secs < 120.0, "suite under 2 minutes");
    c.detail << "convergence bands hold in " << secs << "s";
    report(4, "statistical convergence", c.ok, c.detail.str());
}

// --- criterion 5: judge calibration --------------------------------------------

void criterion5() {
    Check c;
    judge::ClassifyConfig ruleBased;
    ruleBased.ruleset = judge::defaultRuleset();

    auto makeMessage = [](const std::string& content) {
        Message m;
        m.from = "a";
        m.to = {"b"};
        m.content = content;
        m.kind = MessageKind::Statement;
        return m;
    };

    { // Self-labelled corpus: accuracy 1.0, kappa 1.0.
        std::vector<std::pair<Message, std::string>> annotated;
        for (int i = 0; i < 400; ++i) {
            const std::string content = i % 2 == 0
                                            ? "i agree with option " + std::to_string(i)
                                            : "however, option " + std::to_string(i) + " is weak";
            const auto label = judge::classify(ruleBased, {makeMessage(content)})[0].category;
            annotated.emplace_back(makeMessage(content), label);
        }
        const auto report5 = judge::calibrate(ruleBased, annotated);
        c.expect(report5.accuracy == 1.0, "self-labelled accuracy 1.0");
        c.expect(report5.kappaDefined && std::abs(report5.kappa - 1.0) < 1e-12,
                 "self-labelled kappa 1.0");
    }

    { // 10% flipped corpus: accuracy 0.90 +- 0.01.
        std::vector<std::pair<Message, std::string>> annotated;
        for (int i = 0; i < 1000; ++i) {
            const std::string content = i % 2 == 0
                                            ? "i agree with option " + std::to_string(i)
                                            : "however, option " + std::to_string(i) + " is weak";
            std::string gold = judge::classify(ruleBased, {makeMessage(content)})[0].category;
            if (i % 10 == 0) {
                gold = gold == judge::category::Agreement ? judge::category::Critique
                                                          : judge::category::Agreement;
            }
            annotated.emplace_back(makeMessage(content), gold);
        }
        const auto report5 = judge::calibrate(ruleBased, annotated);
        c.expect(std::abs(report5.accuracy - 0.90) <= 0.01,
                 "flipped accuracy " + std::to_string(report5.accuracy));
    }

    { // Random labeller over 2 balanced classes: kappa within +-0.03 of 0.
        class HashJudge final : public judge::JudgeTransport {
        public:
            std::string classifyText(const std::string& content) override {
                return fnv1a64(content) % 2 == 0 ? judge::category::Agreement
                                                 : judge::category::Critique;
            }
        } transport;
        judge::ClassifyConfig adapter;
        adapter.kind = judge::JudgeKind::ExternalAdapter;
        adapter.adapter = &transport;
        RandomStream rng(555);
        std::vector<std::pair<Message, std::string>> annotated;
        for (int i = 0; i < 10000; ++i) {
            const std::string gold =
                rng.bernoulli(0.5) ? judge::category::Agreement : judge::category::Critique;
            annotated.emplace_back(makeMessage("utterance " + std::to_string(i)), gold);
        }
        const auto report5 = judge::calibrate(adapter, annotated);
        c.expect(report5.kappaDefined && std::abs(report5.kappa) <= 0.03,
                 "random kappa " + std::to_string(report5.kappa));
    }

    c.detail << "calibration arithmetic holds at all three operating points";
    report(5, "judge calibration", c.ok, c.detail.str());
}

// --- criterion 6: injection identity --------------------------------------------

std::string eventsOnly(const Trace& trace) {
    std::string out;
    for (const auto& e : trace.events) out += canonicalDump(toJson(e)) + "\n";
    return out;
}

void criterion6() {
    Check c;

    // Empty injection list: bitwise-identical event streams across 50 seeds
    // against the same scenario carrying a never-firing injection.
    auto base = scenarios::loadScenario("supply-chain-cascade").spec;
    base.injections.clear();
    auto armed = base;
    inject::PerturbationSpec never;
    never.label = "never";
    never.trigger.kind = inject::TriggerKind::AtStep;
    never.trigger.step = 9999;
    never.action.kind = inject::ActionKind::DeadlinePressure;
    never.action.params = Json{{"horizon", 1}};
    armed.injections.push_back(never);

    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto a = engine::runOnce(base, seed);
        const auto b = engine::runOnce(armed, seed);
        if (eventsOnly(a.trace) != eventsOnly(b.trace)) {
            c.expect(false, "identity at seed " + std::to_string(seed));
            break;
        }
    }

    // DropChannel over the full horizon: zero delivered messages on the cut
    // channel, and every send shows up as a drop.
    auto cutSpec = base;
    inject::PerturbationSpec cut;
    cut.label = "cut";
    cut.trigger.kind = inject::TriggerKind::AtStep;
    cut.trigger.step = 0;
    cut.action.kind = inject::ActionKind::DropChannel;
    cut.action.params = Json{{"from", "demand"}, {"to", "procurement"}, {"duration", cutSpec.horizon}};
    cutSpec.injections.push_back(cut);
    const auto cutRun = engine::runOnce(cutSpec, 42);
    int sent = 0, dropped = 0;
    for (const auto& e : cutRun.trace.events) {
        if (const auto* s = std::get_if<MessageSent>(&e.payload)) {
            if (s->msg.from == "demand" && s->msg.to.count("procurement")) ++sent;
        }
        if (const auto* d = std::get_if<MessageDropped>(&e.payload)) {
            if (d->msg.from == "demand" && d->msg.to.count("procurement")) ++dropped;
        }
    }
    c.expect(sent == 0, "no delivered messages on the cut channel");
    c.expect(dropped == 1, "the send is recorded as a drop");

    c.detail << "identity over 50 seeds; full-horizon cut delivers nothing";
    report(6, "injection identity", c.ok, c.detail.str());
}

// --- criterion 7: safety factor property grid -----------------------------------

void criterion7() {
    Check c;
    // 1,000-point grid: 50 p values x 20 n values.
    std::vector<double> ps, ns;
    for (int i = 0; i < 50; ++i) ps.push_back(i / 49.0);
    for (int j = 0; j < 20; ++j) ns.push_back(1.0 + j * 0.75);

    for (const double p : ps) {
        for (const double n : ns) {
            const double v = metrics::applySafetyFactor(p, n);
            if (p * n <= 1.0) {
                if (std::abs(v - p * n) > 1e-15) {
                    c.expect(false, "exactness below clamp at p=" + std::to_string(p));
                }
            } else if (v != 1.0) {
                c.expect(false, "clamp at p=" + std::to_string(p) + " n=" + std::to_string(n));
            }
            if (v < 0.0 || v > 1.0) c.expect(false, "range");
        }
    }
    // Monotonicity in both arguments over adjacent grid points.
    for (std::size_t i = 1; i < ps.size(); ++i) {
        for (const double n : ns) {
            if (metrics::applySafetyFactor(ps[i], n) < metrics::applySafetyFactor(ps[i - 1], n)) {
                c.expect(false, "monotone in p");
            }
        }
    }
    for (const double p : ps) {
        for (std::size_t j = 1; j < ns.size(); ++j) {
            if (metrics::applySafetyFactor(p, ns[j]) < metrics::applySafetyFactor(p, ns[j - 1])) {
                c.expect(false, "monotone in n");
            }
        }
    }
    c.detail << "exactness, clamping and monotonicity on a 1000-point grid";
    report(7, "safety factor properties", c.ok, c.detail.str());
}

// --- criterion 8: baseline pairing ------------------------------------------------

void criterion8() {
    Check c;
    ScenarioSpec spec;
    spec.name = "paired";
    spec.topology.kind = TopologyKind::SingleAgent;
    AgentDecl worker;
    worker.name = "worker";
    worker.behavior.kind = agents::BehaviorKind::TableStochastic;
    worker.behavior.params =
        Json{{"table", Json{{"t", 0.5}}},
             {"taskTag", "t"},
             {"onSuccess", Json{{"action", Json{{"name", "done"},
                                                {"args", Json{{"set", Json{{"ok", true}}}}}}}}}};
    spec.agents.push_back(worker);
    spec.protocol.rounds = 1;
    spec.horizon = 2;
    spec.milestones.push_back({"done", "ok", "eq", Json(true), true});

    baselines::BaselineInputs inputs;
    const auto identical = spec;
    inputs.decomposedSpec = &identical;
    const auto report8 =
        baselines::runBaseline(baselines::BaselineKind::SingleAgentDecomposed, spec, 100, inputs, 9);
    c.expect(report8.delta.has_value(), "delta computed");
    if (report8.delta) {
        c.expect(report8.delta->meanDelta == 0.0, "mean delta exactly 0");
        for (const int d : report8.delta->perSeed) {
            if (d != 0) {
                c.expect(false, "per-seed delta nonzero");
                break;
            }
        }
    }
    c.detail << "behaviourally identical pair gives exactly zero paired delta";
    report(8, "baseline pairing", c.ok, c.detail.str());
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
