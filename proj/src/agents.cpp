// agents.cpp - built-in behaviours. All stochasticity flows from the caller's
// stream; no behaviour reads a clock or ambient randomness.
#include "magrisk/agents.hpp"

#include <algorithm>
#include <sstream>

namespace magrisk::agents {

void remember(AgentMemory& memory, int step, const std::string& text) {
    memory.entries.emplace_back(step, text);
    if (memory.capacity >= 0) {
        while (memory.entries.size() > static_cast<std::size_t>(memory.capacity)) {
            memory.entries.erase(memory.entries.begin());
        }
    }
}

AgentMemory truncateContext(const AgentMemory& memory, int budget) {
    if (budget < 0) throw BehaviorError("truncateContext: budget must be >= 0");
    AgentMemory out = memory;
    if (out.entries.size() > static_cast<std::size_t>(budget)) {
        out.entries.erase(out.entries.begin(),
                          out.entries.end() - static_cast<std::ptrdiff_t>(budget));
    }
    return out;
}

std::string memoryDigest(const AgentMemory& memory) {
    std::string out;
    for (const auto& [step, text] : memory.entries) {
        if (!out.empty()) out += '\n';
        out += text;
    }
    return out;
}

bool capabilityLookup(const Json& table, const std::string& taskTag, RandomStream& rand,
                      std::optional<double> defaultP) {
    double p = 0.0;
    if (table.contains(taskTag)) {
        p = table[taskTag].get<double>();
    } else if (defaultP) {
        p = *defaultP;
    } else {
        throw BehaviorError("capabilityLookup: no probability for tag '" + taskTag + "' and no default");
    }
    if (p < 0.0 || p > 1.0) throw BehaviorError("capabilityLookup: probability out of [0,1]");
    return rand.bernoulli(p);
}

namespace {

std::vector<std::string> peersOf(const Observation& obs) {
    std::vector<std::string> peers;
    auto it = obs.envView.find("__peers");
    if (it != obs.envView.end() && it->second.is_array()) {
        for (const auto& p : it->second) peers.push_back(p.get<std::string>());
    }
    return peers;
}

bool inReflection(const Observation& obs) {
    auto it = obs.envView.find("__phase");
    return it != obs.envView.end() && it->second == "reflection";
}

const core::Message* probeMessage(const Observation& obs) {
    for (const auto& m : obs.inbox) {
        if (m.from == kProbeSender) return &m;
    }
    return nullptr;
}

std::string substitute(std::string text, const Observation& obs, const AgentMemory& memory,
                       const core::Message* matched) {
    auto replaceAll = [&](const std::string& what, const std::string& with) {
        std::size_t pos = 0;
        while ((pos = text.find(what, pos)) != std::string::npos) {
            text.replace(pos, what.size(), with);
            pos += with.size();
        }
    };
    replaceAll("{step}", std::to_string(obs.step));
    replaceAll("{memory}", memoryDigest(memory));
    if (matched) {
        replaceAll("{content}", matched->content);
        replaceAll("{from}", matched->from);
    }
    return text;
}

core::MessageKind kindOrDefault(const Json& j, core::MessageKind fallback) {
    if (j.contains("kind")) return core::messageKindFromString(j["kind"].get<std::string>());
    return fallback;
}

// Effect blocks are shared between Scripted rules and TableStochastic
// outcome branches.
void applyEffects(const Json& effects, const Observation& obs, const AgentMemory& memory,
                  const core::Message* matched, AgentDecision& d) {
    std::set<std::string> taint;
    if (effects.contains("taintLabel")) taint.insert(effects["taintLabel"].get<std::string>());

    auto emit = [&](std::set<std::string> to, std::string content, core::MessageKind kind) {
        core::Message m;
        m.to = std::move(to);
        m.content = substitute(std::move(content), obs, memory, matched);
        m.kind = kind;
        m.taint = taint;
        d.messages.push_back(std::move(m));
    };

    if (effects.contains("messages")) {
        for (const auto& spec : effects["messages"]) {
            std::set<std::string> to;
            for (const auto& r : spec.value("to", Json::array())) to.insert(r.get<std::string>());
            emit(std::move(to), spec.value("content", ""), kindOrDefault(spec, core::MessageKind::Statement));
        }
    }
    if (effects.contains("reply") && matched) {
        const auto& spec = effects["reply"];
        emit({matched->from}, spec.value("content", "{content}"),
             kindOrDefault(spec, core::MessageKind::Response));
    }
    if (effects.value("echo", false) && matched) {
        emit({matched->from}, matched->content, core::MessageKind::Response);
    }
    if (effects.contains("forward") && matched) {
        const auto& spec = effects["forward"];
        std::set<std::string> to;
        for (const auto& r : spec.value("to", Json::array())) to.insert(r.get<std::string>());
        emit(std::move(to),
             spec.value("prefix", "") + matched->content + spec.value("suffix", ""),
             kindOrDefault(spec, core::MessageKind::Statement));
    }
    if (effects.contains("action")) {
        EnvAction a;
        a.name = effects["action"].value("name", "act");
        a.args = effects["action"].value("args", Json::object());
        d.action = std::move(a);
    }
    if (effects.contains("predictions")) {
        for (const auto& [about, label] : effects["predictions"].items()) {
            d.prediction[about] = label.get<std::string>();
        }
    }
    if (effects.contains("memory")) {
        const std::string text = substitute(effects["memory"].get<std::string>(), obs, memory, matched);
        d.memoryAppend = d.memoryAppend.empty() ? text : d.memoryAppend + "\n" + text;
    }
}

AgentDecision decideScripted(const BehaviorSpec& b, const AgentMemory& memory, const Observation& obs) {
    AgentDecision d;
    if (const core::Message* probe = probeMessage(obs)) {
        core::Message reply;
        reply.to = {kProbeSender};
        reply.kind = core::MessageKind::Response;
        reply.content = b.params.contains("probeAnswer")
                            ? substitute(b.params["probeAnswer"].get<std::string>(), obs, memory, probe)
                            : memoryDigest(memory);
        d.messages.push_back(std::move(reply));
        return d;
    }
    const bool reflecting = inReflection(obs);
    for (const auto& rule : b.params.value("rules", Json::array())) {
        if (rule.value("phase", "") == "reflection") {
            if (!reflecting) continue;
        } else if (reflecting) {
            continue;
        }
        if (rule.contains("step") && rule["step"].get<int>() != obs.step) continue;
        const core::Message* matched = nullptr;
        if (rule.contains("contains") || rule.contains("fromAgent")) {
            const std::string needle = rule.value("contains", "");
            const std::string fromAgent = rule.value("fromAgent", "");
            for (const auto& m : obs.inbox) {
                if (m.from == kProbeSender) continue;
                if (!needle.empty() && m.content.find(needle) == std::string::npos) continue;
                if (!fromAgent.empty() && m.from != fromAgent) continue;
                matched = &m;
                break;
            }
            if (!matched) continue;
        } else if (!obs.inbox.empty() && obs.inbox.front().from != kProbeSender) {
            matched = &obs.inbox.front();
        }
        applyEffects(rule, obs, memory, matched, d);
    }
    return d;
}

AgentDecision decideTableStochastic(const BehaviorSpec& b, const AgentMemory& memory,
                                    const Observation& obs, RandomStream& rand) {
    AgentDecision d;
    if (const core::Message* probe = probeMessage(obs)) {
        core::Message reply;
        reply.to = {kProbeSender};
        reply.kind = core::MessageKind::Response;
        reply.content = memoryDigest(memory);
        d.messages.push_back(std::move(reply));
        return d;
    }
    if (inReflection(obs)) return d;
    if (b.params.contains("onlyStep") && b.params["onlyStep"].get<int>() != obs.step) return d;
    const std::string tag = b.params.value("taskTag", "");
    if (tag.empty()) return d;

    bool disabled = false;
    auto it = obs.envView.find("__disabled_tools");
    if (it != obs.envView.end() && it->second.is_array()) {
        for (const auto& t : it->second) {
            if (t.get<std::string>() == tag) disabled = true;
        }
    }
    std::optional<double> defaultP;
    if (b.params.contains("defaultP")) defaultP = b.params["defaultP"].get<double>();
    const bool ok = capabilityLookup(b.params["table"], tag, rand, defaultP) && !disabled;

    const core::Message* matched =
        !obs.inbox.empty() && obs.inbox.front().from != kProbeSender ? &obs.inbox.front() : nullptr;
    const char* branch = ok ? "onSuccess" : "onFailure";
    if (b.params.contains(branch)) {
        applyEffects(b.params[branch], obs, memory, matched, d);
    }
    return d;
}

std::string currentStance(const BehaviorSpec& b, const AgentMemory& memory) {
    std::string stance = b.params.value("stance", "");
    for (const auto& [step, text] : memory.entries) {
        if (text.rfind("stance:", 0) == 0) stance = text.substr(7);
    }
    return stance;
}

AgentDecision emitStance(const std::string& stance, const BehaviorSpec& b, const Observation& obs,
                         AgentDecision d) {
    core::Message m;
    for (const auto& p : peersOf(obs)) m.to.insert(p);
    m.content = stance;
    m.kind = b.params.contains("emitKind")
                 ? core::messageKindFromString(b.params["emitKind"].get<std::string>())
                 : core::MessageKind::Statement;
    if (!m.to.empty()) d.messages.push_back(std::move(m));
    return d;
}

AgentDecision decideSycophant(const BehaviorSpec& b, const AgentMemory& memory,
                              const Observation& obs, RandomStream& rand) {
    AgentDecision d;
    std::string stance = currentStance(b, memory);
    if (const core::Message* probe = probeMessage(obs)) {
        (void)probe;
        core::Message reply;
        reply.to = {kProbeSender};
        reply.kind = core::MessageKind::Response;
        reply.content = stance;
        d.messages.push_back(std::move(reply));
        return d;
    }
    if (inReflection(obs)) return d;

    // Count peer stances from Statements and Votes; adopt the majority
    // dissenting stance with probability q once enough peers assert it.
    std::map<std::string, int> counts;
    for (const auto& m : obs.inbox) {
        if (m.from == kProbeSender) continue;
        if (m.kind != core::MessageKind::Statement && m.kind != core::MessageKind::Vote) continue;
        counts[m.content] += 1;
    }
    std::string majority;
    int best = 0;
    for (const auto& [s, n] : counts) { // std::map order makes ties deterministic
        if (n > best) {
            best = n;
            majority = s;
        }
    }
    const int threshold = b.params.value("threshold", 1);
    const double q = b.params.value("switchProbability", 0.0);
    if (!majority.empty() && majority != stance && best >= threshold && rand.bernoulli(q)) {
        stance = majority;
        d.memoryAppend = "stance:" + stance;
    }
    return emitStance(stance, b, obs, std::move(d));
}

AgentDecision decideContrarian(const BehaviorSpec& b, const AgentMemory& memory,
                               const Observation& obs) {
    AgentDecision d;
    const std::string stance = currentStance(b, memory);
    if (probeMessage(obs)) {
        core::Message reply;
        reply.to = {kProbeSender};
        reply.kind = core::MessageKind::Response;
        reply.content = stance;
        d.messages.push_back(std::move(reply));
        return d;
    }
    if (inReflection(obs)) return d;
    return emitStance(stance, b, obs, std::move(d));
}

AgentDecision decideLlmAdapter(const BehaviorSpec& b, const AgentMemory& memory,
                               const Observation& obs, const DecideHooks* hooks) {
    if (!hooks || !hooks->llm) {
        throw BehaviorError("LLMAdapter: no transport configured");
    }
    LlmRequest req;
    std::string system = b.params.value("system", "");
    if (!obs.objective.empty()) {
        system += system.empty() ? obs.objective : "\n" + obs.objective;
    }
    req.messages.push_back({"system", system});
    req.messages.push_back({"memory", memoryDigest(memory)});
    std::ostringstream inbox;
    for (const auto& m : obs.inbox) {
        inbox << m.from << ": " << m.content << '\n';
    }
    req.messages.push_back({"inbox", inbox.str()});
    const std::string response = hooks->llm->complete(req);

    const std::string parser = b.params.value("parser", "firstLine");
    AgentDecision d;
    if (parser == "firstLine") {
        std::string line = response.substr(0, response.find('\n'));
        if (line.empty()) throw BehaviorError("LLMAdapter: empty response");
        core::Message m;
        for (const auto& p : peersOf(obs)) m.to.insert(p);
        m.content = line;
        m.kind = core::MessageKind::Statement;
        if (!m.to.empty()) d.messages.push_back(std::move(m));
        d.memoryAppend = line;
    } else if (parser == "json") {
        Json j;
        try {
            j = parseJson(response, "LLMAdapter response");
        } catch (const ParseError& e) {
            throw BehaviorError(std::string("LLMAdapter: unparseable response: ") + e.what());
        }
        applyEffects(j, obs, memory, nullptr, d);
    } else {
        throw BehaviorError("LLMAdapter: unknown parser '" + parser + "'");
    }
    return d;
}

} // namespace

AgentDecision decide(const BehaviorSpec& behavior, const AgentMemory& memory,
                     const Observation& obs, RandomStream& rand, const DecideHooks* hooks) {
    if (obs.step < 0) throw BehaviorError("decide: step must be >= 0");
    if (auto problems = validateParams(behavior); !problems.empty()) {
        throw BehaviorError("decide: " + problems.front());
    }
    switch (behavior.kind) {
    case BehaviorKind::Scripted: return decideScripted(behavior, memory, obs);
    case BehaviorKind::TableStochastic: return decideTableStochastic(behavior, memory, obs, rand);
    case BehaviorKind::Sycophant: return decideSycophant(behavior, memory, obs, rand);
    case BehaviorKind::Contrarian: return decideContrarian(behavior, memory, obs);
    case BehaviorKind::LLMAdapter: return decideLlmAdapter(behavior, memory, obs, hooks);
    }
    throw BehaviorError("decide: unhandled behavior kind");
}

} // namespace magrisk::agents
