// environment.cpp - the "kv" environment and the environment registry.
//
// kv params:
//   initial  object of starting state
//   rules    ordered array of {"if": [{key, op, value}...], "set": {k: v}}
//            conditions AND together; the pseudo-key "__step" compares
//            against the current step, enabling scheduled state shocks.
// Agent actions mutate state through args {"set": {k: v}}.
#include "magrisk/environment.hpp"

#include <mutex>

namespace magrisk::engine {

namespace {

bool compareJson(const Json& actual, const std::string& op, const Json& expected, bool present) {
    if (op == "exists") return present;
    if (op == "absent") return !present;
    if (!present) return false;
    if (op == "eq") return actual == expected;
    if (op == "ne") return actual != expected;
    if (actual.is_number() && expected.is_number()) {
        const double a = actual.get<double>();
        const double b = expected.get<double>();
        if (op == "lt") return a < b;
        if (op == "le") return a <= b;
        if (op == "gt") return a > b;
        if (op == "ge") return a >= b;
    }
    return false;
}

bool conditionHolds(const Json& cond, const EnvState& state, int stepIndex) {
    const std::string key = cond.at("key").get<std::string>();
    const std::string op = cond.value("op", "eq");
    if (key == "__step") {
        return compareJson(Json(stepIndex), op, cond.value("value", Json(nullptr)), true);
    }
    const auto it = state.find(key);
    return compareJson(it == state.end() ? Json(nullptr) : it->second, op,
                       cond.value("value", Json(nullptr)), it != state.end());
}

class KvEnvironment final : public EnvironmentModel {
public:
    explicit KvEnvironment(const core::EnvironmentSpec& spec) : params_(spec.params) {}

    EnvState init() override {
        EnvState state;
        const Json initial = params_.value("initial", Json::object());
        for (const auto& [k, v] : initial.items()) {
            state[k] = v;
        }
        return state;
    }

    std::vector<core::EnvChanged> step(int stepIndex, EnvState& state,
                                       const std::vector<core::ActionTaken>& actions,
                                       KeyTaint& keyTaint, RandomStream&) override {
        std::vector<core::EnvChanged> changes;
        auto write = [&](const std::string& key, const Json& value, const std::set<std::string>& taint) {
            state[key] = value;
            keyTaint[key] = taint;
            changes.push_back({key, value, taint});
        };

        for (const auto& action : actions) {
            if (!action.args.contains("set") || !action.args["set"].is_object()) continue;
            for (const auto& [k, v] : action.args["set"].items()) {
                write(k, v, action.taint);
            }
        }

        for (const auto& rule : params_.value("rules", Json::array())) {
            bool holds = true;
            std::set<std::string> condTaint;
            for (const auto& cond : rule.value("if", Json::array())) {
                if (!conditionHolds(cond, state, stepIndex)) {
                    holds = false;
                    break;
                }
                const std::string key = cond.at("key").get<std::string>();
                auto it = keyTaint.find(key);
                if (it != keyTaint.end()) condTaint.insert(it->second.begin(), it->second.end());
            }
            if (!holds) continue;
            const Json sets = rule.value("set", Json::object());
            for (const auto& [k, v] : sets.items()) {
                auto it = state.find(k);
                if (it != state.end() && it->second == v) continue; // already holds
                write(k, v, condTaint);
            }
        }
        return changes;
    }

private:
    Json params_;
};

std::map<std::string, EnvironmentFactory>& registry() {
    static std::map<std::string, EnvironmentFactory> r = {
        {"kv", [](const core::EnvironmentSpec& s) { return std::make_unique<KvEnvironment>(s); }},
    };
    return r;
}

std::mutex& registryMutex() {
    static std::mutex m;
    return m;
}

} // namespace

void registerEnvironment(const std::string& name, EnvironmentFactory factory) {
    std::lock_guard<std::mutex> lock(registryMutex());
    registry()[name] = std::move(factory);
}

std::unique_ptr<EnvironmentModel> makeEnvironment(const core::EnvironmentSpec& spec) {
    std::lock_guard<std::mutex> lock(registryMutex());
    auto it = registry().find(spec.name);
    if (it == registry().end()) {
        throw core::SpecError("environment: unknown model '" + spec.name + "'");
    }
    return it->second(spec);
}

bool milestoneHolds(const core::MilestonePredicate& m, const EnvState& state) {
    const auto it = state.find(m.key);
    return compareJson(it == state.end() ? Json(nullptr) : it->second, m.op, m.value,
                       it != state.end());
}

} // namespace magrisk::engine
