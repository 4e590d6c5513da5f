// judge.cpp - rule evaluation, calibration arithmetic, ignored-request scan.
#include "magrisk/judge.hpp"

#include "magrisk/digest.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

namespace magrisk::judge {

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool ruleMatches(const Rule& rule, const std::string& content, const std::string& lowered) {
    if (rule.isRegex) {
        const std::regex re(rule.pattern, std::regex::ECMAScript | std::regex::icase);
        return std::regex_search(content, re);
    }
    for (const auto& kw : rule.keywords) {
        if (!kw.empty() && lowered.find(lowercase(kw)) != std::string::npos) return true;
    }
    return false;
}

std::vector<std::string> splitTabs(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, '\t')) out.push_back(field);
    return out;
}

} // namespace

Ruleset defaultRuleset() {
    Ruleset rs;
    auto keyword = [&](const char* cat, std::vector<std::string> kws) {
        Rule r;
        r.category = cat;
        r.keywords = std::move(kws);
        rs.rules.push_back(std::move(r));
    };
    keyword(category::ClarificationRequest,
            {"clarify", "clarification", "what do you mean", "which unit", "can you confirm",
             "could you confirm", "please specify", "can you specify"});
    keyword(category::Agreement,
            {"i agree", "agreed", "building on that idea", "good point", "sounds good", "yes, and",
             "concur"});
    keyword(category::Critique,
            {"however", "i disagree", "we should also consider", "on the contrary", "but have we",
             "object to", "reject", "that is incorrect", "push back"});
    keyword(category::Negotiation,
            {"propose", "offer", "counter-offer", "in exchange", "compromise", "terms of", "final deal",
             "split the difference"});
    keyword(category::Persuasion,
            {"you should", "trust me", "strongly recommend", "urge you", "convince", "must adopt"});
    keyword(category::InfoSharing,
            {"fyi", "status:", "update:", "report:", "forecast", "observed", "is now", "units",
             "heads up", "alert:"});
    return rs;
}

Ruleset rulesetFromText(const std::string& text) {
    Ruleset rs;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream parts(line);
        Rule rule;
        std::string kind;
        parts >> rule.category >> kind;
        std::string rest;
        std::getline(parts, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, rest.find_first_not_of(' '));
        if (rule.category.empty() || (kind != "regex" && kind != "keyword") || rest.empty()) {
            throw JudgeError("ruleset line " + std::to_string(lineNo) +
                             ": expected '<category> regex|keyword <pattern>'");
        }
        if (kind == "regex") {
            rule.isRegex = true;
            rule.pattern = rest;
            try {
                std::regex probe(rule.pattern, std::regex::ECMAScript | std::regex::icase);
            } catch (const std::regex_error& e) {
                throw JudgeError("ruleset line " + std::to_string(lineNo) + ": bad regex: " + e.what());
            }
        } else {
            std::istringstream kws(rest);
            std::string kw;
            while (std::getline(kws, kw, '|')) {
                if (!kw.empty()) rule.keywords.push_back(kw);
            }
        }
        rs.rules.push_back(std::move(rule));
    }
    return rs;
}

std::string toText(const Ruleset& ruleset) {
    std::ostringstream out;
    for (const auto& r : ruleset.rules) {
        out << r.category << ' ' << (r.isRegex ? "regex" : "keyword") << ' ';
        if (r.isRegex) {
            out << r.pattern;
        } else {
            for (std::size_t i = 0; i < r.keywords.size(); ++i) {
                if (i) out << '|';
                out << r.keywords[i];
            }
        }
        out << '\n';
    }
    return out.str();
}

std::optional<UtteranceLabel> JudgeCache::lookup(const std::string& contentHash) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(contentHash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void JudgeCache::store(const std::string& contentHash, const UtteranceLabel& label) {
    std::unique_lock lock(mutex_);
    entries_[contentHash] = label;
}

std::size_t JudgeCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void JudgeCache::loadFile(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.empty()) return;
    const Json j = parseJson(text, "judge cache");
    std::unique_lock lock(mutex_);
    for (const auto& [hash, entry] : j.items()) {
        UtteranceLabel label;
        label.category = entry.value("category", category::Other);
        label.confidence = entry.value("confidence", 1.0);
        label.note = entry.value("note", "");
        entries_[hash] = label;
    }
}

void JudgeCache::saveFile(const std::string& path) const {
    Json j = Json::object();
    {
        std::shared_lock lock(mutex_);
        for (const auto& [hash, label] : entries_) {
            j[hash] = Json{{"category", label.category},
                           {"confidence", label.confidence},
                           {"note", label.note}};
        }
    }
    std::ofstream out(path);
    if (!out.is_open()) throw JudgeError("judge cache: cannot write " + path);
    out << canonicalDump(j) << '\n';
}

std::vector<UtteranceLabel> classify(const ClassifyConfig& config,
                                     const std::vector<core::Message>& messages) {
    if (messages.empty()) throw JudgeError("classify: no messages");
    std::vector<UtteranceLabel> out;
    out.reserve(messages.size());

    for (const auto& m : messages) {
        if (config.kind == JudgeKind::RuleBased) {
            UtteranceLabel label;
            const std::string lowered = lowercase(m.content);
            for (const auto& rule : config.ruleset.rules) {
                if (ruleMatches(rule, m.content, lowered)) {
                    label.category = rule.category;
                    break;
                }
            }
            out.push_back(std::move(label));
            continue;
        }

        // ExternalAdapter
        const std::string hash = sha256Hex(m.content);
        if (config.cache) {
            if (auto cached = config.cache->lookup(hash)) {
                out.push_back(*cached);
                continue;
            }
        }
        UtteranceLabel label;
        if (!config.adapter) {
            label.confidence = 0.0;
            label.note = "adapter-error: no transport configured";
        } else {
            try {
                label.category = config.adapter->classifyText(m.content);
                if (label.category.empty()) {
                    label.category = category::Other;
                    label.confidence = 0.0;
                    label.note = "adapter-error: empty category";
                }
            } catch (const std::exception& e) {
                label.category = category::Other;
                label.confidence = 0.0;
                label.note = std::string("adapter-error: ") + e.what();
            }
        }
        if (config.cache && label.note.empty()) {
            config.cache->store(hash, label);
        }
        out.push_back(std::move(label));
    }
    return out;
}

AnnotationSet annotationsFromTsv(const std::string& text) {
    AnnotationSet set;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = splitTabs(line);
        if (!fields.empty() && fields[0] == "traceFile") continue; // header row
        if (fields.size() < 4) {
            throw JudgeError("annotations line " + std::to_string(lineNo) +
                             ": expected traceFile\teventIndex\tgoldLabel\tannotatorId");
        }
        AnnotationItem item;
        item.traceFile = fields[0];
        try {
            item.eventIndex = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw JudgeError("annotations line " + std::to_string(lineNo) + ": bad eventIndex");
        }
        item.goldLabel = fields[2];
        item.annotatorId = fields[3];
        set.items.push_back(std::move(item));
    }
    if (set.items.empty()) throw JudgeError("annotations: at least one item required");
    return set;
}

std::vector<std::pair<core::Message, std::string>>
resolveAnnotations(const AnnotationSet& annotations,
                   const std::map<std::string, core::Trace>& traces) {
    std::vector<std::pair<core::Message, std::string>> out;
    out.reserve(annotations.items.size());
    for (const auto& item : annotations.items) {
        auto it = traces.find(item.traceFile);
        if (it == traces.end()) {
            throw JudgeError("annotation ref: trace '" + item.traceFile + "' not loaded");
        }
        const auto& events = it->second.events;
        if (item.eventIndex < 0 || static_cast<std::size_t>(item.eventIndex) >= events.size()) {
            throw JudgeError("annotation ref: event index " + std::to_string(item.eventIndex) +
                             " out of range for '" + item.traceFile + "'");
        }
        const auto* sent = std::get_if<core::MessageSent>(&events[item.eventIndex].payload);
        if (!sent) {
            throw JudgeError("annotation ref: event " + std::to_string(item.eventIndex) +
                             " in '" + item.traceFile + "' is not a MessageSent");
        }
        out.emplace_back(sent->msg, item.goldLabel);
    }
    return out;
}

CalibrationReport calibrate(const ClassifyConfig& config,
                            const std::vector<std::pair<core::Message, std::string>>& annotated) {
    if (annotated.empty()) throw JudgeError("calibrate: no annotated items");
    std::vector<core::Message> messages;
    messages.reserve(annotated.size());
    for (const auto& [msg, gold] : annotated) messages.push_back(msg);
    const auto labels = classify(config, messages);

    CalibrationReport report;
    report.total = static_cast<int>(annotated.size());
    std::map<std::string, int> goldMarginal, judgedMarginal;
    int agree = 0;
    for (std::size_t i = 0; i < annotated.size(); ++i) {
        const std::string& gold = annotated[i].second;
        const std::string& judged = labels[i].category;
        report.confusion[gold][judged] += 1;
        goldMarginal[gold] += 1;
        judgedMarginal[judged] += 1;
        if (gold == judged) ++agree;
    }
    const double total = static_cast<double>(report.total);
    report.accuracy = static_cast<double>(agree) / total;

    std::set<std::string> classes;
    for (const auto& [c, n] : goldMarginal) classes.insert(c);
    for (const auto& [c, n] : judgedMarginal) classes.insert(c);
    for (const auto& c : classes) {
        const int diag = report.confusion.count(c) && report.confusion[c].count(c)
                             ? report.confusion[c][c]
                             : 0;
        const int judgedAs = judgedMarginal.count(c) ? judgedMarginal[c] : 0;
        const int goldOf = goldMarginal.count(c) ? goldMarginal[c] : 0;
        report.precision[c] = judgedAs > 0 ? static_cast<double>(diag) / judgedAs : 0.0;
        report.recall[c] = goldOf > 0 ? static_cast<double>(diag) / goldOf : 0.0;
    }

    // Cohen's kappa: observed vs chance agreement from the marginals.
    double pe = 0.0;
    for (const auto& c : classes) {
        const double g = goldMarginal.count(c) ? goldMarginal[c] / total : 0.0;
        const double j = judgedMarginal.count(c) ? judgedMarginal[c] / total : 0.0;
        pe += g * j;
    }
    if (classes.size() < 2 || pe >= 1.0) {
        report.kappaDefined = false;
        report.kappa = 0.0;
    } else {
        report.kappa = (report.accuracy - pe) / (1.0 - pe);
    }
    return report;
}

Json toJson(const CalibrationReport& report) {
    Json confusion = Json::object();
    for (const auto& [gold, row] : report.confusion) {
        Json r = Json::object();
        for (const auto& [judged, n] : row) r[judged] = n;
        confusion[gold] = std::move(r);
    }
    Json precision = Json::object(), recall = Json::object();
    for (const auto& [c, v] : report.precision) precision[c] = v;
    for (const auto& [c, v] : report.recall) recall[c] = v;
    return Json{{"accuracy", report.accuracy},
                {"precision", precision},
                {"recall", recall},
                {"kappa", report.kappa},
                {"kappaDefined", report.kappaDefined},
                {"confusionMatrix", confusion},
                {"total", report.total},
                {"scenarioDigest", report.scenarioDigest}};
}

std::vector<IgnoredRequest> detectIgnoredRequests(const std::vector<core::Message>& messages,
                                                  int window) {
    std::vector<IgnoredRequest> flagged;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& req = messages[i];
        if (req.kind != core::MessageKind::Request) continue;
        bool answered = false;
        for (const auto& m : messages) {
            if (m.kind != core::MessageKind::Response) continue;
            if (m.step <= req.step || m.step > req.step + window) continue;
            if (!req.to.count(m.from)) continue; // must come from an addressee
            if (!m.to.count(req.from)) continue; // and go back to the requester
            answered = true;
            break;
        }
        if (!answered) flagged.push_back({i, req, window});
    }
    return flagged;
}

} // namespace magrisk::judge
