// judge.hpp - utterance classification over trace messages: rule-based
// classifier, external-judge adapter with a content-addressed cache, and
// calibration against human annotations.
#pragma once

#include "magrisk/core.hpp"

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace magrisk::judge {

struct JudgeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Built-in categories. The taxonomy is extensible: scenario rulesets may
// introduce further category strings (e.g. a domain-specific ambiguity flag).
namespace category {
inline constexpr const char* InfoSharing = "InfoSharing";
inline constexpr const char* Negotiation = "Negotiation";
inline constexpr const char* Persuasion = "Persuasion";
inline constexpr const char* Agreement = "Agreement";
inline constexpr const char* Critique = "Critique";
inline constexpr const char* ClarificationRequest = "ClarificationRequest";
inline constexpr const char* IgnoredRequestMarker = "IgnoredRequestMarker";
inline constexpr const char* Other = "Other";
} // namespace category

struct UtteranceLabel {
    std::string category = category::Other;
    double confidence = 1.0;
    std::string note; // non-empty on adapter errors
};

// Ordered rules; the first match wins. A rule is either a regex (ECMAScript,
// case-insensitive) or a list of case-insensitive keyword substrings.
struct Rule {
    std::string category;
    bool isRegex = false;
    std::string pattern;                // regex form
    std::vector<std::string> keywords;  // keyword form
};

struct Ruleset {
    std::vector<Rule> rules;
};

Ruleset defaultRuleset();

// Declarative pattern file: one rule per line,
//   <category> regex <pattern>
//   <category> keyword <kw1>|<kw2>|...
// Blank lines and lines starting with '#' are skipped.
Ruleset rulesetFromText(const std::string& text);
std::string toText(const Ruleset& ruleset);

enum class JudgeKind { RuleBased, ExternalAdapter };

// External judge port; returns a category name for one utterance.
class JudgeTransport {
public:
    virtual ~JudgeTransport() = default;
    virtual std::string classifyText(const std::string& content) = 0;
};

// Content-addressed result cache so a metric run is reproducible after the
// first adapter pass. Concurrent reads, serialised writes.
class JudgeCache {
public:
    std::optional<UtteranceLabel> lookup(const std::string& contentHash) const;
    void store(const std::string& contentHash, const UtteranceLabel& label);
    std::size_t size() const;

    void loadFile(const std::string& path);  // missing file is an empty cache
    void saveFile(const std::string& path) const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, UtteranceLabel> entries_;
};

struct ClassifyConfig {
    JudgeKind kind = JudgeKind::RuleBased;
    Ruleset ruleset;                    // RuleBased
    JudgeTransport* adapter = nullptr;  // ExternalAdapter
    JudgeCache* cache = nullptr;        // optional, ExternalAdapter only
};

// One label per message. RuleBased is a pure function of (ruleset, content);
// adapter failures yield Other with confidence 0 and an error note.
std::vector<UtteranceLabel> classify(const ClassifyConfig& config,
                                     const std::vector<core::Message>& messages);

struct AnnotationItem {
    std::string traceFile;
    int eventIndex = 0; // 0-based index into the trace's event list
    std::string goldLabel;
    std::string annotatorId;
};

struct AnnotationSet {
    std::vector<AnnotationItem> items;
};

// Delimited text, tab-separated columns: traceFile, eventIndex, goldLabel,
// annotatorId. '#' lines are comments; a header row naming the first column
// "traceFile" is skipped.
AnnotationSet annotationsFromTsv(const std::string& text);

// Resolves messageRefs into loaded traces; throws JudgeError when a ref does
// not name a MessageSent event.
std::vector<std::pair<core::Message, std::string>>
resolveAnnotations(const AnnotationSet& annotations,
                   const std::map<std::string, core::Trace>& traces);

struct CalibrationReport {
    double accuracy = 0.0;
    std::map<std::string, double> precision; // per class
    std::map<std::string, double> recall;
    double kappa = 0.0;
    bool kappaDefined = true; // false when fewer than 2 classes are present
    std::map<std::string, std::map<std::string, int>> confusion; // gold -> judged -> n
    int total = 0;
    std::string scenarioDigest; // digest of the annotated traces, for staleness checks
};

CalibrationReport calibrate(const ClassifyConfig& config,
                            const std::vector<std::pair<core::Message, std::string>>& annotated);

Json toJson(const CalibrationReport& report);

struct IgnoredRequest {
    std::size_t requestIndex = 0; // index into the input message list
    core::Message request;
    int windowChecked = 0;
};

// Flags Requests with no Response from any addressee back to the requester
// within `window` steps (a reply at step s+window counts; s+window+1 does
// not).
std::vector<IgnoredRequest> detectIgnoredRequests(const std::vector<core::Message>& messages,
                                                  int window = 2);

} // namespace magrisk::judge
