// json.hpp - canonical JSON aliases and parse helpers shared by all modules.
#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace magrisk {

// nlohmann's default object type is std::map-backed, so object keys are
// always emitted in sorted order. Together with its shortest-round-trip
// number formatting this makes dump() a canonical form: byte-identical
// for equal values regardless of insertion order or platform.
using Json = nlohmann::json;

struct ParseError : std::runtime_error {
    ParseError(std::string msg, std::size_t line, std::size_t column)
        : std::runtime_error(std::move(msg)), line(line), column(column) {}
    std::size_t line = 0;
    std::size_t column = 0;
};

// Parses `text`, translating nlohmann's byte offsets into line/column so
// callers can report config errors precisely.
Json parseJson(std::string_view text, std::string_view what = "input");

// Canonical serialisation used for digests and trace files.
inline std::string canonicalDump(const Json& j) { return j.dump(); }

} // namespace magrisk
