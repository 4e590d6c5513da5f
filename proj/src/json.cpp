#include "magrisk/json.hpp"

namespace magrisk {

Json parseJson(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // e.byte is a 1-based offset just past the offending character.
        std::size_t line = 1, col = 1;
        const std::size_t stop = e.byte > 0 ? e.byte - 1 : 0;
        for (std::size_t i = 0; i < stop && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string(what) + ": parse error at line " + std::to_string(line) +
                             ", column " + std::to_string(col) + ": " + e.what(),
                         line, col);
    }
}

} // namespace magrisk
