#include "tokshap/text_units.hpp"

#include <algorithm>
#include <regex>

#include "tokshap/errors.hpp"

namespace tokshap {
namespace {

bool is_unicode_space(char32_t c) {
    switch (c) {
        case U'\t':
        case U'\n':
        case 0x0B:
        case 0x0C:
        case U'\r':
        case U' ':
        case 0x85:    // NEL
        case 0xA0:    // NBSP
        case 0x1680:  // ogham space mark
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

// Decodes one UTF-8 scalar at offset i. Malformed sequences are treated as a
// single opaque (non-space) byte so splitting never fails on binary garbage.
char32_t decode_scalar(const std::string& s, std::size_t i, std::size_t& len) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    len = 1;
    if (b0 < 0x80) return b0;

    auto cont = [&](std::size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        len = 2;
        return ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        len = 3;
        return ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) | (byte(i + 2) & 0x3Fu);
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        len = 4;
        return ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
               ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
    }
    return 0xFFFD;
}

void push_unit(PromptUnits& out, std::size_t begin, std::size_t end) {
    if (end > begin) {
        out.units.push_back(out.source.substr(begin, end - begin));
        out.spans.push_back({begin, end});
    }
}

void split_whitespace_into(PromptUnits& out) {
    const std::string& s = out.source;
    std::size_t i = 0;
    std::size_t unit_begin = 0;
    bool in_unit = false;
    while (i < s.size()) {
        std::size_t len = 0;
        const char32_t c = decode_scalar(s, i, len);
        if (is_unicode_space(c)) {
            if (in_unit) {
                push_unit(out, unit_begin, i);
                in_unit = false;
            }
        } else if (!in_unit) {
            unit_begin = i;
            in_unit = true;
        }
        i += len;
    }
    if (in_unit) push_unit(out, unit_begin, s.size());
}

// Separator = any match of the user pattern, or a single ASCII space. The
// space alternative keeps unit lists stable through reconstruct(), which
// joins with single spaces.
void split_pattern_into(PromptUnits& out, const std::regex& re) {
    const std::string& s = out.source;
    std::size_t cursor = 0;
    auto it = std::cregex_iterator(s.data(), s.data() + s.size(), re);
    for (const auto end = std::cregex_iterator(); it != end; ++it) {
        const auto& m = (*it)[0];
        if (m.second == m.first) continue;  // zero-length match, not a separator
        const auto match_begin = static_cast<std::size_t>(m.first - s.data());
        const auto match_end = static_cast<std::size_t>(m.second - s.data());
        if (match_begin >= cursor) push_unit(out, cursor, match_begin);
        cursor = std::max(cursor, match_end);
    }
    if (cursor < s.size()) push_unit(out, cursor, s.size());
}

}  // namespace

PromptUnits split(const std::string& prompt, const std::string& splitter_spec) {
    PromptUnits out;
    out.source = prompt;
    out.splitter_id = splitter_spec;

    if (splitter_spec == "whitespace") {
        split_whitespace_into(out);
    } else if (splitter_spec.starts_with("pattern:")) {
        const std::string pattern = splitter_spec.substr(8);
        if (pattern.empty()) throw SplitterError("pattern splitter needs a regex");
        std::regex re;
        try {
            re = std::regex("(?:" + pattern + ")| ", std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw SplitterError(std::string("invalid pattern regex: ") + e.what());
        }
        split_pattern_into(out, re);

        // Units must survive a reconstruct/resplit round trip; a pattern that
        // matches across unit boundaries after space-joining cannot.
        if (!out.units.empty()) {
            PromptUnits probe;
            probe.source = reconstruct(out, full_mask(out.count()));
            split_pattern_into(probe, re);
            if (probe.units != out.units) {
                throw SplitterError("pattern does not round-trip on this input; "
                                    "units would change after reconstruction");
            }
        }
    } else {
        throw SplitterError("unknown splitter spec: " + splitter_spec);
    }

    if (out.units.empty()) throw EmptyPromptError();
    return out;
}

std::string reconstruct(const PromptUnits& units, std::uint64_t included_mask) {
    const int n = units.count();
    if (n > 0 && n < 64 && (included_mask >> n) != 0) {
        throw IndexOutOfRangeError("mask selects units beyond n=" + std::to_string(n));
    }
    std::string joined;
    for (int i = 0; i < n; ++i) {
        if ((included_mask >> i) & 1u) {
            if (!joined.empty()) joined += ' ';
            joined += units.units[static_cast<std::size_t>(i)];
        }
    }
    return joined;
}

std::string reconstruct(const PromptUnits& units, const std::vector<int>& included) {
    std::uint64_t mask = 0;
    for (int idx : included) {
        if (idx < 1 || idx > units.count()) {
            throw IndexOutOfRangeError("unit index " + std::to_string(idx) +
                                       " outside [1, " + std::to_string(units.count()) + "]");
        }
        mask |= std::uint64_t{1} << (idx - 1);
    }
    return reconstruct(units, mask);
}

std::uint64_t full_mask(int unit_count) {
    if (unit_count < 1 || unit_count > 63) {
        throw IndexOutOfRangeError("unit count " + std::to_string(unit_count) +
                                   " outside mask range [1, 63]");
    }
    return (std::uint64_t{1} << unit_count) - 1;
}

}  // namespace tokshap
