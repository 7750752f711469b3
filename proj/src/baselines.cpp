#include "tokshap/baselines.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tokshap/assets.hpp"
#include "tokshap/errors.hpp"
#include "tokshap/rng.hpp"

namespace tokshap {
namespace {

std::string replace_all(std::string text, const std::string& token, const std::string& value) {
    for (std::size_t pos = text.find(token); pos != std::string::npos;
         pos = text.find(token, pos + value.size())) {
        text.replace(pos, token.size(), value);
    }
    return text;
}

std::string numbered_words(const PromptUnits& units) {
    std::string out;
    for (int i = 0; i < units.count(); ++i) {
        if (!out.empty()) out += ' ';
        out += std::to_string(i + 1) + ". " + units.units[static_cast<std::size_t>(i)];
    }
    return out;
}

std::string load_template(const std::string& template_path) {
    if (template_path.empty()) return prompt_engineer_template_v1();
    std::ifstream in(template_path, std::ios::binary);
    if (!in) throw IoError("cannot read template file: " + template_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// A piece contributes a rating when it ends in an integer ("90", "word: 90",
// "3. 85" all parse as their trailing number).
std::optional<int> trailing_integer(const std::string& piece) {
    int end = static_cast<int>(piece.size());
    while (end > 0 && std::isspace(static_cast<unsigned char>(piece[end - 1]))) --end;
    if (end == 0) return std::nullopt;

    int begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(piece[begin - 1]))) --begin;
    if (begin == end) return std::nullopt;
    const bool negative = begin > 0 && piece[begin - 1] == '-';

    // Digits glued to a preceding word ("abc90") are not a rating.
    if (begin > 0 && !negative) {
        const unsigned char prev = static_cast<unsigned char>(piece[begin - 1]);
        if (!std::isspace(prev) && prev != '.' && prev != ':' && prev != ')') return std::nullopt;
    }

    try {
        const std::string digits = piece.substr(static_cast<std::size_t>(begin),
                                                static_cast<std::size_t>(end - begin));
        if (digits.size() > 9) return std::nullopt;
        const int value = std::stoi(digits);
        return negative ? -value : value;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

BaselineScores random_importance(const PromptUnits& units, std::uint64_t seed) {
    Rng rng(seed);
    BaselineScores out{"random", {}};
    out.scores.reserve(static_cast<std::size_t>(units.count()));
    for (int i = 0; i < units.count(); ++i) out.scores.push_back(rng.unit());
    return out;
}

std::string prompt_engineer_request(const PromptUnits& units, const std::string& template_text) {
    std::string request = replace_all(template_text, "{prompt}", units.source);
    request = replace_all(request, "{words}", numbered_words(units));
    return replace_all(request, "{n}", std::to_string(units.count()));
}

std::optional<std::vector<int>> parse_ratings(const std::string& reply, int expected) {
    std::vector<int> ratings;
    std::string piece;
    const auto flush = [&]() -> bool {
        bool has_content = piece.find_first_not_of(" \t\r") != std::string::npos;
        if (has_content) {
            const auto value = trailing_integer(piece);
            if (!value) return false;
            ratings.push_back(*value);
        }
        piece.clear();
        return true;
    };
    for (char c : reply) {
        if (c == ',' || c == '\n') {
            if (!flush()) return std::nullopt;
        } else {
            piece += c;
        }
    }
    if (!flush()) return std::nullopt;
    if (static_cast<int>(ratings.size()) != expected) return std::nullopt;
    return ratings;
}

BaselineScores prompt_engineer_importance(const PromptUnits& units, BackendClient& backend,
                                          const std::string& template_path) {
    const std::string template_text = load_template(template_path);
    const std::string request = prompt_engineer_request(units, template_text);

    std::optional<std::vector<int>> ratings;
    for (int attempt = 0; attempt < 2 && !ratings; ++attempt) {
        const std::string prompt =
            attempt == 0
                ? request
                : prompt_engineer_request(units, template_text + prompt_engineer_retry_suffix());
        ratings = parse_ratings(backend.complete(prompt).text, units.count());
    }
    if (!ratings) {
        throw UnparseableBaselineError("model reply did not contain exactly " +
                                       std::to_string(units.count()) + " ratings");
    }

    BaselineScores out{"prompt-engineer", {}};
    out.scores.reserve(ratings->size());
    for (int value : *ratings) {
        out.scores.push_back(std::clamp(value, 0, 100) / 100.0);
    }
    return out;
}

}  // namespace tokshap
