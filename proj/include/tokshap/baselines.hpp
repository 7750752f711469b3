#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tokshap/model_backend.hpp"
#include "tokshap/text_units.hpp"

namespace tokshap {

struct BaselineScores {
    std::string method;          // "random" | "prompt-engineer"
    std::vector<double> scores;  // one per unit, in [0, 1]
};

// Seeded i.i.d. uniform [0,1) draws, one per unit.
BaselineScores random_importance(const PromptUnits& units, std::uint64_t seed);

// Asks the model to rate each unit 0-100 via a fixed few-shot template, then
// parses one integer per unit (comma or newline delimited). Retries once with
// a stricter instruction; throws UnparseableBaselineError after that.
// template_path overrides the embedded template asset.
BaselineScores prompt_engineer_importance(const PromptUnits& units, BackendClient& backend,
                                          const std::string& template_path = "");

// The rendered request text (exposed for tests and debugging).
std::string prompt_engineer_request(const PromptUnits& units, const std::string& template_text);

// Extracts exactly `expected` integer ratings from a delimited reply;
// nullopt when the reply does not parse. Ratings are clamped to [0, 100]
// by the caller.
std::optional<std::vector<int>> parse_ratings(const std::string& reply, int expected);

}  // namespace tokshap
