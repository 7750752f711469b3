#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tokshap/model_backend.hpp"
#include "tokshap/subset_sampler.hpp"
#include "tokshap/text_units.hpp"

namespace tokshap {

enum class Normalization { none, l1, minmax };

Normalization normalization_from_string(const std::string& name);
std::string to_string(Normalization mode);

struct EvaluationRecord {
    SubsetCombination combination;
    std::string prompt_text;
    std::string response_text;
    double similarity = 0.0;
};

struct RunMeta {
    double ratio = 1.0;
    std::uint64_t seed = 0;
    bool force_first_order = true;
    std::string backend_id;
    std::string rng_algorithm;
    std::size_t plan_size = 0;
    std::size_t model_calls = 0;  // evaluated combinations plus the baseline call
};

struct AttributionResult {
    PromptUnits units;
    std::vector<double> phi_raw;
    std::vector<double> phi_norm;
    Normalization normalization = Normalization::l1;
    std::string baseline_text;
    std::vector<EvaluationRecord> records;  // in plan order
    RunMeta meta;

    // The stable result document: prompt, units, spans, phi_raw, phi_norm,
    // normalization, ratio, seed, backend, plan_size, baseline_text and run
    // bookkeeping. generated_at is included only when with_timestamp is set.
    nlohmann::json to_json(bool with_timestamp = false) const;
};

// Difference-of-averages estimator: phi_i = mean similarity of combinations
// including unit i minus mean of those excluding it. Aggregation runs in
// ascending-mask order, so the result does not depend on evaluation order;
// an empty side contributes a mean of 0.
std::vector<double> compute_phi(int n, std::vector<std::pair<std::uint64_t, double>> sims);

// l1 divides by the sum of absolute values (sign-preserving; all-zero input
// stays all-zero). minmax maps onto [0,1] (constant input maps to all 0.5).
std::vector<double> normalize(const std::vector<double>& phi_raw, Normalization mode);

// Full pipeline for a prepared plan: baseline call, batch evaluation of every
// combination, TF-IDF similarities against the baseline, phi computation.
AttributionResult attribute(const PromptUnits& units, const SamplingPlan& plan,
                            BackendClient& backend, Normalization mode = Normalization::l1);

// Exhaustive oracle over all 2^n - 2 combinations. Throws CapExceededError.
AttributionResult attribute_exact(const PromptUnits& units, BackendClient& backend,
                                  Normalization mode = Normalization::l1,
                                  int cap = kDefaultEnumerationCap);

}  // namespace tokshap
