#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tokshap/model_backend.hpp"
#include "tokshap/shapley.hpp"

namespace tokshap {

// One prompt with extraneous words planted at random gap positions.
struct InjectionCase {
    std::string original_prompt;
    std::string injected_prompt;            // canonical space-joined unit list
    std::vector<int> injected_positions;    // 1-based indices in the injected unit list
    std::vector<std::string> injected_words;
    std::uint64_t seed = 0;
};

// Draws k words (with replacement) and inserts each at a uniformly random gap
// of the current unit list, so positions never collide. Deterministic per
// (prompt, pool, k, seed).
InjectionCase inject_words(const std::string& prompt, const std::vector<std::string>& word_pool,
                           int k, std::uint64_t seed);

struct InjectionConfig {
    int k = 2;                     // words injected per case
    double ratio = 0.0;            // sampling ratio for the tokenshap method
    std::vector<std::uint64_t> seeds{1};
    Normalization normalization = Normalization::l1;
    std::string pe_template_path;  // prompt-engineer template override
    int case_parallelism = 1;      // cases run concurrently; rows stay in case order
};

struct SampleRow {
    std::string method;
    int prompt_index = 0;
    std::uint64_t seed = 0;
    int unit_index = 0;  // 1-based in the injected unit list
    std::string unit;
    bool injected = false;
    double score = 0.0;
};

struct MethodSummary {
    std::string method;
    std::size_t real_count = 0;
    std::size_t injected_count = 0;
    double mean_real = 0.0;
    double mean_injected = 0.0;
    double std_real = 0.0;      // population standard deviation
    double std_injected = 0.0;
    double delta_mean = 0.0;    // mean_real - mean_injected, exactly
    double delta_std = 0.0;     // std_real - std_injected, exactly
};

struct InjectionReport {
    std::vector<SampleRow> rows;
    std::vector<MethodSummary> summaries;
    std::size_t skipped = 0;
    std::vector<std::string> skip_notes;
    nlohmann::json config_echo;
};

// Methods: "tokenshap", "random", "prompt-engineer". Per-case failures are
// recorded in skip_notes and do not abort the run.
InjectionReport run_injection_experiment(const std::vector<std::string>& corpus,
                                         const std::vector<std::string>& methods,
                                         BackendClient& backend, const InjectionConfig& config,
                                         const std::vector<std::string>& word_pool = {});

struct ConvergenceRow {
    int prompt_index = 0;
    double ratio = 0.0;
    bool with_first_order = true;
    std::uint64_t seed = 0;
    double cosine_to_exact = 0.0;  // dense cosine between estimated and exact phi_raw
    std::size_t evaluated = 0;     // combinations evaluated (baseline excluded)
};

struct ConvergenceAggregate {
    double ratio = 0.0;
    bool with_first_order = true;
    double mean_cosine = 0.0;
    std::size_t count = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::vector<ConvergenceAggregate> aggregates;
    std::size_t skipped = 0;
    std::vector<std::string> skip_notes;
    nlohmann::json config_echo;
};

// Compares sampled estimates against the exhaustive oracle across ratios.
// When both_conditions is set, each (ratio, seed) runs with and without
// first-order forcing. Prompts over the cap are skipped with a note.
// case_parallelism > 1 runs prompts concurrently; row order is unchanged.
ConvergenceReport run_convergence_experiment(const std::vector<std::string>& corpus,
                                             BackendClient& backend,
                                             const std::vector<double>& ratios,
                                             const std::vector<std::uint64_t>& seeds,
                                             int cap = kDefaultEnumerationCap,
                                             bool both_conditions = false,
                                             int case_parallelism = 1);

// "sample" loads the bundled corpus. JSON-Lines files take the "prompt" (or
// alpaca-style "instruction") field per line; anything else is one prompt per
// line. Throws IoError with a line number on parse failure.
std::vector<std::string> load_corpus(const std::string& path_or_sample);

struct ReportPaths {
    std::string csv;
    std::string json;
    std::string schema;
};

// Writes <name>-<tag>.csv/.json plus a column-schema file; returns the paths.
ReportPaths write_injection_report(const InjectionReport& report, const std::string& out_dir,
                                   const std::string& tag);
ReportPaths write_convergence_report(const ConvergenceReport& report, const std::string& out_dir,
                                     const std::string& tag);

// Tag for report filenames: "<utc-timestamp>-<seed>", or "<seed>" when
// deterministic output is requested.
std::string report_tag(std::uint64_t seed, bool deterministic);

}  // namespace tokshap
