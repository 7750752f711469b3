#include "tokshap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "tokshap/assets.hpp"
#include "tokshap/baselines.hpp"
#include "tokshap/errors.hpp"
#include "tokshap/rng.hpp"
#include "tokshap/similarity.hpp"
#include "tokshap/subset_sampler.hpp"

namespace tokshap {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSaltTokenshap = 0x746f6b73;
constexpr std::uint64_t kSaltRandom = 0x726e64;

// Cosine between phi vectors for convergence rows. A vector whose norm sits
// at floating-noise level carries no direction (an exactly-symmetric prompt
// leaves 1-ulp residues in phi), so it counts as all-zero -> cosine 0.
double phi_cosine(const std::vector<double>& estimate, const std::vector<double>& exact) {
    constexpr double kNoiseNorm = 1e-12;
    auto norm = [](const std::vector<double>& v) {
        double sq = 0.0;
        for (double x : v) sq += x * x;
        return std::sqrt(sq);
    };
    if (norm(estimate) <= kNoiseNorm || norm(exact) <= kNoiseNorm) return 0.0;
    return dense_cosine(estimate, exact);
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values, double mean) {
    if (values.empty()) return 0.0;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return std::sqrt(sq / static_cast<double>(values.size()));
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

// Runs one job per case index, optionally on a worker pool. Each job writes
// only its own output slot, so results merge back in case order and reports
// stay deterministic at any parallelism level.
void for_each_case(std::size_t case_count, int parallelism, const std::function<void(std::size_t)>& job) {
    const int workers =
        std::min<int>(std::max(1, parallelism), static_cast<int>(case_count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < case_count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= case_count) return;
                job(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

MethodSummary summarize(const std::string& method, const std::vector<SampleRow>& rows) {
    MethodSummary s;
    s.method = method;
    std::vector<double> real, injected;
    for (const auto& row : rows) {
        if (row.method != method) continue;
        (row.injected ? injected : real).push_back(row.score);
    }
    s.real_count = real.size();
    s.injected_count = injected.size();
    s.mean_real = mean_of(real);
    s.mean_injected = mean_of(injected);
    s.std_real = population_std(real, s.mean_real);
    s.std_injected = population_std(injected, s.mean_injected);
    s.delta_mean = s.mean_real - s.mean_injected;
    s.delta_std = s.std_real - s.std_injected;
    return s;
}

json summary_to_json(const MethodSummary& s) {
    return json{{"method", s.method},
                {"real_count", s.real_count},
                {"injected_count", s.injected_count},
                {"mean_real", s.mean_real},
                {"mean_injected", s.mean_injected},
                {"std_real", s.std_real},
                {"std_injected", s.std_injected},
                {"delta_mean", s.delta_mean},
                {"delta_std", s.delta_std}};
}

}  // namespace

InjectionCase inject_words(const std::string& prompt, const std::vector<std::string>& word_pool,
                           int k, std::uint64_t seed) {
    if (k < 1) throw Error("ConfigError", "injection count k must be >= 1");
    if (word_pool.empty()) throw Error("ConfigError", "injection word pool is empty");

    const PromptUnits base = split(prompt);
    Rng rng(seed);

    std::vector<std::string> units = base.units;
    std::vector<bool> is_injected(units.size(), false);
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(k));

    for (int round = 0; round < k; ++round) {
        const std::string& word = word_pool[rng.below(word_pool.size())];
        // Gap g in [0, m]: before unit g+1 (g = m appends).
        const std::size_t gap = rng.below(units.size() + 1);
        units.insert(units.begin() + static_cast<std::ptrdiff_t>(gap), word);
        is_injected.insert(is_injected.begin() + static_cast<std::ptrdiff_t>(gap), true);
        words.push_back(word);
    }

    InjectionCase out;
    out.original_prompt = prompt;
    out.injected_words = std::move(words);
    out.seed = seed;
    std::string joined;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!joined.empty()) joined += ' ';
        joined += units[i];
        if (is_injected[i]) out.injected_positions.push_back(static_cast<int>(i + 1));
    }
    out.injected_prompt = std::move(joined);
    return out;
}

InjectionReport run_injection_experiment(const std::vector<std::string>& corpus,
                                         const std::vector<std::string>& methods,
                                         BackendClient& backend, const InjectionConfig& config,
                                         const std::vector<std::string>& word_pool) {
    if (corpus.empty()) throw Error("ConfigError", "corpus is empty");
    if (config.seeds.empty()) throw Error("ConfigError", "no seeds given");
    const std::vector<std::string>& pool = word_pool.empty() ? default_word_pool() : word_pool;

    InjectionReport report;
    report.config_echo = json{{"experiment", "inject"},
                              {"k", config.k},
                              {"ratio", config.ratio},
                              {"seeds", config.seeds},
                              {"methods", methods},
                              {"normalization", to_string(config.normalization)},
                              {"backend", backend.config().id()},
                              {"prompts", corpus.size()},
                              {"word_pool_size", pool.size()},
                              {"case_parallelism", config.case_parallelism}};

    struct CaseOutput {
        std::vector<SampleRow> rows;
        std::vector<std::string> skip_notes;
    };
    const std::size_t case_count = corpus.size() * config.seeds.size();
    std::vector<CaseOutput> outputs(case_count);

    for_each_case(case_count, config.case_parallelism, [&](std::size_t case_index) {
        const std::size_t p = case_index / config.seeds.size();
        const std::uint64_t seed = config.seeds[case_index % config.seeds.size()];
        CaseOutput& out = outputs[case_index];

        const std::uint64_t case_seed = mix_seed(seed, p);
        InjectionCase injection;
        try {
            injection = inject_words(corpus[p], pool, config.k, case_seed);
        } catch (const Error& e) {
            out.skip_notes.push_back("prompt " + std::to_string(p) + " seed " +
                                     std::to_string(seed) + ": " + e.what());
            return;
        }

        const PromptUnits units = split(injection.injected_prompt);
        const std::set<int> injected(injection.injected_positions.begin(),
                                     injection.injected_positions.end());

        for (const auto& method : methods) {
            std::vector<double> scores;
            try {
                if (method == "tokenshap") {
                    const SamplingPlan plan = build_plan(
                        units.count(), config.ratio, mix_seed(case_seed, kSaltTokenshap), true);
                    scores = attribute(units, plan, backend, config.normalization).phi_norm;
                } else if (method == "random") {
                    scores = random_importance(units, mix_seed(case_seed, kSaltRandom)).scores;
                } else if (method == "prompt-engineer") {
                    scores =
                        prompt_engineer_importance(units, backend, config.pe_template_path).scores;
                } else {
                    throw Error("ConfigError", "unknown method: " + method);
                }
            } catch (const Error& e) {
                out.skip_notes.push_back("prompt " + std::to_string(p) + " seed " +
                                         std::to_string(seed) + " method " + method + ": " +
                                         e.what());
                continue;
            }

            for (int u = 1; u <= units.count(); ++u) {
                out.rows.push_back({method, static_cast<int>(p), seed, u,
                                    units.units[static_cast<std::size_t>(u - 1)],
                                    injected.count(u) > 0,
                                    scores[static_cast<std::size_t>(u - 1)]});
            }
        }
    });

    for (auto& out : outputs) {
        report.rows.insert(report.rows.end(), out.rows.begin(), out.rows.end());
        report.skip_notes.insert(report.skip_notes.end(), out.skip_notes.begin(),
                                 out.skip_notes.end());
    }
    report.skipped = report.skip_notes.size();

    for (const auto& method : methods) {
        report.summaries.push_back(summarize(method, report.rows));
    }
    return report;
}

ConvergenceReport run_convergence_experiment(const std::vector<std::string>& corpus,
                                             BackendClient& backend,
                                             const std::vector<double>& ratios,
                                             const std::vector<std::uint64_t>& seeds, int cap,
                                             bool both_conditions, int case_parallelism) {
    if (corpus.empty()) throw Error("ConfigError", "corpus is empty");
    if (ratios.empty()) throw Error("ConfigError", "no ratios given");
    if (seeds.empty()) throw Error("ConfigError", "no seeds given");

    ConvergenceReport report;
    report.config_echo = json{{"experiment", "converge"},
                              {"ratios", ratios},
                              {"seeds", seeds},
                              {"cap", cap},
                              {"both_conditions", both_conditions},
                              {"backend", backend.config().id()},
                              {"prompts", corpus.size()},
                              {"case_parallelism", case_parallelism}};

    std::vector<bool> conditions{true};
    if (both_conditions) conditions.push_back(false);

    struct PromptOutput {
        std::vector<ConvergenceRow> rows;
        std::vector<std::string> skip_notes;
    };
    std::vector<PromptOutput> outputs(corpus.size());

    for_each_case(corpus.size(), case_parallelism, [&](std::size_t p) {
        PromptOutput& out = outputs[p];
        PromptUnits units;
        AttributionResult exact;
        try {
            units = split(corpus[p]);
            if (units.count() < 2) throw TooFewUnitsError(units.count());
            exact = attribute_exact(units, backend, Normalization::l1, cap);
        } catch (const Error& e) {
            out.skip_notes.push_back("prompt " + std::to_string(p) + ": " + e.what());
            return;
        }

        for (const double ratio : ratios) {
            for (const bool with_first_order : conditions) {
                for (const std::uint64_t seed : seeds) {
                    const SamplingPlan plan =
                        build_plan(units.count(), ratio, mix_seed(seed, p), with_first_order);
                    const AttributionResult estimate =
                        attribute(units, plan, backend, Normalization::l1);
                    out.rows.push_back({static_cast<int>(p), ratio, with_first_order, seed,
                                        phi_cosine(estimate.phi_raw, exact.phi_raw),
                                        estimate.records.size()});
                }
            }
        }
    });

    for (auto& out : outputs) {
        report.rows.insert(report.rows.end(), out.rows.begin(), out.rows.end());
        report.skip_notes.insert(report.skip_notes.end(), out.skip_notes.begin(),
                                 out.skip_notes.end());
    }
    report.skipped = report.skip_notes.size();

    std::map<std::pair<double, bool>, std::pair<double, std::size_t>> buckets;
    for (const auto& row : report.rows) {
        auto& [sum, count] = buckets[{row.ratio, row.with_first_order}];
        sum += row.cosine_to_exact;
        ++count;
    }
    for (const auto& [key, value] : buckets) {
        report.aggregates.push_back(
            {key.first, key.second, value.first / static_cast<double>(value.second), value.second});
    }
    return report;
}

std::vector<std::string> load_corpus(const std::string& path_or_sample) {
    if (path_or_sample == "sample") return sample_corpus();

    std::ifstream in(path_or_sample, std::ios::binary);
    if (!in) throw IoError("cannot read corpus file: " + path_or_sample);

    std::vector<std::string> prompts;
    std::string line;
    int line_number = 0;
    bool jsonl = path_or_sample.ends_with(".jsonl") || path_or_sample.ends_with(".json");
    bool detected = jsonl;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (!detected) {
            jsonl = line[first] == '{';
            detected = true;
        }
        if (jsonl) {
            json doc;
            try {
                doc = json::parse(line);
            } catch (const json::exception& e) {
                throw IoError("corpus parse failure (line " + std::to_string(line_number) +
                              "): " + e.what());
            }
            std::string prompt;
            if (doc.contains("prompt") && doc["prompt"].is_string()) {
                prompt = doc["prompt"].get<std::string>();
            } else if (doc.contains("instruction") && doc["instruction"].is_string()) {
                prompt = doc["instruction"].get<std::string>();
            } else {
                throw IoError("corpus parse failure (line " + std::to_string(line_number) +
                              "): no \"prompt\" or \"instruction\" string field");
            }
            prompts.push_back(std::move(prompt));
        } else {
            prompts.push_back(line);
        }
    }
    if (prompts.empty()) throw IoError("corpus file has no prompts: " + path_or_sample);
    return prompts;
}

std::string report_tag(std::uint64_t seed, bool deterministic) {
    if (deterministic) return std::to_string(seed);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return std::string(buf) + "-" + std::to_string(seed);
}

ReportPaths write_injection_report(const InjectionReport& report, const std::string& out_dir,
                                   const std::string& tag) {
    fs::create_directories(out_dir);
    ReportPaths paths;
    paths.csv = (fs::path(out_dir) / ("inject-" + tag + ".csv")).string();
    paths.json = (fs::path(out_dir) / ("inject-" + tag + ".json")).string();
    paths.schema = (fs::path(out_dir) / ("inject-" + tag + ".schema.json")).string();

    {
        auto csv = open_output(paths.csv);
        csv << "method,group,prompt_index,seed,unit_index,unit,score\n";
        for (const auto& row : report.rows) {
            csv << csv_escape(row.method) << ',' << (row.injected ? "injected" : "real") << ','
                << row.prompt_index << ',' << row.seed << ',' << row.unit_index << ','
                << csv_escape(row.unit) << ',' << format_double(row.score) << '\n';
        }
    }
    {
        json summaries = json::array();
        for (const auto& s : report.summaries) summaries.push_back(summary_to_json(s));
        json doc{{"config", report.config_echo},
                 {"summaries", summaries},
                 {"skipped", report.skipped},
                 {"skip_notes", report.skip_notes}};
        open_output(paths.json) << doc.dump(2) << '\n';
    }
    {
        json schema{{"file", fs::path(paths.csv).filename().string()},
                    {"columns",
                     json::array({
                         json{{"name", "method"}, {"type", "string"},
                              {"description", "attribution method id"}},
                         json{{"name", "group"}, {"type", "string"},
                              {"description", "real or injected"}},
                         json{{"name", "prompt_index"}, {"type", "integer"},
                              {"description", "0-based index into the corpus"}},
                         json{{"name", "seed"}, {"type", "integer"},
                              {"description", "case seed from the seeds list"}},
                         json{{"name", "unit_index"}, {"type", "integer"},
                              {"description", "1-based unit position in the injected prompt"}},
                         json{{"name", "unit"}, {"type", "string"},
                              {"description", "unit text"}},
                         json{{"name", "score"}, {"type", "number"},
                              {"description", "importance score assigned by the method"}},
                     })},
                    {"notes", "std in the JSON summary is the population standard deviation"}};
        open_output(paths.schema) << schema.dump(2) << '\n';
    }
    return paths;
}

ReportPaths write_convergence_report(const ConvergenceReport& report, const std::string& out_dir,
                                     const std::string& tag) {
    fs::create_directories(out_dir);
    ReportPaths paths;
    paths.csv = (fs::path(out_dir) / ("converge-" + tag + ".csv")).string();
    paths.json = (fs::path(out_dir) / ("converge-" + tag + ".json")).string();
    paths.schema = (fs::path(out_dir) / ("converge-" + tag + ".schema.json")).string();

    {
        auto csv = open_output(paths.csv);
        csv << "prompt_index,ratio,condition,seed,cosine_to_exact,evaluated\n";
        for (const auto& row : report.rows) {
            csv << row.prompt_index << ',' << format_double(row.ratio) << ','
                << (row.with_first_order ? "with-first-order" : "without-first-order") << ','
                << row.seed << ',' << format_double(row.cosine_to_exact) << ',' << row.evaluated
                << '\n';
        }
    }
    {
        json aggregates = json::array();
        for (const auto& a : report.aggregates) {
            aggregates.push_back(json{{"ratio", a.ratio},
                                      {"condition", a.with_first_order ? "with-first-order"
                                                                       : "without-first-order"},
                                      {"mean_cosine", a.mean_cosine},
                                      {"count", a.count}});
        }
        json doc{{"config", report.config_echo},
                 {"aggregates", aggregates},
                 {"skipped", report.skipped},
                 {"skip_notes", report.skip_notes}};
        open_output(paths.json) << doc.dump(2) << '\n';
    }
    {
        json schema{{"file", fs::path(paths.csv).filename().string()},
                    {"columns",
                     json::array({
                         json{{"name", "prompt_index"}, {"type", "integer"},
                              {"description", "0-based index into the corpus"}},
                         json{{"name", "ratio"}, {"type", "number"},
                              {"description", "sampling ratio"}},
                         json{{"name", "condition"}, {"type", "string"},
                              {"description", "with-first-order or without-first-order"}},
                         json{{"name", "seed"}, {"type", "integer"},
                              {"description", "plan seed from the seeds list"}},
                         json{{"name", "cosine_to_exact"}, {"type", "number"},
                              {"description",
                               "cosine between estimated and exhaustive phi_raw vectors"}},
                         json{{"name", "evaluated"}, {"type", "integer"},
                              {"description", "combinations evaluated, baseline excluded"}},
                     })}};
        open_output(paths.schema) << schema.dump(2) << '\n';
    }
    return paths;
}

}  // namespace tokshap
