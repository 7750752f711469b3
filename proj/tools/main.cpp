#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokshap/assets.hpp"
#include "tokshap/baselines.hpp"
#include "tokshap/errors.hpp"
#include "tokshap/experiments.hpp"
#include "tokshap/model_backend.hpp"
#include "tokshap/shapley.hpp"
#include "tokshap/similarity.hpp"
#include "tokshap/subset_sampler.hpp"
#include "tokshap/text_units.hpp"
#include "tokshap/visualization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;
constexpr int kExitInput = 3;

struct BackendFlags {
    std::string spec = "mock:echo";
    std::string base_url = "http://localhost:11434";
    std::string model;
    double temperature = 0.0;
    int timeout_ms = 30000;
    int retries = 2;
    int concurrency = 4;
    std::string cache_dir;
    bool no_cache = false;
};

struct OutputFlags {
    std::string out;
    std::string html;
    bool ansi = false;
    bool no_color = false;
    int width = 80;
    bool deterministic = false;
    bool json_errors = false;
    bool verbose = false;
};

std::string default_cache_dir() {
    if (const char* env = std::getenv("TOKSHAP_CACHE_DIR")) return env;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME")) {
        return (fs::path(xdg) / "tokshap").string();
    }
    if (const char* home = std::getenv("HOME")) {
        return (fs::path(home) / ".cache" / "tokshap").string();
    }
    return ".tokshap-cache";
}

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--backend", flags.spec,
                    "Backend spec: mock:echo | mock:constant:<text> | "
                    "mock:drop-stoplist[:w1,w2] | mock:sorted-signature | "
                    "openai-compatible | ollama")
        ->capture_default_str();
    cmd->add_option("--base-url", flags.base_url, "Base URL for HTTP backends")
        ->capture_default_str();
    cmd->add_option("--model", flags.model, "Model name for HTTP backends");
    cmd->add_option("--temperature", flags.temperature, "Sampling temperature")
        ->capture_default_str();
    cmd->add_option("--timeout-ms", flags.timeout_ms, "Per-request timeout")
        ->capture_default_str();
    cmd->add_option("--retries", flags.retries, "Retries on transport errors and 429/5xx")
        ->capture_default_str();
    cmd->add_option("--concurrency", flags.concurrency, "Max concurrent model calls")
        ->capture_default_str();
    cmd->add_option("--cache-dir", flags.cache_dir, "Response cache directory");
    cmd->add_flag("--no-cache", flags.no_cache, "Disable the response cache");
}

void add_output_flags(CLI::App* cmd, OutputFlags& flags) {
    cmd->add_option("--out", flags.out, "Write the JSON result to a file instead of stdout");
    cmd->add_option("--html", flags.html, "Also write an HTML heatmap to this path");
    cmd->add_flag("--ansi", flags.ansi, "Print a terminal heatmap");
    cmd->add_flag("--no-color", flags.no_color, "Disable ANSI colors in the heatmap");
    cmd->add_option("--width", flags.width, "Heatmap wrap width")->capture_default_str();
    cmd->add_flag("--deterministic", flags.deterministic,
                  "Suppress timestamps for byte-reproducible output");
    cmd->add_flag("--json-errors", flags.json_errors, "Emit machine-readable errors on stderr");
    cmd->add_flag("-v,--verbose", flags.verbose, "Log run configuration to stderr");
}

tokshap::BackendConfig make_backend_config(const BackendFlags& flags) {
    tokshap::BackendConfig config = tokshap::BackendConfig::from_spec(flags.spec);
    config.base_url = flags.base_url;
    config.model_name = flags.model;
    config.temperature = flags.temperature;
    config.timeout_ms = flags.timeout_ms;
    config.max_retries = flags.retries;
    config.max_concurrency = flags.concurrency;
    if (flags.no_cache) {
        config.cache_dir.clear();
    } else {
        config.cache_dir = flags.cache_dir.empty() ? default_cache_dir() : flags.cache_dir;
    }
    return config;
}

std::string read_prompt(const std::string& prompt, const std::string& prompt_file) {
    if (!prompt_file.empty()) {
        std::ifstream in(prompt_file, std::ios::binary);
        if (!in) throw tokshap::IoError("cannot read prompt file: " + prompt_file);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        return text;
    }
    return prompt;
}

std::uint64_t generate_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Seed lists accept "1..50" ranges and comma lists ("1,7,13").
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        const auto dots = part.find("..");
        if (dots != std::string::npos) {
            const std::uint64_t lo = std::stoull(part.substr(0, dots));
            const std::uint64_t hi = std::stoull(part.substr(dots + 2));
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        } else {
            seeds.push_back(std::stoull(part));
        }
    }
    if (seeds.empty()) throw tokshap::Error("ConfigError", "no seeds in: " + spec);
    return seeds;
}

std::vector<double> parse_ratios(const std::string& spec) {
    std::vector<double> ratios;
    std::stringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        ratios.push_back(std::stod(part));
    }
    if (ratios.empty()) throw tokshap::Error("ConfigError", "no ratios in: " + spec);
    return ratios;
}

void emit_result(const tokshap::AttributionResult& result, const OutputFlags& flags) {
    const std::string doc = result.to_json(!flags.deterministic).dump(2) + "\n";
    if (flags.out.empty()) {
        std::cout << doc;
    } else {
        std::ofstream out(flags.out, std::ios::binary | std::ios::trunc);
        if (!out) throw tokshap::IoError("cannot open for writing: " + flags.out);
        out << doc;
    }
    if (!flags.html.empty()) tokshap::render_html(result, flags.html);
    if (flags.ansi) {
        // The JSON document owns stdout; route the heatmap to stderr unless
        // the document went to a file.
        const bool to_stdout = !flags.out.empty();
        FILE* dest = to_stdout ? stdout : stderr;
        const bool tty = isatty(fileno(dest)) != 0;
        tokshap::AnsiOptions opts{flags.width, !flags.no_color && tty};
        std::fputs(tokshap::render_ansi(result, opts).c_str(), dest);
    }
}

void print_injection_summary(const tokshap::InjectionReport& report) {
    std::printf("%-16s %8s %8s %12s %12s %12s %12s\n", "method", "real", "injected", "mean_real",
                "mean_inj", "delta_mean", "delta_std");
    for (const auto& s : report.summaries) {
        std::printf("%-16s %8zu %8zu %12.6f %12.6f %12.6f %12.6f\n", s.method.c_str(),
                    s.real_count, s.injected_count, s.mean_real, s.mean_injected, s.delta_mean,
                    s.delta_std);
    }
    if (report.skipped > 0) {
        std::fprintf(stderr, "skipped %zu case(s)\n", report.skipped);
        for (const auto& note : report.skip_notes) std::fprintf(stderr, "  %s\n", note.c_str());
    }
}

void print_convergence_summary(const tokshap::ConvergenceReport& report) {
    std::printf("%-8s %-22s %12s %8s\n", "ratio", "condition", "mean_cosine", "count");
    for (const auto& a : report.aggregates) {
        std::printf("%-8.3g %-22s %12.6f %8zu\n", a.ratio,
                    a.with_first_order ? "with-first-order" : "without-first-order", a.mean_cosine,
                    a.count);
    }
    if (report.skipped > 0) {
        std::fprintf(stderr, "skipped %zu prompt(s)\n", report.skipped);
        for (const auto& note : report.skip_notes) std::fprintf(stderr, "  %s\n", note.c_str());
    }
}

int error_exit(const tokshap::Error& e, bool json_errors) {
    if (json_errors) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    } else {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    }
    return dynamic_cast<const tokshap::BackendError*>(&e) != nullptr ? kExitBackend : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Token-level Shapley attribution for LLM prompts"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from a TOML file");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Monte Carlo attribution for one prompt");
    std::string prompt, prompt_file, splitter = "whitespace", normalization = "l1";
    double ratio = 0.0;
    std::string seed_str;
    bool no_first_order = false;
    BackendFlags backend_flags;
    OutputFlags output_flags;
    auto* prompt_opt = analyze->add_option("--prompt", prompt, "Prompt text");
    auto* prompt_file_opt =
        analyze->add_option("--prompt-file", prompt_file, "Read the prompt from a file");
    prompt_opt->excludes(prompt_file_opt);
    analyze->add_option("--splitter", splitter, "whitespace | pattern:<regex>")
        ->capture_default_str();
    analyze->add_option("--ratio", ratio, "Sampling ratio in [0,1]")->capture_default_str();
    analyze->add_option("--seed", seed_str, "RNG seed (default: generated and echoed)");
    analyze->add_flag("--no-first-order", no_first_order,
                      "Do not force the first-order omission combinations");
    analyze->add_option("--normalization", normalization, "none | l1 | minmax")
        ->capture_default_str();
    add_backend_flags(analyze, backend_flags);
    add_output_flags(analyze, output_flags);

    // exact
    auto* exact = app.add_subcommand("exact", "Exhaustive attribution over all subsets");
    std::string x_prompt, x_prompt_file, x_splitter = "whitespace", x_normalization = "l1";
    int x_cap = tokshap::kDefaultEnumerationCap;
    BackendFlags x_backend_flags;
    OutputFlags x_output_flags;
    auto* x_prompt_opt = exact->add_option("--prompt", x_prompt, "Prompt text");
    auto* x_prompt_file_opt =
        exact->add_option("--prompt-file", x_prompt_file, "Read the prompt from a file");
    x_prompt_opt->excludes(x_prompt_file_opt);
    exact->add_option("--splitter", x_splitter, "whitespace | pattern:<regex>")
        ->capture_default_str();
    exact->add_option("--cap", x_cap, "Enumeration cap on unit count")->capture_default_str();
    exact->add_option("--normalization", x_normalization, "none | l1 | minmax")
        ->capture_default_str();
    add_backend_flags(exact, x_backend_flags);
    add_output_flags(exact, x_output_flags);

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Run an evaluation protocol");
    experiment->require_subcommand(1);

    auto* inject = experiment->add_subcommand("inject", "Random-word injection comparison");
    std::string i_corpus = "sample", i_methods = "tokenshap,random", i_seeds = "1..10";
    std::string i_out_dir = ".", i_word_pool, i_pe_template, i_normalization = "l1";
    int i_k = 2;
    double i_ratio = 0.0;
    BackendFlags i_backend_flags;
    bool i_deterministic = false, i_json_errors = false;
    inject->add_option("--corpus", i_corpus, "Corpus file (JSONL or plain text) or \"sample\"")
        ->capture_default_str();
    inject->add_option("--methods", i_methods, "Comma list: tokenshap,random,prompt-engineer")
        ->capture_default_str();
    inject->add_option("--k", i_k, "Words injected per case")->capture_default_str();
    inject->add_option("--ratio", i_ratio, "Sampling ratio for tokenshap")->capture_default_str();
    inject->add_option("--seeds", i_seeds, "Seed list: \"1..50\" or \"1,7,13\"")
        ->capture_default_str();
    inject->add_option("--out-dir", i_out_dir, "Report output directory")->capture_default_str();
    inject->add_option("--word-pool", i_word_pool, "Injection word list file (one per line)");
    inject->add_option("--pe-template", i_pe_template, "Prompt-engineer template file");
    inject->add_option("--normalization", i_normalization, "none | l1 | minmax")
        ->capture_default_str();
    inject->add_flag("--deterministic", i_deterministic, "Timestamp-free report names");
    inject->add_flag("--json-errors", i_json_errors, "Emit machine-readable errors on stderr");
    int i_case_parallelism = 1;
    inject->add_option("--case-parallelism", i_case_parallelism,
                       "Cases run concurrently (reports stay in case order)")
        ->capture_default_str();
    add_backend_flags(inject, i_backend_flags);

    auto* converge = experiment->add_subcommand("converge", "Estimate-vs-exact convergence sweep");
    std::string c_corpus = "sample", c_ratios = "0,0.2,0.4,0.6,0.8,1.0", c_seeds = "1..5";
    std::string c_out_dir = ".";
    int c_cap = tokshap::kDefaultEnumerationCap;
    bool c_both = false, c_deterministic = false, c_json_errors = false;
    BackendFlags c_backend_flags;
    converge->add_option("--corpus", c_corpus, "Corpus file or \"sample\"")->capture_default_str();
    converge->add_option("--ratios", c_ratios, "Comma list of sampling ratios")
        ->capture_default_str();
    converge->add_option("--seeds", c_seeds, "Seed list: \"1..5\" or \"1,7\"")
        ->capture_default_str();
    converge->add_option("--cap", c_cap, "Enumeration cap")->capture_default_str();
    converge->add_flag("--with-and-without-first-order", c_both,
                       "Run both first-order conditions");
    converge->add_option("--out-dir", c_out_dir, "Report output directory")->capture_default_str();
    converge->add_flag("--deterministic", c_deterministic, "Timestamp-free report names");
    converge->add_flag("--json-errors", c_json_errors, "Emit machine-readable errors on stderr");
    int c_case_parallelism = 1;
    converge->add_option("--case-parallelism", c_case_parallelism,
                         "Prompts run concurrently (reports stay in prompt order)")
        ->capture_default_str();
    add_backend_flags(converge, c_backend_flags);

    // cache
    auto* cache = app.add_subcommand("cache", "Inspect or clear the response cache");
    cache->require_subcommand(1);
    auto* cache_stats = cache->add_subcommand("stats", "Entry count and total bytes");
    auto* cache_clear = cache->add_subcommand("clear", "Remove all cache entries");
    std::string cache_dir_flag;
    cache_stats->add_option("--cache-dir", cache_dir_flag, "Cache directory");
    cache_clear->add_option("--cache-dir", cache_dir_flag, "Cache directory");

    CLI11_PARSE(app, argc, argv);

    bool json_errors = output_flags.json_errors || x_output_flags.json_errors || i_json_errors ||
                       c_json_errors;
    try {
        if (*analyze) {
            const std::string text = read_prompt(prompt, prompt_file);
            if (text.empty()) {
                std::cerr << "error: --prompt or --prompt-file is required\n"
                          << analyze->help() << "\n";
                return kExitUsage;
            }
            const std::uint64_t seed = seed_str.empty() ? generate_seed() : std::stoull(seed_str);
            const tokshap::PromptUnits units = tokshap::split(text, splitter);
            const tokshap::SamplingPlan plan =
                tokshap::build_plan(units.count(), ratio, seed, !no_first_order);
            tokshap::BackendClient client(make_backend_config(backend_flags));
            if (output_flags.verbose) {
                std::fprintf(stderr, "n=%d plan=%zu ratio=%g seed=%llu backend=%s cache=%s\n",
                             units.count(), plan.combinations.size(), ratio,
                             static_cast<unsigned long long>(seed),
                             client.config().id().c_str(),
                             client.config().cache_dir.empty() ? "(off)"
                                                               : client.config().cache_dir.c_str());
            }
            const tokshap::AttributionResult result = tokshap::attribute(
                units, plan, client, tokshap::normalization_from_string(normalization));
            emit_result(result, output_flags);
            return kExitOk;
        }

        if (*exact) {
            const std::string text = read_prompt(x_prompt, x_prompt_file);
            if (text.empty()) {
                std::cerr << "error: --prompt or --prompt-file is required\n"
                          << exact->help() << "\n";
                return kExitUsage;
            }
            const tokshap::PromptUnits units = tokshap::split(text, x_splitter);
            tokshap::BackendClient client(make_backend_config(x_backend_flags));
            if (x_output_flags.verbose) {
                std::fprintf(stderr, "n=%d cap=%d backend=%s\n", units.count(), x_cap,
                             client.config().id().c_str());
            }
            const tokshap::AttributionResult result = tokshap::attribute_exact(
                units, client, tokshap::normalization_from_string(x_normalization), x_cap);
            emit_result(result, x_output_flags);
            return kExitOk;
        }

        if (*inject) {
            const auto corpus = tokshap::load_corpus(i_corpus);
            std::vector<std::string> methods;
            std::stringstream in(i_methods);
            std::string m;
            while (std::getline(in, m, ',')) {
                if (!m.empty()) methods.push_back(m);
            }
            std::vector<std::string> pool;
            if (!i_word_pool.empty()) {
                std::ifstream pf(i_word_pool);
                if (!pf) throw tokshap::IoError("cannot read word pool: " + i_word_pool);
                std::string word;
                while (std::getline(pf, word)) {
                    if (!word.empty() && word.back() == '\r') word.pop_back();
                    if (!word.empty()) pool.push_back(word);
                }
            }
            tokshap::InjectionConfig config;
            config.k = i_k;
            config.ratio = i_ratio;
            config.seeds = parse_seeds(i_seeds);
            config.normalization = tokshap::normalization_from_string(i_normalization);
            config.pe_template_path = i_pe_template;
            config.case_parallelism = i_case_parallelism;
            tokshap::BackendClient client(make_backend_config(i_backend_flags));
            const auto report =
                tokshap::run_injection_experiment(corpus, methods, client, config, pool);
            const auto paths = tokshap::write_injection_report(
                report, i_out_dir, tokshap::report_tag(config.seeds.front(), i_deterministic));
            print_injection_summary(report);
            std::fprintf(stderr, "wrote %s, %s, %s\n", paths.csv.c_str(), paths.json.c_str(),
                         paths.schema.c_str());
            return kExitOk;
        }

        if (*converge) {
            const auto corpus = tokshap::load_corpus(c_corpus);
            const auto ratios = parse_ratios(c_ratios);
            const auto seeds = parse_seeds(c_seeds);
            tokshap::BackendClient client(make_backend_config(c_backend_flags));
            const auto report = tokshap::run_convergence_experiment(
                corpus, client, ratios, seeds, c_cap, c_both, c_case_parallelism);
            const auto paths = tokshap::write_convergence_report(
                report, c_out_dir, tokshap::report_tag(seeds.front(), c_deterministic));
            print_convergence_summary(report);
            std::fprintf(stderr, "wrote %s, %s, %s\n", paths.csv.c_str(), paths.json.c_str(),
                         paths.schema.c_str());
            return kExitOk;
        }

        if (*cache_stats || *cache_clear) {
            const std::string dir = cache_dir_flag.empty() ? default_cache_dir() : cache_dir_flag;
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) throw tokshap::IoError("cannot access cache dir " + dir + ": " + ec.message());
            std::size_t entries = 0;
            std::uintmax_t bytes = 0;
            for (const auto& entry : fs::directory_iterator(dir, ec)) {
                if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
                if (*cache_clear) {
                    std::error_code rm_ec;
                    fs::remove(entry.path(), rm_ec);
                    if (rm_ec) {
                        throw tokshap::IoError("cannot remove " + entry.path().string() + ": " +
                                               rm_ec.message());
                    }
                } else {
                    ++entries;
                    bytes += entry.file_size();
                }
            }
            if (ec) throw tokshap::IoError("cannot list cache dir " + dir + ": " + ec.message());
            if (*cache_stats) {
                std::printf("%zu entries, %ju bytes in %s\n", entries, bytes, dir.c_str());
            } else {
                std::printf("cleared %s\n", dir.c_str());
            }
            return kExitOk;
        }
    } catch (const tokshap::Error& e) {
        return error_exit(e, json_errors);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}
