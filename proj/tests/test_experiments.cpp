#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "tokshap/assets.hpp"
#include "tokshap/errors.hpp"
#include "tokshap/experiments.hpp"
#include "tokshap/text_units.hpp"

using namespace tokshap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("tokshap-exp-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("inject_words with one word lands in one of the n+1 gaps") {
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const InjectionCase c = inject_words("a b", {"zxq"}, 1, seed);
        seen.insert(c.injected_prompt);
        CHECK(c.injected_words == std::vector<std::string>{"zxq"});
        REQUIRE(c.injected_positions.size() == 1);
        const PromptUnits units = split(c.injected_prompt);
        CHECK(units.count() == 3);
        CHECK(units.units[static_cast<std::size_t>(c.injected_positions[0] - 1)] == "zxq");
    }
    CHECK(seen == std::set<std::string>{"zxq a b", "a zxq b", "a b zxq"});
}

TEST_CASE("inject_words is deterministic per seed") {
    const auto a = inject_words("one two three", default_word_pool(), 3, 42);
    const auto b = inject_words("one two three", default_word_pool(), 3, 42);
    CHECK(a.injected_prompt == b.injected_prompt);
    CHECK(a.injected_positions == b.injected_positions);
    CHECK(a.injected_words == b.injected_words);
}

TEST_CASE("inject_words structural invariants over 100 seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const InjectionCase c = inject_words("v w x y z", default_word_pool(), 3, seed);
        const PromptUnits units = split(c.injected_prompt);
        CHECK(units.count() == 8);
        REQUIRE(c.injected_positions.size() == 3);
        std::set<int> distinct(c.injected_positions.begin(), c.injected_positions.end());
        CHECK(distinct.size() == 3);
        for (int pos : c.injected_positions) {
            CHECK(pos >= 1);
            CHECK(pos <= 8);
        }
        // Removing the injected positions leaves the original prompt.
        std::string rest;
        for (int i = 1; i <= units.count(); ++i) {
            if (distinct.count(i)) continue;
            if (!rest.empty()) rest += ' ';
            rest += units.units[static_cast<std::size_t>(i - 1)];
        }
        CHECK(rest == "v w x y z");
    }
}

TEST_CASE("inject_words validates arguments") {
    CHECK_THROWS_AS(inject_words("a b", {}, 1, 1), Error);
    CHECK_THROWS_AS(inject_words("a b", {"x"}, 0, 1), Error);
    CHECK_THROWS_AS(inject_words("   ", {"x"}, 1, 1), EmptyPromptError);
}

TEST_CASE("random baseline assigns statistically equal importance to both groups") {
    const std::vector<std::string> corpus = {
        "quick brown foxes jump over lazy dogs daily",
        "steady rivers carve deep canyons through stone",
        "bright lanterns guide weary travelers home safely",
    };
    InjectionConfig config;
    config.k = 2;
    config.seeds.clear();
    for (std::uint64_t s = 1; s <= 40; ++s) config.seeds.push_back(s);

    BackendClient backend(BackendConfig::from_spec("mock:echo"));
    const InjectionReport report =
        run_injection_experiment(corpus, {"random"}, backend, config);

    REQUIRE(report.summaries.size() == 1);
    const MethodSummary& s = report.summaries[0];
    CHECK(s.injected_count >= 200);
    CHECK(std::fabs(s.delta_mean) <= 0.05);
    CHECK(s.delta_mean == s.mean_real - s.mean_injected);  // exact by construction
}

TEST_CASE("tokenshap separates injected stoplist words from real words") {
    const std::vector<std::string> corpus = {
        "quick brown foxes jump over lazy dogs",
        "steady rivers carve deep canyons",
    };
    InjectionConfig config;
    config.k = 2;
    config.ratio = 0.0;
    config.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    BackendClient backend(BackendConfig::from_spec("mock:drop-stoplist"));
    const InjectionReport report =
        run_injection_experiment(corpus, {"tokenshap"}, backend, config);

    REQUIRE(report.summaries.size() == 1);
    CHECK(report.skipped == 0);
    CHECK(report.summaries[0].delta_mean > 0.0);
    CHECK(report.summaries[0].mean_injected < report.summaries[0].mean_real);
}

TEST_CASE("per-sample rows reconcile exactly with the summaries") {
    const std::vector<std::string> corpus = {"alpha beta gamma delta epsilon"};
    InjectionConfig config;
    config.k = 2;
    config.seeds = {3, 5, 8};
    BackendClient backend(BackendConfig::from_spec("mock:drop-stoplist"));
    const InjectionReport report =
        run_injection_experiment(corpus, {"tokenshap", "random"}, backend, config);

    for (const auto& summary : report.summaries) {
        double real_sum = 0.0, inj_sum = 0.0;
        std::size_t real_n = 0, inj_n = 0;
        for (const auto& row : report.rows) {
            if (row.method != summary.method) continue;
            if (row.injected) {
                inj_sum += row.score;
                ++inj_n;
            } else {
                real_sum += row.score;
                ++real_n;
            }
        }
        REQUIRE(real_n == summary.real_count);
        REQUIRE(inj_n == summary.injected_count);
        const double mean_real = real_sum / static_cast<double>(real_n);
        const double mean_inj = inj_sum / static_cast<double>(inj_n);
        CHECK(mean_real == doctest::Approx(summary.mean_real).epsilon(1e-12));
        CHECK(mean_inj == doctest::Approx(summary.mean_injected).epsilon(1e-12));

        double sq_real = 0.0, sq_inj = 0.0;
        for (const auto& row : report.rows) {
            if (row.method != summary.method) continue;
            const double d = row.score - (row.injected ? mean_inj : mean_real);
            (row.injected ? sq_inj : sq_real) += d * d;
        }
        CHECK(std::sqrt(sq_real / real_n) == doctest::Approx(summary.std_real).epsilon(1e-12));
        CHECK(std::sqrt(sq_inj / inj_n) == doctest::Approx(summary.std_injected).epsilon(1e-12));
    }
}

TEST_CASE("experiment reports are deterministic") {
    const std::vector<std::string> corpus = {"alpha beta gamma delta"};
    InjectionConfig config;
    config.seeds = {11, 12};
    BackendClient b1(BackendConfig::from_spec("mock:drop-stoplist"));
    BackendClient b2(BackendConfig::from_spec("mock:drop-stoplist"));
    const auto r1 = run_injection_experiment(corpus, {"tokenshap", "random"}, b1, config);
    const auto r2 = run_injection_experiment(corpus, {"tokenshap", "random"}, b2, config);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].score == r2.rows[i].score);
        CHECK(r1.rows[i].unit == r2.rows[i].unit);
    }
}

TEST_CASE("case parallelism changes nothing in the report") {
    const std::vector<std::string> corpus = {
        "quick brown foxes jump", "steady rivers carve deep canyons",
        "bright lanterns guide weary travelers",
    };
    InjectionConfig serial;
    serial.k = 2;
    serial.seeds = {1, 2, 3, 4};
    InjectionConfig parallel = serial;
    parallel.case_parallelism = 4;

    BackendClient b1(BackendConfig::from_spec("mock:drop-stoplist"));
    BackendClient b2(BackendConfig::from_spec("mock:drop-stoplist"));
    const auto r1 = run_injection_experiment(corpus, {"tokenshap", "random"}, b1, serial);
    const auto r2 = run_injection_experiment(corpus, {"tokenshap", "random"}, b2, parallel);

    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].method == r2.rows[i].method);
        CHECK(r1.rows[i].prompt_index == r2.rows[i].prompt_index);
        CHECK(r1.rows[i].seed == r2.rows[i].seed);
        CHECK(r1.rows[i].unit_index == r2.rows[i].unit_index);
        CHECK(r1.rows[i].score == r2.rows[i].score);
    }
    for (std::size_t m = 0; m < r1.summaries.size(); ++m) {
        CHECK(r1.summaries[m].delta_mean == r2.summaries[m].delta_mean);
        CHECK(r1.summaries[m].delta_std == r2.summaries[m].delta_std);
    }

    BackendClient b3(BackendConfig::from_spec("mock:sorted-signature"));
    BackendClient b4(BackendConfig::from_spec("mock:sorted-signature"));
    const auto c1 = run_convergence_experiment(corpus, b3, {0.0, 1.0}, {1, 2});
    const auto c2 = run_convergence_experiment(corpus, b4, {0.0, 1.0}, {1, 2},
                                               kDefaultEnumerationCap, false, 3);
    REQUIRE(c1.rows.size() == c2.rows.size());
    for (std::size_t i = 0; i < c1.rows.size(); ++i) {
        CHECK(c1.rows[i].prompt_index == c2.rows[i].prompt_index);
        CHECK(c1.rows[i].cosine_to_exact == c2.rows[i].cosine_to_exact);
    }
}

TEST_CASE("unknown methods and failing cases are skipped with notes") {
    const std::vector<std::string> corpus = {"alpha beta gamma"};
    InjectionConfig config;
    config.seeds = {1};
    BackendClient backend(BackendConfig::from_spec("mock:echo"));
    // prompt-engineer against echo cannot parse ratings -> skipped, not fatal.
    const auto report =
        run_injection_experiment(corpus, {"random", "prompt-engineer"}, backend, config);
    CHECK(report.skipped == 1);
    REQUIRE(report.skip_notes.size() == 1);
    CHECK(report.skip_notes[0].find("prompt-engineer") != std::string::npos);
    // The random rows are still present.
    CHECK(!report.rows.empty());
}

TEST_CASE("convergence at ratio 1.0 matches the exact vector perfectly") {
    const std::vector<std::string> corpus = {
        "quick brown foxes jump", "steady rivers carve deep canyons",
    };
    BackendClient backend(BackendConfig::from_spec("mock:sorted-signature"));
    const ConvergenceReport report =
        run_convergence_experiment(corpus, backend, {1.0}, {1, 2, 3});
    REQUIRE(report.aggregates.size() == 1);
    CHECK(report.aggregates[0].mean_cosine == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& row : report.rows) {
        CHECK(row.cosine_to_exact == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("convergence at ratio 0.0 uses exactly n evaluations per row") {
    const std::vector<std::string> corpus = {"aa bb cc dd ee ff"};
    BackendClient backend(BackendConfig::from_spec("mock:sorted-signature"));
    const ConvergenceReport report =
        run_convergence_experiment(corpus, backend, {0.0}, {4, 5});
    for (const auto& row : report.rows) {
        CHECK(row.evaluated == 6);
        CHECK(row.with_first_order);
    }
}

TEST_CASE("both conditions double the aggregate rows") {
    const std::vector<std::string> corpus = {"aa bb cc dd"};
    BackendClient backend(BackendConfig::from_spec("mock:sorted-signature"));
    const ConvergenceReport report = run_convergence_experiment(
        corpus, backend, {0.0, 0.5, 1.0}, {1, 2}, kDefaultEnumerationCap, true);
    CHECK(report.aggregates.size() == 6);  // 3 ratios x 2 conditions
    std::size_t with = 0, without = 0;
    for (const auto& row : report.rows) {
        (row.with_first_order ? with : without) += 1;
    }
    CHECK(with == without);
}

TEST_CASE("prompts over the cap are skipped with a note") {
    std::string huge;
    for (int i = 0; i < 20; ++i) huge += "w" + std::to_string(i) + " ";
    const std::vector<std::string> corpus = {"aa bb cc", huge};
    BackendClient backend(BackendConfig::from_spec("mock:echo"));
    const ConvergenceReport report = run_convergence_experiment(corpus, backend, {1.0}, {1});
    CHECK(report.skipped == 1);
    REQUIRE(report.skip_notes.size() == 1);
    CHECK(report.skip_notes[0].find("prompt 1") != std::string::npos);
    CHECK(!report.rows.empty());
}

TEST_CASE("corpus loading: plain text, jsonl, sample, and errors") {
    TempDir dir;

    const auto plain_path = (dir.path / "plain.txt").string();
    std::ofstream(plain_path) << "first prompt\n\nsecond prompt\n";
    const auto plain = load_corpus(plain_path);
    CHECK(plain == std::vector<std::string>{"first prompt", "second prompt"});

    const auto jsonl_path = (dir.path / "corpus.jsonl").string();
    std::ofstream(jsonl_path) << R"({"prompt": "from prompt field"})" << "\n"
                              << R"({"instruction": "from instruction field"})" << "\n";
    const auto jsonl = load_corpus(jsonl_path);
    CHECK(jsonl == std::vector<std::string>{"from prompt field", "from instruction field"});

    CHECK(load_corpus("sample").size() == 30);

    const auto broken_path = (dir.path / "broken.jsonl").string();
    std::ofstream(broken_path) << R"({"prompt": "ok"})" << "\n" << "{ nope\n";
    try {
        load_corpus(broken_path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    const auto empty_path = (dir.path / "empty.txt").string();
    std::ofstream(empty_path) << "";
    CHECK_THROWS_AS(load_corpus(empty_path), IoError);
    CHECK_THROWS_AS(load_corpus((dir.path / "missing.txt").string()), IoError);
}

TEST_CASE("report files are written with schema documentation") {
    TempDir dir;
    const std::vector<std::string> corpus = {"alpha beta gamma delta"};
    InjectionConfig config;
    config.seeds = {21};
    BackendClient backend(BackendConfig::from_spec("mock:drop-stoplist"));
    const auto report = run_injection_experiment(corpus, {"tokenshap"}, backend, config);
    const auto paths = write_injection_report(report, dir.path.string(), "21");

    CHECK(fs::exists(paths.csv));
    CHECK(fs::exists(paths.json));
    CHECK(fs::exists(paths.schema));
    CHECK(paths.csv.find("inject-21.csv") != std::string::npos);

    std::ifstream csv(paths.csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "method,group,prompt_index,seed,unit_index,unit,score");
    std::size_t data_lines = 0;
    for (std::string line; std::getline(csv, line);) {
        if (!line.empty()) ++data_lines;
    }
    CHECK(data_lines == report.rows.size());

    const auto conv_corpus = std::vector<std::string>{"aa bb cc"};
    BackendClient backend2(BackendConfig::from_spec("mock:echo"));
    const auto conv = run_convergence_experiment(conv_corpus, backend2, {0.0, 1.0}, {21});
    const auto conv_paths = write_convergence_report(conv, dir.path.string(), "21");
    CHECK(fs::exists(conv_paths.csv));
    CHECK(fs::exists(conv_paths.json));
    CHECK(fs::exists(conv_paths.schema));
}

TEST_CASE("report tags are timestamp-free in deterministic mode") {
    CHECK(report_tag(42, true) == "42");
    const std::string tagged = report_tag(42, false);
    CHECK(tagged.size() > 3);
    CHECK(tagged.find("-42") != std::string::npos);
}
