#include <doctest.h>

#include <cmath>

#include "support/reference_tfidf.hpp"
#include "tokshap/rng.hpp"
#include "tokshap/similarity.hpp"

using namespace tokshap;

TEST_CASE("term extraction: lowercase word runs, two bytes minimum") {
    CHECK(extract_terms("ab CD x y_z 12 9") ==
          std::vector<std::string>{"ab", "cd", "y_z", "12"});
    CHECK(extract_terms("x").empty());
    CHECK(extract_terms("...!?").empty());
    CHECK(extract_terms("don't stop") == std::vector<std::string>{"don", "stop"});
}

TEST_CASE("fit computes smoothed idf") {
    const TfidfModel model = tfidf_fit({"ab cd", "ab"});
    CHECK(model.doc_count == 2);
    REQUIRE(model.vocabulary.size() == 2);
    REQUIRE(model.vocabulary.count("ab") == 1);
    REQUIRE(model.vocabulary.count("cd") == 1);
    // idf(ab) = ln(3/3) + 1; idf(cd) = ln(3/2) + 1.
    CHECK(model.idf[model.vocabulary.at("ab")] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.idf[model.vocabulary.at("cd")] ==
          doctest::Approx(1.4054651081081644).epsilon(1e-12));
}

TEST_CASE("documents without terms are tolerated") {
    const TfidfModel model = tfidf_fit({"x"});
    CHECK(model.doc_count == 1);
    CHECK(model.vocabulary.empty());
}

TEST_CASE("identical documents give idf of exactly 1") {
    const TfidfModel model = tfidf_fit({"ab cd", "ab cd", "ab cd"});
    for (double idf : model.idf) CHECK(idf == 1.0);
}

TEST_CASE("transform weights are count times idf, L2 normalized") {
    const TfidfModel model = tfidf_fit({"ab cd", "ab"});
    const SparseVector vec = tfidf_transform(model, "ab cd");
    REQUIRE(vec.entries.size() == 2);
    CHECK(vec.entries[0].second == doctest::Approx(0.5797386715376657).epsilon(1e-12));
    CHECK(vec.entries[1].second == doctest::Approx(0.8148024746671689).epsilon(1e-12));

    double norm_sq = 0.0;
    for (const auto& [col, w] : vec.entries) norm_sq += w * w;
    CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("out-of-vocabulary terms are ignored; no-term docs give empty vectors") {
    const TfidfModel model = tfidf_fit({"ab cd", "ab"});
    CHECK(tfidf_transform(model, "zz qq").empty());
    CHECK(tfidf_transform(model, "").empty());
    // Repeated single term normalizes to weight 1 on that term.
    const SparseVector repeated = tfidf_transform(model, "ab ab");
    REQUIRE(repeated.entries.size() == 1);
    CHECK(repeated.entries[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cosine basics") {
    const TfidfModel model = tfidf_fit({"ab cd", "ab", "ef gh"});
    const SparseVector a = tfidf_transform(model, "ab cd");
    const SparseVector b = tfidf_transform(model, "ab");
    const SparseVector c = tfidf_transform(model, "ef gh");
    const SparseVector empty = tfidf_transform(model, "zz");

    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(a, c) == 0.0);  // disjoint supports
    CHECK(cosine(a, empty) == 0.0);
    CHECK(cosine(empty, empty) == 0.0);
    CHECK(cosine(a, b) == cosine(b, a));
}

TEST_CASE("cosine of the worked two-document example") {
    const std::vector<double> scores = value_of_subsets("ab cd", {"ab"});
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == doctest::Approx(0.5797386715376657).epsilon(1e-6));
}

TEST_CASE("value_of_subsets degenerate cases") {
    const auto same = value_of_subsets("ab cd", {"ab cd", "ab cd"});
    for (double s : same) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    const auto disjoint = value_of_subsets("ab cd", {"xx yy"});
    CHECK(disjoint[0] == 0.0);

    // Baseline with no terms at all: every score is 0.
    const auto no_terms = value_of_subsets("!", {"!", "ab"});
    CHECK(no_terms[0] == 0.0);
    CHECK(no_terms[1] == 0.0);
}

TEST_CASE("value_of_subsets matches the independent reference implementation") {
    const std::string baseline = "the quick brown fox jumps over the lazy dog";
    const std::vector<std::string> texts = {
        "a fast auburn fox leaped over a sleepy hound",
        "quick thinking saves the day",
        "the dog sleeps all day and all night",
        "foxes and hounds run through the quiet field",
    };
    const auto engine = value_of_subsets(baseline, texts);
    const auto oracle = reference_tfidf::value_scores(baseline, texts);
    REQUIRE(engine.size() == oracle.size());
    for (std::size_t i = 0; i < engine.size(); ++i) {
        CHECK(engine[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
    }
}

TEST_CASE("cosine scores stay in [0, 1] and duplication is scale invariant") {
    Rng rng(2024);
    const std::vector<std::string> words = {"ab", "cd", "ef", "gh", "ij", "kl", "mn"};
    for (int trial = 0; trial < 200; ++trial) {
        auto make_doc = [&](int len) {
            std::string doc;
            for (int w = 0; w < len; ++w) {
                if (!doc.empty()) doc += ' ';
                doc += words[rng.below(words.size())];
            }
            return doc;
        };
        const std::string baseline = make_doc(3 + static_cast<int>(rng.below(5)));
        const std::string text = make_doc(1 + static_cast<int>(rng.below(6)));

        const auto scores = value_of_subsets(baseline, {text, text + " " + text});
        CHECK(scores[0] >= 0.0);
        CHECK(scores[0] <= 1.0 + 1e-12);
        // Doubling all term counts leaves the normalized vector unchanged.
        CHECK(scores[1] == doctest::Approx(scores[0]).epsilon(1e-12));
    }
}

TEST_CASE("dense cosine handles zero vectors and mirrors itself") {
    CHECK(dense_cosine({0.0, 0.0}, {1.0, 2.0}) == 0.0);
    CHECK(dense_cosine({}, {}) == 0.0);
    CHECK(dense_cosine({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dense_cosine({1.0, 0.0}, {0.0, 1.0}) == 0.0);
    CHECK(dense_cosine({1.0, 1.0}, {-1.0, -1.0}) == doctest::Approx(-1.0).epsilon(1e-12));
}
