#include "tokshap/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tokshap {
namespace {

bool is_term_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c >= 0x80;
}

char lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> extract_terms(const std::string& doc) {
    std::vector<std::string> terms;
    std::string current;
    for (unsigned char c : doc) {
        if (is_term_byte(c)) {
            current += lower_ascii(c);
        } else if (!current.empty()) {
            if (current.size() >= 2) terms.push_back(current);
            current.clear();
        }
    }
    if (current.size() >= 2) terms.push_back(current);
    return terms;
}

TfidfModel tfidf_fit(const std::vector<std::string>& corpus) {
    TfidfModel model;
    model.doc_count = static_cast<int>(corpus.size());

    std::map<std::string, int> df;
    for (const auto& doc : corpus) {
        std::set<std::string> seen;
        for (auto& term : extract_terms(doc)) seen.insert(std::move(term));
        for (const auto& term : seen) ++df[term];
    }

    // std::map iteration assigns columns in sorted term order, which makes
    // transforms independent of corpus order.
    int column = 0;
    model.idf.reserve(df.size());
    for (const auto& [term, count] : df) {
        model.vocabulary.emplace(term, column++);
        model.idf.push_back(std::log((1.0 + model.doc_count) / (1.0 + count)) + 1.0);
    }
    return model;
}

SparseVector tfidf_transform(const TfidfModel& model, const std::string& doc) {
    std::map<int, double> weights;
    for (const auto& term : extract_terms(doc)) {
        const auto it = model.vocabulary.find(term);
        if (it == model.vocabulary.end()) continue;
        weights[it->second] += model.idf[static_cast<std::size_t>(it->second)];
    }

    SparseVector vec;
    vec.entries.assign(weights.begin(), weights.end());
    double norm_sq = 0.0;
    for (const auto& [col, w] : vec.entries) norm_sq += w * w;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [col, w] : vec.entries) w *= inv;
    }
    return vec;
}

double cosine(const SparseVector& a, const SparseVector& b) {
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return dot;
}

std::vector<double> value_of_subsets(const std::string& baseline_text,
                                     const std::vector<std::string>& subset_texts) {
    std::vector<std::string> corpus;
    corpus.reserve(subset_texts.size() + 1);
    corpus.push_back(baseline_text);
    corpus.insert(corpus.end(), subset_texts.begin(), subset_texts.end());

    const TfidfModel model = tfidf_fit(corpus);
    const SparseVector baseline = tfidf_transform(model, baseline_text);

    std::vector<double> scores;
    scores.reserve(subset_texts.size());
    for (const auto& text : subset_texts) {
        scores.push_back(cosine(tfidf_transform(model, text), baseline));
    }
    return scores;
}

double dense_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace tokshap
