#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tokshap {

// Bag-of-words TF-IDF with smoothed idf: idf(t) = ln((1 + docs) / (1 + df(t))) + 1.
// Terms are lowercased maximal runs of [A-Za-z0-9_] or non-ASCII bytes, at
// least two bytes long; shorter runs and everything else are ignored.
struct TfidfModel {
    std::map<std::string, int> vocabulary;  // term -> column, assigned in sorted term order
    std::vector<double> idf;                // indexed by column
    int doc_count = 0;
};

// L2-normalized sparse vector; entries sorted by column. Empty when the
// document has no in-vocabulary terms.
struct SparseVector {
    std::vector<std::pair<int, double>> entries;

    bool empty() const { return entries.empty(); }
};

std::vector<std::string> extract_terms(const std::string& doc);

TfidfModel tfidf_fit(const std::vector<std::string>& corpus);

SparseVector tfidf_transform(const TfidfModel& model, const std::string& doc);

// Dot product of the already-normalized vectors; 0.0 when either is empty.
double cosine(const SparseVector& a, const SparseVector& b);

// The value function v(S): fits TF-IDF on {baseline} + subset_texts and
// returns cosine(subset_i, baseline) per subset, in order.
std::vector<double> value_of_subsets(const std::string& baseline_text,
                                     const std::vector<std::string>& subset_texts);

// Cosine between dense real vectors; 0.0 when either has zero norm.
double dense_cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tokshap
