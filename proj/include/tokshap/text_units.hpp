#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tokshap {

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    bool operator==(const ByteSpan&) const = default;
};

// A prompt split into attribution units. units[i] is exactly the byte range
// spans[i] of source; spans are non-overlapping and strictly increasing.
// Indices into the unit list are 1-based throughout the toolkit.
struct PromptUnits {
    std::string source;
    std::vector<std::string> units;
    std::vector<ByteSpan> spans;
    std::string splitter_id;

    int count() const { return static_cast<int>(units.size()); }
};

// Splitter specs: "whitespace" (split on maximal runs of Unicode whitespace)
// or "pattern:<regex>" (matches of the regex, plus single spaces, separate
// units). Unit text is never normalized; bytes are kept as-is.
//
// Throws EmptyPromptError when no units remain, SplitterError for a bad or
// non-round-tripping pattern.
PromptUnits split(const std::string& prompt, const std::string& splitter_spec = "whitespace");

// Joins the units selected by mask bits (bit i-1 <=> unit i) with single
// spaces, preserving original unit order.
std::string reconstruct(const PromptUnits& units, std::uint64_t included_mask);

// Same, from 1-based indices in any order. Throws IndexOutOfRangeError.
std::string reconstruct(const PromptUnits& units, const std::vector<int>& included);

// Mask with bits 1..n set. n must be in [1, 63].
std::uint64_t full_mask(int unit_count);

}  // namespace tokshap
