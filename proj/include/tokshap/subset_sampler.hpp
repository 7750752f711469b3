#pragma once

#include <cstdint>
#include <vector>

namespace tokshap {

inline constexpr int kDefaultEnumerationCap = 16;

enum class Origin : std::uint8_t { essential, sampled };

// A coalition of unit indices stored as a bitmask: bit i-1 set <=> unit i
// included. Valid combinations are non-empty proper subsets of {1..n}.
struct SubsetCombination {
    std::uint64_t mask = 0;
    Origin origin = Origin::sampled;

    int size() const;
    bool contains(int index) const;     // 1-based
    std::vector<int> indices() const;   // 1-based, ascending
};

// The ordered set C of combinations to evaluate: when force_first_order is
// set, all n first-order omissions come first, then any sampled extras.
struct SamplingPlan {
    int n = 0;
    double ratio = 0.0;
    std::uint64_t seed = 0;
    bool force_first_order = true;
    std::vector<SubsetCombination> combinations;
};

// Target number of combinations for a ratio: floor((2^n - 1) * ratio),
// clamped to the universe size 2^n - 2.
std::uint64_t sampling_budget(int n, double ratio);

// Deterministic: identical (n, ratio, seed, force_first_order) yields an
// identical plan, including order. Throws TooFewUnitsError (n < 2),
// TooManyUnitsError (n > 63), PlanTooLargeError.
SamplingPlan build_plan(int n, double ratio, std::uint64_t seed, bool force_first_order);

// All 2^n - 2 non-empty proper subsets in binary-counting order.
// Throws CapExceededError when n > cap.
std::vector<SubsetCombination> enumerate_all(int n, int cap = kDefaultEnumerationCap);

}  // namespace tokshap
