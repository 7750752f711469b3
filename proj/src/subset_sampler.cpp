#include "tokshap/subset_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include "tokshap/errors.hpp"
#include "tokshap/rng.hpp"

namespace tokshap {
namespace {

// Plans are materialized in memory; refuse absurd budgets up front.
constexpr std::uint64_t kMaxPlanCombinations = std::uint64_t{1} << 26;

std::uint64_t universe_size(int n) {
    return ((std::uint64_t{1} << n) - 2);
}

bool is_first_order(std::uint64_t mask, int n) {
    return std::popcount(mask) == n - 1;
}

// Draws `needed` distinct masks from [1, 2^n-2], skipping first-order masks
// when `exclude_first_order`. Uses rejection against a hash set for sparse
// draws and a partial Fisher-Yates over the materialized pool when the draw
// is dense enough that rejection would thrash.
std::vector<std::uint64_t> sample_distinct(int n, std::uint64_t needed, bool exclude_first_order,
                                           Rng& rng) {
    std::vector<std::uint64_t> out;
    if (needed == 0) return out;
    out.reserve(needed);

    const std::uint64_t u = universe_size(n);
    const std::uint64_t available = exclude_first_order ? u - static_cast<std::uint64_t>(n) : u;
    const bool dense = u <= (std::uint64_t{1} << 22) && needed * 4 > available;

    if (dense) {
        std::vector<std::uint64_t> pool;
        pool.reserve(available);
        for (std::uint64_t mask = 1; mask <= u; ++mask) {
            if (exclude_first_order && is_first_order(mask, n)) continue;
            pool.push_back(mask);
        }
        for (std::uint64_t i = 0; i < needed; ++i) {
            const std::uint64_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(needed * 2);
    while (out.size() < needed) {
        const std::uint64_t mask = 1 + rng.below(u);
        if (exclude_first_order && is_first_order(mask, n)) continue;
        if (!chosen.insert(mask).second) continue;
        out.push_back(mask);
    }
    return out;
}

}  // namespace

int SubsetCombination::size() const {
    return std::popcount(mask);
}

bool SubsetCombination::contains(int index) const {
    return index >= 1 && index <= 64 && ((mask >> (index - 1)) & 1u) != 0;
}

std::vector<int> SubsetCombination::indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int i = 0; i < 64; ++i) {
        if ((mask >> i) & 1u) out.push_back(i + 1);
    }
    return out;
}

std::uint64_t sampling_budget(int n, double ratio) {
    // 2^n - 1 is exact in long double up to n = 63.
    const long double space = std::exp2(static_cast<long double>(n)) - 1.0L;
    long double t = std::floor(space * static_cast<long double>(ratio));
    if (t < 0.0L) t = 0.0L;
    const std::uint64_t u = universe_size(n);
    if (t >= static_cast<long double>(u)) return u;
    return static_cast<std::uint64_t>(t);
}

SamplingPlan build_plan(int n, double ratio, std::uint64_t seed, bool force_first_order) {
    if (n < 2) throw TooFewUnitsError(n);
    if (n > 63) throw TooManyUnitsError(n);

    const std::uint64_t budget = sampling_budget(n, ratio);
    SamplingPlan plan{n, ratio, seed, force_first_order, {}};
    Rng rng(seed);

    if (force_first_order) {
        const std::uint64_t full = (std::uint64_t{1} << n) - 1;
        const std::uint64_t extras =
            budget > static_cast<std::uint64_t>(n) ? budget - static_cast<std::uint64_t>(n) : 0;
        if (static_cast<std::uint64_t>(n) + extras > kMaxPlanCombinations) {
            throw PlanTooLargeError("plan would hold " + std::to_string(n + extras) +
                                    " combinations; lower the sampling ratio");
        }
        plan.combinations.reserve(static_cast<std::size_t>(n) + extras);
        for (int i = 1; i <= n; ++i) {
            plan.combinations.push_back({full & ~(std::uint64_t{1} << (i - 1)), Origin::essential});
        }
        for (std::uint64_t mask : sample_distinct(n, extras, /*exclude_first_order=*/true, rng)) {
            plan.combinations.push_back({mask, Origin::sampled});
        }
    } else {
        const std::uint64_t count = std::max<std::uint64_t>(1, budget);
        if (count > kMaxPlanCombinations) {
            throw PlanTooLargeError("plan would hold " + std::to_string(count) +
                                    " combinations; lower the sampling ratio");
        }
        plan.combinations.reserve(count);
        for (std::uint64_t mask : sample_distinct(n, count, /*exclude_first_order=*/false, rng)) {
            plan.combinations.push_back({mask, Origin::sampled});
        }
    }
    return plan;
}

std::vector<SubsetCombination> enumerate_all(int n, int cap) {
    if (n < 2) throw TooFewUnitsError(n);
    if (n > cap) throw CapExceededError(n, cap);

    const std::uint64_t u = universe_size(n);
    std::vector<SubsetCombination> out;
    out.reserve(u);
    for (std::uint64_t mask = 1; mask <= u; ++mask) {
        out.push_back({mask, is_first_order(mask, n) ? Origin::essential : Origin::sampled});
    }
    return out;
}

}  // namespace tokshap
