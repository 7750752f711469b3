#include "tokshap/shapley.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

#include "tokshap/errors.hpp"
#include "tokshap/rng.hpp"
#include "tokshap/similarity.hpp"

namespace tokshap {
namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

AttributionResult run_plan(const PromptUnits& units, const SamplingPlan& plan,
                           BackendClient& backend, Normalization mode) {
    const int n = units.count();
    if (plan.n != n) {
        throw PlanMismatchError("plan built for n=" + std::to_string(plan.n) +
                                " but prompt has " + std::to_string(n) + " units");
    }

    AttributionResult result;
    result.units = units;
    result.normalization = mode;
    result.meta.ratio = plan.ratio;
    result.meta.seed = plan.seed;
    result.meta.force_first_order = plan.force_first_order;
    result.meta.backend_id = backend.config().id();
    result.meta.rng_algorithm = Rng::kAlgorithm;
    result.meta.plan_size = plan.combinations.size();

    const ModelResponse baseline = backend.complete(reconstruct(units, full_mask(n)));
    result.baseline_text = baseline.text;

    std::vector<std::string> prompts;
    prompts.reserve(plan.combinations.size());
    for (const auto& combo : plan.combinations) {
        prompts.push_back(reconstruct(units, combo.mask));
    }

    const std::vector<BatchItem> batch = backend.complete_batch(prompts);
    std::vector<std::string> texts;
    texts.reserve(batch.size());
    std::size_t completed = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].ok()) {
            // A failed combination invalidates the averages; abort with a
            // diagnostic naming how far the run got.
            const std::string detail = batch[i].error_message + " (evaluated " +
                                       std::to_string(completed) + " of " +
                                       std::to_string(batch.size()) + " combinations)";
            if (batch[i].error_kind == "BackendRejected") {
                throw BackendError("BackendRejected", detail);
            }
            if (batch[i].error_kind == "MalformedResponse") {
                throw MalformedResponseError(detail);
            }
            throw BackendUnreachableError(detail);
        }
        ++completed;
        texts.push_back(batch[i].response->text);
    }

    const std::vector<double> sims = value_of_subsets(baseline.text, texts);

    result.records.reserve(plan.combinations.size());
    std::vector<std::pair<std::uint64_t, double>> mask_sims;
    mask_sims.reserve(plan.combinations.size());
    for (std::size_t i = 0; i < plan.combinations.size(); ++i) {
        result.records.push_back({plan.combinations[i], prompts[i], texts[i], sims[i]});
        mask_sims.emplace_back(plan.combinations[i].mask, sims[i]);
    }

    result.phi_raw = compute_phi(n, std::move(mask_sims));
    result.phi_norm = normalize(result.phi_raw, mode);
    result.meta.model_calls = result.records.size() + 1;
    return result;
}

}  // namespace

Normalization normalization_from_string(const std::string& name) {
    if (name == "none") return Normalization::none;
    if (name == "l1") return Normalization::l1;
    if (name == "minmax") return Normalization::minmax;
    throw Error("ConfigError", "unknown normalization mode: " + name);
}

std::string to_string(Normalization mode) {
    switch (mode) {
        case Normalization::none: return "none";
        case Normalization::l1: return "l1";
        case Normalization::minmax: return "minmax";
    }
    return "l1";
}

std::vector<double> compute_phi(int n, std::vector<std::pair<std::uint64_t, double>> sims) {
    std::sort(sims.begin(), sims.end());

    std::vector<double> with_sum(n, 0.0), without_sum(n, 0.0);
    std::vector<std::size_t> with_count(n, 0), without_count(n, 0);
    for (const auto& [mask, sim] : sims) {
        for (int i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) {
                with_sum[i] += sim;
                ++with_count[i];
            } else {
                without_sum[i] += sim;
                ++without_count[i];
            }
        }
    }

    std::vector<double> phi(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double with_mean = with_count[i] ? with_sum[i] / with_count[i] : 0.0;
        const double without_mean = without_count[i] ? without_sum[i] / without_count[i] : 0.0;
        phi[i] = with_mean - without_mean;
    }
    return phi;
}

std::vector<double> normalize(const std::vector<double>& phi_raw, Normalization mode) {
    if (mode == Normalization::none) return phi_raw;

    std::vector<double> out(phi_raw.size(), 0.0);
    if (mode == Normalization::l1) {
        double abs_sum = 0.0;
        for (double v : phi_raw) abs_sum += std::fabs(v);
        if (abs_sum == 0.0) return out;
        for (std::size_t i = 0; i < phi_raw.size(); ++i) out[i] = phi_raw[i] / abs_sum;
        return out;
    }

    const auto [lo, hi] = std::minmax_element(phi_raw.begin(), phi_raw.end());
    if (*lo == *hi) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < phi_raw.size(); ++i) out[i] = (phi_raw[i] - *lo) / span;
    return out;
}

AttributionResult attribute(const PromptUnits& units, const SamplingPlan& plan,
                            BackendClient& backend, Normalization mode) {
    return run_plan(units, plan, backend, mode);
}

AttributionResult attribute_exact(const PromptUnits& units, BackendClient& backend,
                                  Normalization mode, int cap) {
    const int n = units.count();
    if (n < 2) throw TooFewUnitsError(n);
    SamplingPlan plan;
    plan.n = n;
    plan.ratio = 1.0;
    plan.seed = 0;
    plan.force_first_order = true;
    plan.combinations = enumerate_all(n, cap);
    return run_plan(units, plan, backend, mode);
}

nlohmann::json AttributionResult::to_json(bool with_timestamp) const {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& span : units.spans) {
        spans.push_back({span.begin, span.end});
    }
    nlohmann::json doc{
        {"prompt", units.source},
        {"units", units.units},
        {"spans", spans},
        {"splitter", units.splitter_id},
        {"phi_raw", phi_raw},
        {"phi_norm", phi_norm},
        {"normalization", to_string(normalization)},
        {"ratio", meta.ratio},
        {"seed", meta.seed},
        {"force_first_order", meta.force_first_order},
        {"backend", meta.backend_id},
        {"rng", meta.rng_algorithm},
        {"plan_size", meta.plan_size},
        {"model_calls", meta.model_calls},
        {"baseline_text", baseline_text},
    };
    if (with_timestamp) doc["generated_at"] = utc_timestamp();
    return doc;
}

}  // namespace tokshap
