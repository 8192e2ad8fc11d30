#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stopmart/laws.hpp"
#include "stopmart/rng.hpp"

namespace stopmart {

// Recipe turning increment laws into an adapted process:
//   Sum               M_n = X_1 + ... + X_n
//   Poly2Compensated  M_n = S_n^2 - sum X_j^2
//   Poly2Variance     M_n = S_n^2 - n   (each X_j must have variance 1)
struct MartingaleSpec {
    enum class Variant { Sum, Poly2Compensated, Poly2Variance };

    Variant variant = Variant::Sum;
    IncrementLaw law;

    static MartingaleSpec sum(IncrementLaw law) {
        return {Variant::Sum, std::move(law)};
    }
    static MartingaleSpec poly2_compensated(IncrementLaw law) {
        return {Variant::Poly2Compensated, std::move(law)};
    }
    static MartingaleSpec poly2_variance(IncrementLaw law) {
        MartingaleSpec spec{Variant::Poly2Variance, std::move(law)};
        spec.require_unit_variance();
        return spec;
    }

    void require_unit_variance() const {
        for (std::int64_t j : {std::int64_t(1), std::int64_t(2), std::int64_t(17)}) {
            double v = law.step_variance(law.indexed() ? j : 1);
            if (std::abs(v - 1.0) > kMassTol)
                throw std::invalid_argument(
                    "Poly2Variance requires unit conditional variance per step");
            if (!law.indexed()) break;
        }
    }
};

struct PathState {
    std::int64_t n = 0;
    double martingale = 0;  // M_n
    double base_sum = 0;    // S_n, kept for the Poly2 variants
    double sum_sq = 0;      // sum of X_j^2 (Poly2Compensated)
};

inline PathState init(const MartingaleSpec&) { return PathState{}; }

inline PathState step(PathState state, const MartingaleSpec& spec, Rng& rng) {
    std::int64_t j = state.n + 1;
    Law law = spec.law.mc_law(j);
    double x = law.sample(rng);
    state.n = j;
    state.base_sum += x;
    state.sum_sq += x * x;
    switch (spec.variant) {
        case MartingaleSpec::Variant::Sum:
            state.martingale = state.base_sum;
            break;
        case MartingaleSpec::Variant::Poly2Compensated:
            state.martingale = state.base_sum * state.base_sum - state.sum_sq;
            break;
        case MartingaleSpec::Variant::Poly2Variance:
            state.martingale = state.base_sum * state.base_sum - double(state.n);
            break;
    }
    return state;
}

// Memoizes the per-step sampling laws of an indexed sequence. Shareable
// across paths but not across threads; engines keep one per worker.
class LawCache {
public:
    explicit LawCache(const IncrementLaw& law) : law_(&law) {}

    const Law& at(std::int64_t j) {
        if (std::size_t(j) > per_step_.size()) {
            per_step_.reserve(std::size_t(j));
            for (std::int64_t i = std::int64_t(per_step_.size()) + 1; i <= j; ++i)
                per_step_.push_back(law_->mc_law(i));
        }
        return per_step_[std::size_t(j) - 1];
    }

private:
    const IncrementLaw* law_;
    std::vector<Law> per_step_;
};

// Lightweight simulator; homogeneous specs reuse one sampling law, indexed
// specs go through a shared LawCache.
class PathSimulator {
public:
    PathSimulator(const MartingaleSpec& spec, Rng rng, LawCache* cache = nullptr)
        : spec_(&spec), rng_(rng), state_{}, cache_(cache) {
        if (!spec.law.indexed()) cached_law_ = spec.law.mc_law(1);
    }

    const PathState& state() const { return state_; }
    Rng& rng() { return rng_; }

    double advance() {
        std::int64_t j = state_.n + 1;
        double x = spec_->law.indexed()
                       ? (cache_ ? cache_->at(j).sample(rng_)
                                 : spec_->law.mc_law(j).sample(rng_))
                       : cached_law_.sample(rng_);
        state_.n = j;
        state_.base_sum += x;
        switch (spec_->variant) {
            case MartingaleSpec::Variant::Sum:
                state_.martingale = state_.base_sum;
                break;
            case MartingaleSpec::Variant::Poly2Compensated:
                state_.sum_sq += x * x;
                state_.martingale = state_.base_sum * state_.base_sum - state_.sum_sq;
                break;
            case MartingaleSpec::Variant::Poly2Variance:
                state_.martingale = state_.base_sum * state_.base_sum - double(j);
                break;
        }
        return state_.martingale;
    }

private:
    const MartingaleSpec* spec_;
    Rng rng_;
    PathState state_;
    LawCache* cache_ = nullptr;
    Law cached_law_;
};

struct VarianceCheckRow {
    std::int64_t step = 0;
    double variance = 0;
    double half_width = 0;  // 95% normal CI
    bool unit_ok = false;
};

struct VarianceCheckReport {
    std::vector<VarianceCheckRow> rows;
    bool poly2_variance_eligible = true;
};

// Empirical per-step conditional variance over simulated paths.
inline VarianceCheckReport conditional_variance_check(const MartingaleSpec& spec,
                                                      std::int64_t n_max,
                                                      std::int64_t paths,
                                                      std::uint64_t seed) {
    VarianceCheckReport report;
    std::vector<double> sum_sq(static_cast<std::size_t>(n_max), 0.0);
    std::vector<double> sum_4(static_cast<std::size_t>(n_max), 0.0);
    for (std::int64_t p = 0; p < paths; ++p) {
        Rng rng(seed, static_cast<std::uint64_t>(p));
        for (std::int64_t j = 1; j <= n_max; ++j) {
            double x = spec.law.mc_law(j).sample(rng);
            sum_sq[std::size_t(j - 1)] += x * x;
            sum_4[std::size_t(j - 1)] += x * x * x * x;
        }
    }
    for (std::int64_t j = 1; j <= n_max; ++j) {
        double m2 = sum_sq[std::size_t(j - 1)] / double(paths);
        double m4 = sum_4[std::size_t(j - 1)] / double(paths);
        double var_of_sq = std::max(0.0, m4 - m2 * m2);
        VarianceCheckRow row;
        row.step = j;
        row.variance = m2;
        row.half_width = 1.96 * std::sqrt(var_of_sq / double(paths));
        row.unit_ok = std::abs(m2 - 1.0) <= row.half_width + 1e-9;
        if (!row.unit_ok) report.poly2_variance_eligible = false;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace stopmart
