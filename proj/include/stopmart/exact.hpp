#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "stopmart/laws.hpp"
#include "stopmart/process.hpp"
#include "stopmart/rational.hpp"
#include "stopmart/stopping.hpp"

namespace stopmart {

struct ExactOptions {
    double prune_eps = 1e-15;      // float mode default; 0 disables pruning
    std::vector<double> p_list;    // extra alive moments E|M_n|^p 1(T>n)
};

// Per-step exact quantities from the killed-distribution recursion. All
// integer-state laws give integer martingale values, so stopped atoms and
// overshoots live on the lattice.
template <class Real>
struct ExactTrace {
    std::int64_t horizon = 0;
    std::vector<double> p_list;

    // Row n (1-based, index n-1):
    std::vector<Real> p_gt_n;        // P(T > n)
    std::vector<Real> alive_first;   // R_n = E[M_n 1(T>n)]
    std::vector<Real> stopped_cum;   // L_n = E[M_T 1(T<=n)]
    std::vector<double> m2_alive;    // E[M_n^2 1(T>n)]
    std::vector<std::vector<double>> mp_alive;  // one row per p in p_list

    std::vector<Real> stop_mass_inc;   // P(T = n)
    std::vector<Real> stop_value_inc;  // E[M_T 1(T=n)]

    std::map<std::int64_t, Real> overshoot_hist;  // M_T - h mass (FirstAbove)
    std::map<std::int64_t, Real> stopped_hist;    // M_T mass

    // One-sided error bounds from pruning and C2 tail truncation.
    double budget_mass = 0;
    double budget_abs = 0;  // |value|-weighted

    Real stopped_mass() const { return stopped_cum.empty() ? Real(0) : total_stop_mass_; }
    Real total_stop_mass_ = Real(0);

    ExactTrace<double> to_double() const {
        ExactTrace<double> out;
        out.horizon = horizon;
        out.p_list = p_list;
        auto conv = [](const std::vector<Real>& v) {
            std::vector<double> o;
            o.reserve(v.size());
            for (const auto& x : v) o.push_back(stopmart::to_double(x));
            return o;
        };
        out.p_gt_n = conv(p_gt_n);
        out.alive_first = conv(alive_first);
        out.stopped_cum = conv(stopped_cum);
        out.m2_alive = m2_alive;
        out.mp_alive = mp_alive;
        out.stop_mass_inc = conv(stop_mass_inc);
        out.stop_value_inc = conv(stop_value_inc);
        for (const auto& [k, v] : overshoot_hist) out.overshoot_hist[k] = stopmart::to_double(v);
        for (const auto& [k, v] : stopped_hist) out.stopped_hist[k] = stopmart::to_double(v);
        out.budget_mass = budget_mass;
        out.budget_abs = budget_abs;
        out.total_stop_mass_ = stopmart::to_double(total_stop_mass_);
        return out;
    }
};

namespace detail {

inline bool stop_value(const StoppingRule& rule, std::int64_t value) {
    switch (rule.kind) {
        case StoppingRule::Kind::FirstAbove:
            return value > rule.level;
        case StoppingRule::Kind::FirstExit:
            return value > 0 || double(value) < -rule.exit_z;
        default:
            return false;
    }
}

}  // namespace detail

// Exact killed-distribution dynamic programming.
//
// State key: M_n for Sum specs, S_n for Poly2Variance (then the martingale
// value at step n is S_n^2 - n and FirstAbove(h) stops when S_n^2 - n > h).
// The alive sub-probability is a dense array over the reachable key range;
// masses below prune_eps are swept into the one-sided error budget.
template <class Real>
ExactTrace<Real> propagate(const MartingaleSpec& spec, const StoppingRule& rule,
                           std::int64_t horizon, const ExactOptions& options = {}) {
    if (!spec.law.lattice())
        throw std::invalid_argument("exact engine requires lattice increments (use mc)");
    if (rule.randomized())
        throw std::invalid_argument("exact engine does not support randomized rules (use mc)");
    if (spec.variant == MartingaleSpec::Variant::Poly2Compensated)
        throw std::invalid_argument("Poly2Compensated has no lattice state key (use mc)");
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");

    const bool poly2 = spec.variant == MartingaleSpec::Variant::Poly2Variance;
    const bool indexed = spec.law.indexed();

    ExactTrace<Real> trace;
    trace.horizon = horizon;
    trace.p_list = options.p_list;
    trace.mp_alive.resize(options.p_list.size());

    LatticePmf<Real> pmf = spec.law.step_pmf<Real>(1);
    const double tail_mass = stopmart::to_double(Rational(spec.law.step_tail_mass()));
    const double tail_abs = stopmart::to_double(Rational(spec.law.step_tail_abs_moment()));

    // alive[i] = mass at key lo + i
    std::vector<Real> alive = {Real(1)};
    std::int64_t lo = 0;

    Real stopped_mass(0), stopped_value(0);
    const Real zero(0);

    for (std::int64_t n = 1; n <= horizon; ++n) {
        if (indexed) pmf = spec.law.step_pmf<Real>(n);
        const std::int64_t minv = pmf.min_value();
        const std::int64_t maxv = pmf.max_value();

        // C2 tail truncation: the cut mass leaves every alive point each step.
        if (tail_mass > 0) {
            double alive_total = 0, alive_abs = 0;
            for (std::size_t i = 0; i < alive.size(); ++i) {
                double q = stopmart::to_double(alive[i]);
                alive_total += q;
                alive_abs += std::abs(double(lo + std::int64_t(i))) * q;
            }
            trace.budget_mass += alive_total * tail_mass;
            trace.budget_abs += alive_abs * tail_mass + alive_total * tail_abs;
        }

        const std::int64_t new_lo = lo + minv;
        std::vector<Real> next(alive.size() + std::size_t(maxv - minv), zero);

        Real step_stop_mass(0), step_stop_value(0);
        for (std::size_t i = 0; i < alive.size(); ++i) {
            const Real& q = alive[i];
            if (q == zero) continue;
            const std::int64_t key = lo + std::int64_t(i);
            for (const auto& atom : pmf.atoms) {
                const std::int64_t target = key + atom.value;
                const std::int64_t value = poly2 ? target * target - n : target;
                Real mass = q * atom.mass;
                if (detail::stop_value(rule, value)) {
                    step_stop_mass += mass;
                    step_stop_value += ScalarOps<Real>::from_int(value) * mass;
                    trace.stopped_hist[value] += mass;
                    if (rule.kind == StoppingRule::Kind::FirstAbove)
                        trace.overshoot_hist[value - rule.level] += mass;
                } else {
                    next[std::size_t(target - new_lo)] += mass;
                }
            }
        }

        stopped_mass += step_stop_mass;
        stopped_value += step_stop_value;

        // Prune and trim.
        if (options.prune_eps > 0) {
            for (std::size_t i = 0; i < next.size(); ++i) {
                if (next[i] != zero && stopmart::to_double(next[i]) < options.prune_eps) {
                    const std::int64_t key = new_lo + std::int64_t(i);
                    const std::int64_t value = poly2 ? key * key - n : key;
                    trace.budget_mass += stopmart::to_double(next[i]);
                    trace.budget_abs +=
                        std::abs(double(value)) * stopmart::to_double(next[i]);
                    next[i] = zero;
                }
            }
        }
        std::size_t first = 0, last = next.size();
        while (first < last && next[first] == zero) ++first;
        while (last > first && next[last - 1] == zero) --last;
        lo = new_lo + std::int64_t(first);
        alive.assign(next.begin() + std::ptrdiff_t(first), next.begin() + std::ptrdiff_t(last));

        // Harvest the row.
        Real p_gt(0), r_n(0);
        double m2 = 0;
        std::vector<double> mp(options.p_list.size(), 0.0);
        for (std::size_t i = 0; i < alive.size(); ++i) {
            if (alive[i] == zero) continue;
            const std::int64_t key = lo + std::int64_t(i);
            const std::int64_t value = poly2 ? key * key - n : key;
            p_gt += alive[i];
            r_n += ScalarOps<Real>::from_int(value) * alive[i];
            const double q = stopmart::to_double(alive[i]);
            m2 += double(value) * double(value) * q;
            for (std::size_t k = 0; k < options.p_list.size(); ++k)
                mp[k] += std::pow(std::abs(double(value)), options.p_list[k]) * q;
        }
        trace.p_gt_n.push_back(p_gt);
        trace.alive_first.push_back(r_n);
        trace.stopped_cum.push_back(stopped_value);
        trace.m2_alive.push_back(m2);
        for (std::size_t k = 0; k < options.p_list.size(); ++k)
            trace.mp_alive[k].push_back(mp[k]);
        trace.stop_mass_inc.push_back(step_stop_mass);
        trace.stop_value_inc.push_back(step_stop_value);
    }
    trace.total_stop_mass_ = stopped_mass;
    return trace;
}

// Optional-stopping residuals L_n + R_n; exactly zero in rational mode.
template <class Real>
struct ConservationReport {
    std::vector<Real> residual;
    double max_abs = 0;
};

template <class Real>
ConservationReport<Real> conservation_residual(const ExactTrace<Real>& trace) {
    ConservationReport<Real> report;
    report.residual.reserve(trace.p_gt_n.size());
    for (std::size_t i = 0; i < trace.p_gt_n.size(); ++i) {
        Real r = trace.stopped_cum[i] + trace.alive_first[i];
        report.max_abs = std::max(report.max_abs, std::abs(stopmart::to_double(r)));
        report.residual.push_back(std::move(r));
    }
    return report;
}

struct Ce1InfinityBound {
    std::int64_t horizon = 0;
    double p_gt_n = 0;
    double tail_bound = 0;   // upper bound on P(any X_j != 0 for j > N)
    double lower_bound = 0;  // certified lower bound on P(T = infinity)
    bool conclusive = false;
};

// A CE1 path alive at N with no further nonzero steps never stops, so
// P(T = inf) >= P(T > N) - sum_{j>N} j^{-2} and the tail sum is < 1/N.
inline Ce1InfinityBound ce1_infinity_lower_bound(std::int64_t horizon,
                                                 const ExactOptions& options = {}) {
    auto spec = MartingaleSpec::sum(IncrementLaw::from(ce1_sequence()));
    auto trace = propagate<double>(spec, StoppingRule::first_positive(), horizon, options);
    Ce1InfinityBound bound;
    bound.horizon = horizon;
    bound.p_gt_n = trace.p_gt_n.back();
    bound.tail_bound = 1.0 / double(horizon);
    bound.lower_bound = bound.p_gt_n - trace.budget_mass - bound.tail_bound;
    bound.conclusive = bound.lower_bound > 0;
    return bound;
}

}  // namespace stopmart
