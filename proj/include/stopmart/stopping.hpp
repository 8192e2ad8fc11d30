#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "stopmart/rng.hpp"

namespace stopmart {

// Adapted, possibly extended-valued stopping rules. All use the "first n > 0"
// convention; M_0 = 0 never fires FirstAbove(0).
struct StoppingRule {
    enum class Kind { FirstAbove, FirstExit, Example1 };

    Kind kind = Kind::FirstAbove;
    std::int64_t level = 0;   // FirstAbove: stop when M_n > level
    double exit_z = 0;        // FirstExit: stop when M_n > 0 or M_n < -z (strict)
    double example1_band = 0;     // Example 1: |M| < L return band
    std::int64_t example1_max_stage = 0;  // stages considered before giving up

    static StoppingRule first_above(std::int64_t h) {
        if (h < 0) throw std::invalid_argument("FirstAbove requires h >= 0");
        StoppingRule r;
        r.kind = Kind::FirstAbove;
        r.level = h;
        return r;
    }
    static StoppingRule first_positive() { return first_above(0); }
    static StoppingRule first_exit(double z) {
        if (!(z > 0)) throw std::invalid_argument("FirstExit requires z > 0");
        StoppingRule r;
        r.kind = Kind::FirstExit;
        r.exit_z = z;
        return r;
    }
    static StoppingRule example1(double band, std::int64_t max_stage) {
        if (!(band > 0)) throw std::invalid_argument("Example1 requires L > 0");
        StoppingRule r;
        r.kind = Kind::Example1;
        r.example1_band = band;
        r.example1_max_stage = max_stage;
        return r;
    }

    bool randomized() const { return kind == Kind::Example1; }
};

struct StopOutcome {
    enum class Status { Stopped, Running, CensoredAtHorizon };
    Status status = Status::Running;
    std::int64_t n = 0;
    double value = 0;  // M_T when stopped, else M_n
};

// Per-path evaluation state. Example 1 alternates excursion phases:
// T_{2k-1} = first n > T_{2k-2} with |M_n| > k^3, then T_{2k} = first n with
// |M_n| < L; stage k >= 2 is accepted with probability k^{-2}, coins drawn
// from an auxiliary stream keyed by stage, independent of the path.
class RuleEvaluator {
public:
    RuleEvaluator(const StoppingRule& rule, std::uint64_t aux_seed = 0)
        : rule_(rule), aux_seed_(aux_seed) {}

    // Feed M_n for n = 1, 2, ...; returns the stopped value if the rule fires.
    std::optional<double> feed(std::int64_t n, double m) {
        switch (rule_.kind) {
            case StoppingRule::Kind::FirstAbove:
                if (m > double(rule_.level)) return m;
                return std::nullopt;
            case StoppingRule::Kind::FirstExit:
                if (m > 0 || m < -rule_.exit_z) return m;
                return std::nullopt;
            case StoppingRule::Kind::Example1:
                return feed_example1(n, m);
        }
        return std::nullopt;
    }

    std::int64_t example1_stage() const { return stage_; }
    bool example1_exhausted() const { return exhausted_; }

private:
    std::optional<double> feed_example1(std::int64_t n, double m) {
        (void)n;
        if (exhausted_) return std::nullopt;
        double k3 = double(stage_) * double(stage_) * double(stage_);
        if (!outside_) {
            if (std::abs(m) > k3) outside_ = true;  // reached T_{2k-1}
            return std::nullopt;
        }
        if (std::abs(m) < rule_.example1_band) {  // reached T_{2k}
            if (stage_ >= 2 && stage_coin(stage_) < 1.0 / (double(stage_) * double(stage_)))
                return m;  // T* = T_{2k}
            outside_ = false;
            ++stage_;
            if (stage_ > rule_.example1_max_stage) exhausted_ = true;
        }
        return std::nullopt;
    }

    double stage_coin(std::int64_t k) const {
        std::uint64_t s = hash_combine(aux_seed_, static_cast<std::uint64_t>(k));
        return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    }

    StoppingRule rule_;
    std::uint64_t aux_seed_ = 0;
    std::int64_t stage_ = 1;
    bool outside_ = false;
    bool exhausted_ = false;
};

// Evaluates a rule over a fully materialized path prefix (M_1, ..., M_len).
inline StopOutcome evaluate(const StoppingRule& rule, std::span<const double> prefix,
                            std::uint64_t aux_seed = 0) {
    RuleEvaluator eval(rule, aux_seed);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (auto stopped = eval.feed(std::int64_t(i) + 1, prefix[i]))
            return {StopOutcome::Status::Stopped, std::int64_t(i) + 1, *stopped};
    }
    return {StopOutcome::Status::Running, std::int64_t(prefix.size()),
            prefix.empty() ? 0.0 : prefix.back()};
}

// Overshoot M_T - h of a path stopped by FirstAbove(h).
inline double overshoot(const StopOutcome& outcome, std::int64_t h) {
    if (outcome.status != StopOutcome::Status::Stopped)
        throw std::invalid_argument("overshoot of a non-stopped outcome");
    return outcome.value - double(h);
}

}  // namespace stopmart
