#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stopmart/laws.hpp"
#include "stopmart/process.hpp"
#include "stopmart/rng.hpp"
#include "stopmart/stopping.hpp"

namespace stopmart {

struct McOptions {
    std::int64_t n_max = 0;
    std::int64_t paths = 0;
    std::uint64_t seed = 1;
    int partitions = 64;  // fixed partition count; workers never change results
    int workers = 1;
    std::vector<std::int64_t> checkpoints;
};

inline std::vector<std::int64_t> decade_checkpoints(std::int64_t n_max) {
    std::vector<std::int64_t> cps;
    for (std::int64_t n = 1; n <= n_max; n *= 10) cps.push_back(n);
    if (cps.empty() || cps.back() != n_max) cps.push_back(n_max);
    return cps;
}

// Raw sums per checkpoint; estimates and CIs are derived at the end so that
// partitioned and monolithic runs agree bit-for-bit.
struct CheckpointAccum {
    std::int64_t n = 0;
    double alive_count = 0;
    double sum_m = 0;        // sum of M_n 1(T>n)
    double sum_m2 = 0;       // sum of M_n^2 1(T>n)
    double sum_m4 = 0;
    double sum_stop_v = 0;   // sum of M_T 1(T<=n)
    double sum_stop_v2 = 0;
    double stop_count = 0;

    void merge(const CheckpointAccum& o) {
        alive_count += o.alive_count;
        sum_m += o.sum_m;
        sum_m2 += o.sum_m2;
        sum_m4 += o.sum_m4;
        sum_stop_v += o.sum_stop_v;
        sum_stop_v2 += o.sum_stop_v2;
        stop_count += o.stop_count;
    }
};

struct Estimate {
    double value = 0;
    double half_width = 0;  // 95% normal approximation
    bool covers(double x) const { return std::abs(x - value) <= half_width; }
};

struct CheckpointStats {
    std::int64_t n = 0;
    Estimate p_gt_n, alive_first, stopped_cum, m2_alive;
};

struct McReport {
    McOptions options;
    std::vector<CheckpointAccum> accum;
    double overshoot_count = 0, overshoot_sum = 0, overshoot_sum_sq = 0;
    double censored_count = 0;
    double total_paths = 0;
    double max_abs_m = 0;  // tail-risk flag for heavy-tailed scenarios

    void merge(const McReport& o) {
        if (accum.size() != o.accum.size())
            throw std::invalid_argument("merging reports with different checkpoints");
        for (std::size_t i = 0; i < accum.size(); ++i) accum[i].merge(o.accum[i]);
        overshoot_count += o.overshoot_count;
        overshoot_sum += o.overshoot_sum;
        overshoot_sum_sq += o.overshoot_sum_sq;
        censored_count += o.censored_count;
        total_paths += o.total_paths;
        max_abs_m = std::max(max_abs_m, o.max_abs_m);
    }

    double censored_fraction() const {
        return total_paths > 0 ? censored_count / total_paths : 0;
    }

    static Estimate mean_estimate(double sum, double sum_sq, double count) {
        if (count <= 0) return {};
        double mean = sum / count;
        double var = std::max(0.0, sum_sq / count - mean * mean);
        return {mean, 1.96 * std::sqrt(var / count)};
    }

    Estimate overshoot_mean() const {
        return mean_estimate(overshoot_sum, overshoot_sum_sq, overshoot_count);
    }

    std::vector<CheckpointStats> stats() const {
        std::vector<CheckpointStats> out;
        for (const auto& a : accum) {
            CheckpointStats s;
            s.n = a.n;
            double N = total_paths;
            double p = a.alive_count / N;
            s.p_gt_n = {p, 1.96 * std::sqrt(std::max(0.0, p * (1 - p)) / N)};
            s.alive_first = mean_estimate(a.sum_m, a.sum_m2, N);
            s.stopped_cum = mean_estimate(a.sum_stop_v, a.sum_stop_v2, N);
            s.m2_alive = mean_estimate(a.sum_m2, a.sum_m4, N);
            out.push_back(s);
        }
        return out;
    }
};

namespace detail {

inline void paths_for_partition(std::int64_t paths, int partitions, int index,
                                std::int64_t& first, std::int64_t& count) {
    std::int64_t base = paths / partitions, extra = paths % partitions;
    count = base + (index < extra ? 1 : 0);
    first = base * index + std::min<std::int64_t>(index, extra);
}

// Deterministic map over partitions: results land in a preallocated slot
// vector and are merged in index order, so the worker count is irrelevant.
template <class Fn>
void run_partitions(int partitions, int workers, Fn&& body) {
    if (workers <= 1) {
        for (int i = 0; i < partitions; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < partitions; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Simulates paths to stop-or-horizon. Censored paths keep contributing to the
// alive-side sums; by the conservation identity the truncation bias of the
// stopped-side estimate at N_max is exactly -R_{N_max}.
inline McReport estimate(const MartingaleSpec& spec, const StoppingRule& rule,
                         McOptions options) {
    if (options.paths <= 0) throw std::invalid_argument("paths must be positive");
    if (options.n_max <= 0) throw std::invalid_argument("N_max must be positive");
    if (options.checkpoints.empty())
        options.checkpoints = decade_checkpoints(options.n_max);
    std::sort(options.checkpoints.begin(), options.checkpoints.end());

    const bool track_overshoot = rule.kind == StoppingRule::Kind::FirstAbove;
    std::vector<McReport> slots(static_cast<std::size_t>(options.partitions));

    detail::run_partitions(options.partitions, options.workers, [&](int part) {
        McReport local;
        local.options = options;
        local.accum.resize(options.checkpoints.size());
        for (std::size_t i = 0; i < local.accum.size(); ++i)
            local.accum[i].n = options.checkpoints[i];

        std::int64_t first = 0, count = 0;
        detail::paths_for_partition(options.paths, options.partitions, part, first, count);
        local.total_paths = double(count);
        LawCache cache(spec.law);

        for (std::int64_t p = first; p < first + count; ++p) {
            PathSimulator sim(spec, Rng(options.seed, std::uint64_t(p)), &cache);
            RuleEvaluator eval(rule, hash_combine(options.seed ^ 0xa0a0a0a0ULL,
                                                  std::uint64_t(p)));
            std::size_t ci = 0;
            bool stopped = false;
            double stop_value = 0;
            for (std::int64_t n = 1; n <= options.n_max; ++n) {
                double m = sim.advance();
                local.max_abs_m = std::max(local.max_abs_m, std::abs(m));
                if (auto sv = eval.feed(n, m)) {
                    stopped = true;
                    stop_value = *sv;
                    if (track_overshoot) {
                        double ov = stop_value - double(rule.level);
                        local.overshoot_count += 1;
                        local.overshoot_sum += ov;
                        local.overshoot_sum_sq += ov * ov;
                    }
                    // Remaining checkpoints see the frozen stopped value.
                    for (; ci < local.accum.size(); ++ci) {
                        local.accum[ci].sum_stop_v += stop_value;
                        local.accum[ci].sum_stop_v2 += stop_value * stop_value;
                        local.accum[ci].stop_count += 1;
                    }
                    break;
                }
                while (ci < local.accum.size() && local.accum[ci].n == n) {
                    auto& a = local.accum[ci];
                    a.alive_count += 1;
                    a.sum_m += m;
                    a.sum_m2 += m * m;
                    a.sum_m4 += m * m * m * m;
                    ++ci;
                }
            }
            if (!stopped) local.censored_count += 1;
        }
        slots[std::size_t(part)] = std::move(local);
    });

    McReport merged = std::move(slots[0]);
    for (std::size_t i = 1; i < slots.size(); ++i) merged.merge(slots[i]);
    merged.options = options;
    return merged;
}

// ---------------------------------------------------------------------------
// Example 1 demonstration (randomized stopping over a simple random walk).
// ---------------------------------------------------------------------------

struct Example1Report {
    McOptions options;
    double band = 0;
    std::int64_t stages = 0;
    std::vector<std::int64_t> checkpoints;
    std::vector<double> sum_abs_m;        // sum over paths of |M_{T* ^ n}|
    std::vector<double> stage_reached;    // paths reaching the stage-k coin
    std::vector<double> stage_accepted;
    double accepted_count = 0;
    double max_accepted_abs = 0;
    double total_paths = 0;

    std::vector<double> growth_curve() const {
        std::vector<double> curve;
        for (double s : sum_abs_m) curve.push_back(s / total_paths);
        return curve;
    }
    bool curve_strictly_increasing() const {
        auto c = growth_curve();
        for (std::size_t i = 1; i < c.size(); ++i)
            if (!(c[i] > c[i - 1])) return false;
        return true;
    }
};

// Specialized fast path: SRW steps are raw random bits; once a path has
// exhausted its acceptance stages it only needs M at the checkpoints, which
// popcount covers 64 steps at a time.
inline Example1Report example1_demo(double band, std::int64_t stages, McOptions options) {
    if (options.checkpoints.empty())
        options.checkpoints = decade_checkpoints(options.n_max);
    Example1Report report;
    report.options = options;
    report.band = band;
    report.stages = stages;
    report.checkpoints = options.checkpoints;
    report.sum_abs_m.assign(options.checkpoints.size(), 0.0);
    report.stage_reached.assign(std::size_t(stages) + 1, 0.0);
    report.stage_accepted.assign(std::size_t(stages) + 1, 0.0);
    report.total_paths = double(options.paths);

    std::vector<Example1Report> slots(static_cast<std::size_t>(options.partitions));

    detail::run_partitions(options.partitions, options.workers, [&](int part) {
        Example1Report local = report;
        std::fill(local.sum_abs_m.begin(), local.sum_abs_m.end(), 0.0);
        std::fill(local.stage_reached.begin(), local.stage_reached.end(), 0.0);
        std::fill(local.stage_accepted.begin(), local.stage_accepted.end(), 0.0);
        local.accepted_count = 0;
        local.max_accepted_abs = 0;

        std::int64_t first = 0, count = 0;
        detail::paths_for_partition(options.paths, options.partitions, part, first, count);
        local.total_paths = double(count);

        for (std::int64_t p = first; p < first + count; ++p) {
            Rng rng(options.seed, std::uint64_t(p));
            const std::uint64_t aux =
                hash_combine(options.seed ^ 0xa0a0a0a0ULL, std::uint64_t(p));
            std::int64_t m = 0, n = 0;
            std::uint64_t word = 0;
            int bits = 0;
            std::size_t ci = 0;
            std::int64_t stage = 1;
            bool outside = false, exhausted = false, stopped = false;
            double stop_value = 0;

            while (n < options.n_max) {
                if (stopped) {
                    for (; ci < local.checkpoints.size(); ++ci)
                        local.sum_abs_m[ci] += std::abs(stop_value);
                    break;
                }
                if (exhausted) {
                    // Bulk-advance to the next checkpoint with popcount.
                    std::int64_t target =
                        ci < local.checkpoints.size() ? local.checkpoints[ci] : options.n_max;
                    while (n + 64 <= target) {
                        std::uint64_t w = rng.next_u64();
                        m += 2 * std::popcount(w) - 64;
                        n += 64;
                    }
                    while (n < target) {
                        if (bits == 0) { word = rng.next_u64(); bits = 64; }
                        m += (word & 1) ? 1 : -1;
                        word >>= 1;
                        --bits;
                        ++n;
                    }
                    if (ci < local.checkpoints.size() && n == local.checkpoints[ci]) {
                        local.sum_abs_m[ci] += std::abs(double(m));
                        ++ci;
                    }
                    continue;
                }
                if (bits == 0) { word = rng.next_u64(); bits = 64; }
                m += (word & 1) ? 1 : -1;
                word >>= 1;
                --bits;
                ++n;

                const std::int64_t k3 = stage * stage * stage;
                if (!outside) {
                    if (m > k3 || m < -k3) outside = true;
                } else if (std::abs(double(m)) < band) {
                    if (stage >= 2) {
                        local.stage_reached[std::size_t(stage)] += 1;
                        std::uint64_t s = hash_combine(aux, std::uint64_t(stage));
                        double coin = double(splitmix64(s) >> 11) * 0x1.0p-53;
                        if (coin < 1.0 / (double(stage) * double(stage))) {
                            local.stage_accepted[std::size_t(stage)] += 1;
                            stopped = true;
                            stop_value = double(m);
                            local.accepted_count += 1;
                            local.max_accepted_abs =
                                std::max(local.max_accepted_abs, std::abs(stop_value));
                            continue;
                        }
                    }
                    outside = false;
                    ++stage;
                    if (stage > stages) exhausted = true;
                }
                if (ci < local.checkpoints.size() && n == local.checkpoints[ci]) {
                    local.sum_abs_m[ci] += std::abs(double(stopped ? stop_value : double(m)));
                    ++ci;
                }
            }
            // Horizon reached mid-window: nothing further to record.
            if (stopped) {
                for (; ci < local.checkpoints.size(); ++ci)
                    local.sum_abs_m[ci] += std::abs(stop_value);
            }
        }
        slots[std::size_t(part)] = std::move(local);
    });

    for (const auto& s : slots) {
        for (std::size_t i = 0; i < report.sum_abs_m.size(); ++i)
            report.sum_abs_m[i] += s.sum_abs_m[i];
        for (std::size_t i = 0; i < report.stage_reached.size(); ++i) {
            report.stage_reached[i] += s.stage_reached[i];
            report.stage_accepted[i] += s.stage_accepted[i];
        }
        report.accepted_count += s.accepted_count;
        report.max_accepted_abs = std::max(report.max_accepted_abs, s.max_accepted_abs);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Theorem 4.1 diagnostics.
// ---------------------------------------------------------------------------

// Finite-window proxy for condition (i): P(sup_{k<=n<=k+m} |M_n - M_k| > eps).
struct WobbleProfile {
    std::vector<std::int64_t> k_list;
    std::vector<double> eps_list;
    std::int64_t window = 0;
    double paths = 0;
    // matrix[k_index][eps_index] = empirical exceedance probability
    std::vector<std::vector<double>> matrix;
};

inline WobbleProfile wobble_profile(const MartingaleSpec& spec,
                                    std::vector<std::int64_t> k_list,
                                    std::int64_t window, std::vector<double> eps_list,
                                    std::int64_t paths, std::uint64_t seed) {
    std::sort(k_list.begin(), k_list.end());
    WobbleProfile profile;
    profile.k_list = k_list;
    profile.eps_list = eps_list;
    profile.window = window;
    profile.paths = double(paths);
    profile.matrix.assign(k_list.size(), std::vector<double>(eps_list.size(), 0.0));

    const std::int64_t n_max = k_list.back() + window;
    std::vector<double> anchor(k_list.size(), 0.0);
    std::vector<double> sup_dev(k_list.size(), 0.0);
    LawCache cache(spec.law);

    for (std::int64_t p = 0; p < paths; ++p) {
        PathSimulator sim(spec, Rng(seed, std::uint64_t(p)), &cache);
        std::fill(sup_dev.begin(), sup_dev.end(), 0.0);
        for (std::int64_t n = 1; n <= n_max; ++n) {
            double m = sim.advance();
            for (std::size_t i = 0; i < k_list.size(); ++i) {
                if (n == k_list[i]) anchor[i] = m;
                if (n > k_list[i] && n <= k_list[i] + window)
                    sup_dev[i] = std::max(sup_dev[i], std::abs(m - anchor[i]));
            }
        }
        for (std::size_t i = 0; i < k_list.size(); ++i)
            for (std::size_t e = 0; e < eps_list.size(); ++e)
                if (sup_dev[i] > eps_list[e]) profile.matrix[i][e] += 1;
    }
    for (auto& row : profile.matrix)
        for (auto& v : row) v /= double(paths);
    return profile;
}

// Condition (ii) diagnostic: E{M_n | T >= n, M_n > 0 >= M_{n-1}} per n, i.e.
// the conditional mean crossing value among paths first crossing at n.
struct OvershootConditionRow {
    std::int64_t n = 0;
    double count = 0;
    double mean = 0;
    double half_width = 0;
    bool has_data = false;
};

inline std::vector<OvershootConditionRow> overshoot_condition_estimate(
    const MartingaleSpec& spec, const StoppingRule& rule,
    const std::vector<std::int64_t>& n_list, std::int64_t paths, std::uint64_t seed) {
    if (rule.kind != StoppingRule::Kind::FirstAbove || rule.level != 0)
        throw std::invalid_argument("overshoot_condition_estimate requires FirstPositive");
    std::int64_t n_max = *std::max_element(n_list.begin(), n_list.end());
    std::map<std::int64_t, std::pair<double, double>> sums;  // n -> (count, sum)
    std::map<std::int64_t, double> sq;
    LawCache cache(spec.law);
    for (std::int64_t p = 0; p < paths; ++p) {
        PathSimulator sim(spec, Rng(seed, std::uint64_t(p)), &cache);
        for (std::int64_t n = 1; n <= n_max; ++n) {
            double m = sim.advance();
            if (m > 0) {
                auto& [cnt, sum] = sums[n];
                cnt += 1;
                sum += m;
                sq[n] += m * m;
                break;
            }
        }
    }
    std::vector<OvershootConditionRow> rows;
    for (std::int64_t n : n_list) {
        OvershootConditionRow row;
        row.n = n;
        auto it = sums.find(n);
        if (it != sums.end() && it->second.first > 0) {
            row.has_data = true;
            row.count = it->second.first;
            row.mean = it->second.second / row.count;
            double var = std::max(0.0, sq[n] / row.count - row.mean * row.mean);
            row.half_width = 1.96 * std::sqrt(var / row.count);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace stopmart
