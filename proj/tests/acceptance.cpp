// Release gate: twelve end-to-end criteria, one PASS/FAIL line each.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "brute_force.hpp"
#include "stopmart/io.hpp"
#include "stopmart/montecarlo.hpp"
#include "stopmart/verify.hpp"

using namespace stopmart;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %-34s %s\n", ok ? "PASS" : "FAIL", index,
                name.c_str(), detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Conservation identity, float then rational.
void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    auto spec = MartingaleSpec::sum(srw_law());
    auto trace = propagate<double>(spec, StoppingRule::first_positive(), 10000);
    auto cons = conservation_residual(trace);
    bool float_ok = cons.max_abs <= 1e-10 + trace.budget_abs;

    auto exact = propagate<Rational>(spec, StoppingRule::first_positive(), 64,
                                     ExactOptions{0.0, {}});
    bool rational_ok = true;
    for (const auto& r : conservation_residual(exact).residual)
        rational_ok = rational_ok && r == 0;
    double secs = elapsed_since(t0);
    report(1, "conservation identity", float_ok && rational_ok && secs < 10,
           "max residual " + fmt(cons.max_abs) + " (budget " + fmt(trace.budget_abs) +
               "), rational residuals all zero: " + (rational_ok ? "yes" : "no") +
               ", " + fmt(secs) + " s");
}

// 2. Exhaustive enumeration oracle.
void criterion2() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (const auto& pmf : testing::random_small_laws(5, 20240826)) {
        auto trace = propagate<Rational>(MartingaleSpec::sum(IncrementLaw::from(pmf)),
                                         StoppingRule::first_positive(), 10,
                                         ExactOptions{0.0, {}});
        auto oracle = testing::brute_force(pmf, StoppingRule::first_positive(), 10);
        for (std::size_t i = 0; i < 10; ++i) {
            ok = ok && trace.p_gt_n[i] == oracle.p_gt_n[i];
            ok = ok && trace.stopped_cum[i] == oracle.stopped_cum[i];
            ok = ok && trace.alive_first[i] == oracle.alive_first[i];
        }
    }
    double secs = elapsed_since(t0);
    report(2, "brute-force oracle equivalence", ok && secs < 60,
           "5 laws, horizon 10, exact equality: " + std::string(ok ? "yes" : "no") +
               ", " + fmt(secs) + " s");
}

// 3 and 9 share the expensive horizon-100000 trace.
ExactTrace<double> srw_100k() {
    ExactOptions options;
    options.p_list = {3};
    return propagate<double>(MartingaleSpec::sum(srw_law()),
                             StoppingRule::first_positive(), 100000, options);
}

void criterion3(const ExactTrace<double>& trace, double secs) {
    auto result = check_application_constants(trace);
    bool ok = result.status == CheckStatus::Pass && secs < 300;
    report(3, "product limit equals one", ok,
           "product " + fmt(result.observed.at("product")) + " (claimed 1 +- 2%); " +
               result.note + "; " + fmt(secs) + " s");
}

// 4. Family-1 overshoot is constant.
void criterion4() {
    LatticePmf<Rational> pmf;
    pmf.atoms = {{-2, Rational(1, 3)}, {1, Rational(2, 3)}};
    auto spec = MartingaleSpec::sum(IncrementLaw::from(make_c1(std::move(pmf))));
    bool ok = true;
    for (std::int64_t h : {0, 3, 7}) {
        auto trace = propagate<Rational>(spec, StoppingRule::first_above(h), 600,
                                         ExactOptions{0.0, {}});
        ok = ok && trace.stopped_hist.size() == 1 &&
             trace.stopped_hist.begin()->first == h + 1 && trace.budget_mass == 0;
    }
    report(4, "constant overshoot (family 1)", ok,
           "stopped distribution is a point mass at h+1 for h in {0,3,7}");
}

// 5. Family-2 overshoot is geometric; report the conditional mean.
void criterion5() {
    bool ok = true;
    std::string means;
    for (double p : {0.3, 0.5}) {
        auto law = IncrementLaw::from(
            make_c2(p == 0.3 ? Rational(3, 10) : Rational(1, 2), Rational(1)));
        for (std::int64_t h : {0, 5}) {
            auto trace = propagate<double>(MartingaleSpec::sum(law),
                                           StoppingRule::first_above(h), 2000);
            double total = 0, mean = 0;
            for (const auto& [k, v] : trace.overshoot_hist) {
                total += v;
                mean += double(k) * v;
            }
            mean /= total;
            for (std::int64_t j = 1; j <= 60; ++j) {
                double expected = (1 - p) * std::pow(p, double(j - 1));
                auto it = trace.overshoot_hist.find(j);
                double observed = it == trace.overshoot_hist.end() ? 0.0 : it->second / total;
                ok = ok && std::abs(observed - expected) <= 1e-10;
            }
            if (h == 0)
                means += "p=" + fmt(p) + ": mean " + fmt(mean) + " = 1/(1-p) " +
                         fmt(1.0 / (1 - p)) + " (claimed 1/p = " + fmt(1.0 / p) + "); ";
        }
    }
    report(5, "geometric overshoot (family 2)", ok,
           "per-atom error <= 1e-10; conditional " + means);
}

// 6. Family-3 overshoot is exponential with mean 1/a.
void criterion6(int workers) {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double a : {1.0, 2.0}) {
        McOptions options;
        options.n_max = 10000;
        options.paths = 1000000;
        options.seed = 7;
        options.workers = workers;
        auto spec = MartingaleSpec::sum(IncrementLaw::from(make_c3(a, 0.5)));
        auto report_mc = estimate(spec, StoppingRule::first_positive(), options);
        auto mean = report_mc.overshoot_mean();
        ok = ok && mean.covers(1.0 / a);
        detail += "a=" + fmt(a) + ": " + fmt(mean.value) + " +- " +
                  fmt(mean.half_width) + "; ";
    }
    double secs = elapsed_since(t0);
    report(6, "exponential overshoot (family 3)", ok && secs < 120,
           detail + fmt(secs) + " s");
}

// 7. Counter-example 1: never stopping has positive probability.
void criterion7() {
    auto bound = ce1_infinity_lower_bound(100);
    auto profile = wobble_profile(MartingaleSpec::sum(IncrementLaw::from(ce1_sequence())),
                                  {100}, 100, {0.5}, 100000, 13);
    double proxy = profile.matrix[0][0];
    bool ok = bound.conclusive && proxy < 0.02;
    report(7, "counter-example 1 certifies P(T=inf)>0", ok,
           "lower bound " + fmt(bound.lower_bound) + " > 0, late-fluctuation proxy " +
               fmt(proxy) + " < 0.02");
}

// 8. Counter-example 2: the walk survives with the predicted probability.
void criterion8(int workers) {
    McOptions options;
    options.n_max = 200;
    options.paths = 1000000;
    options.seed = 11;
    options.workers = workers;
    auto spec = MartingaleSpec::sum(IncrementLaw::from(ce2_sequence()));
    auto mc = estimate(spec, StoppingRule::first_positive(), options);
    auto s = mc.stats().back();
    double target = 1.0;
    for (int j = 1; j <= 50; ++j) target *= 1.0 - std::ldexp(1.0, -j);
    double se = s.p_gt_n.half_width / 1.96;
    bool survive_ok = s.p_gt_n.value >= target - 4 * se;

    auto rows = overshoot_condition_estimate(spec, StoppingRule::first_positive(),
                                             {3, 6, 9, 12}, 400000, 11);
    bool growth_ok = rows.front().has_data && rows.back().has_data &&
                     rows.back().mean > 10 * rows.front().mean;
    report(8, "counter-example 2 survival and growth", survive_ok && growth_ok,
           "P(T>200) " + fmt(s.p_gt_n.value) + " vs product bound " + fmt(target) +
               " (4se " + fmt(4 * se) + "), crossing mean " + fmt(rows.front().mean) +
               " at n=3 grows to " + fmt(rows.back().mean) + " at n=12");
}

// 9. Corollaries at horizon 100000.
void criterion9(const ExactTrace<double>& trace) {
    auto c32 = check_corollary32(trace, 2.0);
    const std::size_t rows = trace.p_gt_n.size();
    double min_a = std::numeric_limits<double>::infinity();
    for (std::size_t i = rows / 10; i < rows; ++i)
        min_a = std::min(min_a, trace.p_gt_n[i] * trace.m2_alive[i]);
    double max_a = 0;
    for (std::size_t i = rows / 10; i < rows; ++i)
        max_a = std::max(max_a, trace.p_gt_n[i] * trace.m2_alive[i]);
    bool a_near_one = std::abs(min_a - 1.0) <= 0.02 && std::abs(max_a - 1.0) <= 0.02;

    double min_np = std::numeric_limits<double>::infinity();
    for (std::size_t i = 99; i < rows; ++i)
        min_np = std::min(min_np, double(i + 1) * trace.p_gt_n[i]);
    bool c33_ok = check_corollary33(trace, 99).status == CheckStatus::Pass && min_np >= 1.0;

    bool ok = c32.status == CheckStatus::Pass && a_near_one && c33_ok;
    report(9, "corollaries (moment and survival)", ok,
           "inequality margin ok: " + std::string(c32.status == CheckStatus::Pass ? "yes" : "no") +
               "; a_n in [" + fmt(min_a) + ", " + fmt(max_a) +
               "] vs claimed 1 +- 2%; min n P(T>n) for n>=100: " + fmt(min_np));
}

// 10. Degree-2 polynomial martingale conservation.
void criterion10() {
    auto spec = MartingaleSpec::poly2_variance(srw_law());
    auto trace = propagate<double>(spec, StoppingRule::first_positive(), 10000);
    auto cons = conservation_residual(trace);
    bool residual_ok = cons.max_abs <= 1e-10 + trace.budget_abs;
    CheckOptions options;
    options.flat_tol = 1e-3;  // L_n of the squared walk settles more slowly
    auto result = check_theorem31(trace, options);
    report(10, "polynomial martingale conservation", residual_ok && result.status == CheckStatus::Pass,
           "max residual " + fmt(cons.max_abs) + " (budget " + fmt(trace.budget_abs) +
               "), settled check: " + to_string(result.status));
}

// 11. Randomized-excursion demonstration: bounded stops, growing |M|.
void criterion11(int workers) {
    McOptions options;
    options.n_max = 1000000;
    options.paths = 100000;
    options.seed = 5;
    options.workers = workers;
    auto demo = example1_demo(1.0, 5, options);
    bool ok = demo.max_accepted_abs < 1.0 && demo.curve_strictly_increasing();
    auto curve = demo.growth_curve();
    report(11, "randomized stop with growing mean", ok,
           "max accepted |M| " + fmt(demo.max_accepted_abs) + " < 1, E|M_{T^ n}| " +
               fmt(curve.front()) + " -> " + fmt(curve.back()) + " strictly increasing: " +
               (demo.curve_strictly_increasing() ? "yes" : "no"));
}

// 12. Byte-identical reports across reruns and worker counts.
void criterion12() {
    McOptions options;
    options.n_max = 1000;
    options.paths = 50000;
    options.seed = 99;
    auto spec = MartingaleSpec::sum(srw_law());
    auto rule = StoppingRule::first_positive();
    std::string once = mc_report_json(estimate(spec, rule, options)).dump();
    std::string twice = mc_report_json(estimate(spec, rule, options)).dump();
    options.workers = 8;
    std::string parallel = mc_report_json(estimate(spec, rule, options)).dump();
    bool ok = once == twice && once == parallel;
    report(12, "deterministic reports", ok,
           std::string("rerun identical: ") + (once == twice ? "yes" : "no") +
               ", 1 vs 8 workers identical: " + (once == parallel ? "yes" : "no"));
}

}  // namespace

int main() {
    const int workers = 1;  // single-core environment; determinism is checked anyway
    criterion1();
    criterion2();

    auto t0 = std::chrono::steady_clock::now();
    auto big = srw_100k();
    double big_secs = elapsed_since(t0);
    criterion3(big, big_secs);

    criterion4();
    criterion5();
    criterion6(workers);
    criterion7();
    criterion8(workers);
    criterion9(big);
    criterion10();
    criterion11(workers);
    criterion12();

    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
