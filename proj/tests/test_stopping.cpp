#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "stopmart/process.hpp"
#include "stopmart/stopping.hpp"

using namespace stopmart;

TEST_CASE("first crossing above a level") {
    auto rule = StoppingRule::first_above(1);
    RuleEvaluator eval(rule);
    REQUIRE_FALSE(eval.feed(1, 1.0).has_value());  // strict inequality
    REQUIRE_FALSE(eval.feed(2, 0.0).has_value());
    auto stopped = eval.feed(3, 2.0);
    REQUIRE(stopped.has_value());
    REQUIRE(*stopped == 2.0);
    REQUIRE_THROWS_AS(StoppingRule::first_above(-1), std::invalid_argument);
}

TEST_CASE("two-sided exit is strict on both sides") {
    auto rule = StoppingRule::first_exit(2.0);
    RuleEvaluator eval(rule);
    REQUIRE_FALSE(eval.feed(1, -2.0).has_value());  // on the barrier: keep going
    REQUIRE_FALSE(eval.feed(2, -1.0).has_value());
    REQUIRE(eval.feed(3, -2.5).has_value());
    RuleEvaluator up(rule);
    REQUIRE(up.feed(1, 0.5).has_value());  // any positive value exits
    REQUIRE_THROWS_AS(StoppingRule::first_exit(0.0), std::invalid_argument);
}

TEST_CASE("evaluate over a materialized prefix") {
    std::vector<double> path = {-1, -2, -1, 0, 1, 2};
    auto outcome = evaluate(StoppingRule::first_positive(), path);
    REQUIRE(outcome.status == StopOutcome::Status::Stopped);
    REQUIRE(outcome.n == 5);
    REQUIRE(outcome.value == 1.0);
    REQUIRE(overshoot(outcome, 0) == 1.0);

    std::vector<double> low = {-1, -2, -3};
    auto running = evaluate(StoppingRule::first_positive(), low);
    REQUIRE(running.status == StopOutcome::Status::Running);
    REQUIRE_THROWS_AS(overshoot(running, 0), std::invalid_argument);
}

TEST_CASE("randomized excursion rule") {
    auto rule = StoppingRule::example1(1.0, 5);
    REQUIRE(rule.randomized());

    SECTION("stage 1 never stops; stage advances after a full excursion") {
        RuleEvaluator eval(rule, 99);
        // Out past k^3 = 1, then back inside |M| < 1: completes stage 1.
        REQUIRE_FALSE(eval.feed(1, 2.0).has_value());
        REQUIRE(eval.example1_stage() == 1);
        REQUIRE_FALSE(eval.feed(2, 0.0).has_value());
        REQUIRE(eval.example1_stage() == 2);
    }

    SECTION("decisions are adapted: a longer path extends, never rewrites") {
        // Any prefix of the path yields the same stop-or-continue decisions.
        Rng rng(31, 8);
        std::vector<double> path;
        double m = 0;
        for (int i = 0; i < 4000; ++i) {
            m += rng.next_bool() ? 1 : -1;
            path.push_back(m);
        }
        auto full = evaluate(rule, path, 12345);
        for (std::size_t len : {std::size_t(500), std::size_t(2000), path.size()}) {
            auto part = evaluate(rule, std::span<const double>(path.data(), len), 12345);
            if (full.status == StopOutcome::Status::Stopped &&
                std::size_t(full.n) <= len) {
                REQUIRE(part.status == StopOutcome::Status::Stopped);
                REQUIRE(part.n == full.n);
                REQUIRE(part.value == full.value);
            } else {
                REQUIRE(part.status == StopOutcome::Status::Running);
            }
        }
    }

    SECTION("acceptance coin depends only on the auxiliary seed and stage") {
        // Two different paths under one auxiliary seed: if both reach the
        // stage-2 coin, both must see the same outcome. Force it with
        // synthetic paths that hit |M| > 8 and return inside the band.
        std::vector<double> a = {2, 0, 9, 5, 0.5};
        std::vector<double> b = {-2, 0.5, -9, -3, 0.1, -0.2};
        for (std::uint64_t aux = 0; aux < 32; ++aux) {
            auto ra = evaluate(rule, a, aux);
            auto rb = evaluate(rule, b, aux);
            bool sa = ra.status == StopOutcome::Status::Stopped;
            bool sb = rb.status == StopOutcome::Status::Stopped;
            REQUIRE(sa == sb);
        }
    }

    SECTION("no acceptance after the stage budget is exhausted") {
        auto tight = StoppingRule::example1(1.0, 1);
        RuleEvaluator eval(tight, 0);
        for (int rep = 0; rep < 10; ++rep) {
            REQUIRE_FALSE(eval.feed(2 * rep + 1, 100.0).has_value());
            REQUIRE_FALSE(eval.feed(2 * rep + 2, 0.0).has_value());
        }
        REQUIRE(eval.example1_exhausted());
    }
}
