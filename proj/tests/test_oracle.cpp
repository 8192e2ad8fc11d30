#include <catch2/catch_amalgamated.hpp>

#include "brute_force.hpp"

using namespace stopmart;
using namespace stopmart::testing;

namespace {

void compare_against_enumeration(const LatticePmf<Rational>& pmf,
                                 const StoppingRule& rule, std::int64_t horizon) {
    auto spec = MartingaleSpec::sum(IncrementLaw::from(pmf));
    auto trace = propagate<Rational>(spec, rule, horizon, ExactOptions{0.0, {}});
    auto oracle = brute_force(pmf, rule, horizon);
    for (std::size_t i = 0; i < std::size_t(horizon); ++i) {
        REQUIRE(trace.p_gt_n[i] == oracle.p_gt_n[i]);
        REQUIRE(trace.stopped_cum[i] == oracle.stopped_cum[i]);
        REQUIRE(trace.alive_first[i] == oracle.alive_first[i]);
    }
}

}  // namespace

TEST_CASE("exact recursion equals exhaustive path enumeration") {
    SECTION("simple random walk") {
        LatticePmf<Rational> pmf;
        pmf.atoms = {{-1, Rational(1, 2)}, {1, Rational(1, 2)}};
        pmf.normalize_layout();
        compare_against_enumeration(pmf, StoppingRule::first_positive(), 10);
        compare_against_enumeration(pmf, StoppingRule::first_above(2), 10);
        compare_against_enumeration(pmf, StoppingRule::first_exit(2.0), 10);
    }
    SECTION("randomly parameterized small laws") {
        for (const auto& pmf : random_small_laws(3, 2024)) {
            REQUIRE(pmf.atoms.size() <= 4);
            compare_against_enumeration(pmf, StoppingRule::first_positive(), 8);
        }
    }
}
