#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopmart/exact.hpp"
#include "stopmart/laws.hpp"
#include "stopmart/process.hpp"
#include "stopmart/stopping.hpp"

namespace stopmart {

// Resolved scenario configuration. Numeric law parameters travel as decimal
// strings in JSON so rational mode parses them losslessly.
struct Scenario {
    std::string name;
    MartingaleSpec spec;
    StoppingRule rule = StoppingRule::first_positive();

    enum class Engine { Exact, Mc, Both };
    Engine engine = Engine::Exact;
    bool rational_mode = false;

    std::int64_t horizon = 1000;       // exact N / mc N_max
    std::int64_t paths = 100000;
    std::uint64_t seed = 1;
    int partitions = 64;
    std::vector<std::int64_t> checkpoints;
    std::vector<double> p_list;
    double prune_eps = 1e-15;

    // Example1 extras
    double example1_band = 1.0;
    std::int64_t example1_stages = 5;

    void validate() const {
        bool needs_mc = !spec.law.lattice() || rule.randomized() ||
                        spec.variant == MartingaleSpec::Variant::Poly2Compensated;
        if (needs_mc && engine != Engine::Mc)
            throw std::domain_error(
                "scenario '" + name + "' requires the mc engine (capability mismatch)");
        if (rational_mode && engine != Engine::Exact)
            throw std::domain_error("rational mode applies to the exact engine only");
    }
};

namespace cfg {

using json = nlohmann::json;

inline Rational rational_field(const json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    throw std::invalid_argument("field '" + key + "' must be a decimal string");
}

inline LatticePmf<Rational> parse_pmf(const json& atoms) {
    LatticePmf<Rational> pmf;
    for (const auto& a : atoms)
        pmf.atoms.push_back(
            {a.at("value").get<std::int64_t>(),
             a.at("mass").is_string() ? parse_rational(a.at("mass").get<std::string>())
                                      : Rational(a.at("mass").get<std::int64_t>())});
    pmf.normalize_layout();
    return pmf;
}

inline IncrementLaw parse_law(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "c1") {
        auto pmf = parse_pmf(j.at("atoms"));
        return IncrementLaw::from(make_c1(std::move(pmf)));
    }
    if (kind == "c2") {
        std::optional<LatticePmf<Rational>> neg;
        if (j.contains("neg_part")) neg = parse_pmf(j.at("neg_part"));
        std::optional<std::int64_t> kmax;
        if (j.contains("truncation_k_max")) kmax = j.at("truncation_k_max").get<std::int64_t>();
        return IncrementLaw::from(
            make_c2(rational_field(j, "p"), rational_field(j, "c"), neg, kmax));
    }
    if (kind == "c3")
        return IncrementLaw::from(
            make_c3(to_double(rational_field(j, "a")), to_double(rational_field(j, "c"))));
    if (kind == "ce1") return IncrementLaw::from(ce1_sequence());
    if (kind == "ce2") return IncrementLaw::from(ce2_sequence());
    if (kind == "explicit") return IncrementLaw::from(parse_pmf(j.at("atoms")));
    throw std::invalid_argument("unknown law kind '" + kind + "'");
}

inline MartingaleSpec parse_process(const json& j, IncrementLaw law) {
    std::string variant = j.value("variant", std::string("sum"));
    if (variant == "sum") return MartingaleSpec::sum(std::move(law));
    if (variant == "poly2_compensated") return MartingaleSpec::poly2_compensated(std::move(law));
    if (variant == "poly2_variance") return MartingaleSpec::poly2_variance(std::move(law));
    throw std::invalid_argument("unknown process variant '" + variant + "'");
}

inline StoppingRule parse_rule(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "first_positive") return StoppingRule::first_positive();
    if (kind == "first_above") return StoppingRule::first_above(j.at("h").get<std::int64_t>());
    if (kind == "first_exit") return StoppingRule::first_exit(j.at("z").get<double>());
    if (kind == "example1")
        return StoppingRule::example1(j.at("L").get<double>(),
                                      j.value("stages", std::int64_t(5)));
    throw std::invalid_argument("unknown stopping kind '" + kind + "'");
}

inline Scenario parse_scenario(const json& j) {
    Scenario scenario;
    scenario.name = j.at("name").get<std::string>();
    IncrementLaw law = parse_law(j.at("law"));
    scenario.spec = j.contains("process") ? parse_process(j.at("process"), std::move(law))
                                          : MartingaleSpec::sum(std::move(law));
    if (j.contains("stopping")) scenario.rule = parse_rule(j.at("stopping"));
    std::string engine = j.value("engine", std::string("exact"));
    scenario.engine = engine == "mc"     ? Scenario::Engine::Mc
                      : engine == "both" ? Scenario::Engine::Both
                                         : Scenario::Engine::Exact;
    scenario.rational_mode = j.value("arithmetic_mode", std::string("float")) == "rational";
    scenario.horizon = j.value("N", j.value("N_max", std::int64_t(1000)));
    scenario.paths = j.value("paths", std::int64_t(100000));
    scenario.seed = j.value("seed", std::uint64_t(1));
    scenario.partitions = j.value("partitions", 64);
    if (j.contains("checkpoints"))
        scenario.checkpoints = j.at("checkpoints").get<std::vector<std::int64_t>>();
    if (j.contains("p_list")) scenario.p_list = j.at("p_list").get<std::vector<double>>();
    scenario.prune_eps = j.value("prune_eps", scenario.rational_mode ? 0.0 : 1e-15);
    if (scenario.rule.kind == StoppingRule::Kind::Example1) {
        scenario.example1_band = scenario.rule.example1_band;
        scenario.example1_stages = scenario.rule.example1_max_stage;
    }
    scenario.validate();
    return scenario;
}

// Scenario config echoed into every output file (self-describing runs).
inline json scenario_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["engine"] = s.engine == Scenario::Engine::Mc     ? "mc"
                  : s.engine == Scenario::Engine::Both ? "both"
                                                       : "exact";
    j["arithmetic_mode"] = s.rational_mode ? "rational" : "float";
    j["N"] = s.horizon;
    j["paths"] = s.paths;
    j["seed"] = s.seed;
    j["partitions"] = s.partitions;
    j["prune_eps"] = s.prune_eps;
    j["p_list"] = s.p_list;
    switch (s.spec.variant) {
        case MartingaleSpec::Variant::Sum: j["process"] = "sum"; break;
        case MartingaleSpec::Variant::Poly2Compensated: j["process"] = "poly2_compensated"; break;
        case MartingaleSpec::Variant::Poly2Variance: j["process"] = "poly2_variance"; break;
    }
    switch (s.spec.law.kind) {
        case IncrementLaw::Kind::C1: j["law"] = "c1"; break;
        case IncrementLaw::Kind::C2: j["law"] = "c2"; break;
        case IncrementLaw::Kind::C3: j["law"] = "c3"; break;
        case IncrementLaw::Kind::Ce1: j["law"] = "ce1"; break;
        case IncrementLaw::Kind::Ce2: j["law"] = "ce2"; break;
        case IncrementLaw::Kind::Explicit: j["law"] = "explicit"; break;
    }
    switch (s.rule.kind) {
        case StoppingRule::Kind::FirstAbove:
            j["stopping"] = {{"kind", "first_above"}, {"h", s.rule.level}};
            break;
        case StoppingRule::Kind::FirstExit:
            j["stopping"] = {{"kind", "first_exit"}, {"z", s.rule.exit_z}};
            break;
        case StoppingRule::Kind::Example1:
            j["stopping"] = {{"kind", "example1"},
                             {"L", s.rule.example1_band},
                             {"stages", s.rule.example1_max_stage}};
            break;
    }
    return j;
}

}  // namespace cfg

// Built-in scenarios covering the canonical examples and counter-examples.
inline std::map<std::string, std::string> builtin_scenarios() {
    return {
        {"srw_first_positive",
         R"({"name":"srw_first_positive","law":{"kind":"c1","atoms":[{"value":1,"mass":"1/2"},{"value":-1,"mass":"1/2"}]},"stopping":{"kind":"first_positive"},"engine":"exact","N":100000,"p_list":[3]})"},
        {"srw_first_positive_rational",
         R"({"name":"srw_first_positive_rational","law":{"kind":"c1","atoms":[{"value":1,"mass":"1/2"},{"value":-1,"mass":"1/2"}]},"stopping":{"kind":"first_positive"},"engine":"exact","arithmetic_mode":"rational","N":64})"},
        {"c1_skewed_overshoot",
         R"({"name":"c1_skewed_overshoot","law":{"kind":"c1","atoms":[{"value":1,"mass":"2/3"},{"value":-2,"mass":"1/3"}]},"stopping":{"kind":"first_above","h":3},"engine":"exact","N":4000})"},
        {"c2_p50_overshoot",
         R"({"name":"c2_p50_overshoot","law":{"kind":"c2","p":"0.5","c":"1"},"stopping":{"kind":"first_positive"},"engine":"exact","N":2000})"},
        {"c2_p30_overshoot",
         R"({"name":"c2_p30_overshoot","law":{"kind":"c2","p":"0.3","c":"1"},"stopping":{"kind":"first_positive"},"engine":"exact","N":2000})"},
        {"f3_overshoot_a2",
         R"({"name":"f3_overshoot_a2","law":{"kind":"c3","a":"2","c":"0.5"},"stopping":{"kind":"first_positive"},"engine":"mc","N_max":10000,"paths":1000000,"seed":7})"},
        {"ce1",
         R"({"name":"ce1","law":{"kind":"ce1"},"stopping":{"kind":"first_positive"},"engine":"exact","N":100})"},
        {"ce2",
         R"({"name":"ce2","law":{"kind":"ce2"},"stopping":{"kind":"first_positive"},"engine":"mc","N_max":200,"paths":1000000,"seed":11})"},
        {"example1",
         R"({"name":"example1","law":{"kind":"c1","atoms":[{"value":1,"mass":"1/2"},{"value":-1,"mass":"1/2"}]},"stopping":{"kind":"example1","L":1.0,"stages":5},"engine":"mc","N_max":1000000,"paths":100000,"seed":5})"},
        {"poly2_srw",
         R"({"name":"poly2_srw","law":{"kind":"c1","atoms":[{"value":1,"mass":"1/2"},{"value":-1,"mass":"1/2"}]},"process":{"variant":"poly2_variance"},"stopping":{"kind":"first_positive"},"engine":"exact","N":10000})"},
        {"degenerate",
         R"({"name":"degenerate","law":{"kind":"explicit","atoms":[{"value":0,"mass":"1"}]},"stopping":{"kind":"first_positive"},"engine":"mc","N_max":100,"paths":10000})"},
    };
}

}  // namespace stopmart
