#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopmart/rational.hpp"
#include "stopmart/rng.hpp"

namespace stopmart {

inline constexpr double kMassTol = 1e-12;

template <class Real>
struct LatticeAtom {
    std::int64_t value;
    Real mass;
};

// Finite integer-lattice PMF. Atoms are kept sorted by value with positive
// masses. A LatticePmf may be a sub-probability (see C2 tail truncation);
// validate() enforces the full-probability mean-zero contract.
template <class Real>
struct LatticePmf {
    std::vector<LatticeAtom<Real>> atoms;

    static LatticePmf from_atoms(std::vector<LatticeAtom<Real>> raw) {
        LatticePmf pmf{std::move(raw)};
        pmf.normalize_layout();
        pmf.validate();
        return pmf;
    }

    void normalize_layout() {
        std::sort(atoms.begin(), atoms.end(),
                  [](const auto& a, const auto& b) { return a.value < b.value; });
        for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
            if (atoms[i].value == atoms[i + 1].value)
                throw std::invalid_argument("duplicate lattice atom value");
        }
        atoms.erase(std::remove_if(atoms.begin(), atoms.end(),
                                   [](const auto& a) { return a.mass == Real(0); }),
                    atoms.end());
    }

    void validate() const {
        if (atoms.empty()) throw std::invalid_argument("empty lattice pmf");
        Real total(0), mean(0);
        for (const auto& a : atoms) {
            if (!(a.mass > Real(0)))
                throw std::invalid_argument("nonpositive atom mass");
            total += a.mass;
            mean += ScalarOps<Real>::from_int(a.value) * a.mass;
        }
        if constexpr (ScalarOps<Real>::exact) {
            if (total != Real(1)) throw std::invalid_argument("masses do not sum to 1");
            if (mean != Real(0)) throw std::invalid_argument("pmf mean is not zero");
        } else {
            if (std::abs(to_double(total) - 1.0) > kMassTol)
                throw std::invalid_argument("masses do not sum to 1");
            if (std::abs(to_double(mean)) > kMassTol)
                throw std::invalid_argument("pmf mean is not zero");
        }
    }

    Real total_mass() const {
        Real t(0);
        for (const auto& a : atoms) t += a.mass;
        return t;
    }

    Real mean() const {
        Real m(0);
        for (const auto& a : atoms) m += ScalarOps<Real>::from_int(a.value) * a.mass;
        return m;
    }

    double second_moment() const {
        double m = 0;
        for (const auto& a : atoms)
            m += double(a.value) * double(a.value) * to_double(a.mass);
        return m;
    }

    std::int64_t min_value() const { return atoms.front().value; }
    std::int64_t max_value() const { return atoms.back().value; }

    template <class Other>
    LatticePmf<Other> convert() const {
        LatticePmf<Other> out;
        out.atoms.reserve(atoms.size());
        for (const auto& a : atoms)
            out.atoms.push_back({a.value, ScalarOps<Other>::from_rational(Rational(a.mass))});
        return out;
    }
};

// Runtime sampling law for the Monte Carlo engine. Lattice laws sample by
// inverse CDF over their (few) atoms; C2 keeps its geometric upper tail
// untruncated; C3 mixes an Exponential(a) with a single negative atom.
struct Law {
    enum class Kind { Lattice, DiscreteReal, C2Geometric, ExpMix };

    Kind kind = Kind::Lattice;

    // Lattice / negative parts: values with cumulative masses.
    std::vector<std::int64_t> values;
    std::vector<double> cumulative;

    // DiscreteReal: non-lattice finite support (counter-example 2 steps).
    std::vector<double> real_values;

    // C2Geometric: with probability pos_prob draw k >= 1 geometric(p) on the
    // positive side, otherwise an atom from values/cumulative (scaled to 1).
    double p = 0;
    double pos_prob = 0;

    // ExpMix: P(X > y) = c e^{-a y}; negative atom -b balances the mean.
    double a = 0, c = 0, b = 0;

    static Law from_pmf(const LatticePmf<double>& pmf) {
        Law law;
        law.kind = Kind::Lattice;
        double acc = 0;
        for (const auto& atom : pmf.atoms) {
            law.values.push_back(atom.value);
            acc += atom.mass;
            law.cumulative.push_back(acc);
        }
        law.cumulative.back() = 1.0;
        return law;
    }

    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::Lattice:
                return static_cast<double>(pick_atom(rng.next_double()));
            case Kind::DiscreteReal: {
                double u = rng.next_double();
                auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
                if (idx >= real_values.size()) idx = real_values.size() - 1;
                return real_values[idx];
            }
            case Kind::C2Geometric: {
                double u = rng.next_double();
                if (u < pos_prob) {
                    // k = 1 + Geometric(1-p) failures; inverse CDF of
                    // P(K >= k | positive) = p^{k-1}.
                    double v = rng.next_double();
                    std::int64_t k =
                        1 + static_cast<std::int64_t>(std::floor(std::log1p(-v) / std::log(p)));
                    return static_cast<double>(k < 1 ? 1 : k);
                }
                return static_cast<double>(pick_atom(rng.next_double()));
            }
            case Kind::ExpMix: {
                double u = rng.next_double();
                if (u < c) return -std::log1p(-rng.next_double()) / a;
                return -b;
            }
        }
        return 0;
    }

private:
    std::int64_t pick_atom(double u) const {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
        if (idx >= values.size()) idx = values.size() - 1;
        return values[idx];
    }
};

// ---------------------------------------------------------------------------
// The three increment families and the two counter-example sequences.
// ---------------------------------------------------------------------------

// Mean-zero integer law whose maximum support point is +1.
struct C1Law {
    LatticePmf<Rational> pmf;

    template <class Real>
    LatticePmf<Real> step_pmf() const {
        return pmf.template convert<Real>();
    }
    Law mc_law() const { return Law::from_pmf(pmf.convert<double>()); }
};

inline C1Law make_c1(LatticePmf<Rational> pmf) {
    pmf.normalize_layout();
    pmf.validate();
    if (pmf.max_value() != 1)
        throw std::invalid_argument("C1 law requires maximum support point +1");
    return C1Law{std::move(pmf)};
}

// Geometric upper tail P(X = k) = c(1-p)p^k for k >= 1 plus a negative part
// balancing the mean. The upper tail is truncated at truncation_k_max for the
// exact engine; the cut mass and its value-weighted moment feed the DP error
// budget. Monte Carlo sampling keeps the tail untruncated.
struct C2Law {
    Rational p;
    Rational c;
    LatticePmf<Rational> neg_part;       // conditional law of the negative side
    Rational neg_mass;                   // 1 - c p
    std::int64_t truncation_k_max = 0;
    Rational tail_mass;                  // sum_{k > k_max} c(1-p)p^k
    Rational tail_abs_moment;            // sum_{k > k_max} k c(1-p)p^k

    // Sub-probability pmf: negative part plus truncated positive side.
    template <class Real>
    LatticePmf<Real> step_pmf() const {
        LatticePmf<Rational> full;
        for (const auto& atom : neg_part.atoms)
            full.atoms.push_back({atom.value, atom.mass * neg_mass});
        Rational pk = p;  // p^k
        for (std::int64_t k = 1; k <= truncation_k_max; ++k) {
            full.atoms.push_back({k, c * (1 - p) * pk});
            pk *= p;
        }
        full.normalize_layout();
        return full.template convert<Real>();
    }

    Law mc_law() const {
        Law law;
        law.kind = Law::Kind::C2Geometric;
        law.p = to_double(p);
        law.pos_prob = to_double(c * p);
        double acc = 0;
        for (const auto& atom : neg_part.atoms) {
            law.values.push_back(atom.value);
            acc += to_double(atom.mass);
            law.cumulative.push_back(acc);
        }
        law.cumulative.back() = 1.0;
        return law;
    }
};

inline std::int64_t default_c2_k_max(const Rational& p, const Rational& c) {
    // Smallest k with c p^{k+1} < 1e-14.
    const Rational cut(1, 100000000000000LL);
    std::int64_t k = 1;
    Rational mass = c * p * p;
    while (mass >= cut && k < 4096) {
        mass *= p;
        ++k;
    }
    return k;
}

inline C2Law make_c2(const Rational& p, const Rational& c,
                     std::optional<LatticePmf<Rational>> explicit_neg = std::nullopt,
                     std::optional<std::int64_t> k_max = std::nullopt) {
    if (!(p > 0 && p < 1)) throw std::invalid_argument("C2 requires 0 < p < 1");
    if (!(c > 0 && c * p < 1)) throw std::invalid_argument("C2 requires 0 < c < 1/p");

    C2Law law;
    law.p = p;
    law.c = c;
    law.neg_mass = 1 - c * p;
    // Positive-side mean: sum k c(1-p)p^k = c p / (1-p).
    const Rational pos_mean = c * p / (1 - p);

    if (explicit_neg) {
        for (const auto& atom : explicit_neg->atoms)
            if (atom.value > 0)
                throw std::invalid_argument("C2 negative part must have values <= 0");
        Rational total = explicit_neg->total_mass();
        if (total != Rational(1))
            throw std::invalid_argument("C2 negative part must be a conditional pmf");
        if (explicit_neg->mean() * law.neg_mass + pos_mean != 0)
            throw std::invalid_argument("C2 negative part does not balance the mean");
        law.neg_part = *explicit_neg;
    } else {
        // Canonical member: split mass 1 - cp between the two integers -m,
        // -(m+1) bracketing mu = cp / ((1-p)(1-cp)).
        const Rational mu = pos_mean / law.neg_mass;
        using boost::multiprecision::cpp_int;
        cpp_int m_int = numerator(mu) / denominator(mu);
        Rational m(m_int);
        if (mu == m) {
            law.neg_part.atoms = {{-m_int.convert_to<std::int64_t>(), Rational(1)}};
        } else {
            Rational w = m + 1 - mu;  // weight on -m
            if (!(w > 0 && w < 1))
                throw std::invalid_argument("C2 bracket weights out of range");
            law.neg_part.atoms = {
                {-(m_int.convert_to<std::int64_t>() + 1), 1 - w},
                {-m_int.convert_to<std::int64_t>(), w}};
        }
    }
    law.neg_part.normalize_layout();

    law.truncation_k_max = k_max ? *k_max : default_c2_k_max(p, c);
    // Tail sums: sum_{k>K} p^k = p^{K+1}/(1-p); sum_{k>K} k p^k =
    // p^{K+1}((K+1)(1-p)+p)/(1-p)^2.
    Rational pK1 = 1;
    for (std::int64_t i = 0; i <= law.truncation_k_max; ++i) pK1 *= p;
    law.tail_mass = c * pK1;
    law.tail_abs_moment =
        c * pK1 * (Rational(law.truncation_k_max + 1) * (1 - p) + p) / (1 - p);
    return law;
}

// P(X > y) = c e^{-ay}, negative atom at -b with b = c/(a(1-c)).
struct C3Law {
    double a = 0;
    double c = 0;
    double b = 0;

    Law mc_law() const {
        Law law;
        law.kind = Law::Kind::ExpMix;
        law.a = a;
        law.c = c;
        law.b = b;
        return law;
    }

    double survival(double y) const { return y > 0 ? c * std::exp(-a * y) : 1.0; }
};

inline C3Law make_c3(double a, double c) {
    if (!(a > 0)) throw std::invalid_argument("C3 requires a > 0");
    if (!(c > 0 && c < 1)) throw std::invalid_argument("C3 requires 0 < c < 1");
    return C3Law{a, c, c / (a * (1 - c))};
}

// ---------------------------------------------------------------------------
// Index-dependent sequences (counter-examples 1 and 2).
// ---------------------------------------------------------------------------

struct IndexedLawSequence {
    enum class Kind { Ce1, Ce2 };
    Kind kind;

    bool lattice() const { return kind == Kind::Ce1; }

    // CE1 step j: P(X=0) = 1 - j^{-2}, P(X=+1) = P(X=-1) = j^{-2}/2.
    template <class Real>
    LatticePmf<Real> step_pmf(std::int64_t j) const {
        if (kind != Kind::Ce1)
            throw std::invalid_argument("counter-example 2 increments are not lattice");
        Rational jj(j);
        Rational half_mass = Rational(1) / (2 * jj * jj);
        LatticePmf<Rational> pmf;
        pmf.atoms = {{-1, half_mass}, {0, 1 - 2 * half_mass}, {1, half_mass}};
        pmf.normalize_layout();
        return pmf.template convert<Real>();
    }

    Law mc_law(std::int64_t j) const {
        if (kind == Kind::Ce1) return Law::from_pmf(step_pmf<double>(j));
        // CE2 step j: P(X = (2^j - 1)/j) = 2^{-j}, P(X = -1/j) = 1 - 2^{-j}.
        // The jump never fires for j >= 63 at double precision coin odds.
        Law law;
        law.kind = Law::Kind::DiscreteReal;
        double jump = j < 1000 ? (std::exp2(double(j)) - 1.0) / double(j)
                               : std::ldexp(1.0, 1000);
        double pj = j < 63 ? std::ldexp(1.0, -static_cast<int>(j)) : 0.0;
        law.real_values = {-1.0 / double(j), jump};
        law.cumulative = {1.0 - pj, 1.0};
        return law;
    }
};

inline IndexedLawSequence ce1_sequence() { return {IndexedLawSequence::Kind::Ce1}; }
inline IndexedLawSequence ce2_sequence() { return {IndexedLawSequence::Kind::Ce2}; }

// Umbrella over every increment-law kind the engines accept. Immutable after
// construction; safe to share across workers.
struct IncrementLaw {
    enum class Kind { C1, C2, C3, Ce1, Ce2, Explicit };
    Kind kind = Kind::Explicit;

    std::optional<C1Law> c1;
    std::optional<C2Law> c2;
    std::optional<C3Law> c3;
    std::optional<LatticePmf<Rational>> explicit_pmf;
    std::optional<IndexedLawSequence> sequence;

    static IncrementLaw from(C1Law law) {
        IncrementLaw out;
        out.kind = Kind::C1;
        out.c1 = std::move(law);
        return out;
    }
    static IncrementLaw from(C2Law law) {
        IncrementLaw out;
        out.kind = Kind::C2;
        out.c2 = std::move(law);
        return out;
    }
    static IncrementLaw from(C3Law law) {
        IncrementLaw out;
        out.kind = Kind::C3;
        out.c3 = law;
        return out;
    }
    static IncrementLaw from(IndexedLawSequence seq) {
        IncrementLaw out;
        out.kind = seq.kind == IndexedLawSequence::Kind::Ce1 ? Kind::Ce1 : Kind::Ce2;
        out.sequence = seq;
        return out;
    }
    static IncrementLaw from(LatticePmf<Rational> pmf) {
        pmf.validate();
        IncrementLaw out;
        out.kind = Kind::Explicit;
        out.explicit_pmf = std::move(pmf);
        return out;
    }

    bool lattice() const { return kind != Kind::C3 && kind != Kind::Ce2; }
    bool indexed() const { return kind == Kind::Ce1 || kind == Kind::Ce2; }

    // Lattice pmf of step j (1-based). For C2 this is a sub-probability; the
    // caller folds step_tail_mass()/step_tail_abs_moment() into its budget.
    template <class Real>
    LatticePmf<Real> step_pmf(std::int64_t j) const {
        switch (kind) {
            case Kind::C1: return c1->step_pmf<Real>();
            case Kind::C2: return c2->step_pmf<Real>();
            case Kind::Ce1: return sequence->step_pmf<Real>(j);
            case Kind::Explicit: return explicit_pmf->template convert<Real>();
            default: throw std::invalid_argument("law has no lattice pmf");
        }
    }

    Rational step_tail_mass() const { return kind == Kind::C2 ? c2->tail_mass : Rational(0); }
    Rational step_tail_abs_moment() const {
        return kind == Kind::C2 ? c2->tail_abs_moment : Rational(0);
    }

    Law mc_law(std::int64_t j) const {
        switch (kind) {
            case Kind::C1: return c1->mc_law();
            case Kind::C2: return c2->mc_law();
            case Kind::C3: return c3->mc_law();
            case Kind::Ce1:
            case Kind::Ce2: return sequence->mc_law(j);
            case Kind::Explicit: return Law::from_pmf(explicit_pmf->convert<double>());
        }
        throw std::logic_error("unreachable");
    }

    // Per-step variance (step j), used by the Poly2Variance eligibility check.
    double step_variance(std::int64_t j) const {
        switch (kind) {
            case Kind::C1: return c1->pmf.convert<double>().second_moment();
            case Kind::C2: {
                // Truncated second moment; the tail contribution is below the
                // truncation cutoff and irrelevant for eligibility checks.
                return c2->step_pmf<double>().second_moment();
            }
            case Kind::C3: {
                double a = c3->a, c = c3->c, b = c3->b;
                return 2 * c / (a * a) + (1 - c) * b * b;
            }
            case Kind::Ce1: return 1.0 / (double(j) * double(j));
            case Kind::Ce2: {
                double pj = std::ldexp(1.0, -int(std::min<std::int64_t>(j, 62)));
                double big = (std::exp2(double(j)) - 1.0) / double(j);
                return pj * big * big + (1 - pj) / (double(j) * double(j));
            }
            case Kind::Explicit: return explicit_pmf->convert<double>().second_moment();
        }
        throw std::logic_error("unreachable");
    }
};

// Canonical simple-random-walk member of C1.
inline IncrementLaw srw_law() {
    LatticePmf<Rational> pmf;
    pmf.atoms = {{-1, Rational(1, 2)}, {1, Rational(1, 2)}};
    return IncrementLaw::from(make_c1(std::move(pmf)));
}

inline double sample(const Law& law, Rng& rng) { return law.sample(rng); }

}  // namespace stopmart
