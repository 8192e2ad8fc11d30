#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stopmart {

using Rational = boost::multiprecision::cpp_rational;

// Parses a decimal string ("0.3", "-1/8", "2") into an exact rational.
// Decimal notation is lossless here; "a/b" is accepted as well.
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        Rational num(boost::multiprecision::cpp_int(text.substr(0, slash)));
        boost::multiprecision::cpp_int den(text.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator: " + text);
        return num / Rational(den);
    }
    bool negative = false;
    std::size_t i = 0;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    boost::multiprecision::cpp_int digits = 0;
    boost::multiprecision::cpp_int scale = 1;
    bool seen_dot = false, seen_digit = false;
    for (; i < text.size(); ++i) {
        char ch = text[i];
        if (ch == '.') {
            if (seen_dot) throw std::invalid_argument("bad rational literal: " + text);
            seen_dot = true;
        } else if (ch >= '0' && ch <= '9') {
            digits = digits * 10 + (ch - '0');
            if (seen_dot) scale *= 10;
            seen_digit = true;
        } else {
            throw std::invalid_argument("bad rational literal: " + text);
        }
    }
    if (!seen_digit) throw std::invalid_argument("bad rational literal: " + text);
    Rational value(digits, scale);
    return negative ? -value : value;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double x) { return x; }

// Scalar glue so the exact engine can be instantiated with double or Rational.
template <class Real>
struct ScalarOps;

template <>
struct ScalarOps<double> {
    static double from_rational(const Rational& r) { return to_double(r); }
    static double from_int(std::int64_t v) { return static_cast<double>(v); }
    static constexpr bool exact = false;
};

template <>
struct ScalarOps<Rational> {
    static Rational from_rational(const Rational& r) { return r; }
    static Rational from_int(std::int64_t v) { return Rational(v); }
    static constexpr bool exact = true;
};

}  // namespace stopmart
