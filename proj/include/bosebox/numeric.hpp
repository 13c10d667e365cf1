#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bosebox {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b)
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == kNegInf) return a;
    return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> x) {
    if (x.empty()) return kNegInf;
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

// log(1 - e^{-x}) for x > 0
inline double log1mexp(double x) {
    return x < 0.6931471805599453 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

// log(e^a - e^b), a >= b
inline double log_sub(double a, double b) {
    if (b == kNegInf) return a;
    if (b >= a) return kNegInf;
    return a + log1mexp(a - b);
}

}  // namespace bosebox
