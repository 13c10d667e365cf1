#include "bosebox/limits.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bosebox/canonical.hpp"
#include "bosebox/errors.hpp"
#include "bosebox/grandcanonical.hpp"
#include "bosebox/numeric.hpp"

namespace bosebox {

GapCoefficients gap_coefficients(int n, int m_trunc, double beta) {
    if (!(n >= 1 && m_trunc > n)) throw DomainError("gap_coefficients: requires M > n >= 1");
    GapCoefficients c{n, m_trunc, beta, {}, {}, {}, {}, 0.0};
    const std::size_t size = std::size_t(m_trunc) + 1;
    c.eps.assign(size, 0.0);
    c.eta.assign(size, 0.0);
    c.b.assign(size, 0.0);
    c.product_tail.assign(size, 0.0);
    const double nn = double(n) * n;
    for (int m = 1; m <= m_trunc; ++m) {
        c.eps[m] = 0.5 * kPi * kPi * double(m) * m;
        c.eta[m] = beta * 0.5 * kPi * kPi * (double(m) * m - nn);
    }
    c.eta[n] = 0.0;
    std::vector<double> log_int(2 * size + 1, 0.0);
    for (std::size_t i = 1; i < log_int.size(); ++i) log_int[i] = std::log(double(i));
    // factor (1 - eta_m/eta_m')^{-1} = (m'^2 - n^2) / (m'^2 - m^2)
    std::vector<double> log_num(size, 0.0);
    for (int mp = 1; mp <= m_trunc; ++mp)
        if (mp != n) log_num[mp] = log_int[std::abs(mp - n)] + log_int[mp + n];
    for (int m = 1; m <= m_trunc; ++m) {
        if (m == n) continue;
        double lg = -std::log(std::abs(c.eta[m]));
        int sign = c.eta[m] > 0 ? 1 : -1;
        for (int mp = 1; mp <= m_trunc; ++mp) {
            if (mp == n || mp == m) continue;
            lg += log_num[mp] - log_int[std::abs(mp - m)] - log_int[mp + m];
            if ((mp > n) != (mp > m)) sign = -sign;
        }
        c.b[m] = sign * std::exp(lg);
        c.product_tail[m] = std::abs(double(m) * m - nn) / (2.0 * m) *
                            std::log((m_trunc + m + 0.5) / (m_trunc - m + 0.5));
        c.inv_eta_sum += 1.0 / c.eta[m];
    }
    return c;
}

double b_coefficient_limit(int m, int n, double beta) {
    if (m == n) throw DomainError("b_coefficient_limit: m must differ from n");
    const double eta = beta * 0.5 * kPi * kPi * (double(m) * m - double(n) * n);
    const double sign = (n + m + 1) % 2 == 0 ? 1.0 : -1.0;
    return sign * double(m) * m / (double(n) * n * eta);
}

namespace {

// The sums over m of b_m eta_m and b_m equal 1 and sum 1/eta_m exactly (partial
// fractions of the truncated product). Using them removes the non-summable
// parts of the printed series, leaving absolutely convergent sums.

// Most negative eta (m = 1 when n > 1); numerator and denominator are scaled by
// e^{eta_min y} so that no exponential overflows for large n.
double scale_exponent(const GapCoefficients& c) { return std::min(0.0, c.eta[c.n == 1 ? 2 : 1]); }

double occupation_ratio(double y, const GapCoefficients& c) {
    const double lo = scale_exponent(c);
    const double f = std::exp(lo * y);
    double num = (y - c.inv_eta_sum) * f, den = f;
    for (int m = c.truncation; m >= 1; --m) {
        if (m == c.n) continue;
        const double e = std::exp(-(c.eta[m] - lo) * y);
        num += c.b[m] * e;
        den -= c.b[m] * c.eta[m] * e;
    }
    return num / den;
}

double laplace_ratio(double lambda, double y, const GapCoefficients& c) {
    const double lo = scale_exponent(c);
    double poles = 0.0, decay = 0.0, den = std::exp(lo * y);
    for (int m = c.truncation; m >= 1; --m) {
        if (m == c.n) continue;
        const double eta = c.eta[m];
        if (std::abs(lambda - eta) < 1e-9)
            throw PoleProximity("canonical_laplace_typeII: lambda within 1e-9 of a pole");
        const double e = std::exp(-(eta - lo) * y);
        poles += c.b[m] / (eta - lambda);
        decay += c.b[m] * eta * eta / (eta - lambda) * e;
        den -= c.b[m] * eta * e;
    }
    const double num =
        std::exp((lo - lambda) * y) * (1.0 + lambda * c.inv_eta_sum + lambda * lambda * poles) - decay;
    return num / den;
}

template <class F>
TruncatedValue with_halved(const GapCoefficients& c, F eval) {
    const double v = eval(c);
    const int half = std::max(c.n + 1, c.truncation / 2);
    const double h = eval(gap_coefficients(c.n, half, c.beta));
    return {v, 2.0 * std::abs(v - h)};
}

}  // namespace

double k_tilde_limit(int n, double x, double rho_c, const GapCoefficients& c) {
    if (n != c.n) throw DomainError("k_tilde_limit: coefficients built for another n");
    if (x <= rho_c) return 0.0;
    const double y = x - rho_c;
    double s = 1.0;
    for (int m = c.truncation; m >= 1; --m)
        if (m != c.n) s -= c.b[m] * c.eta[m] * std::exp(-c.eta[m] * y);
    return (n % 2 == 1 ? 1.0 : -1.0) * s;
}

TruncatedValue canonical_laplace_typeII(int n, double lambda, double rho, double rho_c,
                                        const GapCoefficients& c) {
    if (n != c.n) throw DomainError("canonical_laplace_typeII: coefficients built for another n");
    if (!(rho > rho_c)) throw DomainError("canonical_laplace_typeII: requires rho > rho_c");
    const double y = rho - rho_c;
    if (lambda == 0.0) return {1.0, 0.0};
    return with_halved(c, [&](const GapCoefficients& cc) { return laplace_ratio(lambda, y, cc); });
}

TruncatedValue occupation_limit_typeII(int n, double rho, double rho_c, const GapCoefficients& c) {
    if (n != c.n) throw DomainError("occupation_limit_typeII: coefficients built for another n");
    if (!(rho > rho_c)) throw DomainError("occupation_limit_typeII: requires rho > rho_c");
    const double y = rho - rho_c;
    return with_halved(c, [&](const GapCoefficients& cc) { return occupation_ratio(y, cc); });
}

double canonical_laplace_typeI(const Mode& m, double lambda, double rho, double rho_c) {
    if (rho <= rho_c || m != Mode{}) return 1.0;
    return std::exp(-lambda * (rho - rho_c));
}

double canonical_occupation_typeI(const Mode& m, double rho, double rho_c) {
    if (rho <= rho_c || m != Mode{}) return 0.0;
    return rho - rho_c;
}

double canonical_laplace_typeIII(const Mode& m, double lambda, double rho, double rho_c, double beta) {
    if (!(rho > rho_c)) throw DomainError("canonical_laplace_typeIII: requires rho > rho_c");
    if (!on_ladder(m)) return 1.0;
    return 1.0 / (1.0 + 2.0 * beta * lambda * (rho - rho_c) * (rho - rho_c));
}

double canonical_occupation_typeIII(const Mode& m, double rho, double rho_c, double beta) {
    if (!(rho > rho_c)) throw DomainError("canonical_occupation_typeIII: requires rho > rho_c");
    if (!on_ladder(m)) return 0.0;
    return 2.0 * beta * (rho - rho_c) * (rho - rho_c);
}

FluctuationSetup fluctuation_setup(const std::array<double, 3>& alpha) {
    return {classify(alpha).sub, 1.0 - 2.0 * alpha[0]};
}

namespace {

// theta(s) = sum_{n>=2} e^{-s unit_gap(n)}
double theta_tail(double s, GapConvention conv) {
    const double k = 0.5 * kPi * kPi;
    if (s >= 0.5) {
        double sum = 0.0;
        for (int n = 2; n < 100; ++n) {
            const double term = std::exp(-s * unit_gap(n, conv));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    }
    // sum_{n in Z} e^{-s k n^2} = sqrt(pi/(s k)) sum_{j in Z} e^{-pi^2 j^2 / (s k)}
    double z = 1.0;
    for (int j = 1; j < 50; ++j) {
        const double term = 2.0 * std::exp(-kPi * kPi * j * j / (s * k));
        z += term;
        if (term < 1e-18 * z) break;
    }
    const double half = 0.5 * (std::sqrt(kPi / (s * k)) * z - 1.0);  // sum_{n>=1} e^{-s k n^2}
    if (conv == GapConvention::Printed) return half;
    return std::exp(s * k) * half - 1.0;
}

// (z - 1 + e^{-z}) / z
double phi(double z) {
    if (std::abs(z) < 0.1) {
        double term = z / 2.0, s = 0.0;
        for (int i = 2; i < 30; ++i) {
            s += term;
            term *= -z / double(i + 1);
        }
        return s;
    }
    return (z + std::expm1(-z)) / z;
}

template <class K>
double theta_integral(int d, double beta, GapConvention conv, double decay_shift, K kernel) {
    if (d < 1 || d > 3) throw DomainError("g_function: d must be 1, 2 or 3");
    // integrate over u with t = u^2; beyond t_max the integrand is below e^{-80}
    const double rate = beta * d * unit_gap(2, conv) - decay_shift;
    const double t_max = 80.0 / rate;
    auto f = [&](double u) {
        if (u == 0.0) return 0.0;
        const double t = u * u;
        const double th = theta_tail(beta * t, conv);
        return 2.0 * u * kernel(t) * std::pow(th, d);
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::sqrt(t_max),
                                                                         20, 1e-14, &err);
}

}  // namespace

double g_domain_lower(int d, double beta, GapConvention conv) {
    return -beta * d * unit_gap(2, conv);
}

double g_function(int d, double lambda, double beta, GapConvention conv) {
    if (!(lambda > g_domain_lower(d, beta, conv)))
        throw DomainError("g_function: lambda outside the domain (log argument <= 0)");
    if (lambda == 0.0) return 0.0;
    // -ln(1 + lambda/x) + lambda/x = int_0^inf e^{-x t} lambda phi(lambda t) dt
    const double shift = std::max(0.0, -lambda);
    return theta_integral(d, beta, conv, shift,
                          [&](double t) { return lambda * phi(lambda * t); });
}

double g_second_derivative(int d, double beta, GapConvention conv) {
    return theta_integral(d, beta, conv, 0.0, [](double t) { return t; });
}

double fluctuation_law(FluctuationCase c, double lambda, double beta, GapConvention conv) {
    switch (c) {
        case FluctuationCase::Distinct: return std::exp(g_function(1, lambda, beta, conv));
        case FluctuationCase::TwoEqual:
            return std::exp(2.0 * g_function(1, lambda, beta, conv) +
                            g_function(2, lambda, beta, conv));
        case FluctuationCase::Isotropic:
            return std::exp(3.0 * g_function(1, lambda, beta, conv) +
                            3.0 * g_function(2, lambda, beta, conv) +
                            g_function(3, lambda, beta, conv));
    }
    return 0.0;
}

TailedDensity rho_c_finite(const SpectrumTable& t, double beta) {
    double s = 0.0;
    for (std::size_t k = t.entries.size(); k-- > 1;) s += 1.0 / std::expm1(beta * t.entries[k].gap);
    const double v = t.geometry.volume();
    double tail = 0.0;
    if (!std::isinf(t.cutoff))
        tail = exp_tail_bound(t.geometry, beta, t.cutoff) / (-std::expm1(-beta * t.cutoff)) / v;
    return {s / v, tail};
}

std::vector<FluctuationRow> fluctuation_convergence_check(const std::vector<BoxGeometry>& sweep,
                                                          double rho, const std::vector<double>& lambdas,
                                                          double beta, double tol,
                                                          GapConvention conv) {
    std::vector<FluctuationRow> rows;
    for (const auto& g : sweep) {
        const auto setup = fluctuation_setup(g.alpha());
        if (!(setup.gamma > 0.0))
            throw DomainError("fluctuation_convergence_check: requires alpha_1 < 1/2");
        const double v = g.volume();
        const int n = int(std::llround(rho * v));
        auto spec = std::make_shared<const SpectrumTable>(gc_spectrum(g, beta, tol));
        const auto ct = build_canonical(spec, beta, n);
        const double rcv = rho_c_finite(*spec, beta).value;
        const auto log_pmf = log_occupation_pmf(ct, 0, n);
        const double vg = std::pow(v, setup.gamma);
        const double centre = double(n) / v - rcv;
        const double mean = occupation_moment(ct, 0, n, 1);
        for (double lambda : lambdas) {
            std::vector<double> terms(std::size_t(n) + 1);
            for (int j = 0; j <= n; ++j) terms[j] = log_pmf[j] + lambda * vg * (j / v - centre);
            const double finite = std::exp(log_sum_exp(terms));
            const double limit = fluctuation_law(setup.label, lambda, beta, conv);
            rows.push_back({v, n, rcv, lambda, finite, limit, std::abs(finite - limit),
                            vg * (mean / v - centre)});
        }
    }
    return rows;
}

}  // namespace bosebox
