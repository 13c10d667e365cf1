#include "bosebox/grandcanonical.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "bosebox/errors.hpp"
#include "bosebox/numeric.hpp"

namespace bosebox {

namespace {

struct BitsTol {
    bool operator()(double a, double b) const {
        return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                      std::max(std::abs(a), std::abs(b));
    }
};

// Root of a decreasing function f on [lo, hi] (f(lo) > 0 > f(hi)).
template <class F>
std::pair<double, double> toms748(F f, double lo, double hi, double flo, double fhi, int& iters) {
    std::uintmax_t it = std::uintmax_t(iters);
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, BitsTol{}, it);
    iters = int(it);
    return r;
}

double occupation_from_x(double x) { return 1.0 / std::expm1(x); }

}  // namespace

double density_cutoff(const BoxGeometry& g, double beta, double tol) {
    const double a = select_cutoff(g, beta, 0.5 * tol * g.volume());
    return std::max(a, std::log(2.0) / beta);
}

SpectrumTable gc_spectrum(const BoxGeometry& g, double beta, double tol, std::size_t max_modes) {
    return enumerate_gaps_below(g, density_cutoff(g, beta, tol), max_modes);
}

double density_tail_bound(const SpectrumTable& t, double mu_bar, double beta) {
    if (std::isinf(t.cutoff)) return 0.0;
    const double a = t.cutoff;
    return std::exp(beta * mu_bar) * exp_tail_bound(t.geometry, beta, a) /
           (-std::expm1(-beta * (a - mu_bar))) / t.geometry.volume();
}

double mean_occupation(const SpectrumTable& t, double mu_bar, std::size_t k, double beta) {
    if (!(mu_bar < 0.0)) throw DomainError("mean_occupation: requires mu < E1(V)");
    return occupation_from_x(beta * (t.entries.at(k).gap - mu_bar));
}

TailedValue gc_density(const SpectrumTable& t, double mu_bar, double beta) {
    if (!(mu_bar < 0.0)) throw DomainError("gc_density: requires mu < E1(V)");
    double s = 0.0;
    for (auto it = t.entries.rbegin(); it != t.entries.rend(); ++it)
        s += occupation_from_x(beta * (it->gap - mu_bar));
    return {s / t.geometry.volume(), density_tail_bound(t, mu_bar, beta)};
}

GcSolution solve_mu(const SpectrumTable& t, double rho, double beta, double tol, int max_iter) {
    if (!(rho > 0.0)) throw DomainError("solve_mu: rho must be positive");
    if (t.entries.empty()) throw DomainError("solve_mu: empty spectrum");
    const double v = t.geometry.volume();
    // at mu_bar_hi the ground level alone already holds rho V particles
    const double mu_hi = -std::log1p(1.0 / (rho * v)) / beta;
    double mu_lo = -std::max(1.0, std::log1p(1.0 / (rho * v))) / beta;
    auto f = [&](double u) { return gc_density(t, -std::exp(u), beta).value / rho - 1.0; };
    // u = ln(-mu_bar); f decreasing in u
    double u_hi = std::log(-mu_lo), u_lo = std::log(-mu_hi);
    double f_lo = f(u_lo), f_hi = f(u_hi);
    for (int i = 0; f_hi >= 0.0; ++i) {
        if (i > 60) throw NoConvergence("solve_mu: could not bracket the chemical potential");
        u_lo = u_hi;
        f_lo = f_hi;
        u_hi += std::log(2.0);
        f_hi = f(u_hi);
    }
    GcSolution s{};
    s.rho = rho;
    s.regime = classify(t.geometry.alpha());
    double u = u_lo, res = f_lo;
    if (f_lo > 0.0) {
        int iters = max_iter;
        auto r = toms748(f, u_lo, u_hi, f_lo, f_hi, iters);
        s.iterations = iters;
        const double fa = f(r.first), fb = f(r.second);
        u = std::abs(fa) <= std::abs(fb) ? r.first : r.second;
        res = std::min(std::abs(fa), std::abs(fb));
        s.bracket_lo = -std::exp(r.second);
        s.bracket_hi = -std::exp(r.first);
    }
    s.mu_bar = -std::exp(u);
    s.mu = t.ground_energy + s.mu_bar;
    s.residual = std::abs(res);
    s.tail_bound = density_tail_bound(t, s.mu_bar, beta);
    if (s.residual > tol) {
        std::ostringstream os;
        os << "solve_mu: residual " << s.residual << " above tolerance after " << s.iterations
           << " iterations, bracket [" << s.bracket_lo << ", " << s.bracket_hi << "]";
        throw NoConvergence(os.str());
    }
    return s;
}

namespace {

// (sqrt2/pi^2) int_0^inf t^2 / (e^{beta(t^2 - mu_bar)} - 1) dt, eta = t^2
std::pair<double, double> bose_integral(double mu_bar, double beta) {
    auto f = [&](double t) {
        const double x = beta * (t * t - mu_bar);
        if (x == 0.0) return 1.0 / beta;
        return t * t / std::expm1(x);
    };
    double err = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, inf, 15, 1e-14, &err);
    const double k = std::sqrt(2.0) / (kPi * kPi);
    return {k * v, k * err};
}

}  // namespace

CriticalDensity critical_density(double beta) {
    if (!(beta > 0.0)) throw DomainError("critical_density: beta must be positive");
    auto [v, e] = bose_integral(0.0, beta);
    return {beta, v, e};
}

double limiting_density(double mu_bar, double beta) {
    if (mu_bar > 0.0) throw DomainError("limiting_density: mu_bar must be <= 0");
    return bose_integral(mu_bar, beta).first;
}

double limiting_mu_bar(double rho, double beta) {
    const double rc = critical_density(beta).value;
    if (!(rho > 0.0) || rho > rc) throw DomainError("limiting_mu_bar: requires 0 < rho <= rho_c");
    if (rho >= rc * (1.0 - 1e-15)) return 0.0;
    auto f = [&](double u) { return limiting_density(-std::exp(u), beta) / rho - 1.0; };
    double u_lo = -1.0, u_hi = 0.0;
    double f_lo = f(u_lo), f_hi = f(u_hi);
    while (f_lo <= 0.0) {
        u_hi = u_lo;
        f_hi = f_lo;
        u_lo -= 2.0;
        f_lo = f(u_lo);
        if (u_lo < -700.0) throw NoConvergence("limiting_mu_bar: bracket failed near rho_c");
    }
    while (f_hi >= 0.0) {
        u_lo = u_hi;
        f_lo = f_hi;
        u_hi += 1.0;
        f_hi = f(u_hi);
        if (u_hi > 700.0) throw NoConvergence("limiting_mu_bar: bracket failed near 0");
    }
    int iters = 200;
    auto r = toms748(f, u_lo, u_hi, f_lo, f_hi, iters);
    return -std::exp(0.5 * (r.first + r.second));
}

double a_equation_tail_bound(double beta, long m) {
    const double c = 0.5 * beta * kPi * kPi;
    return 1.0 / (9.0 * c * std::pow(double(m - 1), 3));
}

double a_equation_rhs(double a, double beta, long m, bool with_tail) {
    const double c = 0.5 * beta * kPi * kPi;
    const double inv_a = 1.0 / a;
    double s = 0.0;
    for (long j = m; j >= 1; --j) s += 1.0 / (c * (double(j) * j - 1.0) + inv_a);
    if (!with_tail) return s;
    // sum_{j>m} f(j) ~ int_{m+1/2}^inf dx / (c (x^2 + kappa2)), midpoint rule
    const double x = double(m) + 0.5;
    const double kappa2 = inv_a / c - 1.0;
    double tail;
    if (kappa2 > 0.0) {
        const double k = std::sqrt(kappa2);
        tail = std::atan2(k, x) / (c * k);  // (pi/2 - atan(x/k)) / (c k)
    } else if (kappa2 < 0.0) {
        const double k = std::sqrt(-kappa2);
        tail = std::atanh(k / x) / (c * k);
    } else {
        tail = 1.0 / (c * x);
    }
    return s + tail;
}

ACoefficient solve_A(double rho, double beta, long m) {
    const double rc = critical_density(beta).value;
    if (!(rho > rc)) throw DomainError("solve_A: requires rho > rho_c");
    if (m < 10) throw DomainError("solve_A: truncation must be at least 10");
    const double excess = rho - rc;
    auto f = [&](double u) { return excess - a_equation_rhs(std::exp(u), beta, m); };
    // rhs increasing in A, so f decreasing in u = ln A
    double u_lo = std::log(excess) - 1.0, u_hi = std::log(excess);
    double f_lo = f(u_lo), f_hi = f(u_hi);
    while (f_lo <= 0.0) {
        u_lo -= 2.0;
        f_lo = f(u_lo);
        if (u_lo < -700.0) throw NoConvergence("solve_A: bracket failed");
    }
    while (f_hi >= 0.0) {
        u_hi += 2.0;
        f_hi = f(u_hi);
        if (u_hi > 700.0) throw NoConvergence("solve_A: bracket failed");
    }
    int iters = 200;
    auto r = toms748(f, u_lo, u_hi, f_lo, f_hi, iters);
    const double fa = f(r.first), fb = f(r.second);
    const double u = std::abs(fa) <= std::abs(fb) ? r.first : r.second;
    return {rho, beta, std::exp(u), m, std::min(std::abs(fa), std::abs(fb)),
            a_equation_tail_bound(beta, m)};
}

bool on_ladder(const Mode& m) { return m.n[1] == 1 && m.n[2] == 1; }

double gc_occupation_limit(Regime r, double rho, const Mode& m, double beta) {
    const double rc = critical_density(beta).value;
    const bool ground = m == Mode{};
    switch (r) {
        case Regime::TypeI:
            if (!ground) return 0.0;
            break;
        case Regime::TypeII:
        case Regime::TypeIII:
            if (!on_ladder(m)) return 0.0;
            break;
    }
    if (!(rho > rc)) throw DomainError("gc_occupation_limit: no condensate for rho <= rho_c");
    switch (r) {
        case Regime::TypeI: return rho - rc;
        case Regime::TypeII: {
            const double a = solve_A(rho, beta).value;
            const double n1 = m.n[0];
            return 1.0 / (0.5 * beta * kPi * kPi * (n1 * n1 - 1.0) + 1.0 / a);
        }
        case Regime::TypeIII: return 2.0 * beta * (rho - rc) * (rho - rc);
    }
    return 0.0;
}

double gc_laplace_finite(const SpectrumTable& t, double mu_bar, std::size_t k, double lambda,
                         double beta) {
    if (!(mu_bar < 0.0)) throw DomainError("gc_laplace_finite: requires mu < E1(V)");
    // (1-q)/(1-q e^{-lambda}), q = e^{-x}
    const double x = beta * (t.entries.at(k).gap - mu_bar);
    return std::expm1(-x) / std::expm1(-x - lambda);
}

double gc_laplace_limit(Regime r, double rho, const Mode& m, double lambda, double beta) {
    const double rc = critical_density(beta).value;
    if (!(rho > rc)) throw DomainError("gc_laplace_limit: requires rho > rho_c");
    const double occ = gc_occupation_limit(r, rho, m, beta);
    // every limit law is exponential with mean occ, or a point mass at 0
    return 1.0 / (1.0 + lambda * occ);
}

double mu_bar_asymptotic(const BoxGeometry& g, double rho, double beta) {
    const double rc = critical_density(beta).value;
    if (!(rho > rc)) throw DomainError("mu_bar_asymptotic: requires rho > rho_c");
    const double v = g.volume();
    switch (classify(g.alpha()).regime) {
        case Regime::TypeI: return -1.0 / (beta * v * (rho - rc));
        case Regime::TypeII: return -1.0 / (beta * v * solve_A(rho, beta).value);
        case Regime::TypeIII: {
            const double a1 = g.alpha()[0];
            return -1.0 / (2.0 * beta * beta * std::pow(v, 2.0 * (1.0 - a1)) * (rho - rc) * (rho - rc));
        }
    }
    return 0.0;
}

}  // namespace bosebox
