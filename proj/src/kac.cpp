#include "bosebox/kac.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "bosebox/errors.hpp"
#include "bosebox/grandcanonical.hpp"
#include "bosebox/numeric.hpp"

namespace bosebox {

namespace {

// Bound on sum_{m>n} w_m from log-concavity: ratios w_{m+1}/w_m never increase.
double geometric_tail(const std::vector<double>& lw, int n) {
    const int last = int(lw.size()) - 1;
    const int i = std::min(n, last - 1);
    const double r = std::exp(lw[i + 1] - lw[i]);
    if (!(r < 1.0)) return std::numeric_limits<double>::infinity();
    return std::exp(lw[n]) * r / (1.0 - r);
}

}  // namespace

KacWeights kac_weights(const CanonicalTable& ct, double mu_bar, std::optional<int> n_cut,
                       double tail_tol) {
    if (!(mu_bar < 0.0)) throw DomainError("kac_weights: requires mu < E1(V)");
    KacWeights kw{};
    kw.mu_bar = mu_bar;
    kw.log_xi = log_grand_partition(*ct.spectrum, mu_bar, ct.beta);
    std::vector<double> lw(std::size_t(ct.n_max) + 1);
    for (int n = 0; n <= ct.n_max; ++n)
        lw[n] = ct.log_z_shifted[n] + n * ct.beta * mu_bar - kw.log_xi;
    int cut = -1;
    if (n_cut) {
        if (*n_cut < 0 || *n_cut > ct.n_max) throw DomainError("kac_weights: n_cut outside the table");
        cut = *n_cut;
    } else {
        for (int n = 0; n < ct.n_max; ++n)
            if (geometric_tail(lw, n) < tail_tol) {
                cut = n;
                break;
            }
        if (cut < 0)
            throw CutoffInsufficient("kac_weights: particle-number tail not resolved within n_max");
    }
    kw.tail_bound = geometric_tail(lw, cut);
    kw.weights.resize(std::size_t(cut) + 1);
    for (int n = 0; n <= cut; ++n) kw.weights[n] = std::exp(lw[n]);
    return kw;
}

Decomposition decomposition_check(const CanonicalTable& ct, const KacWeights& w, std::size_t k,
                                  double lambda) {
    Decomposition d{};
    d.lhs = gc_laplace_finite(*ct.spectrum, w.mu_bar, k, lambda, ct.beta);
    double s = 0.0;
    for (int n = w.n_cut(); n >= 0; --n) s += w.weights[n] * occupation_laplace(ct, k, n, lambda);
    d.rhs = s;
    d.bound = 1e-10 + w.tail_bound;
    return d;
}

double log_abs_s(double z) {
    if (z > 0.0) {
        const double r = std::sqrt(z);
        // sinh r / r = e^r (1 - e^{-2r}) / (2r)
        return r + std::log(-std::expm1(-2.0 * r)) - std::log(2.0 * r);
    }
    if (z < 0.0) {
        const double r = std::sqrt(-z);
        return std::log(std::abs(std::sin(r) / r));
    }
    return 0.0;
}

double s_entire(double z) {
    if (z > 0.0) {
        const double r = std::sqrt(z);
        return std::sinh(r) / r;
    }
    if (z < 0.0) {
        const double r = std::sqrt(-z);
        return std::sin(r) / r;
    }
    return 1.0;
}

namespace {

// e^{-a k2} sum_{n>=1} (-1)^{n-1} n^2 e^{-a n^2}, a > 0
double ladder_series(double a, double k2) {
    if (a >= 1.0) {
        double s = 0.0;
        for (int n = 1; n < 1000; ++n) {
            const double term = double(n) * n * std::exp(-a * (double(n) * n + k2));
            s += (n % 2 ? term : -term);
            if (term < 1e-16 * std::abs(s)) break;
        }
        return s;
    }
    // theta-function form: (sqrt(pi)/2) sum_{k in Z} e^{-b_k/a} (b_k a^{-5/2} - a^{-3/2}/2)
    double s = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double b = kPi * kPi * (k + 0.5) * (k + 0.5);
        const double term = 2.0 * std::exp(-b / a - a * k2) *
                            (b * std::pow(a, -2.5) - 0.5 * std::pow(a, -1.5));
        s += term;
        if (std::abs(term) < 1e-16 * std::abs(s)) break;
    }
    return 0.5 * std::sqrt(kPi) * s;
}

}  // namespace

double LimitingKacLaw::density(double x) const {
    if (x < 0.0) throw DomainError("limiting Kac density: x must be nonnegative");
    switch (kind) {
        case KacLawKind::PointMass:
            throw DomainError("limiting Kac law is a point mass; no density");
        case KacLawKind::Exponential: {
            if (x <= rho_c) return 0.0;
            const double m = rho - rho_c;
            return std::exp(-(x - rho_c) / m) / m;
        }
        case KacLawKind::LadderSeries: {
            if (x <= rho_c) return 0.0;
            const double c = 0.5 * beta * kPi * kPi;
            const double k2 = 1.0 / (c * a) - 1.0;
            const double arg = prefactor == LadderPrefactor::Derived ? 2.0 / (beta * a) - kPi * kPi
                                                                     : 2.0 / (beta * a) - kPi;
            return 2.0 * c * s_entire(arg) * ladder_series(c * (x - rho_c), k2);
        }
    }
    return 0.0;
}

double LimitingKacLaw::laplace(double lambda) const {
    switch (kind) {
        case KacLawKind::PointMass: return std::exp(-lambda * rho);
        case KacLawKind::Exponential:
            return std::exp(-lambda * rho_c) / (1.0 + lambda * (rho - rho_c));
        case KacLawKind::LadderSeries: {
            const double c = 0.5 * beta * kPi * kPi;
            const double z0 = 2.0 / (beta * a) - kPi * kPi;
            const double z1 = z0 + kPi * kPi * lambda / c;
            return std::exp(-lambda * rho_c + log_abs_s(z0) - log_abs_s(z1));
        }
    }
    return 0.0;
}

double LimitingKacLaw::mean() const {
    switch (kind) {
        case KacLawKind::PointMass:
        case KacLawKind::Exponential: return rho;
        case KacLawKind::LadderSeries: {
            // rho_c plus the ladder means, which sum to rho - rho_c by the A equation
            return rho_c + a_equation_rhs(a, beta, 100'000);
        }
    }
    return 0.0;
}

LimitingKacLaw limiting_kac_law(Regime r, double rho, double beta, LadderPrefactor prefactor) {
    if (!(rho > 0.0)) throw DomainError("limiting_kac_law: rho must be positive");
    const double rc = critical_density(beta).value;
    LimitingKacLaw law{KacLawKind::PointMass, rho, rc, beta};
    law.prefactor = prefactor;
    if (rho <= rc || r == Regime::TypeIII) return law;
    if (r == Regime::TypeI) {
        law.kind = KacLawKind::Exponential;
        return law;
    }
    law.kind = KacLawKind::LadderSeries;
    law.a = solve_A(rho, beta).value;
    return law;
}

std::vector<KacConvergenceRow> empirical_kac_convergence(const std::vector<BoxGeometry>& sweep,
                                                         double rho, double beta, double lambda,
                                                         double tol, int n_budget) {
    std::vector<KacConvergenceRow> rows;
    for (const auto& g : sweep) {
        auto spec = std::make_shared<const SpectrumTable>(gc_spectrum(g, beta, tol));
        const auto sol = solve_mu(*spec, rho, beta);
        const double v = g.volume();
        // mean GC particle number plus enough ground-level decay lengths
        const double decay = 1.0 / (-std::expm1(beta * sol.mu_bar));
        int n_max = int(std::min<double>(n_budget, rho * v + 10.0 * std::sqrt(rho * v) +
                                                       (std::log(1.0 / tol) + 10.0) * decay));
        KacWeights w;
        CanonicalTable ct;
        for (;;) {
            ct = build_canonical(spec, beta, n_max);
            try {
                w = kac_weights(ct, sol.mu_bar, std::nullopt, tol);
                break;
            } catch (const CutoffInsufficient&) {
                if (n_max >= n_budget) throw;
                n_max = std::min(2 * n_max, n_budget);
            }
        }
        double s = 0.0;
        for (int n = w.n_cut(); n >= 0; --n) s += w.weights[n] * std::exp(-lambda * n / v);
        const double lim =
            limiting_kac_law(classify(g.alpha()).regime, rho, beta).laplace(lambda);
        rows.push_back({v, sol.mu_bar, w.n_cut(), s, lim, std::abs(s - lim), w.tail_bound});
    }
    return rows;
}

}  // namespace bosebox
