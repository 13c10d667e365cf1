#pragma once

#include <cstddef>

#include "bosebox/spectrum.hpp"

namespace bosebox {

// Chemical potentials are passed as mu_bar = mu - E1(V) < 0 throughout. Working
// relative to the ground level keeps full precision when |mu_bar| << E1.

struct TailedValue {
    double value;
    double tail_bound;  // rigorous bound on the contribution of modes above the cutoff
};

// Gap cutoff such that modes above it carry density below tol at mu_bar <= 0.
double density_cutoff(const BoxGeometry& g, double beta, double tol);
SpectrumTable gc_spectrum(const BoxGeometry& g, double beta, double tol,
                          std::size_t max_modes = kDefaultModeBudget);

// Bound on (1/V) sum over modes above the table cutoff of 1/(e^{beta(eta - mu_bar)} - 1).
double density_tail_bound(const SpectrumTable& t, double mu_bar, double beta);

double mean_occupation(const SpectrumTable& t, double mu_bar, std::size_t k, double beta);
TailedValue gc_density(const SpectrumTable& t, double mu_bar, double beta);

struct GcSolution {
    double mu;
    double mu_bar;
    double rho;
    double residual;  // relative, |density - rho| / rho
    double tail_bound;
    RegimeLabel regime;
    double bracket_lo;  // mu_bar bracket at termination
    double bracket_hi;
    int iterations;
};

GcSolution solve_mu(const SpectrumTable& t, double rho, double beta, double tol = 1e-12,
                    int max_iter = 200);

struct CriticalDensity {
    double beta;
    double value;
    double quadrature_error;
};

CriticalDensity critical_density(double beta);

// Infinite-volume density at mu_bar <= 0: int (e^{beta(eta-mu_bar)}-1)^{-1} dF(eta).
double limiting_density(double mu_bar, double beta);
double limiting_mu_bar(double rho, double beta);

struct ACoefficient {
    double rho;
    double beta;
    double value;
    long truncation;
    double residual;    // |rhs(A) - (rho - rho_c)| including the tail estimate
    double tail_bound;  // error bound of the tail estimate
};

// sum_{j>=1} [beta (pi^2/2)(j^2-1) + 1/A]^{-1}: explicit terms up to M plus an
// integral tail estimate, or the bare truncated sum when with_tail is false.
double a_equation_rhs(double a, double beta, long m, bool with_tail = true);
double a_equation_tail_bound(double beta, long m);

ACoefficient solve_A(double rho, double beta, long m = 100'000);

bool on_ladder(const Mode& m);

// Limits of <N_k>/V (type I, II) or <N_k>/V^{2(1-alpha_1)} (type III).
double gc_occupation_limit(Regime r, double rho, const Mode& m, double beta);

// <e^{-lambda N_k}> at finite V.
double gc_laplace_finite(const SpectrumTable& t, double mu_bar, std::size_t k, double lambda,
                         double beta);
// Limit of <e^{-lambda N_k / s_V}> with s_V = V (types I, II) or V^{2(1-alpha_1)} (type III).
double gc_laplace_limit(Regime r, double rho, const Mode& m, double lambda, double beta);

// Leading large-V behaviour of mu_bar_V(rho) for rho > rho_c.
double mu_bar_asymptotic(const BoxGeometry& g, double rho, double beta);

}  // namespace bosebox
