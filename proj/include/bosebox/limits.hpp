#pragma once

#include <vector>

#include "bosebox/spectrum.hpp"

namespace bosebox {

// Ladder coefficients for the alpha_1 = 1/2 canonical limits. Index m runs over
// 1..M; entries at m = n are unused and set to zero.
struct GapCoefficients {
    int n;
    int truncation;
    double beta;
    std::vector<double> eps;           // pi^2 m^2 / 2
    std::vector<double> eta;           // beta (eps_m - eps_n)
    std::vector<double> b;             // truncated products
    std::vector<double> product_tail;  // estimated relative error of b_m from the omitted factors
    double inv_eta_sum;                // sum_{m != n} 1/eta_m over the same index set
};

GapCoefficients gap_coefficients(int n, int m_trunc = 1000, double beta = 1.0);

// M -> infinity value of b_{m,n}: (-1)^{n+m+1} m^2 / (n^2 eta_{m,n}).
double b_coefficient_limit(int m, int n, double beta);

struct TruncatedValue {
    double value;
    double truncation_bound;  // twice the change from halving M
};

double k_tilde_limit(int n, double x, double rho_c, const GapCoefficients& c);
TruncatedValue canonical_laplace_typeII(int n, double lambda, double rho, double rho_c,
                                        const GapCoefficients& c);
TruncatedValue occupation_limit_typeII(int n, double rho, double rho_c, const GapCoefficients& c);

// Limits of <e^{-lambda N_k/V}> and <N_k/V> for alpha_1 < 1/2.
double canonical_laplace_typeI(const Mode& m, double lambda, double rho, double rho_c);
double canonical_occupation_typeI(const Mode& m, double rho, double rho_c);

// Limits at scale V^{2(1-alpha_1)} for alpha_1 > 1/2.
double canonical_laplace_typeIII(const Mode& m, double lambda, double rho, double rho_c,
                                 double beta = 1.0);
double canonical_occupation_typeIII(const Mode& m, double rho, double rho_c, double beta = 1.0);

struct FluctuationSetup {
    FluctuationCase label;
    double gamma;  // 1 - 2 alpha_1
};

FluctuationSetup fluctuation_setup(const std::array<double, 3>& alpha);

// g_d(lambda) = sum over n in N^d with every n_j >= 2 of
//   -ln(1 + lambda/(beta eta_n)) + lambda/(beta eta_n),  eta_n = sum_j unit_gap(n_j).
double g_function(int d, double lambda, double beta, GapConvention conv = GapConvention::Exact);
// g_d''(0) = sum 1/(beta eta_n)^2
double g_second_derivative(int d, double beta, GapConvention conv = GapConvention::Exact);
// Lower end of the g_d domain: -beta times the smallest eta_n.
double g_domain_lower(int d, double beta, GapConvention conv = GapConvention::Exact);

double fluctuation_law(FluctuationCase c, double lambda, double beta,
                       GapConvention conv = GapConvention::Exact);

struct TailedDensity {
    double value;
    double tail_bound;
};

// (1/V) sum over excited modes of 1/(e^{beta eta_k} - 1).
TailedDensity rho_c_finite(const SpectrumTable& t, double beta);

struct FluctuationRow {
    double volume;
    int n;
    double rho_c_v;
    double lambda;
    double finite;
    double limit;
    double gap;
    double centered_mean;  // V^gamma (<N_1>/V - (n/V - rho_c^V))
};

std::vector<FluctuationRow> fluctuation_convergence_check(const std::vector<BoxGeometry>& sweep,
                                                          double rho, const std::vector<double>& lambdas,
                                                          double beta, double tol = 1e-12,
                                                          GapConvention conv = GapConvention::Exact);

}  // namespace bosebox
