#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bosebox/canonical.hpp"
#include "bosebox/spectrum.hpp"

namespace bosebox {

// w_n = Z(n) e^{beta mu n} / Xi(mu): the particle-number law of the GC state.
struct KacWeights {
    double mu_bar;
    double log_xi;
    std::vector<double> weights;  // n = 0..n_cut
    double tail_bound;            // bound on sum_{n > n_cut} w_n

    int n_cut() const { return int(weights.size()) - 1; }
};

// Without n_cut, truncates at the first n whose geometric tail bound is below tail_tol.
KacWeights kac_weights(const CanonicalTable& ct, double mu_bar, std::optional<int> n_cut = {},
                       double tail_tol = 1e-12);

struct Decomposition {
    double lhs;    // GC <e^{-lambda N_k}>
    double rhs;    // sum_n w_n <e^{-lambda N_k}>_n
    double bound;  // 1e-10 + weight tail
};

Decomposition decomposition_check(const CanonicalTable& ct, const KacWeights& w, std::size_t k,
                                  double lambda);

enum class KacLawKind { PointMass, Exponential, LadderSeries };

// Prefactor of the ladder-series density: the derived one, or the printed
// variant kept to show that it does not integrate to one.
enum class LadderPrefactor { Derived, Printed };

struct LimitingKacLaw {
    KacLawKind kind;
    double rho;
    double rho_c;
    double beta;
    double a = 0.0;  // A(rho) for the ladder series
    LadderPrefactor prefactor = LadderPrefactor::Derived;

    // Density in x for the continuous laws; DomainError for the point mass.
    double density(double x) const;
    double laplace(double lambda) const;
    double mean() const;
};

LimitingKacLaw limiting_kac_law(Regime r, double rho, double beta,
                                LadderPrefactor prefactor = LadderPrefactor::Derived);

// s(z) = sinh(sqrt z)/sqrt z continued to z < 0 as sin(sqrt|z|)/sqrt|z|; log|s|.
double log_abs_s(double z);
double s_entire(double z);

struct KacConvergenceRow {
    double volume;
    double mu_bar;
    int n_cut;
    double finite;  // sum_n w_n e^{-lambda n / V}
    double limit;
    double gap;
    double tail_bound;
};

std::vector<KacConvergenceRow> empirical_kac_convergence(const std::vector<BoxGeometry>& sweep,
                                                         double rho, double beta, double lambda,
                                                         double tol = 1e-12,
                                                         int n_budget = 200'000);

}  // namespace bosebox
