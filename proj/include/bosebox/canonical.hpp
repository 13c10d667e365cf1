#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "bosebox/spectrum.hpp"

namespace bosebox {

// Canonical partition functions of the truncated spectrum. Energies enter
// through the gaps eta_k, so the stored values are
//   log Ztilde(m) = log Z(m) + m beta E1,
// which keeps exponents small; every ratio used downstream is unaffected.
struct CanonicalTable {
    std::shared_ptr<const SpectrumTable> spectrum;
    double beta;
    int n_max;
    std::vector<double> log_z_shifted;  // index 0..n_max
    std::vector<double> power_sums;     // Stilde_k = sum_j e^{-k beta eta_j}, index 1..n_max
    std::vector<double> power_sum_tail; // bound on the part of S_k above the cutoff

    double log_z(int m) const;  // unshifted log Z(m)
    double volume() const { return spectrum->geometry.volume(); }
    double gap(std::size_t k) const { return spectrum->entries.at(k).gap; }
};

CanonicalTable build_canonical(std::shared_ptr<const SpectrumTable> spectrum, double beta,
                               int n_max, double tail_tol = 1e-10);

// log P(N_k >= j) in the n-particle state, j = 0..n+1 (the last is -inf).
std::vector<double> log_tail_probabilities(const CanonicalTable& ct, std::size_t k, int n);

struct DiscreteDistribution {
    std::vector<double> mass;  // index = value
    double mean() const;
    double moment(int r) const;
};

// <e^{-lambda N_k}> in the n-particle state.
double occupation_laplace(const CanonicalTable& ct, std::size_t k, int n, double lambda);
DiscreteDistribution occupation_pmf(const CanonicalTable& ct, std::size_t k, int n);
// log P(N_k = j), j = 0..n, from the partition function with level k removed.
std::vector<double> log_occupation_pmf(const CanonicalTable& ct, std::size_t k, int n);
double occupation_moment(const CanonicalTable& ct, std::size_t k, int n, int r);

// (1/V) sum_{k: eta_k < epsilon} <N_k>.
double generalized_condensate(const CanonicalTable& ct, int n, double epsilon);

struct TailedCoefficient {
    double value;
    double tail_bound;
};

TailedCoefficient p_coefficient(const CanonicalTable& ct, std::size_t k, double tail_tol = 1e-10);

struct KMeasure {
    std::size_t k;
    double p_k;
    double volume;
    std::vector<double> log_values;  // log K at x in (r/V, (r+1)/V], r = 0..n_max

    double value(double x) const;
    // Laplace-Stieltjes transform over the atoms r/V, r <= r_max.
    double laplace(double lambda, int r_max) const;
    // <e^{-lambda N_k / V}> for n particles rebuilt from the measure.
    double occupation_laplace(int n, double lambda) const;
};

KMeasure k_measure(const CanonicalTable& ct, std::size_t k);

// log Xi(mu) over the table's modes, with mu = E1 + mu_bar.
double log_grand_partition(const SpectrumTable& t, double mu_bar, double beta);

}  // namespace bosebox
