#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace bosebox {

// Rectangular Dirichlet box with edges V^{alpha_j}, alpha sorted descending.
class BoxGeometry {
public:
    BoxGeometry(std::array<double, 3> alpha, double volume);

    const std::array<double, 3>& alpha() const { return alpha_; }
    double volume() const { return volume_; }
    double edge(int j) const { return edges_[j]; }
    // pi^2 / (2 L_j^2), the energy quantum along axis j
    double axis_scale(int j) const { return scales_[j]; }
    double ground_energy() const;

private:
    std::array<double, 3> alpha_;
    double volume_;
    std::array<double, 3> edges_;
    std::array<double, 3> scales_;
};

struct Mode {
    std::array<int, 3> n{1, 1, 1};
    auto operator<=>(const Mode&) const = default;
};

std::string to_string(const Mode& m);

struct SpectrumEntry {
    Mode mode;
    double energy;
    double gap;  // energy - E1, computed without cancellation
};

struct SpectrumTable {
    BoxGeometry geometry;
    double cutoff;  // gap cutoff: every mode with gap <= cutoff is present
    double ground_energy;
    std::vector<SpectrumEntry> entries;  // sorted by (gap, mode)

    std::size_t size() const { return entries.size(); }
    std::optional<std::size_t> index_of(const Mode& m) const;
};

enum class Regime { TypeI, TypeII, TypeIII };
enum class FluctuationCase { Distinct, TwoEqual, Isotropic };

struct RegimeLabel {
    Regime regime;
    FluctuationCase sub;
};

inline constexpr double kAlphaTol = 1e-12;

RegimeLabel classify(const std::array<double, 3>& alpha);
std::string to_string(Regime r);
std::string to_string(FluctuationCase c);

inline constexpr std::size_t kDefaultModeBudget = 20'000'000;

double eigenvalue(const BoxGeometry& g, const Mode& m);
double gap(const BoxGeometry& g, const Mode& m);

// Modes with energy <= e_max.
SpectrumTable enumerate_below(const BoxGeometry& g, double e_max,
                              std::size_t max_modes = kDefaultModeBudget);
// Modes with gap <= eta_max.
SpectrumTable enumerate_gaps_below(const BoxGeometry& g, double eta_max,
                                   std::size_t max_modes = kDefaultModeBudget);

// Table over an explicit list of levels, for small model spectra. Modes are
// labelled (i,1,1) in input order; the cutoff is infinite (nothing truncated).
SpectrumTable make_level_table(const std::vector<double>& energies, double volume = 1.0);

// Upper bound on the number of modes with gap <= eta.
double predicted_mode_count(const BoxGeometry& g, double eta);

// F_V(eta) by direct lattice count.
double ids(const BoxGeometry& g, double eta);
double ids_limit(double eta);

struct IdsBounds {
    double lower;
    double upper;
};
IdsBounds ids_bounds(const BoxGeometry& g, double eta);
// Gaps above this value are covered by the lower bound.
double ids_bounds_threshold(const BoxGeometry& g);

enum class GapConvention { Exact, Printed };

// Unit-box gap of level n along one axis: (pi^2/2)(n^2-1), or (pi^2/2)(n-1)^2.
double unit_gap(int n, GapConvention conv);
std::int64_t unit_box_ids(int d, double eta, GapConvention conv = GapConvention::Exact);

// Rigorous bound on sum_{k: eta_k > a} exp(-s eta_k), from the IDS upper bound.
double exp_tail_bound(const BoxGeometry& g, double s, double a);
// Smallest gap cutoff (up to bisection precision) with exp_tail_bound < tol.
double select_cutoff(const BoxGeometry& g, double s, double tol);

}  // namespace bosebox
