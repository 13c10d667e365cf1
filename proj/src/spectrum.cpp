#include "bosebox/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "bosebox/errors.hpp"
#include "bosebox/numeric.hpp"

namespace bosebox {

namespace {

const double kIdsPrefactor = std::sqrt(2.0) / (3.0 * kPi * kPi);

template <class Pred>
std::vector<SpectrumEntry> collect(const BoxGeometry& g, Pred keep) {
    std::vector<SpectrumEntry> out;
    const double c1 = g.axis_scale(0), c2 = g.axis_scale(1), c3 = g.axis_scale(2);
    for (int n1 = 1;; ++n1) {
        if (!keep(n1, 1, 1)) break;
        for (int n2 = 1;; ++n2) {
            if (!keep(n1, n2, 1)) break;
            for (int n3 = 1;; ++n3) {
                if (!keep(n1, n2, n3)) break;
                const double e = c1 * n1 * n1 + c2 * n2 * n2 + c3 * double(n3) * n3;
                const double gp = c1 * (double(n1) * n1 - 1) + c2 * (double(n2) * n2 - 1) +
                                  c3 * (double(n3) * n3 - 1);
                out.push_back({Mode{{n1, n2, n3}}, e, gp});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
        if (a.gap != b.gap) return a.gap < b.gap;
        return a.mode < b.mode;
    });
    return out;
}

void check_budget(const BoxGeometry& g, double eta, std::size_t max_modes) {
    const double predicted = predicted_mode_count(g, eta);
    if (predicted > double(max_modes)) {
        std::ostringstream os;
        os << "predicted mode count " << predicted << " exceeds budget " << max_modes;
        throw CutoffTooLarge(os.str());
    }
}

}  // namespace

BoxGeometry::BoxGeometry(std::array<double, 3> alpha, double volume)
    : alpha_(alpha), volume_(volume) {
    if (!(volume > 0.0) || !std::isfinite(volume))
        throw DomainError("volume must be positive and finite");
    if (!(alpha[2] > 0.0))
        throw DomainError("alpha_3 must be positive");
    if (alpha[0] < alpha[1] || alpha[1] < alpha[2])
        throw DomainError("alphas must be ordered alpha_1 >= alpha_2 >= alpha_3");
    if (std::abs(alpha[0] + alpha[1] + alpha[2] - 1.0) > kAlphaTol)
        throw DomainError("alphas must sum to 1");
    for (int j = 0; j < 3; ++j) {
        edges_[j] = std::pow(volume, alpha[j]);
        scales_[j] = 0.5 * kPi * kPi / (edges_[j] * edges_[j]);
    }
}

double BoxGeometry::ground_energy() const { return scales_[0] + scales_[1] + scales_[2]; }

std::string to_string(const Mode& m) {
    return std::to_string(m.n[0]) + ":" + std::to_string(m.n[1]) + ":" + std::to_string(m.n[2]);
}

std::optional<std::size_t> SpectrumTable::index_of(const Mode& m) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].mode == m) return i;
    return std::nullopt;
}

RegimeLabel classify(const std::array<double, 3>& a) {
    RegimeLabel r{};
    if (std::abs(a[0] - 0.5) <= kAlphaTol)
        r.regime = Regime::TypeII;
    else
        r.regime = a[0] < 0.5 ? Regime::TypeI : Regime::TypeIII;
    const double top = std::max({a[0], a[1], a[2]});
    int mult = 0;
    for (double x : a)
        if (std::abs(x - top) <= kAlphaTol) ++mult;
    r.sub = mult == 1 ? FluctuationCase::Distinct
          : mult == 2 ? FluctuationCase::TwoEqual
                      : FluctuationCase::Isotropic;
    return r;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::TypeI: return "typeI";
        case Regime::TypeII: return "typeII";
        case Regime::TypeIII: return "typeIII";
    }
    return "?";
}

std::string to_string(FluctuationCase c) {
    switch (c) {
        case FluctuationCase::Distinct: return "distinct";
        case FluctuationCase::TwoEqual: return "two_equal";
        case FluctuationCase::Isotropic: return "isotropic";
    }
    return "?";
}

double eigenvalue(const BoxGeometry& g, const Mode& m) {
    double e = 0.0;
    for (int j = 0; j < 3; ++j) e += g.axis_scale(j) * double(m.n[j]) * m.n[j];
    return e;
}

double gap(const BoxGeometry& g, const Mode& m) {
    double e = 0.0;
    for (int j = 0; j < 3; ++j) e += g.axis_scale(j) * (double(m.n[j]) * m.n[j] - 1.0);
    return e;
}

double predicted_mode_count(const BoxGeometry& g, double eta) {
    if (eta < 0.0) return 0.0;
    return g.volume() * kIdsPrefactor * std::pow(eta + g.ground_energy(), 1.5);
}

SpectrumTable enumerate_below(const BoxGeometry& g, double e_max, std::size_t max_modes) {
    const double e1 = g.ground_energy();
    SpectrumTable t{g, e_max - e1, e1, {}};
    if (e_max < e1) return t;
    check_budget(g, e_max - e1, max_modes);
    t.entries = collect(g, [&](int a, int b, int c) {
        return eigenvalue(g, Mode{{a, b, c}}) <= e_max;
    });
    return t;
}

SpectrumTable enumerate_gaps_below(const BoxGeometry& g, double eta_max, std::size_t max_modes) {
    SpectrumTable t{g, eta_max, g.ground_energy(), {}};
    if (eta_max < 0.0) return t;
    check_budget(g, eta_max, max_modes);
    t.entries = collect(g, [&](int a, int b, int c) { return gap(g, Mode{{a, b, c}}) <= eta_max; });
    return t;
}

SpectrumTable make_level_table(const std::vector<double>& energies, double volume) {
    if (energies.empty()) throw DomainError("make_level_table: no levels");
    SpectrumTable t{BoxGeometry({1.0 / 3, 1.0 / 3, 1.0 / 3}, volume),
                    std::numeric_limits<double>::infinity(), 0.0, {}};
    const double e1 = *std::min_element(energies.begin(), energies.end());
    t.ground_energy = e1;
    for (std::size_t i = 0; i < energies.size(); ++i)
        t.entries.push_back({Mode{{int(i) + 1, 1, 1}}, energies[i], energies[i] - e1});
    std::stable_sort(t.entries.begin(), t.entries.end(),
                     [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.gap < b.gap; });
    return t;
}

double ids(const BoxGeometry& g, double eta) {
    if (eta < 0.0) return 0.0;
    const double c1 = g.axis_scale(0), c2 = g.axis_scale(1), c3 = g.axis_scale(2);
    std::int64_t count = 0;
    for (std::int64_t n1 = 1;; ++n1) {
        const double g1 = c1 * double(n1 * n1 - 1);
        if (g1 > eta) break;
        for (std::int64_t n2 = 1;; ++n2) {
            const double g12 = g1 + c2 * double(n2 * n2 - 1);
            if (g12 > eta) break;
            auto fits = [&](std::int64_t n3) { return g12 + c3 * double(n3 * n3 - 1) <= eta; };
            std::int64_t n3 = std::int64_t(std::floor(std::sqrt(1.0 + (eta - g12) / c3)));
            while (n3 > 1 && !fits(n3)) --n3;
            while (fits(n3 + 1)) ++n3;
            count += n3;
        }
    }
    return double(count) / g.volume();
}

double ids_limit(double eta) {
    if (eta < 0.0) throw DomainError("ids_limit: eta must be nonnegative");
    return kIdsPrefactor * std::pow(eta, 1.5);
}

double ids_bounds_threshold(const BoxGeometry& g) {
    const double c = 3.0 * kPi / std::sqrt(2.0);
    return c * c * std::pow(g.volume(), -2.0 * g.alpha()[2]);
}

IdsBounds ids_bounds(const BoxGeometry& g, double eta) {
    if (eta < 0.0) throw DomainError("ids_bounds: eta must be nonnegative");
    const double c = 3.0 * kPi / std::sqrt(2.0);
    const double r = std::max(std::sqrt(eta) - c * std::pow(g.volume(), -g.alpha()[2]), 0.0);
    return {kIdsPrefactor * r * r * r, kIdsPrefactor * std::pow(eta + g.ground_energy(), 1.5)};
}

double unit_gap(int n, GapConvention conv) {
    const double k = 0.5 * kPi * kPi;
    return conv == GapConvention::Exact ? k * (double(n) * n - 1.0) : k * double(n - 1) * (n - 1);
}

std::int64_t unit_box_ids(int d, double eta, GapConvention conv) {
    if (eta < 0.0) throw DomainError("unit_box_ids: eta must be nonnegative");
    if (d < 1 || d > 3) throw DomainError("unit_box_ids: d must be 1, 2 or 3");
    // levels along one axis with gap <= x
    auto levels = [&](double x) -> std::int64_t {
        if (x < 0.0) return 0;
        std::int64_t n = 1;
        while (unit_gap(int(n + 1), conv) <= x) ++n;
        return n;
    };
    if (d == 1) return levels(eta);
    std::int64_t count = 0;
    for (int n1 = 1; unit_gap(n1, conv) <= eta; ++n1) {
        const double r1 = eta - unit_gap(n1, conv);
        if (d == 2) {
            count += levels(r1);
            continue;
        }
        for (int n2 = 1; unit_gap(n2, conv) <= r1; ++n2) count += levels(r1 - unit_gap(n2, conv));
    }
    return count;
}

namespace {

// e^x Gamma(3/2, x) for x >= 0
double scaled_upper_gamma_3_2(double x) {
    const double sx = std::sqrt(x);
    if (x < 30.0) return sx + 0.5 * std::sqrt(kPi) * std::exp(x) * boost::math::erfc(sx);
    // erfc(z) < e^{-z^2} / (z sqrt(pi))
    return sx + 0.5 / sx;
}

}  // namespace

double exp_tail_bound(const BoxGeometry& g, double s, double a) {
    if (!(s > 0.0)) throw DomainError("exp_tail_bound: s must be positive");
    a = std::max(a, 0.0);
    const double e1 = g.ground_energy();
    const double v = g.volume();
    const double u = v * kIdsPrefactor * std::pow(a + e1, 1.5);
    const double integral =
        v * std::sqrt(2.0) / (2.0 * kPi * kPi) * std::pow(s, -1.5) * scaled_upper_gamma_3_2(s * (a + e1));
    return std::exp(-s * a) * (u + integral);
}

double select_cutoff(const BoxGeometry& g, double s, double tol) {
    if (!(tol > 0.0)) throw DomainError("select_cutoff: tolerance must be positive");
    double lo = 0.0;
    if (exp_tail_bound(g, s, lo) < tol) return lo;
    double hi = 1.0 / s;
    while (exp_tail_bound(g, s, hi) >= tol) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw CutoffTooLarge("select_cutoff: no finite cutoff reaches the tolerance");
    }
    for (int i = 0; i < 60 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (exp_tail_bound(g, s, mid) < tol ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace bosebox
