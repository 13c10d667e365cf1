#include <doctest.h>

#include <cmath>

#include "bosebox/errors.hpp"
#include "bosebox/grandcanonical.hpp"
#include "bosebox/limits.hpp"
#include "bosebox/numeric.hpp"

using namespace bosebox;

namespace {

const double kRc = critical_density(1.0).value;

// sum over n_j in [2, n_max] of -log1p(x) + x, x = lambda / (beta eta_n)
double lattice_g(int d, double lambda, double beta, int n_max, GapConvention conv = GapConvention::Exact) {
    double s = 0.0;
    auto term = [&](double eta) {
        const double x = lambda / (beta * eta);
        s += x - std::log1p(x);
    };
    if (d == 1)
        for (int a = n_max; a >= 2; --a) term(unit_gap(a, conv));
    if (d == 2)
        for (int a = n_max; a >= 2; --a)
            for (int b = n_max; b >= 2; --b) term(unit_gap(a, conv) + unit_gap(b, conv));
    if (d == 3)
        for (int a = n_max; a >= 2; --a)
            for (int b = n_max; b >= 2; --b)
                for (int c = n_max; c >= 2; --c) term(unit_gap(a, conv) + unit_gap(b, conv) + unit_gap(c, conv));
    return s;
}

// single sum over the cube lattice without the origin mode, gaps summed over all three axes
double cube_g(double lambda, int n_max) {
    double s = 0.0;
    for (int a = n_max; a >= 1; --a)
        for (int b = n_max; b >= 1; --b)
            for (int c = n_max; c >= 1; --c) {
                if (a == 1 && b == 1 && c == 1) continue;
                const double eta = unit_gap(a, GapConvention::Exact) + unit_gap(b, GapConvention::Exact) +
                                   unit_gap(c, GapConvention::Exact);
                const double x = lambda / eta;
                s += x - std::log1p(x);
            }
    return s;
}

}  // namespace

TEST_CASE("truncated b coefficients satisfy their exact sum rules") {
    for (int n : {1, 2, 5})
        for (double beta : {1.0, 0.4}) {
            const auto c = gap_coefficients(n, 400, beta);
            double s1 = 0.0, s0 = 0.0;
            for (int m = 1; m <= 400; ++m) {
                if (m == n) continue;
                s1 += c.b[m] * c.eta[m];
                s0 += c.b[m];
            }
            CHECK(s1 == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(s0 == doctest::Approx(c.inv_eta_sum).epsilon(1e-9));
        }
}

TEST_CASE("b coefficients approach the closed form") {
    for (int n : {1, 2, 3})
        for (int m = 1; m <= 6; ++m) {
            if (m == n) continue;
            const double lim = b_coefficient_limit(m, n, 1.0);
            const auto c1 = gap_coefficients(n, 1000), c2 = gap_coefficients(n, 2000);
            const double e1 = std::abs(c1.b[m] - lim), e2 = std::abs(c2.b[m] - lim);
            CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
            CHECK(e2 <= 1.1 * c2.product_tail[m] * std::abs(c2.b[m]));
        }
    // antisymmetry of the gaps
    const auto a = gap_coefficients(2, 50), b = gap_coefficients(5, 50);
    CHECK(a.eta[5] == doctest::Approx(-b.eta[2]));
}

TEST_CASE("ladder transform is normalised and its slope is the occupation") {
    const double rho = 2.0 * kRc;
    for (int n : {1, 2, 3}) {
        const auto c = gap_coefficients(n, 1000);
        CHECK(canonical_laplace_typeII(n, 0.0, rho, kRc, c).value == 1.0);
        const double h = 1e-4;
        const double d = (canonical_laplace_typeII(n, -h, rho, kRc, c).value -
                          canonical_laplace_typeII(n, h, rho, kRc, c).value) /
                         (2 * h);
        CHECK(d == doctest::Approx(occupation_limit_typeII(n, rho, kRc, c).value).epsilon(1e-6));
    }
}

TEST_CASE("ladder distribution function is a distribution function") {
    const auto c = gap_coefficients(1, 1000);
    CHECK(k_tilde_limit(1, kRc, kRc, c) == doctest::Approx(0.0).epsilon(1e-6));
    double prev = -1e-9;
    for (double y = 1e-3; y < 30.0; y *= 1.4) {
        const double k = k_tilde_limit(1, kRc + y, kRc, c);
        CHECK(k >= prev - 1e-9);
        prev = k;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("doubling the truncation stays inside the reported bound") {
    const double rho = 2.0 * kRc;
    for (int n : {1, 2, 4}) {
        const auto lo = occupation_limit_typeII(n, rho, kRc, gap_coefficients(n, 500));
        const auto hi = occupation_limit_typeII(n, rho, kRc, gap_coefficients(n, 1000));
        CHECK(std::abs(hi.value - lo.value) <= lo.truncation_bound);
        const auto l1 = canonical_laplace_typeII(n, 1.0, rho, kRc, gap_coefficients(n, 500));
        const auto l2 = canonical_laplace_typeII(n, 1.0, rho, kRc, gap_coefficients(n, 1000));
        CHECK(std::abs(l2.value - l1.value) <= l1.truncation_bound);
    }
}

TEST_CASE("ensembles differ on the ladder ground state") {
    const double rho = 2.0 * kRc;
    const double can = occupation_limit_typeII(1, rho, kRc, gap_coefficients(1, 1000)).value;
    const double gc = gc_occupation_limit(Regime::TypeII, rho, Mode{}, 1.0);
    CHECK(std::abs(can - gc) > 1e-3);
    CHECK_THROWS_AS(canonical_laplace_typeII(1, gap_coefficients(1, 100).eta[2], rho, kRc,
                                             gap_coefficients(1, 100)),
                    PoleProximity);
}

TEST_CASE("type I and type III canonical limits") {
    const double rho = 2.0 * kRc;
    CHECK(canonical_laplace_typeI(Mode{}, 0.8, rho, kRc) == doctest::Approx(std::exp(-0.8 * kRc)));
    CHECK(canonical_laplace_typeI(Mode{{2, 1, 1}}, 0.8, rho, kRc) == 1.0);
    CHECK(canonical_occupation_typeI(Mode{}, rho, kRc) == doctest::Approx(kRc));
    for (double lam : {0.1, 1.0, 10.0})
        for (const Mode& m : {Mode{}, Mode{{3, 1, 1}}, Mode{{1, 2, 1}}})
            CHECK(canonical_laplace_typeIII(m, lam, rho, kRc) ==
                  doctest::Approx(gc_laplace_limit(Regime::TypeIII, rho, m, lam, 1.0)));
}

TEST_CASE("g functions against direct lattice sums") {
    for (double lam : {-0.5, 1.0, 5.0}) {
        CHECK(g_function(1, lam, 1.0) == doctest::Approx(lattice_g(1, lam, 1.0, 200000)).epsilon(1e-9));
        CHECK(g_function(1, lam, 0.5, GapConvention::Printed) ==
              doctest::Approx(lattice_g(1, lam, 0.5, 200000, GapConvention::Printed)).epsilon(1e-7));
        CHECK(g_function(2, lam, 1.0) == doctest::Approx(lattice_g(2, lam, 1.0, 2000)).epsilon(1e-7));
        // three-dimensional tail is a/N + b/N^2; extrapolate
        const double s1 = lattice_g(3, lam, 1.0, 40), s2 = lattice_g(3, lam, 1.0, 80),
                     s3 = lattice_g(3, lam, 1.0, 160);
        CHECK(g_function(3, lam, 1.0) == doctest::Approx((8.0 * s3 - 6.0 * s2 + s1) / 3.0).epsilon(1e-4));
    }
}

TEST_CASE("g functions vanish to second order at zero") {
    const double h = 1e-4;
    for (int d = 1; d <= 3; ++d)
        for (auto conv : {GapConvention::Exact, GapConvention::Printed}) {
            CHECK(g_function(d, 0.0, 1.0, conv) == 0.0);
            CHECK(std::abs(g_function(d, h, 1.0, conv) - g_function(d, -h, 1.0, conv)) / (2 * h) < 1e-6);
        }
    for (double beta : {1.0, 2.5}) {
        const double want = 4.0 / (beta * beta * std::pow(kPi, 4)) * (kPi * kPi / 12.0 - 11.0 / 16.0);
        CHECK(std::abs(g_second_derivative(1, beta) - want) < 1e-8 * want);
        const double fd = (g_function(1, 1e-3, beta) - 2.0 * g_function(1, 0.0, beta) + g_function(1, -1e-3, beta)) / 1e-6;
        CHECK(fd == doctest::Approx(want).epsilon(1e-4));
    }
    CHECK(g_domain_lower(1, 1.0) == doctest::Approx(-1.5 * kPi * kPi));
    CHECK_THROWS(g_function(1, -20.0, 1.0));
}

TEST_CASE("fluctuation law combinations") {
    for (auto c : {FluctuationCase::Distinct, FluctuationCase::TwoEqual, FluctuationCase::Isotropic})
        CHECK(fluctuation_law(c, 0.0, 1.0) == 1.0);
    const double lam = 0.5;
    CHECK(fluctuation_law(FluctuationCase::Distinct, lam, 1.0) == doctest::Approx(std::exp(g_function(1, lam, 1.0))));
    CHECK(fluctuation_law(FluctuationCase::TwoEqual, lam, 1.0) ==
          doctest::Approx(std::exp(2 * g_function(1, lam, 1.0) + g_function(2, lam, 1.0))));
    // the isotropic combination is the cube sum over every non-ground mode
    const double s1 = cube_g(lam, 40), s2 = cube_g(lam, 80), s3 = cube_g(lam, 160);
    CHECK(std::log(fluctuation_law(FluctuationCase::Isotropic, lam, 1.0)) ==
          doctest::Approx((8.0 * s3 - 6.0 * s2 + s1) / 3.0).epsilon(1e-4));
}

TEST_CASE("finite critical density approaches the bulk value") {
    double prev = 1e300;
    for (double v : {1e2, 1e3, 1e4}) {
        BoxGeometry g({1.0 / 3, 1.0 / 3, 1.0 / 3}, v);
        const auto t = gc_spectrum(g, 1.0, 1e-12);
        const auto r = rho_c_finite(t, 1.0);
        CHECK(r.value > 0.0);
        CHECK(std::abs(r.value - kRc) < prev);
        prev = std::abs(r.value - kRc);
    }
}

TEST_CASE("fluctuation check rows") {
    std::vector<BoxGeometry> sweep{BoxGeometry({1.0 / 3, 1.0 / 3, 1.0 / 3}, 300.0)};
    const auto rows = fluctuation_convergence_check(sweep, 2.0 * kRc, {0.0, 0.5}, 1.0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].finite == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rows[0].limit == 1.0);
    CHECK(rows[1].finite > 0.0);
    CHECK(fluctuation_setup({0.4, 0.35, 0.25}).gamma == doctest::Approx(0.2));
}

TEST_CASE("type II ladder stays finite for high modes and tends to the gc value") {
    const double rc = 1.0;
    for (int n : {30, 60}) {
        const auto c = gap_coefficients(n, 1000);
        const auto v = occupation_limit_typeII(n, 2.0 * rc, rc, c);
        REQUIRE(std::isfinite(v.value));
        // high modes are nearly unaffected by the condensate: 1 / (beta eps gap)
        const double approx = 1.0 / (0.5 * bosebox::kPi * bosebox::kPi * (double(n) * n - 1.0));
        CHECK(std::abs(v.value / approx - 1.0) < 0.05);
        const auto l = canonical_laplace_typeII(n, 1.0, 2.0 * rc, rc, c);
        CHECK(std::isfinite(l.value));
        CHECK(l.value > 0.0);
        CHECK(l.value < 1.0);
    }
}
