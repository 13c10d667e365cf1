#include <doctest.h>

#include <cmath>
#include <memory>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bosebox/canonical.hpp"
#include "bosebox/errors.hpp"
#include "bosebox/grandcanonical.hpp"
#include "bosebox/kac.hpp"
#include "bosebox/numeric.hpp"

using namespace bosebox;

namespace {

template <class F>
double integrate_from(double a, F f) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double y) { return f(a + y); }, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

struct Fixture {
    std::shared_ptr<const SpectrumTable> spec;
    CanonicalTable ct;
    double mu_bar;
};

Fixture small_box(double f) {
    BoxGeometry g({0.4, 0.35, 0.25}, 200.0);
    auto spec = std::make_shared<const SpectrumTable>(gc_spectrum(g, 1.0, 1e-12));
    const double rho = f * critical_density(1.0).value;
    const double mu = solve_mu(*spec, rho, 1.0).mu_bar;
    return {spec, build_canonical(spec, 1.0, 3000), mu};
}

}  // namespace

TEST_CASE("Kac weights are a probability law with the grand-canonical density as mean") {
    for (double f : {0.5, 2.0}) {
        const auto fx = small_box(f);
        const auto w = kac_weights(fx.ct, fx.mu_bar);
        double mass = 0.0, mean = 0.0;
        for (int n = 0; n <= w.n_cut(); ++n) {
            mass += w.weights[n];
            mean += n * w.weights[n];
        }
        CHECK(std::abs(mass - 1.0) <= 1e-12 + w.tail_bound);
        CHECK(mean / 200.0 == doctest::Approx(f * critical_density(1.0).value).epsilon(1e-9));
    }
}

TEST_CASE("Kac transform equals a ratio of grand partition functions") {
    const auto fx = small_box(2.0);
    const auto w = kac_weights(fx.ct, fx.mu_bar);
    for (double lam : {0.1, 1.0, 10.0}) {
        double s = 0.0;
        for (int n = 0; n <= w.n_cut(); ++n) s += w.weights[n] * std::exp(-lam * n / 200.0);
        const double want = std::exp(log_grand_partition(*fx.spec, fx.mu_bar - lam / 200.0, 1.0) -
                                     log_grand_partition(*fx.spec, fx.mu_bar, 1.0));
        CHECK(s == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("grand-canonical transform decomposes over canonical ones") {
    const auto fx = small_box(2.0);
    const auto w = kac_weights(fx.ct, fx.mu_bar);
    for (std::size_t k = 0; k < 3; ++k)
        for (double lam : {0.1, 1.0, 10.0}) {
            const auto d = decomposition_check(fx.ct, w, k, lam);
            CHECK(std::abs(d.lhs - d.rhs) <= d.bound);
        }
}

TEST_CASE("explicit cut below the table") {
    const auto fx = small_box(0.5);
    const auto w = kac_weights(fx.ct, fx.mu_bar, 20);
    CHECK(w.n_cut() == 20);
    CHECK(w.tail_bound > 0.0);
    CHECK_THROWS_AS(kac_weights(fx.ct, 0.0), DomainError);
}

TEST_CASE("entire function s") {
    CHECK(s_entire(0.0) == 1.0);
    CHECK(s_entire(4.0) == doctest::Approx(std::sinh(2.0) / 2.0));
    CHECK(s_entire(-kPi * kPi) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(log_abs_s(900.0) == doctest::Approx(std::log(std::sinh(30.0) / 30.0)));
    CHECK(std::isfinite(log_abs_s(1e6)));
}

TEST_CASE("limiting laws below the critical density are point masses") {
    const double rc = critical_density(1.0).value;
    const auto law = limiting_kac_law(Regime::TypeI, 0.5 * rc, 1.0);
    CHECK(law.kind == KacLawKind::PointMass);
    CHECK(law.laplace(2.0) == doctest::Approx(std::exp(-rc)));
    CHECK_THROWS_AS(law.density(1.0), DomainError);
    CHECK(limiting_kac_law(Regime::TypeIII, 2.0 * rc, 1.0).kind == KacLawKind::PointMass);
}

TEST_CASE("exponential Kac law") {
    const double rc = critical_density(1.0).value;
    const auto law = limiting_kac_law(Regime::TypeI, 3.0 * rc, 1.0);
    CHECK(integrate_from(rc, [&](double x) { return law.density(x); }) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(integrate_from(rc, [&](double x) { return x * law.density(x); }) ==
          doctest::Approx(3.0 * rc).epsilon(1e-10));
    CHECK(integrate_from(rc, [&](double x) { return std::exp(-0.7 * x) * law.density(x); }) ==
          doctest::Approx(law.laplace(0.7)).epsilon(1e-10));
}

TEST_CASE("ladder Kac law has unit mass, mean rho and the stated transform") {
    for (double beta : {1.0, 0.7})
        for (double f : {1.3, 2.0, 5.0}) {
            const double rc = critical_density(beta).value;
            const auto law = limiting_kac_law(Regime::TypeII, f * rc, beta);
            REQUIRE(law.kind == KacLawKind::LadderSeries);
            auto dens = [&](double x) { return law.density(x); };
            CHECK(integrate_from(rc, dens) == doctest::Approx(1.0).epsilon(1e-8));
            CHECK(integrate_from(rc, [&](double x) { return x * dens(x); }) ==
                  doctest::Approx(f * rc).epsilon(1e-8));
            CHECK(law.mean() == doctest::Approx(f * rc).epsilon(1e-9));
            for (double lam : {0.5, 3.0})
                CHECK(integrate_from(rc, [&](double x) { return std::exp(-lam * x) * dens(x); }) ==
                      doctest::Approx(law.laplace(lam)).epsilon(1e-8));
            // the density is nonnegative
            for (double y = 1e-3; y < 5.0; y *= 1.5) CHECK(dens(rc + y) >= -1e-14);
        }
}

TEST_CASE("printed ladder prefactor does not normalise") {
    const double rc = critical_density(1.0).value;
    const auto law = limiting_kac_law(Regime::TypeII, 2.0 * rc, 1.0, LadderPrefactor::Printed);
    const double mass = integrate_from(rc, [&](double x) { return law.density(x); });
    CHECK(std::abs(mass - 1.0) > 1e-3);
}

TEST_CASE("finite-volume Kac transform approaches the exponential law") {
    const double rc = critical_density(1.0).value;
    std::vector<BoxGeometry> sweep{BoxGeometry({0.4, 0.35, 0.25}, 300.0),
                                   BoxGeometry({0.4, 0.35, 0.25}, 3000.0)};
    const auto rows = empirical_kac_convergence(sweep, 2.0 * rc, 1.0, 1.0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].gap < rows[0].gap);
}
