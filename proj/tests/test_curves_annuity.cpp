#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcs/annuity.hpp"
#include "mcs/curves.hpp"
#include "mcs/errors.hpp"
#include "mcs/quadrature.hpp"
#include "oracle.hpp"

using namespace mcs;

TEST_CASE("adaptive quadrature hits known integrals") {
    CHECK(adaptive_gauss_legendre([](double x) { return x * x; }, 0.0, 3.0, 1e-12) ==
          doctest::Approx(9.0).epsilon(1e-13));
    CHECK(adaptive_gauss_legendre([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
    // oscillatory integrand forces the splitting path
    const double val =
        adaptive_gauss_legendre([](double x) { return std::sin(20.0 * x); }, 0.0, 2.0, 1e-12);
    CHECK(val == doctest::Approx((1.0 - std::cos(40.0)) / 20.0).epsilon(1e-10));
}

TEST_CASE("curve families evaluate and integrate exactly") {
    const RateCurve aff = RateCurve::affine(0.02, 0.001);
    CHECK(aff(3.0) == doctest::Approx(0.023).epsilon(1e-15));
    CHECK(aff.integrate(1.0, 5.0) == doctest::Approx(0.02 * 4 + 0.0005 * (25 - 1)).epsilon(1e-14));

    const RateCurve pwc = RateCurve::piecewise_constant({1.0, 3.0}, {0.01, 0.02, 0.04});
    CHECK(pwc(0.5) == 0.01);
    CHECK(pwc(1.0) == 0.02);
    CHECK(pwc(2.9) == 0.02);
    CHECK(pwc(3.1) == 0.04);
    CHECK(pwc.integrate(0.0, 4.0) == doctest::Approx(0.01 + 0.04 + 0.04).epsilon(1e-14));

    const RateCurve tab = RateCurve::tabulated({0.0, 2.0}, {0.0, 0.04});
    CHECK(tab(1.0) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(tab.integrate(0.0, 2.0) == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(tab(3.0) == doctest::Approx(0.04).epsilon(1e-15)); // flat extrapolation

    // algebra stays in the named families
    const RateCurve sum = pwc + RateCurve::constant(0.01);
    CHECK(sum.kind() == RateCurve::Kind::PiecewiseConstant);
    CHECK(sum(2.0) == doctest::Approx(0.03).epsilon(1e-15));
    const RateCurve scaled = 2.0 * aff;
    CHECK(scaled(3.0) == doctest::Approx(0.046).epsilon(1e-15));
}

TEST_CASE("annuity factor: constant-rate values") {
    const RateCurve zero = RateCurve::constant(0.0);
    CHECK(annuity_factor(zero, 0.0, 10.0) == doctest::Approx(10.0).epsilon(1e-14));

    const RateCurve f5 = RateCurve::constant(0.05);
    CHECK(annuity_factor(f5, 0.0, 20.0) ==
          doctest::Approx(12.642411176571153).epsilon(1e-13));

    CHECK(annuity_factor(f5, 20.0, 20.0) == 0.0);
    CHECK_THROWS_AS(annuity_factor(f5, 21.0, 20.0), DomainError);
}

TEST_CASE("annuity factor: quadrature path matches the closed form") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> rate(-0.05, 0.12), time(0.0, 30.0);
    for (int i = 0; i < 100; ++i) {
        const double alpha = rate(gen);
        double t = time(gen), T = time(gen);
        if (t > T) std::swap(t, T);
        if (T - t < 1e-3) T = t + 1.0;
        // piecewise wrapper with equal values forces the quadrature route
        const RateCurve wrapped =
            RateCurve::piecewise_constant({0.5 * (t + T)}, {alpha, alpha});
        CHECK(annuity_factor(wrapped, t, T) ==
              doctest::Approx(annuity_factor_constant(alpha, t, T)).epsilon(1e-12));
    }
}

TEST_CASE("annuity factor: monotone in the rate curve") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> rate(-0.02, 0.1), bump(0.0, 0.05);
    for (int i = 0; i < 50; ++i) {
        const double b1 = 3.0, b2 = 7.0;
        std::vector<double> lo = {rate(gen), rate(gen), rate(gen)};
        std::vector<double> hi = lo;
        for (double& v : hi) v += bump(gen);
        const RateCurve f_lo = RateCurve::piecewise_constant({b1, b2}, lo);
        const RateCurve f_hi = RateCurve::piecewise_constant({b1, b2}, hi);
        CHECK(annuity_factor(f_hi, 0.0, 10.0) <= annuity_factor(f_lo, 0.0, 10.0) + 1e-12);
    }
}

TEST_CASE("factor ODE residual") {
    const RateCurve f5 = RateCurve::constant(0.05);
    CHECK(std::abs(factor_ode_residual(f5, 1.0, 21.0)) <= 1e-6);

    const RateCurve zero = RateCurve::constant(0.0);
    CHECK(std::abs(factor_ode_residual(zero, 0.0, 10.0)) <= 1e-6);

    // B -> 0 and dB/dt -> -1 as t -> T
    const RateCurve f10 = RateCurve::constant(0.1);
    CHECK(std::abs(factor_ode_residual(f10, 10.0 - 1e-3, 10.0, 1e-4)) <= 1e-6);

    const RateCurve pwc = RateCurve::piecewise_constant({2.0}, {0.02, 0.05});
    CHECK_THROWS_AS(factor_ode_residual(pwc, 2.0, 10.0), BreakpointError);
    CHECK_THROWS_AS(factor_ode_residual(pwc, 2.00005, 10.0), BreakpointError);
    CHECK(std::abs(factor_ode_residual(pwc, 1.0, 10.0)) <= 1e-6);
}

namespace {

AnnuityAnsatz vasicek_style_ansatz(double kappa, double h_level) {
    AnnuityAnsatz a;
    a.g = [kappa](double t, double s) {
        const double x = kappa * (s - t);
        if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
        return -std::expm1(-x) / x;
    };
    a.h = [h_level](double, double) { return h_level; };
    return a;
}

} // namespace

TEST_CASE("ansatz surface reduces to the plain annuity factor") {
    AnnuityAnsatz a;
    a.g = [](double, double) { return 1.0; };
    a.h = [](double, double) { return 0.0; };
    CHECK(ansatz_surface(a, 0.0, 0.0, 5.0) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(ansatz_surface(a, 1.0, 0.04, 8.0) ==
          doctest::Approx(annuity_factor_constant(0.04, 1.0, 8.0)).epsilon(1e-10));
    CHECK(ansatz_surface(a, 8.0, 0.04, 8.0) == 0.0);
}

TEST_CASE("ansatz surface vs nested Simpson oracle") {
    const auto a = vasicek_style_ansatz(0.5, 0.01);
    const double mine = ansatz_surface(a, 0.0, 0.03, 10.0);
    const double ref = oracle::nested_ansatz(a.g, a.h, 0.0, 0.03, 10.0, 2048, 512);
    CHECK(mine == doctest::Approx(ref).epsilon(1e-8));

    // strictly decreasing in r for positive g
    CHECK(ansatz_surface(a, 0.0, 0.05, 10.0) < ansatz_surface(a, 0.0, 0.03, 10.0));
    CHECK(ansatz_surface(a, 0.0, 0.03, 10.0) < ansatz_surface(a, 0.0, 0.0, 10.0));
}

TEST_CASE("Leibniz terms") {
    SUBCASE("time-independent g, h vanish") {
        const auto a = vasicek_style_ansatz(0.0, 0.02); // g == 1, h == 0.02, no t-dependence
        const auto terms = leibniz_terms(a, 1.0, 0.03, 6.0);
        CHECK(std::abs(terms.H1) <= 1e-9);
        CHECK(std::abs(terms.H2) <= 1e-9);
    }
    SUBCASE("r = 0 kills H1") {
        const auto a = vasicek_style_ansatz(0.5, 0.01); // g depends on t
        const auto terms = leibniz_terms(a, 1.0, 0.0, 6.0);
        CHECK(terms.H1 == 0.0);
    }
    SUBCASE("h(t,s) = 0.01 t against the quadrature oracle") {
        AnnuityAnsatz a;
        a.g = [](double, double) { return 1.0; };
        a.h = [](double t, double) { return 0.01 * t; };
        a.dh_dt = [](double, double) { return 0.01; };
        const auto terms = leibniz_terms(a, 1.0, 0.0, 3.0);
        // H2 = int_1^3 e^{-0.01(u-1)} * 0.01 (u-1) du
        const double ref = oracle::simpson(
            [](double u) { return std::exp(-0.01 * (u - 1.0)) * 0.01 * (u - 1.0); }, 1.0, 3.0,
            4096);
        CHECK(terms.H2 == doctest::Approx(ref).epsilon(1e-8));
        CHECK(terms.H2 == doctest::Approx(0.019735322710967562).epsilon(1e-8));
        CHECK(std::abs(terms.H1) <= 1e-12);
    }
}

TEST_CASE("da/dt identity") {
    SUBCASE("degenerate ansatz reduces to the factor ODE") {
        AnnuityAnsatz a;
        a.g = [](double, double) { return 1.0; };
        a.h = [](double, double) { return 0.0; };
        CHECK(std::abs(dadt_identity_check(a, 2.0, 0.05, 12.0)) <= 1e-5);
    }
    SUBCASE("Vasicek-style ansatz on a few points") {
        const auto a = vasicek_style_ansatz(0.5, 0.01);
        for (const auto& [t, r] : {std::pair{1.0, 0.02}, {4.0, 0.03}, {7.0, 0.05}})
            CHECK(std::abs(dadt_identity_check(a, t, r, 10.0)) <= 1e-5);
    }
    SUBCASE("terminal boundary: both sides approach -1") {
        const auto a = vasicek_style_ansatz(0.5, 0.01);
        const double T = 10.0;
        const double t = T - 5e-3;
        CHECK(std::abs(dadt_identity_check(a, t, 0.03, T)) <= 1e-4);
        // and the right-hand side itself is near -1 there
        const auto terms = leibniz_terms(a, t, 0.03, T);
        const double rhs = (0.03 + a.h(t, t)) * ansatz_surface(a, t, 0.03, T) - 1.0 - terms.H1 -
                           terms.H2;
        CHECK(rhs == doctest::Approx(-1.0).epsilon(1e-2));
    }
}

TEST_CASE("ansatz constraint g(t,t) = 1 for the named instances") {
    const auto a = vasicek_style_ansatz(0.5, 0.0);
    for (double t = 0.0; t <= 10.0; t += 0.5)
        CHECK(a.g(t, t) == doctest::Approx(1.0).epsilon(1e-12));
}
