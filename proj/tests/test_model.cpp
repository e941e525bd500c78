#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "plshoot/chebyshev.hpp"
#include "plshoot/model.hpp"

using namespace plshoot;

namespace {
ProblemParams ci1() { return ProblemParams{3.0, 5, 0.5, 3.0, 1.0, 1.0, 1.0, 5.75, 5.75}; }
ProblemParams ci2() { return ProblemParams{2.0, 4, 0.5, 3.0, 1.0, 1.0, 1.0, 5.5, 5.5}; }
}  // namespace

TEST_CASE("validate_params accepts CI-1 and CI-2") {
    CHECK(validate_params(ci1()).accepted);
    CHECK(validate_params(ci2()).accepted);
}

TEST_CASE("validate_params rejects alpha = 6 via the rK'/K clause") {
    auto pp = ci1();
    pp.alpha = 6.0;
    pp.alpha1 = 6.0;
    const auto rep = validate_params(pp);
    REQUIRE_FALSE(rep.accepted);
    bool named = false;
    for (const auto& v : rep.violations)
        if (v.find("rK'/K") != std::string::npos) named = true;
    CHECK(named);
}

TEST_CASE("validate_params rejects N = 2 boundary") {
    ProblemParams pp = ci1();
    pp.p = 2.0;
    pp.N = 2;
    const auto rep = validate_params(pp);
    REQUIRE_FALSE(rep.accepted);
    bool named = false;
    for (const auto& v : rep.violations)
        if (v == "N > 2") named = true;
    CHECK(named);
}

TEST_CASE("validate_params throws on non-finite input") {
    auto pp = ci1();
    pp.alpha = std::nan("");
    CHECK_THROWS_AS(validate_params(pp), std::domain_error);
}

TEST_CASE("derived constants for CI-1") {
    const auto prob = make_canonical_problem(ci1());
    const auto& d = prob.consts;
    CHECK(d.alpha_tilde == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(d.T_end == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(d.beta == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(d.gamma == Catch::Approx(std::pow(8.0, 2.0 / 7.0)).epsilon(1e-14));
    CHECK(d.F0 == Catch::Approx(1.75).epsilon(1e-14));
    CHECK(d.f0 == Catch::Approx(1.0).epsilon(1e-14));
    // gamma reconfirmed by numeric bisection on F
    double lo = d.beta, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (prob.F(mid) < 0.0 ? lo : hi) = mid;
    }
    CHECK(0.5 * (lo + hi) == Catch::Approx(d.gamma).epsilon(1e-12));
    CHECK(d.alpha_tilde + prob.params.m < 1.0);
}

TEST_CASE("p = 2 specialization of the alpha_tilde formula") {
    auto pp = ci2();
    const auto prob = make_canonical_problem(pp);
    const double expect = (2.0 * (pp.N - 1.0) - pp.alpha) / (pp.N - 2.0);
    CHECK(prob.consts.alpha_tilde == Catch::Approx(expect).epsilon(1e-14));
    CHECK(prob.consts.alpha_tilde == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("canonical nonlinearity values and symmetry") {
    const auto prob = make_canonical_problem(ci1());
    CHECK(prob.f(1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(prob.F(0.0) == 0.0);
    CHECK_THROWS_AS(prob.f(0.0), std::domain_error);
    for (double u : {0.03, 0.4, 1.3, 2.7, 11.0}) {
        CHECK(prob.f(-u) == Catch::Approx(-prob.f(u)).epsilon(1e-14));
        CHECK(prob.F(-u) == Catch::Approx(prob.F(u)).epsilon(1e-14));
    }
    // sign pattern around beta and gamma
    const double beta = prob.consts.beta, gamma = prob.consts.gamma;
    for (int i = 1; i <= 50; ++i) {
        const double u = beta * i / 51.0;
        CHECK(prob.f(u) < 0.0);
    }
    for (int i = 1; i <= 50; ++i) {
        const double u = beta + (gamma - beta) * 0.5 + i;
        CHECK(prob.f(u) > 0.0);
    }
    for (int i = 1; i <= 50; ++i) CHECK(prob.F(gamma * i / 51.0) < 0.0);
    for (int i = 1; i <= 50; ++i) CHECK(prob.F(gamma + 0.2 * i) > 0.0);
}

TEST_CASE("F and |u|^{m-1}u f(u) lower bounds hold on a wide grid") {
    const auto prob = make_canonical_problem(ci1());
    const auto& d = prob.consts;
    for (int i = 0; i <= 600; ++i) {
        const double u = 1e-6 * std::pow(1e8, i / 600.0);
        CHECK(prob.F(u) >= -d.F0 * (1.0 + 1e-12));
        CHECK(std::pow(u, prob.params.m) * prob.f(u) >= -d.f0 * (1.0 + 1e-12));
    }
}

TEST_CASE("weight closed form on CI-1: h(t) = t^{-1/4}") {
    const auto prob = make_canonical_problem(ci1());
    CHECK(prob.h(1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(prob.h(1.0 / 16.0) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(prob.h(0.0), std::domain_error);
    CHECK_THROWS_AS(prob.h(1.5), std::domain_error);
    for (int i = 0; i <= 40; ++i) {
        const double t = std::pow(10.0, -6.0 + 6.0 * i / 40.0);
        CHECK(prob.hprime(t) < 0.0);
    }
}

TEST_CASE("general transform formula agrees with pure-power closed form") {
    const auto pp = ci1();
    const auto prob = make_canonical_problem(pp);
    GeneralWeight gw(pp, [&](double r) { return pp.K0 * std::pow(r, -pp.alpha); },
                     [&](double r) { return -pp.alpha * pp.K0 * std::pow(r, -pp.alpha - 1.0); });
    for (int i = 0; i <= 60; ++i) {
        const double t = std::pow(10.0, -8.0 + 8.0 * i / 60.0);
        CHECK(gw.h(t) == Catch::Approx(prob.h(t)).epsilon(1e-13));
        CHECK(gw.hprime(t) == Catch::Approx(prob.hprime(t)).epsilon(1e-12));
    }
}

TEST_CASE("phi maps: values, oddness, inverse round trip") {
    CHECK(phi_p(2.0, 3.0) == Catch::Approx(4.0).epsilon(1e-15));
    CHECK(phi_p(-2.0, 3.0) == Catch::Approx(-4.0).epsilon(1e-15));
    CHECK(phi_inv(4.0, 3.0) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(phi_inv(-3.0, 1.5) == Catch::Approx(-9.0).epsilon(1e-15));
    CHECK(phi_p(0.0, 3.0) == 0.0);
    CHECK(phi_inv(0.0, 3.0) == 0.0);

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ux(-50.0, 50.0);
    std::uniform_real_distribution<double> up(1.1, 6.0);
    const double eps8 = 8.0 * std::numeric_limits<double>::epsilon();
    for (int i = 0; i < 2000; ++i) {
        const double x = ux(rng), p = up(rng);
        const double back = phi_inv(phi_p(x, p), p);
        CHECK(std::fabs(back - x) <= eps8 * std::max(1.0, std::fabs(x)));
    }
}

TEST_CASE("ChebSeries transforms, evaluation, calculus") {
    const std::size_t n = 32;
    const double L = 2.5;
    auto ys = ChebSeries::nodes(n, L);
    std::vector<double> vals(n + 1);
    for (std::size_t j = 0; j <= n; ++j) vals[j] = std::exp(-ys[j]) * std::sin(2.0 * ys[j]);
    auto s = ChebSeries::from_values(vals, L);
    for (double y : {0.0, 0.3, 1.1, 2.0, 2.5})
        CHECK(s(y) == Catch::Approx(std::exp(-y) * std::sin(2.0 * y)).margin(1e-12));
    auto anti = s.antiderivative();
    CHECK(anti(0.0) == Catch::Approx(0.0).margin(1e-13));
    // d/dy of exact antiderivative matches, checked against quadrature
    const double qexact = plshoot::integrate_smooth(
        [](double y) { return std::exp(-y) * std::sin(2.0 * y); }, 0.0, 1.7);
    CHECK(anti(1.7) == Catch::Approx(qexact).margin(1e-12));
    auto der = s.derivative();
    for (double y : {0.2, 1.4, 2.2})
        CHECK(der(y) ==
              Catch::Approx(std::exp(-y) * (2.0 * std::cos(2.0 * y) - std::sin(2.0 * y)))
                  .margin(1e-10));
}
