#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "plshoot/model.hpp"
#include "plshoot/quadrature.hpp"
#include "plshoot/startup.hpp"

using namespace plshoot;

namespace {
Problem ci1() { return make_canonical_problem({3.0, 5, 0.5, 3.0, 1.0, 1.0, 1.0, 5.75, 5.75}); }
Problem ci2() { return make_canonical_problem({2.0, 4, 0.5, 3.0, 1.0, 1.0, 1.0, 5.5, 5.5}); }
}  // namespace

TEST_CASE("singular quadrature agrees with brute force plus analytic tail") {
    const auto prob = ci1();
    const double m = prob.params.m;
    const double at = prob.consts.alpha_tilde;
    const double sigma = at + m;
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> ua(0.3, 4.0);
    for (int trial = 0; trial < 8; ++trial) {
        const double a = ua(rng);
        const double amp = 0.35 * ua(rng) / 4.0;
        auto w = [&](double x) { return a * (1.0 + amp * std::sin(3.0 * std::pow(x, 0.25))); };
        const double t = 0.2;
        // production: exact power-weight substitution
        auto phi = [&](double x) {
            const double eta = prob.weight->h(std::max(x, 1e-120)) * std::pow(std::max(x, 1e-120), at);
            return eta * std::pow(w(x), -m);
        };
        const double production = integrate_power_singular(phi, sigma, t, 1e-14);
        // oracle: dyadic-panel brute force down to delta, plus the analytic
        // frozen-coefficient tail on [0, delta]
        auto raw = [&](double x) { return prob.weight->h(x) * std::pow(x * w(x), -m); };
        double brute = 0.0, hi = t;
        double delta = t;
        for (int k = 0; k < 140; ++k) {
            const double lo = hi * 0.5;
            brute += boost::math::quadrature::gauss<double, 15>::integrate(raw, lo, hi);
            hi = lo;
            delta = lo;
        }
        const double c = prob.weight->h(1.0);  // pure power amplitude
        const double tail = c * std::pow(w(0.0), -m) * std::pow(delta, 1.0 - sigma) / (1.0 - sigma);
        CHECK(production == Catch::Approx(brute + tail).epsilon(1e-10));
    }
}

TEST_CASE("picard fixed point: definition checks at a = 1 on CI-1") {
    const auto prob = ci1();
    StartupOptions opt;
    const auto r = pick_epsilon(prob, 1.0, opt);
    CHECK(r.w_nodes.front() == 1.0);               // w(0) = a exactly
    CHECK(r.picard_residual <= opt.tol);
    CHECK(r.contraction_estimate < 1.0);
    CHECK(r.contraction_estimate <= opt.ratio_threshold);
    // deterministic candidate sequence: eps = eps0 * 2^-k
    const double eps0 = std::min(prob.T_end() / 4.0, 0.5 * prob.consts.beta / 1.0);
    const double k = std::log2(eps0 / r.epsilon);
    CHECK(std::fabs(k - std::round(k)) < 1e-12);
    // ball bound
    for (double w : r.w_nodes) {
        CHECK(w >= 0.5 * (1.0 - 1e-12));
        CHECK(w <= 1.5 * (1.0 + 1e-12));
    }
    // Lemma 2.1 endpoint bound (a/2) eps <= v(eps) <= (3a/2) eps
    CHECK(r.v_eps >= 0.5 * r.epsilon);
    CHECK(r.v_eps <= 1.5 * r.epsilon);
    // q(eps) > a^{p-1} for canonical f (f < 0 near 0)
    CHECK(r.q_eps > 1.0);
}

TEST_CASE("leading-order law of q(t) - a^{p-1} on CI-1") {
    const auto prob = ci1();
    const auto r = pick_epsilon(prob, 1.0);
    // q(t) - a^{p-1} = -I(t) ~ 4 a^{-1/2} t^{1/4}
    const double t = 1e-8;
    REQUIRE(r.epsilon > t);
    CHECK(-r.inner_integral(t) == Catch::Approx(4.0 * std::pow(t, 0.25)).epsilon(2e-2));
    // log-log slope equals 1 - alpha_tilde - m = 0.25 within 2%
    const double t1 = r.epsilon * 1e-6, t2 = r.epsilon * 1e-3;
    const double slope = std::log(-r.inner_integral(t2) / -r.inner_integral(t1)) /
                         std::log(t2 / t1);
    CHECK(slope == Catch::Approx(0.25).epsilon(0.02));
}

TEST_CASE("ball invariant and certification across an a grid, both instances") {
    for (const auto& prob : {ci1(), ci2()}) {
        for (double a : {0.5, 1.0, 2.0, 8.0, 32.0}) {
            const auto r = pick_epsilon(prob, a);
            CHECK(r.contraction_estimate <= 0.5);
            for (double w : r.w_nodes) {
                CHECK(w >= 0.5 * a * (1.0 - 1e-12));
                CHECK(w <= 1.5 * a * (1.0 + 1e-12));
            }
            const double slope_target = 1.0 - prob.consts.alpha_tilde - prob.params.m;
            const double t1 = r.epsilon * 1e-6, t2 = r.epsilon * 1e-3;
            const double slope = std::log(r.inner_integral(t2) / r.inner_integral(t1)) /
                                 std::log(t2 / t1);
            CHECK(slope == Catch::Approx(slope_target).epsilon(0.02));
        }
    }
}

TEST_CASE("v(eps)/eps approaches a along eps halvings") {
    const auto prob = ci1();
    const double a = 1.0;
    const auto r0 = pick_epsilon(prob, a);
    double eps = r0.epsilon;
    double dev_prev = 1e300;
    for (int k = 0; k < 6; ++k, eps *= 0.5) {
        const auto r = picard_solve(prob, a, eps);
        const double dev = std::fabs(r.v_eps / r.epsilon - a);
        CHECK(dev <= dev_prev * (1.0 + 1e-9));
        dev_prev = dev;
    }
    // deviation decays like eps^{1-sigma} = eps^{1/4}; hitting 1e-6 needs a
    // directly tiny eps, which the stretched grid supports
    const auto r = picard_solve(prob, a, 1e-27);
    CHECK(std::fabs(r.v_eps / r.epsilon - a) < 1e-6);
}

TEST_CASE("startup stability under a perturbation of a") {
    const auto prob = ci1();
    const double a = 2.0;
    const auto r1 = pick_epsilon(prob, a);
    const auto r2 = picard_solve(prob, a * (1.0 + 1e-8), r1.epsilon);
    CHECK(std::fabs(r2.v_eps - r1.v_eps) <= 1e-6 * std::fabs(r1.v_eps));
    CHECK(std::fabs(r2.q_eps - r1.q_eps) <= 1e-6 * std::fabs(r1.q_eps));
}

TEST_CASE("selected epsilon trend over doublings of a") {
    const auto prob = ci1();
    // Recorded exception below a ~ 2: the empirical contraction constant
    // shrinks like a^{-(p+m-1)}, so a = 1 certifies only at a smaller eps
    // than a = 2 does. From a = 2 upward the beta/(2a) cap governs and the
    // selected eps is non-increasing under doubling.
    double eps_prev = 1e300;
    for (double a : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        const auto r = pick_epsilon(prob, a);
        CHECK(r.epsilon <= eps_prev * (1.0 + 1e-12));
        eps_prev = r.epsilon;
    }
}

TEST_CASE("a <= 0 and a beyond a_max") {
    const auto prob = ci1();
    CHECK_THROWS_AS(pick_epsilon(prob, 0.0), StartupFailure);
    CHECK_THROWS_AS(pick_epsilon(prob, -1.0), StartupFailure);
    StartupOptions opt;
    opt.a_max = 4.0;
    const auto r = pick_epsilon(prob, 8.0, opt);
    CHECK(r.a_saturated);
    CHECK(r.a == 4.0);
}
