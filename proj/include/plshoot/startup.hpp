#pragma once

// Certified local solution on [0, eps] from v(0) = 0, v'(0) = a, via Picard
// iteration of the contraction map on w(t) = v(t)/t.
//
// All quadrature runs in the stretched variable y = t^{1-sigma} with
// sigma = alpha_tilde1 + m: the substitution removes the x^{-sigma} weight
// of the singular part of h(x) f(x w(x)) exactly, and w itself is smooth
// in y rather than in t.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "plshoot/chebyshev.hpp"
#include "plshoot/model.hpp"
#include "plshoot/quadrature.hpp"

namespace plshoot {

struct StartupOptions {
    double tol = 1e-10;            // sup-norm stopping rule for Tw - w
    int max_iter = 200;
    int grid_n = 48;               // Chebyshev grid size in y
    double ratio_threshold = 0.5;  // accepted empirical contraction ratio
    int max_halvings = 48;
    double a_max = 1e6;
    double consistency_tol = 1e-7; // |phi_inv(q) - v'(eps)| relative guard
};

struct StartupResult {
    double a = 0.0;
    double epsilon = 0.0;
    double sigma = 0.0;               // alpha_tilde1 + m
    double y_len = 0.0;               // epsilon^{1-sigma}
    ChebSeries w;                     // w as a function of y on [0, y_len]
    ChebSeries inner;                 // I(y) = int_0^t h f(v) dx at the fixed point
    std::vector<double> t_nodes;
    std::vector<double> w_nodes;
    double v_eps = 0.0;
    double q_eps = 0.0;
    double picard_residual = 0.0;
    double contraction_estimate = 0.0;
    int iterations = 0;
    bool a_saturated = false;

    // q(t) - a^{p-1} = -I(t) on [0, eps]
    double inner_integral(double t) const {
        const double y = std::pow(t, 1.0 - sigma);
        return inner(std::min(y, y_len));
    }
};

struct StartupState {
    double t = 0.0;
    double v = 0.0;
    double q = 0.0;
};

inline StartupState startup_state(const StartupResult& r) {
    return StartupState{r.epsilon, r.v_eps, r.q_eps};
}

class StartupFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Regularized weight eta(x) = h(x) x^{alpha_tilde1}, bounded by (2.6)-type
// envelopes; evaluated at a tiny positive x for the y = 0 node.
inline double h_reg(const Problem& prob, double x, double at1) {
    if (x <= 0.0) x = 1e-120;
    return prob.weight->h(x) * std::pow(x, at1);
}

struct PicardWorkspace {
    double a, eps, sigma, q_exp, Y;
    int n;
    std::vector<double> y_nodes, t_nodes, eta_nodes;
};

// One application of the map T: from w values at nodes to Tw values,
// also returning the inner-integral series I(y).
inline std::vector<double> apply_T(const Problem& prob, const PicardWorkspace& ws,
                                   const std::vector<double>& w_vals, ChebSeries* inner_out) {
    const double p = prob.params.p;
    const double m = prob.params.m;
    const double oq = 1.0 / (1.0 - ws.sigma);
    const auto& nl = *prob.nonlinearity;

    // integrand of I in y (singular part + smooth g2 part)
    std::vector<double> g(ws.n + 1);
    for (int j = 0; j <= ws.n; ++j) {
        const double wj = w_vals[j];
        const double x = ws.t_nodes[j];
        const double sgn = wj >= 0.0 ? 1.0 : -1.0;
        const double sing = -ws.eta_nodes[j] * sgn * std::pow(std::fabs(wj), -m) * oq;
        double smooth = 0.0;
        if (x > 0.0)
            smooth = ws.eta_nodes[j] * nl.g2(x * wj) * std::pow(x, m) * oq;
        g[j] = sing + smooth;
    }
    const ChebSeries I = ChebSeries::from_values(g, ws.Y).antiderivative();
    if (inner_out) *inner_out = I;

    // Outer integral int_0^t phi_inv(1 - I(s)/a^{p-1}) ds, also pushed to the
    // y variable where the integrand is smooth: ds = q_exp y^{q_exp-1} dy.
    const double ap = std::pow(ws.a, p - 1.0);
    auto integrand_y = [&](double y) {
        const double g = phi_inv(1.0 - I(std::min(y, ws.Y)) / ap, p);
        return g * ws.q_exp * std::pow(y, ws.q_exp - 1.0);
    };
    std::vector<double> out(ws.n + 1);
    out[0] = ws.a;
    double acc = 0.0;
    for (int j = 1; j <= ws.n; ++j) {
        acc += boost::math::quadrature::gauss<double, 15>::integrate(
            integrand_y, ws.y_nodes[j - 1], ws.y_nodes[j]);
        out[j] = ws.a / ws.t_nodes[j] * acc;
    }
    return out;
}

inline StartupResult picard_attempt(const Problem& prob, double a, double eps,
                                    const StartupOptions& opt, int n, bool& diverged) {
    PicardWorkspace ws;
    ws.a = a;
    ws.eps = eps;
    ws.sigma = prob.consts.alpha_tilde1 + prob.params.m;
    ws.q_exp = 1.0 / (1.0 - ws.sigma);
    ws.Y = std::pow(eps, 1.0 - ws.sigma);
    ws.n = n;
    ws.y_nodes = ChebSeries::nodes(n, ws.Y);
    ws.t_nodes.resize(n + 1);
    ws.eta_nodes.resize(n + 1);
    const double at1 = prob.consts.alpha_tilde1;
    for (int j = 0; j <= n; ++j) {
        ws.t_nodes[j] = std::pow(ws.y_nodes[j], ws.q_exp);
        ws.eta_nodes[j] = h_reg(prob, ws.t_nodes[j], at1);
    }

    std::vector<double> w(n + 1, a);
    double res_prev = -1.0;
    double worst_ratio = 0.0;
    diverged = false;

    StartupResult out;
    for (int it = 1; it <= opt.max_iter; ++it) {
        ChebSeries inner;
        auto w_new = apply_T(prob, ws, w, &inner);
        double res = 0.0;
        for (int j = 0; j <= n; ++j) res = std::max(res, std::fabs(w_new[j] - w[j]));
        // ball membership |w - a| <= a/2
        for (int j = 0; j <= n; ++j) {
            if (std::fabs(w_new[j] - a) > 0.5 * a * (1.0 + 1e-12)) {
                diverged = true;
                return out;
            }
        }
        if (res_prev > 1e-13 * a) {
            const double ratio = res / res_prev;
            worst_ratio = std::max(worst_ratio, ratio);
            if (ratio >= 1.0 && res > opt.tol) {
                diverged = true;
                return out;
            }
            if (it >= 8 && worst_ratio > opt.ratio_threshold && res > opt.tol) {
                diverged = true;  // contracting too slowly for certification
                return out;
            }
        }
        res_prev = res;
        w = std::move(w_new);
        if (res <= opt.tol) {
            // v must still be rising at eps: no extremum may hide inside the
            // startup interval (q = a^{p-1} - I > 0 at every node).
            const double ap1 = std::pow(a, prob.params.p - 1.0);
            for (int j = 0; j <= n; ++j) {
                if (ap1 - inner(ws.y_nodes[j]) <= 0.0) {
                    diverged = true;
                    return out;
                }
            }
            out.a = a;
            out.epsilon = eps;
            out.sigma = ws.sigma;
            out.y_len = ws.Y;
            out.w = ChebSeries::from_values(w, ws.Y);
            out.inner = inner;
            out.t_nodes = ws.t_nodes;
            out.w_nodes = w;
            out.picard_residual = res;
            out.contraction_estimate = worst_ratio;
            out.iterations = it;
            out.v_eps = eps * w[n];
            out.q_eps = std::pow(a, prob.params.p - 1.0) - inner(ws.Y);
            return out;
        }
    }
    diverged = true;
    return out;
}

}  // namespace detail

// Fixed-point solve at a given eps. Retries with halved eps on divergence,
// and doubles the grid until two sizes agree.
inline StartupResult picard_solve(const Problem& prob, double a, double eps,
                                  const StartupOptions& opt = {}) {
    if (a <= 0.0) throw StartupFailure("picard_solve: requires a > 0");
    for (int halve = 0; halve <= opt.max_halvings; ++halve, eps *= 0.5) {
        bool div = false;
        StartupResult r = detail::picard_attempt(prob, a, eps, opt, opt.grid_n, div);
        if (div) continue;
        // grid refinement check
        int n = opt.grid_n;
        while (n < 512) {
            bool div2 = false;
            StartupResult r2 = detail::picard_attempt(prob, a, eps, opt, 2 * n, div2);
            if (div2) break;
            double diff = 0.0;
            for (int j = 0; j <= 32; ++j) {
                const double t = eps * j / 32.0;
                const double y = std::pow(t, 1.0 - r.sigma);
                diff = std::max(diff, std::fabs(r.w(std::min(y, r.y_len)) -
                                                r2.w(std::min(y, r2.y_len))));
            }
            if (diff <= 10.0 * opt.tol) {
                r = std::move(r2);
                break;
            }
            r = std::move(r2);
            n *= 2;
        }
        // consistency of q with the dense-output derivative of t*w(t):
        // v'(eps) = w + (1-sigma) y w'(y) at y = Y.
        const double wY = r.w(r.y_len);
        const double dw = r.w.derivative()(r.y_len);
        const double vprime = wY + (1.0 - r.sigma) * r.y_len * dw;
        const double vp_q = phi_inv(r.q_eps, prob.params.p);
        if (std::fabs(vp_q - vprime) > 10.0 * opt.consistency_tol * (1.0 + std::fabs(vp_q)))
            throw StartupFailure("startup_state: q / dense-derivative consistency failure");
        return r;
    }
    throw StartupFailure("picard_solve: no contracting epsilon found for a = " +
                         std::to_string(a));
}

// Largest eps in the geometric candidate set {T_end/4 * 2^-k} whose Picard
// iteration contracts at ratio <= 1/2 with the ball bound intact.
inline StartupResult pick_epsilon(const Problem& prob, double a, const StartupOptions& opt = {}) {
    if (a <= 0.0) throw StartupFailure("pick_epsilon: requires a > 0");
    bool saturated = false;
    if (a > opt.a_max) {
        a = opt.a_max;
        saturated = true;
    }
    // Cap so that v <= (3a/2) eps stays below beta: the whole startup interval
    // then precedes t_{a,beta} and every extremum and zero is propagated.
    const double eps0 = std::min(prob.T_end() / 4.0, 0.5 * prob.consts.beta / a);
    StartupResult r = picard_solve(prob, a, eps0, opt);
    r.a_saturated = saturated;
    return r;
}

}  // namespace plshoot
