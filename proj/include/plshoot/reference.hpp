#pragma once

// Independent cross-check propagator: classical RK4 with step-doubling error
// control, excision radius delta/10, and window increments evaluated by
// brute-force singular quadrature instead of the closed-form moments. Shares
// only the problem definition with the production integrator, so agreement
// between the two certifies both discretizations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "plshoot/model.hpp"
#include "plshoot/quadrature.hpp"
#include "plshoot/startup.hpp"

namespace plshoot {

struct ReferenceOptions {
    double tol = 1e-11;
    double delta_frac = 1e-7;  // one tenth of the production default
    std::size_t max_steps = 20000000;
};

struct ReferenceResult {
    double v_end = 0.0;
    double q_end = 0.0;
    std::vector<double> zero_locations;
    std::vector<double> zero_slopes;
    std::size_t steps = 0;
};

namespace refdetail {

struct RState {
    double v, q;
};

inline RState f(const Problem& prob, double t, const RState& y) {
    return RState{phi_inv(y.q, prob.params.p), -prob.h(t) * prob.f(y.v)};
}

inline RState rk4(const Problem& prob, double t, const RState& y, double h) {
    const RState k1 = f(prob, t, y);
    const RState k2 = f(prob, t + 0.5 * h, RState{y.v + 0.5 * h * k1.v, y.q + 0.5 * h * k1.q});
    const RState k3 = f(prob, t + 0.5 * h, RState{y.v + 0.5 * h * k2.v, y.q + 0.5 * h * k2.q});
    const RState k4 = f(prob, t + h, RState{y.v + h * k3.v, y.q + h * k3.q});
    return RState{y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
                  y.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q)};
}

// Window increment of q over [z + lo, z + hi] under v = s (t - z), with the
// singular factor handled by the power change of variables (no frozen-h or
// moment shortcuts). lo, hi measured relative to z; each side done separately.
inline double window_dq(const Problem& prob, double z, double s, double lo, double hi) {
    const double m = prob.params.m;
    const auto& nl = *prob.nonlinearity;
    auto one_side = [&](double b, double sgn) {
        // integral over |t - z| in (0, b] on the side t = z + sgn * x
        if (b <= 0.0) return 0.0;
        const double vs = s * sgn;  // sign of v on this side times |t-z|
        const double sign_v = vs >= 0.0 ? 1.0 : -1.0;
        const double av = std::fabs(s);
        // q' = -h f(v); f(v) = -sign(v)|v|^{-m} + g2(v)
        const double sing = sign_v * std::pow(av, -m) *
                            integrate_power_singular(
                                [&](double x) { return prob.h(z + sgn * x); }, m, b);
        const double smooth = -integrate_smooth(
            [&](double x) { return prob.h(z + sgn * x) * nl.g2(s * sgn * x); }, 0.0, b,
            1e-14);
        return sing + smooth;
    };
    double total = 0.0;
    if (lo < 0.0) total += one_side(-lo, -1.0);
    if (hi > 0.0) total += one_side(hi, +1.0);
    return total;
}

}  // namespace refdetail

inline ReferenceResult reference_propagate(const Problem& prob, const StartupState& start,
                                           const ReferenceOptions& opt = {}) {
    using refdetail::RState;
    const double T = prob.T_end();
    const double p = prob.params.p;
    const double delta = opt.delta_frac * T;

    ReferenceResult out;
    double t = start.t;
    RState y{start.v, start.q};
    double h = 1e-5 * T;

    while (t < T * (1.0 - 1e-15)) {
        if (++out.steps > opt.max_steps)
            throw std::runtime_error("reference_propagate: step budget exhausted");
        if (t + h > T) h = T - t;

        // excision trigger
        const double s_now = phi_inv(y.q, p);
        if (s_now != 0.0 && y.v * s_now < 0.0 && std::fabs(y.v) <= 8.0 * std::fabs(s_now) * delta &&
            T - (t - y.v / s_now) > 1e4 * std::numeric_limits<double>::epsilon() * T) {
            double z = t - y.v / s_now;
            double d = std::min({delta, 0.2 * (T - z), std::max(z - t, delta * 1e-9)});
            // march to z - d with small fixed steps
            double t_minus = z - d;
            if (t_minus > t) {
                const int n = 64;
                const double hh = (t_minus - t) / n;
                for (int i = 0; i < n; ++i) {
                    y = refdetail::rk4(prob, t, y, hh);
                    t += hh;
                }
            }
            const double s0 = phi_inv(y.q, p);
            double zz = t - y.v / s0;
            double dr = zz - t;
            if (dr <= 0.0) {
                zz = z;
                dr = d;
            }
            if (zz + dr >= T) {
                dr = std::max(0.5 * (T - t), std::numeric_limits<double>::epsilon());
                zz = t + dr;
            }
            const double q_z = y.q + refdetail::window_dq(prob, zz, s0, -dr, 0.0);
            const double slope = phi_inv(q_z, p);
            const double q_plus = y.q + refdetail::window_dq(prob, zz, slope, -dr, dr);
            const double v_plus = y.v + (phi_inv(y.q, p) + 4.0 * phi_inv(q_z, p) +
                                         phi_inv(q_plus, p)) /
                                            6.0 * 2.0 * dr;
            out.zero_locations.push_back(zz);
            out.zero_slopes.push_back(slope);
            t = zz + dr;
            y = RState{v_plus, q_plus};
            h = 1e-5 * T;
            continue;
        }

        // terminal-region crossing: creep toward T with capped steps
        if (s_now != 0.0 && y.v * s_now < 0.0 &&
            std::fabs(y.v) <= 8.0 * std::fabs(s_now) * delta) {
            const double z_pred = t - y.v / s_now;
            if (z_pred - t <= 64.0 * std::numeric_limits<double>::epsilon() * T) break;
            h = std::min(h, std::max(0.25 * (z_pred - t),
                                     32.0 * std::numeric_limits<double>::epsilon() * T));
        }

        // step doubling: one step of h vs two of h/2
        const RState big = refdetail::rk4(prob, t, y, h);
        const RState half = refdetail::rk4(prob, t + 0.5 * h,
                                           refdetail::rk4(prob, t, y, 0.5 * h), 0.5 * h);
        const double sc_v = opt.tol * (1.0 + std::max(std::fabs(y.v), std::fabs(half.v)));
        const double sc_q = opt.tol * (1.0 + std::max(std::fabs(y.q), std::fabs(half.q)));
        const double err =
            std::max(std::fabs(big.v - half.v) / sc_v, std::fabs(big.q - half.q) / sc_q) /
            15.0;
        if (err <= 1.0) {
            // crossing overshoot guard
            if (y.v != 0.0 && half.v * y.v < 0.0) {
                h *= 0.25 * std::fabs(y.v) / (std::fabs(y.v) + std::fabs(half.v));
                continue;
            }
            // local extrapolation with the two half steps
            t += h;
            y = half;
            h *= std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.2), 0.3, 4.0);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.9);
            if (h < 1e-16 * T)
                throw std::runtime_error("reference_propagate: step underflow");
        }
    }
    out.v_end = y.v;
    out.q_end = y.q;
    return out;
}

}  // namespace plshoot
