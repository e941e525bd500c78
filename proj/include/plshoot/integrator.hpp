#pragma once

// Propagation of v' = phi_inv(q), q' = -h(t) f(v) from the certified startup
// state to T_end. Away from zeros of v the field is regular and a standard
// embedded Dormand-Prince 5(4) pair with PI step control does the work; each
// sign change of v is stepped through by the excision protocol: the state is
// advanced across a symmetric window [z-d, z+d] by a local analytic model
// v ~ s (t - z), in which the odd part of the singular forcing cancels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "plshoot/model.hpp"
#include "plshoot/quadrature.hpp"
#include "plshoot/startup.hpp"

namespace plshoot {

struct IntegratorOptions {
    double tol = 1e-10;          // local error tolerance (abs and rel)
    double delta_frac = 1e-6;    // excision radius as a fraction of T_end
    double overflow_guard = 1e12;
    double h_min_frac = 1e-15;   // step underflow threshold
    std::size_t max_steps = 2000000;
};

struct State {
    double v = 0.0;
    double q = 0.0;
};

struct TrajSegment {
    double t0 = 0.0, t1 = 0.0;
    State y0, y1;
    State d0, d1;  // derivatives at the ends
};

struct ZeroEvent {
    double z = 0.0;      // zero location
    double slope = 0.0;  // v'(z) = phi_inv(q(z))
    double delta = 0.0;  // excision radius used
};

struct ExtremumEvent {
    double t = 0.0;
    double v = 0.0;
    bool is_max = false;
};

struct ExcisionWindow {
    double t_minus = 0.0, t_plus = 0.0, z = 0.0;
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

struct Trajectory {
    double a = 0.0;
    double epsilon = 0.0;
    double t_end = 0.0;
    double p = 0.0;
    std::vector<TrajSegment> segments;
    std::vector<ZeroEvent> zeros;
    std::vector<ExtremumEvent> extrema;
    std::vector<ExcisionWindow> windows;
    State terminal;
    StepStats stats;

    bool in_window(double t) const {
        for (const auto& w : windows)
            if (t > w.t_minus && t < w.t_plus) return true;
        return false;
    }

    // Hermite dense output; inside an excision window the local linear model
    // is used for v and linear interpolation for q.
    State eval(double t) const {
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto& w = windows[i];
            if (t >= w.t_minus && t <= w.t_plus) {
                const double s = zeros[i].slope;
                State st;
                st.v = s * (t - w.z);
                const State a0 = eval_segment_end(w.t_minus);
                const State b0 = eval_segment_start(w.t_plus);
                const double th = (t - w.t_minus) / (w.t_plus - w.t_minus);
                st.q = (1.0 - th) * a0.q + th * b0.q;
                return st;
            }
        }
        const TrajSegment& s = find_segment(t);
        return hermite(s, t);
    }

    double eval_v(double t) const { return eval(t).v; }

    const TrajSegment& find_segment(double t) const {
        std::size_t lo = 0, hi = segments.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (segments[mid].t0 <= t)
                lo = mid;
            else
                hi = mid;
        }
        return segments[lo];
    }

    static State hermite(const TrajSegment& s, double t) {
        const double h = s.t1 - s.t0;
        if (h <= 0.0) return s.y1;
        const double th = std::clamp((t - s.t0) / h, 0.0, 1.0);
        auto cubic = [&](double y0, double y1, double d0, double d1) {
            const double t2 = th * th, t3 = t2 * th;
            return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + th) * h * d0 +
                   (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
        };
        return State{cubic(s.y0.v, s.y1.v, s.d0.v, s.d1.v),
                     cubic(s.y0.q, s.y1.q, s.d0.q, s.d1.q)};
    }

private:
    State eval_segment_end(double t) const { return hermite(find_segment(t), t); }
    State eval_segment_start(double t) const {
        for (const auto& s : segments)
            if (s.t0 >= t - 1e-300) return hermite(s, std::max(t, s.t0));
        return terminal;
    }

};

class PropagationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline State rhs(const Problem& prob, double t, const State& y) {
    return State{phi_inv(y.q, prob.params.p), -prob.h(t) * prob.f(y.v)};
}

// Excision updates across [z - d, z + d] for a crossing with slope s at z.
// Frozen-h odd part cancels; the retained h' correction and the smooth g2
// part are returned as a q increment. sign_s = sign of the slope.
inline double excision_dq_full(const Problem& prob, double z, double s, double d) {
    const double m = prob.params.m;
    const double sign_s = s >= 0.0 ? 1.0 : -1.0;
    const double dq_sing = sign_s * std::pow(std::fabs(s), -m) * prob.hprime(z) * 2.0 *
                           std::pow(d, 2.0 - m) / (2.0 - m);
    const auto& nl = *prob.nonlinearity;
    const double dq_g2 = -integrate_smooth(
        [&](double t) { return prob.h(t) * nl.g2(s * (t - z)); }, z - d, z + d, 1e-13);
    return dq_sing + dq_g2;
}

// One-sided increment q(z) - q(z - d) under the local model (needed for the
// slope at z itself; here the singular part does not cancel).
inline double excision_dq_left(const Problem& prob, double z, double s, double d) {
    const double m = prob.params.m;
    const double sign_s = s >= 0.0 ? 1.0 : -1.0;
    // int_{z-d}^{z} h(t) sign(t-z) |t-z|^{-m} dt with h ~ h(z) + h'(z)(t-z)
    const double A0 = -std::pow(d, 1.0 - m) / (1.0 - m);           // sign(t-z) = -1
    const double A1 = std::pow(d, 2.0 - m) / (2.0 - m);            // (t-z) sign(t-z)
    const double dq_sing =
        sign_s * std::pow(std::fabs(s), -m) * (prob.h(z) * A0 + prob.hprime(z) * A1);
    const auto& nl = *prob.nonlinearity;
    const double dq_g2 = -integrate_smooth(
        [&](double t) { return prob.h(t) * nl.g2(s * (t - z)); }, z - d, z, 1e-13);
    return dq_sing + dq_g2;
}

struct Dopri5Step {
    State y_new;
    State err;
    State k_end;  // FSAL derivative at t + h
};

inline Dopri5Step dopri5(const Problem& prob, double t, const State& y, const State& k1,
                         double h) {
    auto axpy = [](const State& y, double c, const State& k) {
        return State{y.v + c * k.v, y.q + c * k.q};
    };
    const State k2 = rhs(prob, t + h / 5.0, axpy(y, h / 5.0, k1));
    State tmp{y.v + h * (3.0 / 40.0 * k1.v + 9.0 / 40.0 * k2.v),
              y.q + h * (3.0 / 40.0 * k1.q + 9.0 / 40.0 * k2.q)};
    const State k3 = rhs(prob, t + 3.0 / 10.0 * h, tmp);
    tmp = State{y.v + h * (44.0 / 45.0 * k1.v - 56.0 / 15.0 * k2.v + 32.0 / 9.0 * k3.v),
                y.q + h * (44.0 / 45.0 * k1.q - 56.0 / 15.0 * k2.q + 32.0 / 9.0 * k3.q)};
    const State k4 = rhs(prob, t + 4.0 / 5.0 * h, tmp);
    tmp = State{y.v + h * (19372.0 / 6561.0 * k1.v - 25360.0 / 2187.0 * k2.v +
                           64448.0 / 6561.0 * k3.v - 212.0 / 729.0 * k4.v),
                y.q + h * (19372.0 / 6561.0 * k1.q - 25360.0 / 2187.0 * k2.q +
                           64448.0 / 6561.0 * k3.q - 212.0 / 729.0 * k4.q)};
    const State k5 = rhs(prob, t + 8.0 / 9.0 * h, tmp);
    tmp = State{y.v + h * (9017.0 / 3168.0 * k1.v - 355.0 / 33.0 * k2.v +
                           46732.0 / 5247.0 * k3.v + 49.0 / 176.0 * k4.v -
                           5103.0 / 18656.0 * k5.v),
                y.q + h * (9017.0 / 3168.0 * k1.q - 355.0 / 33.0 * k2.q +
                           46732.0 / 5247.0 * k3.q + 49.0 / 176.0 * k4.q -
                           5103.0 / 18656.0 * k5.q)};
    const State k6 = rhs(prob, t + h, tmp);
    const State y5{y.v + h * (35.0 / 384.0 * k1.v + 500.0 / 1113.0 * k3.v +
                              125.0 / 192.0 * k4.v - 2187.0 / 6784.0 * k5.v +
                              11.0 / 84.0 * k6.v),
                   y.q + h * (35.0 / 384.0 * k1.q + 500.0 / 1113.0 * k3.q +
                              125.0 / 192.0 * k4.q - 2187.0 / 6784.0 * k5.q +
                              11.0 / 84.0 * k6.q)};
    const State k7 = rhs(prob, t + h, y5);
    const State y4{y.v + h * (5179.0 / 57600.0 * k1.v + 7571.0 / 16695.0 * k3.v +
                              393.0 / 640.0 * k4.v - 92097.0 / 339200.0 * k5.v +
                              187.0 / 2100.0 * k6.v + 1.0 / 40.0 * k7.v),
                   y.q + h * (5179.0 / 57600.0 * k1.q + 7571.0 / 16695.0 * k3.q +
                              393.0 / 640.0 * k4.q - 92097.0 / 339200.0 * k5.q +
                              187.0 / 2100.0 * k6.q + 1.0 / 40.0 * k7.q)};
    return Dopri5Step{y5, State{y5.v - y4.v, y5.q - y4.q}, k7};
}

// Root of a scalar observable along the flow, refined by re-integration with
// fixed RK4 substeps from an anchor state; bisection on a sign bracket.
template <typename Obs>
inline std::pair<double, State> refine_event(const Problem& prob, double t0, const State& y0,
                                             double lo, double hi, Obs obs) {
    auto advance = [&](double target) {
        State y = y0;
        double t = t0;
        const int n = 16;
        const double h = (target - t0) / n;
        for (int i = 0; i < n; ++i) {
            const State k1 = rhs(prob, t, y);
            const State k2 = rhs(prob, t + 0.5 * h,
                                 State{y.v + 0.5 * h * k1.v, y.q + 0.5 * h * k1.q});
            const State k3 = rhs(prob, t + 0.5 * h,
                                 State{y.v + 0.5 * h * k2.v, y.q + 0.5 * h * k2.q});
            const State k4 = rhs(prob, t + h, State{y.v + h * k3.v, y.q + h * k3.q});
            y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
            y.q += h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
            t += h;
        }
        return y;
    };
    double flo = obs(advance(lo)), fhi = obs(advance(hi));
    if (flo == 0.0) return {lo, advance(lo)};
    if (flo * fhi > 0.0) {
        // no strict bracket after refinement; fall back to the nearer endpoint
        return std::fabs(flo) < std::fabs(fhi) ? std::make_pair(lo, advance(lo))
                                               : std::make_pair(hi, advance(hi));
    }
    for (int it = 0; it < 90 && hi - lo > 1e-16 * (std::fabs(hi) + 1.0); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = obs(advance(mid));
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if (flo * fm <= 0.0)
            hi = mid;
        else
            lo = mid;
        if (flo * fm > 0.0) flo = fm;
    }
    const double zt = 0.5 * (lo + hi);
    return {zt, advance(zt)};
}

}  // namespace detail

// Root of the dense interpolant of v on a bracketing segment; bisection to
// absolute accuracy 1e-13 * T_end.
inline double locate_zero(const Trajectory& traj, double lo, double hi) {
    double flo = traj.eval_v(lo), fhi = traj.eval_v(hi);
    if (flo * fhi > 0.0) throw std::invalid_argument("locate_zero: endpoints do not bracket");
    const double tol = 1e-13 * traj.t_end;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = traj.eval_v(mid);
        if (fm == 0.0) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

inline Trajectory propagate(const Problem& prob, const StartupState& start,
                            const IntegratorOptions& opt = {}) {
    const double T = prob.T_end();
    const double p = prob.params.p;
    Trajectory traj;
    traj.epsilon = start.t;
    traj.t_end = T;
    traj.p = p;

    double t = start.t;
    State y{start.v, start.q};
    State k1 = detail::rhs(prob, t, y);
    // internal safety factor: the controller aims well below the requested
    // tolerance so that accumulated error and the cubic dense output stay
    // within tol at the trajectory level
    const double wtol = 0.02 * opt.tol;
    double h = std::min(1e-4 * T, 0.5 * (T - t));
    double err_prev = 1.0;
    const double delta_default = opt.delta_frac * T;

    auto guard = [&](const State& s) {
        if (!std::isfinite(s.v) || !std::isfinite(s.q) ||
            std::fabs(s.v) > opt.overflow_guard || std::fabs(s.q) > opt.overflow_guard)
            throw PropagationError("propagate: state overflow at t = " + std::to_string(t));
    };

    // Advance across a zero crossing: integrates up to z - d, applies the
    // analytic window update, records events, resumes at z + d.
    auto excise = [&](double t_in, State y_in) {
        double s_est = phi_inv(y_in.q, p);
        if (s_est == 0.0) throw PropagationError("excise: vanishing slope estimate");
        double z_pred = t_in - y_in.v / s_est;
        const double room = T - z_pred;
        if (!(room > 1e3 * std::numeric_limits<double>::epsilon() * T))
            throw PropagationError("excise: crossing at the very endpoint");
        // radius: default, but fitting between the crossing and T_end
        double d = std::min(delta_default, 0.2 * room);
        // An accepted endpoint can land arbitrarily close to the crossing.
        // If it sits inside the would-be window, rewind the anchor into the
        // previous dense-output segment so the walk to z - d stays forward.
        if (z_pred - t_in < d && !traj.segments.empty()) {
            TrajSegment& seg = traj.segments.back();
            if (z_pred - seg.t0 > 0.0) d = std::min(d, 0.45 * (z_pred - seg.t0));
            const double t_a = z_pred - 2.0 * d;
            if (t_a > seg.t0 && t_a < t_in) {
                y_in = Trajectory::hermite(seg, t_a);
                seg.t1 = t_a;
                seg.y1 = y_in;
                seg.d1 = detail::rhs(prob, t_a, y_in);
                t_in = t_a;
                s_est = phi_inv(y_in.q, p);
                if (s_est == 0.0) throw PropagationError("excise: vanishing slope estimate");
                z_pred = t_in - y_in.v / s_est;
            }
        }
        d = std::min(d, std::max(z_pred - t_in, 0.0));
        // curvature guard: shrink d until the predicted slope change across
        // the window is a small fraction of the slope itself
        for (int k = 0; k < 40; ++k) {
            const double dq = detail::excision_dq_full(prob, z_pred, s_est, d);
            if (std::fabs(phi_inv(y_in.q + dq, p) - s_est) <= 0.05 * std::fabs(s_est)) break;
            d *= 0.5;
        }
        if (d < 1e3 * std::numeric_limits<double>::epsilon() * std::max(z_pred, 1.0))
            throw PropagationError("excise: excision radius below machine resolution");

        // walk to z - d with capped fixed substeps (field regular: |v| >= |s| d)
        double t_minus = z_pred - d;
        State ym = y_in;
        if (t_minus > t_in) {
            const int n = 32;
            const double hh = (t_minus - t_in) / n;
            double tc = t_in;
            for (int i = 0; i < n; ++i) {
                const State a1 = detail::rhs(prob, tc, ym);
                const State a2 = detail::rhs(
                    prob, tc + 0.5 * hh, State{ym.v + 0.5 * hh * a1.v, ym.q + 0.5 * hh * a1.q});
                const State a3 = detail::rhs(
                    prob, tc + 0.5 * hh, State{ym.v + 0.5 * hh * a2.v, ym.q + 0.5 * hh * a2.q});
                const State a4 =
                    detail::rhs(prob, tc + hh, State{ym.v + hh * a3.v, ym.q + hh * a3.q});
                ym.v += hh / 6.0 * (a1.v + 2.0 * a2.v + 2.0 * a3.v + a4.v);
                ym.q += hh / 6.0 * (a1.q + 2.0 * a2.q + 2.0 * a3.q + a4.q);
                tc += hh;
            }
        }
        // re-aim z from the state at t_minus and use the realized radius
        const double s0 = phi_inv(ym.q, p);
        double z = t_minus - ym.v / s0;
        double dr = z - t_minus;
        if (dr <= 0.0) {  // already past the predicted zero; fall back
            z = z_pred;
            dr = d;
        }
        if (z + dr >= T) {
            // crossing butts against the endpoint; shrink to fit
            dr = std::max(0.5 * (T - t_minus), 1e3 * std::numeric_limits<double>::epsilon());
            z = t_minus + dr;
        }
        const double q_z = ym.q + detail::excision_dq_left(prob, z, s0, dr);
        const double slope = phi_inv(q_z, p);
        const double dq_full = detail::excision_dq_full(prob, z, slope, dr);
        const double q_plus = ym.q + dq_full;
        // Simpson in time with q(z) as the midpoint value
        const double v_plus =
            ym.v + (phi_inv(ym.q, p) + 4.0 * phi_inv(q_z, p) + phi_inv(q_plus, p)) / 6.0 * 2.0 * dr;

        traj.zeros.push_back(ZeroEvent{z, slope, dr});
        traj.windows.push_back(ExcisionWindow{z - dr, z + dr, z});
        t = z + dr;
        y = State{v_plus, q_plus};
        k1 = detail::rhs(prob, t, y);
    };

    std::size_t steps = 0;
    while (t < T * (1.0 - 1e-15)) {
        if (++steps > opt.max_steps)
            throw PropagationError("propagate: step budget exhausted");
        bool last = false;
        if (t + h >= T) {
            h = T - t;
            last = true;
        }
        const auto st = detail::dopri5(prob, t, y, k1, h);
        guard(st.y_new);
        const double sc_v = wtol + wtol * std::max(std::fabs(y.v), std::fabs(st.y_new.v));
        const double sc_q = wtol + wtol * std::max(std::fabs(y.q), std::fabs(st.y_new.q));
        const double err = std::sqrt(0.5 * ((st.err.v / sc_v) * (st.err.v / sc_v) +
                                            (st.err.q / sc_q) * (st.err.q / sc_q)));
        if (err <= 1.0) {
            // crossing overshoot: the step may not change the sign of v
            if (y.v != 0.0 && st.y_new.v * y.v < 0.0) {
                const double frac = std::fabs(y.v) / (std::fabs(y.v) + std::fabs(st.y_new.v));
                h = std::max(0.25 * frac * h, 1e4 * std::numeric_limits<double>::epsilon() * T);
                traj.stats.rejected++;
                continue;
            }
            // extremum inside the step: q changed sign
            if (y.q != 0.0 && st.y_new.q * y.q < 0.0) {
                auto [te, ye] = detail::refine_event(prob, t, y, t, t + h,
                                                     [](const State& s) { return s.q; });
                const bool is_max = ye.v > 0.0;
                traj.extrema.push_back(ExtremumEvent{te, ye.v, is_max});
            }
            traj.segments.push_back(TrajSegment{t, t + h, y, st.y_new, k1, st.k_end});
            traj.stats.accepted++;
            t += h;
            y = st.y_new;
            k1 = st.k_end;
            // excision trigger: close to a crossing and moving toward it
            const double s_now = phi_inv(y.q, p);
            if (!last && s_now != 0.0 && y.v * s_now < 0.0 &&
                std::fabs(y.v) <= 8.0 * std::fabs(s_now) * delta_default) {
                const double z_pred = t - y.v / s_now;
                if (T - z_pred > 1e4 * std::numeric_limits<double>::epsilon() * T) {
                    excise(t, y);
                    err_prev = 1.0;
                    h = std::min(1e-3 * T, 0.5 * (T - t));
                    continue;
                }
                // terminal-region crossing (the boundary-solution regime):
                // no window fits before T_end; creep toward the crossing
                // with capped steps — the field stays integrable since
                // v ~ s (t - z) — and freeze once it is resolved to ulps
                if (z_pred - t <= 64.0 * std::numeric_limits<double>::epsilon() * T) {
                    const State kf = detail::rhs(prob, T, y);
                    traj.segments.push_back(TrajSegment{t, T, y, y, k1, kf});
                    t = T;
                    break;
                }
                err_prev = std::max(err, 1e-10);
                h = std::min(h, std::max(0.25 * (z_pred - t),
                                         32.0 * std::numeric_limits<double>::epsilon() * T));
                continue;
            }
            const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                               std::pow(std::max(err_prev, 1e-10), 0.4 / 5.0);
            err_prev = std::max(err, 1e-10);
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            traj.stats.rejected++;
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            if (h < opt.h_min_frac * T) {
                // near-crossing stiffness: force the excision path if the
                // state is headed toward a zero, otherwise give up
                const double s_now = phi_inv(y.q, p);
                if (s_now != 0.0 && y.v * s_now < 0.0 &&
                    T - (t - y.v / s_now) > 1e4 * std::numeric_limits<double>::epsilon() * T) {
                    excise(t, y);
                    err_prev = 1.0;
                    h = std::min(1e-3 * T, 0.5 * (T - t));
                    continue;
                }
                if (s_now != 0.0 && y.v * s_now < 0.0 &&
                    (t - y.v / s_now) - t <= 64.0 * std::numeric_limits<double>::epsilon() * T) {
                    const State kf = detail::rhs(prob, T, y);
                    traj.segments.push_back(TrajSegment{t, T, y, y, k1, kf});
                    t = T;
                    break;
                }
                throw PropagationError("propagate: step size underflow at t = " +
                                       std::to_string(t));
            }
        }
    }
    traj.terminal = y;
    traj.a = 0.0;  // filled by callers that know the slope
    return traj;
}

// Convenience: startup + propagation in one call.
inline Trajectory shoot(const Problem& prob, double a, const StartupOptions& sopt = {},
                        const IntegratorOptions& iopt = {}) {
    const auto su = pick_epsilon(prob, a, sopt);
    Trajectory traj = propagate(prob, startup_state(su), iopt);
    traj.a = su.a;
    return traj;
}

}  // namespace plshoot
