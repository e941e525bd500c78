#pragma once

// Certified observables of a completed trajectory: interior zero count with
// the terminal window excluded, zero/extremum interleaving, energy
// monotonicity, integral-identity residuals, and the energy slope floor at
// counted zeros.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "plshoot/integrator.hpp"
#include "plshoot/model.hpp"
#include "plshoot/quadrature.hpp"

namespace plshoot {

struct CensusOptions {
    double terminal_window_frac = 1e-6;  // fraction of T_end
    double tol_E = 1e-7;
    std::size_t energy_samples = 2000;
    std::size_t residual_pairs = 20;
    std::uint32_t residual_seed = 0x5eed0001;  // fixed: census is deterministic
};

struct ZeroRecord {
    double z = 0.0;
    double slope = 0.0;
};

struct ExtremumRecord {
    double t = 0.0;
    double v = 0.0;
    bool is_max = false;
};

struct SlopeFloorCert {
    bool applicable = false;
    double bound = 0.0;
    double measured = 0.0;
    bool pass = true;  // trivially true when not applicable
};

struct CensusReport {
    std::size_t n_zeros = 0;            // interior count, terminal window excluded
    std::vector<ZeroRecord> zeros;      // the counted zeros
    std::optional<ZeroRecord> terminal_zero;  // root inside the terminal window
    std::vector<ExtremumRecord> extrema;
    std::optional<double> M_first;  // first local maximum location
    std::optional<double> v_at_M;
    double terminal_v = 0.0;
    double terminal_q = 0.0;
    double E_min_increment = 0.0;
    double E_max = 0.0;
    bool energy_ok = true;
    double residual_max = 0.0;
    bool residual_ok = true;
    bool interleaving_ok = true;
    bool slope_alternation_ok = true;
    std::vector<SlopeFloorCert> slope_floors;  // one per counted zero
    bool slope_floor_ok = true;

    bool certified() const {
        return energy_ok && residual_ok && interleaving_ok && slope_alternation_ok &&
               slope_floor_ok;
    }
};

inline double trajectory_energy(const Problem& prob, const Trajectory& traj, double t) {
    const double p = prob.params.p;
    const State y = traj.eval(t);
    const double vp = phi_inv(y.q, p);
    return (p - 1.0) / p * std::pow(std::fabs(vp), p) / prob.h(t) + prob.F(y.v);
}

struct EnergyCheck {
    double min_increment = 0.0;
    double max_E = 0.0;
    bool pass = true;
};

inline EnergyCheck energy_check(const Problem& prob, const Trajectory& traj,
                                const CensusOptions& opt = {}) {
    EnergyCheck ec;
    const double lo = traj.epsilon, hi = traj.t_end;
    double prev = 0.0;
    bool have_prev = false;
    ec.max_E = -1e300;
    ec.min_increment = 0.0;
    std::vector<double> es;
    for (std::size_t i = 0; i <= opt.energy_samples; ++i) {
        const double t = lo + (hi - lo) * double(i) / double(opt.energy_samples);
        if (traj.in_window(t)) continue;
        const double e = trajectory_energy(prob, traj, t);
        ec.max_E = std::max(ec.max_E, e);
        if (have_prev) ec.min_increment = std::min(ec.min_increment, e - prev);
        prev = e;
        have_prev = true;
    }
    ec.pass = ec.min_increment >= -opt.tol_E * (1.0 + std::fabs(ec.max_E));
    return ec;
}

struct ResidualCheck {
    double max_residual = 0.0;  // normalized by 1 + |q(t)|
    bool pass = true;
};

// int_s^t h f(v) over dense output, split at segment boundaries so each
// quadrature panel sees a smooth (single-polynomial) interpolant. Fixed
// Gauss panels: adaptive error estimation misbehaves on the tiny startup
// segments, and fixed order 31 is far below truncation error on smooth
// per-segment integrands.
inline double integrate_hf_dense(const Problem& prob, const Trajectory& traj, double s,
                                 double t) {
    using G31 = boost::math::quadrature::gauss<double, 31>;
    double total = 0.0;
    for (const auto& seg : traj.segments) {
        if (seg.t1 <= s || seg.t0 >= t) continue;
        const double a = std::max(s, seg.t0), b = std::min(t, seg.t1);
        total += G31::integrate(
            [&](double x) { return prob.h(x) * prob.f(traj.eval_v(x)); }, a, b);
    }
    return total;
}

// Integral identity q(t) - q(s) = -int_s^t h f(v) on sample spans avoiding
// excision windows; deterministic pseudo-random pairs.
inline ResidualCheck residual_check(const Problem& prob, const Trajectory& traj,
                                    const CensusOptions& opt = {}) {
    ResidualCheck rc;
    std::mt19937 rng(opt.residual_seed);
    // span marks: [eps, w1-), (w1+, w2-), ..., T_end
    std::vector<double> marks{traj.epsilon};
    for (const auto& w : traj.windows) {
        marks.push_back(w.t_minus);
        marks.push_back(w.t_plus);
    }
    marks.push_back(traj.t_end);
    const std::size_t n_spans = marks.size() / 2;
    std::size_t drawn = 0;
    for (std::size_t k = 0; drawn < opt.residual_pairs; k = (k + 1) % n_spans) {
        const double lo = marks[2 * k], hi = marks[2 * k + 1];
        std::uniform_real_distribution<double> d(lo, hi);
        double s = d(rng), t = d(rng);
        if (s > t) std::swap(s, t);
        if (t - s < 1e-6 * (hi - lo)) continue;
        const double qs = traj.eval(s).q;
        const double qt = traj.eval(t).q;
        const double integral = integrate_hf_dense(prob, traj, s, t);
        // q' = -h f(v) keeps a fixed sign between zeros of v, so q is
        // monotone on the span and the endpoint magnitudes bound |q| on it.
        const double scale = 1.0 + std::max(std::fabs(qs), std::fabs(qt));
        const double res = std::fabs(qt - qs + integral) / scale;
        rc.max_residual = std::max(rc.max_residual, res);
        ++drawn;
    }
    rc.pass = rc.max_residual <= 1e-8;
    return rc;
}

// Energy lower bound for the slope at counted zero z_index, from the nearest
// preceding local extremum with |v(M)| > gamma:
// |v'(z)|^p >= (p/(p-1)) h(z) F(|v(M)|).
inline SlopeFloorCert slope_floor(const Problem& prob, const Trajectory& traj,
                                  std::size_t z_index) {
    SlopeFloorCert cert;
    if (z_index >= traj.zeros.size()) return cert;
    const auto& z = traj.zeros[z_index];
    cert.measured = std::fabs(z.slope);
    const double gamma = prob.nonlinearity->gamma();
    const ExtremumEvent* best = nullptr;
    for (const auto& e : traj.extrema)
        if (e.t < z.z && std::fabs(e.v) > gamma) best = &e;
    if (!best) return cert;  // not applicable
    cert.applicable = true;
    const double p = prob.params.p;
    cert.bound =
        std::pow(p / (p - 1.0) * prob.h(z.z) * prob.F(std::fabs(best->v)), 1.0 / p);
    cert.pass = cert.measured >= cert.bound * (1.0 - 1e-6);
    return cert;
}

inline CensusReport census(const Problem& prob, const Trajectory& traj,
                           const CensusOptions& opt = {}) {
    CensusReport rep;
    const double window = opt.terminal_window_frac * traj.t_end;
    const double cutoff = traj.t_end - window;

    for (std::size_t i = 0; i < traj.zeros.size(); ++i) {
        const auto& z = traj.zeros[i];
        if (z.z >= cutoff)
            rep.terminal_zero = ZeroRecord{z.z, z.slope};
        else {
            rep.zeros.push_back(ZeroRecord{z.z, z.slope});
            rep.slope_floors.push_back(slope_floor(prob, traj, i));
        }
    }
    rep.n_zeros = rep.zeros.size();
    for (const auto& e : traj.extrema)
        rep.extrema.push_back(ExtremumRecord{e.t, e.v, e.is_max});
    for (const auto& e : rep.extrema)
        if (e.is_max) {
            rep.M_first = e.t;
            rep.v_at_M = e.v;
            break;
        }
    rep.terminal_v = traj.terminal.v;
    rep.terminal_q = traj.terminal.q;

    // zeros strictly increasing with alternating slope signs
    for (std::size_t i = 0; i + 1 < rep.zeros.size(); ++i) {
        if (!(rep.zeros[i + 1].z > rep.zeros[i].z)) rep.interleaving_ok = false;
        if (rep.zeros[i].slope * rep.zeros[i + 1].slope >= 0.0)
            rep.slope_alternation_ok = false;
    }
    // an extremum strictly between every pair of consecutive zeros
    for (std::size_t i = 0; i + 1 < rep.zeros.size(); ++i) {
        bool found = false;
        for (const auto& e : rep.extrema)
            if (e.t > rep.zeros[i].z && e.t < rep.zeros[i + 1].z) found = true;
        if (!found) rep.interleaving_ok = false;
    }
    for (const auto& c : rep.slope_floors)
        if (!c.pass) rep.slope_floor_ok = false;

    const auto ec = energy_check(prob, traj, opt);
    rep.E_min_increment = ec.min_increment;
    rep.E_max = ec.max_E;
    rep.energy_ok = ec.pass;
    const auto rc = residual_check(prob, traj, opt);
    rep.residual_max = rc.max_residual;
    rep.residual_ok = rc.pass;
    return rep;
}

// First time v reaches the level c (used for t_{a,beta}); nullopt when the
// level is never attained before the first zero.
inline std::optional<double> first_level_crossing(const Trajectory& traj, double c) {
    for (const auto& s : traj.segments) {
        if ((s.y0.v - c) * (s.y1.v - c) <= 0.0 && s.y0.v != s.y1.v) {
            double lo = s.t0, hi = s.t1;
            double flo = traj.eval_v(lo) - c;
            for (int it = 0; it < 100 && hi - lo > 1e-15 * traj.t_end; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = traj.eval_v(mid) - c;
                if (flo * fm <= 0.0)
                    hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            return 0.5 * (lo + hi);
        }
    }
    return std::nullopt;
}

}  // namespace plshoot
