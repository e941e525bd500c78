#pragma once

// Large-slope asymptotics: sweeps a upward, extracts the first-maximum and
// first-zero observables of each trajectory, and checks the monotone trends
// and time-map inequalities they satisfy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "plshoot/census.hpp"
#include "plshoot/integrator.hpp"
#include "plshoot/model.hpp"
#include "plshoot/startup.hpp"

namespace plshoot {

struct SweepRow {
    double a = 0.0;
    bool ok = false;          // trajectory completed
    std::string error;        // propagation failure text when !ok
    double max_v = 0.0;       // max of v over the trajectory
    std::optional<double> M;  // first local maximum location
    double v_at_M = 0.0;
    std::optional<double> t_beta;  // first time v = beta
    bool v_above_at = false;       // v(t) > a t on [eps, t_beta]
    std::optional<double> z;       // first zero
    double slope_at_z = 0.0;
    std::optional<double> timemap_lhs;  // int_M^z h^{1/p}
    std::optional<double> timemap_rhs;  // (2.34) right-hand side
    double timemap_ratio = 0.0;         // normalized rhs integral (see below)
};

struct SweepTable {
    std::vector<SweepRow> rows;  // ordered by a
};

struct SweepOptions {
    IntegratorOptions integrator;
    StartupOptions startup;
    std::size_t profile_samples = 256;  // grid for the v > a t check
};

namespace asdetail {

// lhs of (2.34): the weighted travel time from the first maximum to the
// first zero.  h is smooth on [M, z] (the singularity of h sits at t = 0).
inline double timemap_lhs(const Problem& prob, double M, double z) {
    const double inv_p = 1.0 / prob.params.p;
    auto g = [&](double t) { return std::pow(prob.h(t), inv_p); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, M, z, 10, 1e-12);
}

// Normalized rhs integral after the substitution s = t / v(M):
//   I(vM) = int_0^1 ds / (1 - F(vM s)/F(vM))^{1/p},
// integrable endpoint singularity (1 - s)^{-1/p} at s = 1.
inline double timemap_ratio(const Problem& prob, double vM) {
    const double inv_p = 1.0 / prob.params.p;
    const double FM = prob.F(vM);
    boost::math::quadrature::tanh_sinh<double> integ;
    auto g = [&](double s, double sc) {
        // sc = 1 - s near the upper endpoint, supplied by tanh_sinh to
        // avoid cancellation in 1 - F/FM ~ F'(vM) vM sc / FM
        double frac = 1.0 - prob.F(vM * s) / FM;
        if (frac <= 0.0) frac = prob.f(vM) * vM * sc / FM;  // first order
        return std::pow(frac, -inv_p);
    };
    return integ.integrate(g, 0.0, 1.0);
}

// rhs of (2.34) by direct singular quadrature in the t variable.
inline double timemap_rhs_direct(const Problem& prob, double vM) {
    const double p = prob.params.p;
    const double inv_p = 1.0 / p;
    const double FM = prob.F(vM);
    boost::math::quadrature::tanh_sinh<double> integ;
    auto g = [&](double t, double sc) {
        double diff = FM - prob.F(t);
        if (diff <= 0.0) diff = prob.f(vM) * sc;  // sc = vM - t near the top
        return std::pow(diff, -inv_p);
    };
    return std::pow((p - 1.0) / p, inv_p) * integ.integrate(g, 0.0, vM);
}

inline double timemap_rhs(const Problem& prob, double vM) {
    const double p = prob.params.p;
    return std::pow((p - 1.0) / p, 1.0 / p) * vM * std::pow(prob.F(vM), -1.0 / p) *
           timemap_ratio(prob, vM);
}

// The a -> infinity limit of the normalized integral: F(vM s)/F(vM) ->
// s^{l+1}, so I -> int_0^1 ds / (1 - s^{l+1})^{1/p}.
inline double timemap_ratio_limit(const Problem& prob) {
    const double inv_p = 1.0 / prob.params.p;
    const double l = prob.params.l;
    boost::math::quadrature::tanh_sinh<double> integ;
    auto g = [&](double s, double sc) {
        double frac = 1.0 - std::pow(s, l + 1.0);
        if (frac <= 0.0) frac = (l + 1.0) * sc;
        return std::pow(frac, -inv_p);
    };
    return integ.integrate(g, 0.0, 1.0);
}

}  // namespace asdetail

inline SweepRow sweep_row(const Problem& prob, double a, const SweepOptions& opt = {}) {
    SweepRow row;
    row.a = a;
    Trajectory traj;
    try {
        const auto su = pick_epsilon(prob, a, opt.startup);
        traj = propagate(prob, startup_state(su), opt.integrator);
        traj.a = a;
    } catch (const std::exception& e) {
        row.error = e.what();
        return row;
    }
    row.ok = true;

    // max of v: segment endpoints plus recorded extrema
    double vmax = traj.terminal.v;
    for (const auto& s : traj.segments) vmax = std::max({vmax, s.y0.v, s.y1.v});
    for (const auto& e : traj.extrema) vmax = std::max(vmax, e.v);
    row.max_v = vmax;

    if (!traj.extrema.empty() && traj.extrema.front().is_max) {
        row.M = traj.extrema.front().t;
        row.v_at_M = traj.extrema.front().v;
    }
    row.t_beta = first_level_crossing(traj, prob.consts.beta);
    if (row.t_beta) {
        // (2.21): v stays above the free linear profile until it reaches beta
        row.v_above_at = true;
        const double lo = traj.epsilon, hi = *row.t_beta;
        for (std::size_t i = 0; i <= opt.profile_samples; ++i) {
            const double t = lo + (hi - lo) * double(i) / double(opt.profile_samples);
            if (!(traj.eval_v(t) > a * t * (1.0 - 1e-12))) {
                row.v_above_at = false;
                break;
            }
        }
    }
    if (!traj.zeros.empty()) {
        row.z = traj.zeros.front().z;
        row.slope_at_z = traj.zeros.front().slope;
    }
    // time map applies to the arc from the first max down to the first zero
    if (row.M && row.z && *row.z > *row.M && row.v_at_M > prob.consts.gamma) {
        row.timemap_lhs = asdetail::timemap_lhs(prob, *row.M, *row.z);
        row.timemap_ratio = asdetail::timemap_ratio(prob, row.v_at_M);
        row.timemap_rhs = asdetail::timemap_rhs(prob, row.v_at_M);
    }
    return row;
}

inline SweepTable sweep(const Problem& prob, const std::vector<double>& a_grid,
                        const SweepOptions& opt = {}) {
    for (std::size_t i = 1; i < a_grid.size(); ++i)
        if (!(a_grid[i] > a_grid[i - 1]))
            throw std::invalid_argument("sweep: grid must be strictly increasing");
    SweepTable table;
    for (double a : a_grid) table.rows.push_back(sweep_row(prob, a, opt));
    return table;
}

struct TrendReport {
    std::size_t qualifying = 0;  // suffix rows with all events present
    bool M_decreasing = true;
    bool v_at_M_increasing = true;
    bool z_decreasing = true;
    bool slope_increasing = true;  // |v'(z_a)|
    bool max_v_increasing = true;
    bool t_beta_bound = true;     // t_{a,beta} < beta / a row-wise
    bool v_above_at = true;       // (2.21) row-wise
    bool slope_floor = true;      // Lemma 2.7 display row-wise
    std::vector<std::string> failures;

    bool pass() const {
        return M_decreasing && v_at_M_increasing && z_decreasing && slope_increasing &&
               max_v_increasing && t_beta_bound && v_above_at && slope_floor;
    }
};

inline TrendReport trend_check(const Problem& prob, const SweepTable& table) {
    TrendReport rep;
    // qualifying suffix: rows (from the end) that carry all events
    std::vector<const SweepRow*> q;
    for (auto it = table.rows.rbegin(); it != table.rows.rend(); ++it) {
        if (it->ok && it->M && it->z && it->t_beta)
            q.push_back(&*it);
        else
            break;
    }
    std::reverse(q.begin(), q.end());
    rep.qualifying = q.size();
    auto fail = [&](const std::string& what, double a) {
        rep.failures.push_back(what + " at a = " + std::to_string(a));
    };
    const double p = prob.params.p;
    const double hT = prob.h(prob.T_end());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const SweepRow& r = *q[i];
        if (!(*r.t_beta < prob.consts.beta / r.a)) {
            rep.t_beta_bound = false;
            fail("t_beta bound", r.a);
        }
        if (!r.v_above_at) {
            rep.v_above_at = false;
            fail("v > a t", r.a);
        }
        if (!(std::pow(std::fabs(r.slope_at_z), p) >=
              p / (p - 1.0) * hT * prob.F(r.v_at_M) * (1.0 - 1e-12))) {
            rep.slope_floor = false;
            fail("slope floor", r.a);
        }
        if (i == 0) continue;
        const SweepRow& prev = *q[i - 1];
        if (!(*r.M < *prev.M)) {
            rep.M_decreasing = false;
            fail("M trend", r.a);
        }
        if (!(r.v_at_M > prev.v_at_M)) {
            rep.v_at_M_increasing = false;
            fail("v(M) trend", r.a);
        }
        if (!(*r.z < *prev.z)) {
            rep.z_decreasing = false;
            fail("z trend", r.a);
        }
        if (!(std::fabs(r.slope_at_z) > std::fabs(prev.slope_at_z))) {
            rep.slope_increasing = false;
            fail("|v'(z)| trend", r.a);
        }
        if (!(r.max_v > prev.max_v)) {
            rep.max_v_increasing = false;
            fail("max v trend", r.a);
        }
    }
    return rep;
}

struct TimemapReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool applicable = false;
    bool pass = false;
};

inline TimemapReport timemap_check(const Problem& prob, const SweepRow& row) {
    TimemapReport rep;
    if (!(row.ok && row.timemap_lhs && row.timemap_rhs)) return rep;
    rep.applicable = true;
    rep.lhs = *row.timemap_lhs;
    rep.rhs = *row.timemap_rhs;
    rep.pass = rep.lhs <= rep.rhs * (1.0 + 1e-8);
    return rep;
}

}  // namespace plshoot
