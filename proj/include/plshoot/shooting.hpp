#pragma once

// The shooting driver: classifies each slope a by interior zero count,
// locates count-transition boundaries a_n by bisection on the integer count,
// and assembles the certified solution ladder n -> a_n. Bisection acts on
// the count, not on the terminal value, because the terminal value jumps at
// transitions and is only meaningful at a fixed count.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plshoot/census.hpp"
#include "plshoot/integrator.hpp"
#include "plshoot/model.hpp"
#include "plshoot/startup.hpp"

namespace plshoot {

struct ShootingOptions {
    double tol = 1e-10;           // integrator tolerance
    double tol_a = 1e-10;         // relative bracket width at convergence
    double tol_match_safety = 10.0;   // tol_match = safety * |v'(T)| * tol_a * a
    double slope_min = 1e-3;      // certified terminal slope floor
    double a_lo = 0.1;
    double a_hi = 1e5;
    double growth = 1.25;
    double a_max = 1e6;
    double delta_frac = 1e-6;
    CensusOptions census_opt;
};

struct ShootClassification {
    double a = 0.0;
    std::size_t n = 0;       // interior zero count (terminal window excluded)
    double terminal_v = 0.0;
    double terminal_q = 0.0;
    double terminal_slope = 0.0;  // v'(T_end)
    int terminal_sign = 0;        // sign of terminal_v w.r.t. match_tol
    CensusReport census_rep;
    Trajectory traj;
};

inline ShootClassification classify(const Problem& prob, double a,
                                    const ShootingOptions& opt = {},
                                    double match_tol = 0.0) {
    if (!(a > 0.0) || a > opt.a_max)
        throw std::invalid_argument("classify: a outside (0, a_max]");
    StartupOptions sopt;
    sopt.a_max = opt.a_max;
    IntegratorOptions iopt;
    iopt.tol = opt.tol;
    iopt.delta_frac = opt.delta_frac;
    const auto su = pick_epsilon(prob, a, sopt);
    ShootClassification c;
    c.traj = propagate(prob, startup_state(su), iopt);
    c.traj.a = su.a;
    c.a = a;
    c.census_rep = census(prob, c.traj, opt.census_opt);
    c.n = c.census_rep.n_zeros;
    c.terminal_v = c.traj.terminal.v;
    c.terminal_q = c.traj.terminal.q;
    c.terminal_slope = phi_inv(c.traj.terminal.q, prob.params.p);
    if (std::fabs(c.terminal_v) <= match_tol)
        c.terminal_sign = 0;
    else
        c.terminal_sign = c.terminal_v > 0.0 ? 1 : -1;
    return c;
}

struct TransitionBracket {
    double a_lo = 0.0, a_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    bool unresolved = false;
};

namespace detail {

inline void refine_bracket(const Problem& prob, const ShootingOptions& opt, double a_lo,
                           std::size_t n_lo, double a_hi, std::size_t n_hi,
                           std::vector<TransitionBracket>& out, int depth) {
    if (n_hi == n_lo) return;
    if (n_hi == n_lo + 1) {
        out.push_back(TransitionBracket{a_lo, a_hi, n_lo, n_hi, false});
        return;
    }
    if (n_hi < n_lo || depth > 80 || (a_hi - a_lo) < 10.0 * opt.tol_a * a_hi) {
        // non-monotone oscillation or resolution limit: record verbatim
        out.push_back(TransitionBracket{a_lo, a_hi, n_lo, n_hi, true});
        return;
    }
    const double mid = std::sqrt(a_lo * a_hi);  // geometric midpoint
    const std::size_t n_mid = classify(prob, mid, opt).n;
    refine_bracket(prob, opt, a_lo, n_lo, mid, n_mid, out, depth + 1);
    refine_bracket(prob, opt, mid, n_mid, a_hi, n_hi, out, depth + 1);
}

}  // namespace detail

// Scans [a_lo, a_hi] geometrically and refines every count transition to a
// unit-step bracket.  Scanning stops early once the count exceeds n_stop
// (the caller only needs the ladder up to that index).
inline std::vector<TransitionBracket> scan_transitions(
    const Problem& prob, const ShootingOptions& opt = {},
    std::size_t n_stop = std::numeric_limits<std::size_t>::max()) {
    if (!(opt.a_lo > 0.0) || !(opt.a_hi > opt.a_lo) || !(opt.growth > 1.0))
        throw std::invalid_argument("scan_transitions: bad scan parameters");
    std::vector<TransitionBracket> out;
    double a_prev = opt.a_lo;
    std::size_t n_prev = classify(prob, a_prev, opt).n;
    for (double a = opt.a_lo * opt.growth; a_prev < opt.a_hi; a *= opt.growth) {
        a = std::min(a, opt.a_hi);
        const std::size_t n = classify(prob, a, opt).n;
        if (n != n_prev) detail::refine_bracket(prob, opt, a_prev, n_prev, a, n, out, 0);
        a_prev = a;
        n_prev = n;
        if (a >= opt.a_hi || n_prev > n_stop) break;
    }
    return out;
}

struct BoundaryResult {
    double a_star = 0.0;
    std::size_t n = 0;           // count on the lower side = ladder index
    double tol_match = 0.0;      // calibrated terminal match tolerance
    std::size_t iterations = 0;
    bool certified = false;
    std::vector<std::string> failures;
    ShootClassification best;    // classification at a_star
};

inline BoundaryResult bisect_boundary(const Problem& prob, const TransitionBracket& br,
                                      const ShootingOptions& opt = {}) {
    if (br.unresolved || br.n_hi != br.n_lo + 1)
        throw std::invalid_argument("bisect_boundary: bracket is not a unit step");
    ShootingOptions o = opt;
    double lo = br.a_lo, hi = br.a_hi;
    BoundaryResult res;
    res.n = br.n_lo;
    bool retried = false;
    // terminal v at the current bracket endpoints, for the empirical
    // sensitivity |d v(T)/d a| used to calibrate tol_match
    double v_lo = classify(prob, lo, o).terminal_v;
    double v_hi = classify(prob, hi, o).terminal_v;
    while (hi - lo > opt.tol_a * hi) {
        const double mid = 0.5 * (lo + hi);
        const auto cls_mid = classify(prob, mid, o);
        std::size_t n = cls_mid.n;
        ++res.iterations;
        if (n != br.n_lo && n != br.n_hi) {
            // count stopped being a two-valued step function inside the
            // bracket (numerical noise): tighten the integrator once
            if (!retried) {
                o.tol *= 0.01;
                retried = true;
                n = classify(prob, mid, o).n;
            }
            if (n != br.n_lo && n != br.n_hi) {
                res.failures.push_back("count oscillation inside bracket");
                break;
            }
        }
        if (n == br.n_lo) {
            lo = mid;
            v_lo = cls_mid.terminal_v;
        } else {
            hi = mid;
            v_hi = cls_mid.terminal_v;
        }
    }
    // The count flips only once the entering zero leaves the terminal
    // window, so at the count boundary |v(T)| ~ |v'(T)| * window and the
    // true boundary v(T) = 0 sits slightly below it.  Refine on the sign
    // of v(T) itself: expand downward until the sign flips, then bisect.
    if (v_lo * v_hi > 0.0) {
        double step = opt.tol_a * lo;
        for (int j = 0; j < 60 && v_lo * v_hi > 0.0; ++j) {
            hi = lo;
            v_hi = v_lo;
            lo = std::max(br.a_lo, lo - step);
            step *= 2.0;
            v_lo = classify(prob, lo, o).terminal_v;
            ++res.iterations;
            if (lo == br.a_lo) break;
        }
    }
    if (v_lo * v_hi < 0.0) {
        while (hi - lo > opt.tol_a * hi) {
            const double mid = 0.5 * (lo + hi);
            const double vm = classify(prob, mid, o).terminal_v;
            ++res.iterations;
            if (vm * v_hi > 0.0) {
                hi = mid;
                v_hi = vm;
            } else {
                lo = mid;
                v_lo = vm;
            }
        }
    } else {
        res.failures.push_back("terminal refinement found no sign change");
    }
    res.a_star = 0.5 * (lo + hi);
    res.best = classify(prob, res.a_star, o);
    // Calibrate tol_match against the measured secant sensitivity of v(T)
    // over the final bracket (it can exceed |v'(T)| near a boundary).
    const double sens = std::fabs(v_hi - v_lo) / std::max(hi - lo, opt.tol_a * res.a_star);
    res.tol_match = opt.tol_match_safety *
                    std::max(std::fabs(res.best.terminal_slope), sens) * opt.tol_a *
                    res.a_star;
    if (std::fabs(res.best.terminal_v) <= res.tol_match) res.best.terminal_sign = 0;

    if (res.best.census_rep.n_zeros != res.n)
        res.failures.push_back("interior count mismatch at a*");
    if (std::fabs(res.best.terminal_v) > res.tol_match)
        res.failures.push_back("terminal v exceeds tol_match");
    if (std::fabs(res.best.terminal_slope) < opt.slope_min)
        res.failures.push_back("terminal slope below slope_min");
    if (!res.best.census_rep.certified())
        res.failures.push_back("census certification failed at a*");
    res.certified = res.failures.empty();
    return res;
}

struct LadderEntry {
    std::size_t n = 0;
    double a_n = 0.0;
    double terminal_v = 0.0;
    double terminal_slope = 0.0;
    double tol_match = 0.0;
    bool certified = false;
    std::vector<ZeroRecord> zeros;
    ShootClassification classification;
};

struct SolutionLadder {
    std::size_t n0 = 0;
    std::vector<LadderEntry> entries;  // consecutive n from n0
    std::string status;                // "ok" or "range-limited"
};

inline SolutionLadder solve_ladder(const Problem& prob, std::size_t n_max,
                                   const ShootingOptions& opt = {}) {
    SolutionLadder ladder;
    const auto brackets = scan_transitions(prob, opt, n_max);
    std::vector<TransitionBracket> usable;
    for (const auto& b : brackets)
        if (!b.unresolved) usable.push_back(b);
    if (usable.empty()) {
        ladder.status = "range-limited";
        return ladder;
    }
    ladder.n0 = usable.front().n_lo;
    std::size_t expect = ladder.n0;
    for (const auto& b : usable) {
        if (b.n_lo != expect) break;  // gap in consecutive transitions
        if (b.n_lo > n_max) break;
        auto res = bisect_boundary(prob, b, opt);
        LadderEntry e;
        e.n = res.n;
        e.a_n = res.a_star;
        e.terminal_v = res.best.terminal_v;
        e.terminal_slope = res.best.terminal_slope;
        e.tol_match = res.tol_match;
        e.certified = res.certified;
        e.zeros = res.best.census_rep.zeros;
        e.classification = std::move(res.best);
        ladder.entries.push_back(std::move(e));
        expect = b.n_lo + 1;
    }
    ladder.status = (!ladder.entries.empty() &&
                     ladder.entries.back().n >= n_max)
                        ? "ok"
                        : "range-limited";
    return ladder;
}

}  // namespace plshoot
