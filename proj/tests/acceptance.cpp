// Acceptance suite: one line per criterion, pass/fail, with a nonzero exit
// if any criterion fails.  Criteria are property-based on the two canonical
// instances (p = 3, N = 5 and p = 2, N = 4).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "plshoot/asymptotics.hpp"
#include "plshoot/census.hpp"
#include "plshoot/integrator.hpp"
#include "plshoot/model.hpp"
#include "plshoot/output.hpp"
#include "plshoot/reference.hpp"
#include "plshoot/shooting.hpp"
#include "plshoot/startup.hpp"

using namespace plshoot;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail = "") {
    std::printf("criterion %d (%s): %s%s%s\n", idx, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " - ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

Problem ci1() { return make_canonical_problem(ProblemParams{}); }

ProblemParams ci2_params() {
    ProblemParams pp;
    pp.p = 2.0;
    pp.N = 4;
    pp.m = 0.5;
    pp.l = 3.0;
    pp.alpha = 5.5;
    pp.alpha1 = 5.5;
    return pp;
}

Problem ci2() { return make_canonical_problem(ci2_params()); }

Trajectory run(const Problem& prob, double a, double tol = 1e-10) {
    const auto su = pick_epsilon(prob, a);
    IntegratorOptions iopt;
    iopt.tol = tol;
    Trajectory t = propagate(prob, startup_state(su), iopt);
    t.a = a;
    return t;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i)
        g.push_back(lo * std::pow(hi / lo, double(i) / double(n - 1)));
    return g;
}

// ---- criteria ----

void c1_hypothesis_gate() {
    bool pass = validate_params(ProblemParams{}).accepted;
    pass = pass && validate_params(ci2_params()).accepted;
    ProblemParams bad;
    bad.alpha = 6.0;
    bad.alpha1 = 5.75;
    const auto rep = validate_params(bad);
    bool named = false;
    for (const auto& v : rep.violations)
        if (v.find("rK'/K") != std::string::npos) named = true;
    pass = pass && !rep.accepted && named;
    report(1, "hypothesis gate", pass);
}

void c2_startup() {
    bool pass = true;
    std::string detail;
    for (const auto& prob : {ci1(), ci2()}) {
        const double target = 1.0 - prob.consts.alpha_tilde - prob.params.m;
        for (double a : {0.5, 1.0, 2.0, 8.0, 32.0}) {
            const auto r = pick_epsilon(prob, a);
            if (!(r.contraction_estimate <= 0.5)) pass = false;
            for (double w : r.w_nodes)
                if (!(w >= 0.5 * a - 1e-12 && w <= 1.5 * a + 1e-12)) pass = false;
            const double t1 = 1e-6 * r.epsilon, t2 = 1e-3 * r.epsilon;
            const double slope = std::log(r.inner_integral(t2) / r.inner_integral(t1)) /
                                 std::log(t2 / t1);
            if (!(std::fabs(slope - target) <= 0.02 * target)) pass = false;
        }
    }
    report(2, "startup certification", pass, detail);
}

// shared trajectory grid for criteria 3 and 4
struct GridRun {
    std::vector<Trajectory> ci1_trajs, ci2_trajs;
};

GridRun run_grids() {
    GridRun g;
    for (double a : geometric_grid(0.5, 16000.0, 40)) g.ci1_trajs.push_back(run(ci1(), a));
    for (double a : geometric_grid(0.5, 800.0, 40)) g.ci2_trajs.push_back(run(ci2(), a));
    return g;
}

void c3_energy(const GridRun& g) {
    bool pass = true;
    std::string detail;
    auto check = [&](const Problem& prob, const std::vector<Trajectory>& trajs) {
        for (const auto& traj : trajs) {
            const auto ec = energy_check(prob, traj);
            if (!(ec.min_increment >= -1e-7 * (1.0 + ec.max_E))) {
                pass = false;
                detail = "violation at a = " + std::to_string(traj.a);
            }
        }
    };
    check(ci1(), g.ci1_trajs);
    check(ci2(), g.ci2_trajs);
    report(3, "energy monotonicity on 40-point grids", pass, detail);
}

void c4_residuals(const GridRun& g) {
    bool pass = true;
    std::string detail;
    auto check = [&](const Problem& prob, const std::vector<Trajectory>& trajs) {
        for (const auto& traj : trajs) {
            const auto rc = residual_check(prob, traj);
            if (!rc.pass) {
                pass = false;
                detail = "residual " + std::to_string(rc.max_residual) + " at a = " +
                         std::to_string(traj.a);
            }
        }
    };
    check(ci1(), g.ci1_trajs);
    check(ci2(), g.ci2_trajs);
    report(4, "integral-identity residuals (20 pairs each)", pass, detail);
}

void c5_oracle() {
    bool pass = true;
    std::string detail;
    ReferenceOptions ropt;
    ropt.tol = 1e-12;
    ropt.delta_frac = 1e-7;  // 10x smaller excision than production
    auto check = [&](const Problem& prob, double a_hi) {
        for (double a : geometric_grid(0.5, a_hi, 10)) {
            const auto su = pick_epsilon(prob, a);
            const auto traj = propagate(prob, startup_state(su));
            const auto ref = reference_propagate(prob, startup_state(su), ropt);
            const double dv = std::fabs(traj.terminal.v - ref.v_end) /
                              std::max(1.0, std::fabs(ref.v_end));
            const double dq = std::fabs(traj.terminal.q - ref.q_end) /
                              std::max(1.0, std::fabs(ref.q_end));
            if (!(dv <= 1e-6 && dq <= 1e-6)) {
                pass = false;
                detail = "mismatch at a = " + std::to_string(a);
            }
        }
    };
    check(ci1(), 6400.0);
    check(ci2(), 400.0);
    report(5, "oracle equivalence vs reference integrator", pass, detail);
}

struct LadderRuns {
    SolutionLadder ci1_lad, ci2_lad;
    Problem p1 = ci1(), p2 = ci2();
};

void c6_ladder(LadderRuns& out) {
    bool pass = true;
    std::string detail;
    auto check = [&](const Problem& prob, double a_hi, SolutionLadder& keep) {
        ShootingOptions opt;
        opt.a_hi = a_hi;
        const auto lad = solve_ladder(prob, 3, opt);
        keep = lad;
        if (lad.entries.size() < 4 || lad.status != "ok") {
            pass = false;
            detail = "ladder incomplete";
            return;
        }
        double a_prev = 0.0;
        for (const auto& e : lad.entries) {
            const auto& c = e.classification;
            if (!e.certified || c.census_rep.n_zeros != e.n ||
                !(std::fabs(e.terminal_v) <= e.tol_match) ||
                !(std::fabs(e.terminal_slope) >= opt.slope_min) || !(e.a_n > a_prev)) {
                pass = false;
                detail = "entry n = " + std::to_string(e.n);
            }
            a_prev = e.a_n;
        }
        // 100x tighter integrator tolerance: each a_n shifts < 1e-5 relative
        ShootingOptions tight = opt;
        tight.tol = opt.tol * 0.01;
        const auto brackets = scan_transitions(prob, opt, 3);
        std::size_t i = 0;
        for (const auto& b : brackets) {
            if (b.unresolved || i >= lad.entries.size()) break;
            const auto res = bisect_boundary(prob, b, tight);
            const double shift =
                std::fabs(res.a_star - lad.entries[i].a_n) / lad.entries[i].a_n;
            if (!(shift < 1e-5)) {
                pass = false;
                detail = "tolerance-shift " + std::to_string(shift) + " at n = " +
                         std::to_string(i);
            }
            ++i;
        }
        if (i < 4) {
            pass = false;
            detail = "tight rerun incomplete";
        }
    };
    check(out.p1, 2e4, out.ci1_lad);
    check(out.p2, 1e3, out.ci2_lad);
    report(6, "solution ladder with tolerance study", pass, detail);
}

void c7_trends() {
    bool pass = true;
    std::string detail;
    for (const auto& prob : {ci1(), ci2()}) {
        const double a0 = (prob.params.p == 3.0) ? 200.0 : 50.0;
        std::vector<double> grid;
        for (int k = 0; k <= 6; ++k) grid.push_back(a0 * std::pow(2.0, k));
        const auto rep = trend_check(prob, sweep(prob, grid));
        if (rep.qualifying < 7 || !rep.pass()) {
            pass = false;
            detail = rep.failures.empty() ? "insufficient qualifying rows" : rep.failures[0];
        }
    }
    report(7, "large-slope trends and row-wise inequalities", pass, detail);
}

void c8_timemap() {
    bool pass = true;
    std::string detail;
    const auto prob = ci1();
    std::vector<double> grid;
    for (int k = 0; k <= 6; ++k) grid.push_back(200.0 * std::pow(2.0, k));
    const auto table = sweep(prob, grid);
    const double limit = asdetail::timemap_ratio_limit(prob);
    double gap_prev = HUGE_VAL;
    for (const auto& r : table.rows) {
        const auto tm = timemap_check(prob, r);
        if (!tm.applicable || !tm.pass) {
            pass = false;
            detail = "inequality fails at a = " + std::to_string(r.a);
            continue;
        }
        const double gap = std::fabs(r.timemap_ratio - limit);
        if (!(gap < gap_prev)) {
            pass = false;
            detail = "gap not decreasing at a = " + std::to_string(r.a);
        }
        gap_prev = gap;
    }
    report(8, "time-map inequality and limit integral", pass, detail);
}

void c9_r_domain(const LadderRuns& lads) {
    bool pass = true;
    std::string detail;
    const auto tmp = std::filesystem::temp_directory_path() / "plshoot_acceptance";
    std::filesystem::create_directories(tmp);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto check = [&](const Problem& prob, const SolutionLadder& lad, const char* tag) {
        for (const auto& e : lad.entries) {
            const auto& traj = e.classification.traj;
            const auto prof = to_r_domain(prob, traj, e.a_n);
            // Count sign changes among samples resolved above the matching
            // tolerance; the boundary residual u(R) can carry either sign.
            std::size_t flips = 0;
            double prev_sig = 0.0;
            for (double ui : prof.u) {
                if (std::fabs(ui) <= e.tol_match) continue;
                if (prev_sig * ui < 0.0) ++flips;
                prev_sig = ui;
            }
            if (flips != e.n) {
                pass = false;
                detail = "sign changes at n = " + std::to_string(e.n);
            }
            if (!(std::fabs(prof.u.front()) <= e.tol_match)) {
                pass = false;
                detail = "|u(R)| at n = " + std::to_string(e.n);
            }
            // |u| decreasing on the emitted tail beyond the outermost hump
            // peak, i.e. past the |u|-maximum of the final nodal region.
            const double r_last = prof.zeros_r.empty() ? prob.params.R : prof.zeros_r.back();
            std::size_t i_peak = 0;
            for (std::size_t i = 1; i < prof.u.size(); ++i)
                if (prof.r[i] > r_last &&
                    (prof.r[i_peak] <= r_last ||
                     std::fabs(prof.u[i]) > std::fabs(prof.u[i_peak])))
                    i_peak = i;
            for (std::size_t i = i_peak + 1; i < prof.u.size(); ++i) {
                if (!(std::fabs(prof.u[i]) < std::fabs(prof.u[i - 1]))) {
                    pass = false;
                    detail = "tail not decreasing at n = " + std::to_string(e.n);
                    break;
                }
            }
            // byte-stable emission
            const auto f1 = tmp / (std::string(tag) + std::to_string(e.n) + "_1.csv");
            const auto f2 = tmp / (std::string(tag) + std::to_string(e.n) + "_2.csv");
            write_r_profile_csv(f1.string(), prof);
            write_r_profile_csv(f2.string(), to_r_domain(prob, traj, e.a_n));
            if (slurp(f1) != slurp(f2)) {
                pass = false;
                detail = "byte instability at n = " + std::to_string(e.n);
            }
        }
    };
    check(lads.p1, lads.ci1_lad, "ci1_n");
    check(lads.p2, lads.ci2_lad, "ci2_n");
    std::filesystem::remove_all(tmp);
    report(9, "end-to-end r-domain profiles", pass, detail);
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    c1_hypothesis_gate();
    c2_startup();
    const auto grids = run_grids();
    c3_energy(grids);
    c4_residuals(grids);
    c5_oracle();
    LadderRuns lads;
    c6_ladder(lads);
    c7_trends();
    c8_timemap();
    c9_r_domain(lads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s (%d/9 criteria, %.1f s)\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
                9 - g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
