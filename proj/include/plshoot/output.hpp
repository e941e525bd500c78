#pragma once

// Output artifacts: r-domain reconstruction of a trajectory, CSV profiles,
// and JSON summaries.  All emission is byte-stable: fixed %.17g formatting,
// no locale or timestamp dependence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plshoot/asymptotics.hpp"
#include "plshoot/integrator.hpp"
#include "plshoot/model.hpp"
#include "plshoot/shooting.hpp"

namespace plshoot {

struct RDomainProfile {
    std::vector<double> r;   // strictly increasing from R
    std::vector<double> u;   // u(r) = v(r^{(p-N)/(p-1)})
    std::vector<double> du;  // u'(r) by the chain rule
    std::vector<double> zeros_r;  // images of the zeros of v
    double a_n = 0.0;
    bool truncated = false;  // requested r_max exceeded the certified region
};

namespace outdetail {

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace outdetail

// Transported profile u(r) = v(t), t = r^{(p-N)/(p-1)}.  The t-grid (segment
// endpoints, reversed) maps to a strictly increasing r-grid starting at
// r = R.  r_max = 0 requests the default: the r-image of 10 * epsilon, so
// the emitted tail lies inside the certified startup region.
inline RDomainProfile to_r_domain(const Problem& prob, const Trajectory& traj, double a_n,
                                  double r_max = 0.0) {
    const double p = prob.params.p, N = double(prob.params.N);
    const double e_tr = (p - N) / (p - 1.0);       // t = r^{e_tr}, e_tr < 0
    const double e_rt = 1.0 / e_tr;                // r = t^{e_rt}
    auto r_of = [&](double t) { return std::pow(t, e_rt); };

    RDomainProfile prof;
    prof.a_n = a_n;
    double t_min = 10.0 * traj.epsilon;  // default emission floor
    if (r_max > 0.0) {
        double t_req = std::pow(r_max, e_tr);
        if (t_req < traj.epsilon) {
            prof.truncated = true;  // below the certified startup region
            t_req = traj.epsilon;
        }
        t_min = t_req;
    }

    // t-grid: segment endpoints within [t_min, T_end], highest t first so
    // r increases
    std::vector<double> ts;
    ts.push_back(traj.t_end);
    for (auto it = traj.segments.rbegin(); it != traj.segments.rend(); ++it) {
        const double t = it->t0;
        if (t < t_min) break;
        if (t < ts.back()) ts.push_back(t);
    }
    for (double t : ts) {
        const State st = traj.eval(t);
        const double r = r_of(t);
        prof.r.push_back(r);
        prof.u.push_back(st.v);
        prof.du.push_back(phi_inv(st.q, p) * e_tr * std::pow(r, e_tr - 1.0));
    }
    for (auto it = traj.zeros.rbegin(); it != traj.zeros.rend(); ++it)
        prof.zeros_r.push_back(r_of(it->z));
    return prof;
}

inline void write_t_profile_csv(const std::string& path, const Trajectory& traj,
                                std::size_t samples = 1000) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,v,q,v_prime\n";
    const double lo = traj.epsilon, hi = traj.t_end;
    for (std::size_t i = 0; i <= samples; ++i) {
        const double t = lo + (hi - lo) * double(i) / double(samples);
        const State st = traj.eval(t);
        out << outdetail::fmt(t) << ',' << outdetail::fmt(st.v) << ',' << outdetail::fmt(st.q)
            << ',' << outdetail::fmt(phi_inv(st.q, traj.p)) << '\n';
    }
}

inline void write_r_profile_csv(const std::string& path, const RDomainProfile& prof) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "r,u,u_prime\n";
    for (std::size_t i = 0; i < prof.r.size(); ++i)
        out << outdetail::fmt(prof.r[i]) << ',' << outdetail::fmt(prof.u[i]) << ','
            << outdetail::fmt(prof.du[i]) << '\n';
}

// Long-format plot data: one series per ladder entry keyed by n.
inline void write_ladder_plot_csv(const std::string& path,
                                  const std::vector<std::pair<std::size_t, RDomainProfile>>& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "n,r,u\n";
    for (const auto& [n, prof] : s)
        for (std::size_t i = 0; i < prof.r.size(); ++i)
            out << n << ',' << outdetail::fmt(prof.r[i]) << ',' << outdetail::fmt(prof.u[i])
                << '\n';
}

inline nlohmann::json ladder_json(const SolutionLadder& lad) {
    nlohmann::json j;
    j["n0"] = lad.n0;
    j["status"] = lad.status;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : lad.entries) {
        nlohmann::json je;
        je["n"] = e.n;
        je["a_n"] = e.a_n;
        je["terminal_v"] = e.terminal_v;
        je["terminal_slope"] = e.terminal_slope;
        je["tol_match"] = e.tol_match;
        je["certified"] = e.certified;
        je["zeros"] = nlohmann::json::array();
        for (const auto& z : e.zeros) je["zeros"].push_back(z.z);
        j["entries"].push_back(je);
    }
    return j;
}

inline nlohmann::json sweep_json(const SweepTable& table) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json jr;
        jr["a"] = r.a;
        jr["ok"] = r.ok;
        if (!r.ok) {
            jr["error"] = r.error;
            j.push_back(jr);
            continue;
        }
        jr["max_v"] = r.max_v;
        if (r.M) {
            jr["M"] = *r.M;
            jr["v_at_M"] = r.v_at_M;
        }
        if (r.t_beta) jr["t_beta"] = *r.t_beta;
        if (r.z) {
            jr["z"] = *r.z;
            jr["slope_at_z"] = r.slope_at_z;
        }
        if (r.timemap_lhs) {
            jr["timemap_lhs"] = *r.timemap_lhs;
            jr["timemap_rhs"] = *r.timemap_rhs;
        }
        j.push_back(jr);
    }
    return j;
}

inline void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "a,max_v,M,v_at_M,t_a_beta,z_a,slope_at_z,timemap_lhs,timemap_rhs\n";
    auto opt = [&](bool has, double v) { return has ? outdetail::fmt(v) : std::string(); };
    for (const auto& r : table.rows) {
        if (!r.ok) continue;
        out << outdetail::fmt(r.a) << ',' << outdetail::fmt(r.max_v) << ','
            << opt(bool(r.M), r.M ? *r.M : 0.0) << ',' << opt(bool(r.M), r.v_at_M) << ','
            << opt(bool(r.t_beta), r.t_beta ? *r.t_beta : 0.0) << ','
            << opt(bool(r.z), r.z ? *r.z : 0.0) << ',' << opt(bool(r.z), r.slope_at_z) << ','
            << opt(bool(r.timemap_lhs), r.timemap_lhs ? *r.timemap_lhs : 0.0) << ','
            << opt(bool(r.timemap_rhs), r.timemap_rhs ? *r.timemap_rhs : 0.0) << '\n';
    }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace plshoot
