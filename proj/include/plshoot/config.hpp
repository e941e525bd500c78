#pragma once

// Run configuration: JSON schema with strict keys, documented defaults, and
// hypothesis validation before any run.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "plshoot/model.hpp"
#include "plshoot/shooting.hpp"

namespace plshoot {

struct ToleranceBlock {
    double tol = 1e-10;                  // integrator tolerance
    double tol_a = 1e-10;                // relative slope-bisection tolerance
    double tol_match_safety = 10.0;      // terminal-match calibration factor
    double tol_E = 1e-7;                 // energy monotonicity tolerance
    double delta_frac = 1e-6;            // excision radius / T_end
    double terminal_window_frac = 1e-6;  // terminal zero-exclusion window / T_end
};

struct ScanBlock {
    double a_lo = 0.1;
    double a_hi = 1e5;
    double growth = 1.25;
    double a_max = 1e6;  // startup admissibility cap
    std::size_t n_max = 3;
};

struct OutputBlock {
    std::string dir = "out";
    double r_max = 0.0;  // 0 = default: the r-image of 10 * startup epsilon
};

struct RunConfig {
    ProblemParams params;
    ToleranceBlock tolerances;
    ScanBlock scan;
    OutputBlock output;

    ShootingOptions shooting_options() const {
        ShootingOptions o;
        o.tol = tolerances.tol;
        o.tol_a = tolerances.tol_a;
        o.tol_match_safety = tolerances.tol_match_safety;
        o.delta_frac = tolerances.delta_frac;
        o.census_opt.tol_E = tolerances.tol_E;
        o.census_opt.terminal_window_frac = tolerances.terminal_window_frac;
        o.a_lo = scan.a_lo;
        o.a_hi = scan.a_hi;
        o.growth = scan.growth;
        o.a_max = scan.a_max;
        return o;
    }
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace confdetail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                           const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const auto& k : allowed)
            if (key == k) ok = true;
        if (!ok) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

inline double num(const json& obj, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) throw ConfigError(std::string("key \"") + key + "\" must be a number");
    return obj[key].get<double>();
}

}  // namespace confdetail

inline RunConfig parse_config(const nlohmann::json& j) {
    using confdetail::num;
    using confdetail::reject_unknown;
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(j, {"params", "tolerances", "scan", "output"}, "config root");

    RunConfig cfg;
    if (j.contains("params")) {
        const auto& p = j["params"];
        reject_unknown(p, {"p", "N", "m", "l", "R", "K0", "K1", "alpha", "alpha1"}, "params");
        ProblemParams d;  // documented defaults
        cfg.params.p = num(p, "p", d.p);
        cfg.params.N = static_cast<int>(num(p, "N", d.N));
        cfg.params.m = num(p, "m", d.m);
        cfg.params.l = num(p, "l", d.l);
        cfg.params.R = num(p, "R", d.R);
        cfg.params.K0 = num(p, "K0", d.K0);
        cfg.params.K1 = num(p, "K1", d.K1);
        cfg.params.alpha = num(p, "alpha", d.alpha);
        // alpha1 defaults to alpha so a one-line override stays consistent
        cfg.params.alpha1 = num(p, "alpha1", num(p, "alpha", d.alpha1));
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        reject_unknown(t,
                       {"tol", "tol_a", "tol_match_safety", "tol_E", "delta_frac",
                        "terminal_window_frac"},
                       "tolerances");
        ToleranceBlock d;
        cfg.tolerances.tol = num(t, "tol", d.tol);
        cfg.tolerances.tol_a = num(t, "tol_a", d.tol_a);
        cfg.tolerances.tol_match_safety = num(t, "tol_match_safety", d.tol_match_safety);
        cfg.tolerances.tol_E = num(t, "tol_E", d.tol_E);
        cfg.tolerances.delta_frac = num(t, "delta_frac", d.delta_frac);
        cfg.tolerances.terminal_window_frac =
            num(t, "terminal_window_frac", d.terminal_window_frac);
        for (double v : {cfg.tolerances.tol, cfg.tolerances.tol_a,
                         cfg.tolerances.tol_match_safety, cfg.tolerances.tol_E,
                         cfg.tolerances.delta_frac, cfg.tolerances.terminal_window_frac})
            if (!(v > 0.0)) throw ConfigError("tolerances must be > 0");
    }
    if (j.contains("scan")) {
        const auto& s = j["scan"];
        reject_unknown(s, {"a_lo", "a_hi", "growth", "a_max", "n_max"}, "scan");
        ScanBlock d;
        cfg.scan.a_lo = num(s, "a_lo", d.a_lo);
        cfg.scan.a_hi = num(s, "a_hi", d.a_hi);
        cfg.scan.growth = num(s, "growth", d.growth);
        cfg.scan.a_max = num(s, "a_max", d.a_max);
        cfg.scan.n_max = static_cast<std::size_t>(num(s, "n_max", double(d.n_max)));
        if (!(cfg.scan.a_lo > 0.0 && cfg.scan.a_hi > cfg.scan.a_lo && cfg.scan.growth > 1.0))
            throw ConfigError("scan block requires 0 < a_lo < a_hi and growth > 1");
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown(o, {"dir", "r_max"}, "output");
        if (o.contains("dir")) cfg.output.dir = o["dir"].get<std::string>();
        cfg.output.r_max = num(o, "r_max", 0.0);
    }

    const auto rep = validate_params(cfg.params);
    if (!rep.accepted) {
        std::string msg = "params rejected:";
        for (const auto& v : rep.violations) msg += " [" + v + "]";
        throw ConfigError(msg);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace plshoot
