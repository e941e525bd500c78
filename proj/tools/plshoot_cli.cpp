// Command-line surface: validate / shoot / solve / sweep / convert.
//
// Exit codes: 0 success, 2 validation rejection, 3 certification failure,
// 4 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plshoot/asymptotics.hpp"
#include "plshoot/catalog.hpp"
#include "plshoot/config.hpp"
#include "plshoot/output.hpp"
#include "plshoot/shooting.hpp"

using namespace plshoot;

namespace {

RunConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig cfg;  // built-in defaults; still gated by validation
        const auto rep = validate_params(cfg.params);
        if (!rep.accepted) throw ConfigError("default params rejected");
        return cfg;
    }
    return load_config(path);
}

Trajectory run_trajectory(const Problem& prob, double a, const RunConfig& cfg) {
    StartupOptions sopt;
    sopt.a_max = cfg.scan.a_max;
    IntegratorOptions iopt;
    iopt.tol = cfg.tolerances.tol;
    iopt.delta_frac = cfg.tolerances.delta_frac;
    return shoot(prob, a, sopt, iopt);
}

int cmd_validate(const std::string& config_path) {
    const RunConfig cfg = load_or_default(config_path);  // throws ConfigError on reject
    const auto rep = validate_params(cfg.params);
    std::printf("accepted\n");
    (void)rep;
    return 0;
}

int cmd_shoot(const std::string& config_path, double a, const std::string& out_path) {
    const RunConfig cfg = load_or_default(config_path);
    const auto prob = make_canonical_problem(cfg.params);
    const auto cls = classify(prob, a, cfg.shooting_options());
    nlohmann::json j;
    j["a"] = a;
    j["n"] = cls.n;
    j["terminal_v"] = cls.terminal_v;
    j["terminal_slope"] = cls.terminal_slope;
    j["zeros"] = nlohmann::json::array();
    for (const auto& z : cls.census_rep.zeros) j["zeros"].push_back(z.z);
    j["certified"] = cls.census_rep.certified();
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) write_t_profile_csv(out_path, cls.traj);
    return cls.census_rep.certified() ? 0 : 3;
}

int cmd_solve(const std::string& config_path, int n_max_flag, const std::string& out_dir,
              const std::string& catalog_dir) {
    RunConfig cfg = load_or_default(config_path);
    if (n_max_flag >= 0) cfg.scan.n_max = static_cast<std::size_t>(n_max_flag);
    const auto prob = make_canonical_problem(cfg.params);
    const auto lad = solve_ladder(prob, cfg.scan.n_max, cfg.shooting_options());

    const std::string dir = out_dir.empty() ? cfg.output.dir : out_dir;
    std::filesystem::create_directories(dir);
    write_json(dir + "/ladder.json", ladder_json(lad));

    Catalog cat(catalog_dir);
    const std::string key = Catalog::key_of(cfg.params, cfg.tolerances);
    std::vector<std::pair<std::size_t, RDomainProfile>> series;
    for (const auto& e : lad.entries) {
        const auto& traj = e.classification.traj;
        const std::string stem = dir + "/n" + std::to_string(e.n);
        write_t_profile_csv(stem + "_t.csv", traj);
        const auto prof = to_r_domain(prob, traj, e.a_n, cfg.output.r_max);
        write_r_profile_csv(stem + "_r.csv", prof);
        series.emplace_back(e.n, prof);
        cat.store(CatalogEntry{key, e.n, e.a_n, stem + "_r.csv"});
    }
    write_ladder_plot_csv(dir + "/ladder_plot.csv", series);

    std::cout << ladder_json(lad).dump(2) << "\n";
    bool all_certified = !lad.entries.empty();
    for (const auto& e : lad.entries)
        if (!e.certified) all_certified = false;
    return all_certified ? 0 : 3;
}

int cmd_sweep(const std::string& config_path, double a0, int doublings,
              const std::string& out_dir) {
    const RunConfig cfg = load_or_default(config_path);
    const auto prob = make_canonical_problem(cfg.params);
    SweepOptions sopt;
    sopt.integrator.tol = cfg.tolerances.tol;
    sopt.integrator.delta_frac = cfg.tolerances.delta_frac;
    std::vector<double> grid;
    for (int k = 0; k <= doublings; ++k) grid.push_back(a0 * std::pow(2.0, k));
    const auto table = sweep(prob, grid, sopt);
    const auto rep = trend_check(prob, table);

    const std::string dir = out_dir.empty() ? cfg.output.dir : out_dir;
    std::filesystem::create_directories(dir);
    write_sweep_csv(dir + "/sweep.csv", table);
    nlohmann::json j;
    j["rows"] = sweep_json(table);
    j["trends_pass"] = rep.pass();
    j["qualifying"] = rep.qualifying;
    j["failures"] = rep.failures;
    write_json(dir + "/sweep.json", j);
    std::cout << j.dump(2) << "\n";
    return rep.pass() ? 0 : 3;
}

int cmd_convert(const std::string& config_path, double a, double r_max,
                const std::string& out_path) {
    const RunConfig cfg = load_or_default(config_path);
    const auto prob = make_canonical_problem(cfg.params);
    const auto traj = run_trajectory(prob, a, cfg);
    const auto prof = to_r_domain(prob, traj, a, r_max > 0.0 ? r_max : cfg.output.r_max);
    write_r_profile_csv(out_path.empty() ? "profile_r.csv" : out_path, prof);
    if (prof.truncated)
        std::fprintf(stderr, "warning: r_max beyond the certified startup region; truncated\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial sign-changing solutions of an exterior p-Laplacian problem"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir, catalog_dir;
    double a = 1.0, a0 = 200.0, r_max = 0.0;
    int n_max = -1, doublings = 6;

    auto* v = app.add_subcommand("validate", "check a config against the hypotheses");
    v->add_option("--config", config_path);

    auto* sh = app.add_subcommand("shoot", "classify a single slope");
    sh->add_option("--config", config_path);
    sh->add_option("--a", a)->required();
    sh->add_option("--out", out_path);

    auto* so = app.add_subcommand("solve", "compute the solution ladder");
    so->add_option("--config", config_path);
    so->add_option("--n-max", n_max);
    so->add_option("--out", out_dir);
    so->add_option("--catalog", catalog_dir);

    auto* sw = app.add_subcommand("sweep", "large-slope asymptotic sweep");
    sw->add_option("--config", config_path);
    sw->add_option("--a0", a0);
    sw->add_option("--doublings", doublings);
    sw->add_option("--out", out_dir);

    auto* co = app.add_subcommand("convert", "emit the r-domain profile for a slope");
    co->add_option("--config", config_path);
    co->add_option("--a", a)->required();
    co->add_option("--r-max", r_max);
    co->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (v->parsed()) return cmd_validate(config_path);
        if (sh->parsed()) return cmd_shoot(config_path, a, out_path);
        if (so->parsed()) return cmd_solve(config_path, n_max, out_dir, catalog_dir);
        if (sw->parsed()) return cmd_sweep(config_path, a0, doublings, out_dir);
        if (co->parsed()) return cmd_convert(config_path, a, r_max, out_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "validation: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
