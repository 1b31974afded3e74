// forchlab: simulator and verification laboratory for generalized Forchheimer
// flows in heterogeneous porous media.
//
//   forchlab <simulate|verify|pair|odecheck|sweep> --config <path> --out <dir>
//            [--seed N] [--resolution N] [--tol X] [--refine]
//   forchlab report --report <path>
//
// Exit status: 0 when no FAIL verdict was produced, 1 on FAIL,
// 2 on configuration errors, 3 on runtime errors.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "forchlab/io.hpp"
#include "forchlab/runner.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    long long seed = -1;
    int resolution = 0;
    double tol = 0.0;
    bool refine = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config = true) {
    auto* c = cmd->add_option("--config", opt.config_path, "run configuration file");
    if (needs_config) c->required();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "override the config seed");
    cmd->add_option("--resolution", opt.resolution, "override the grid resolution");
    cmd->add_option("--tol", opt.tol, "override the verification slack tolerance");
    cmd->add_flag("--refine", opt.refine, "run the (h, dt) refinement stability pass");
}

forchlab::RunConfig load(const CommonOptions& opt) {
    forchlab::RunConfig cfg = forchlab::parse_config_file(opt.config_path);
    if (opt.seed >= 0) cfg.seed = std::uint64_t(opt.seed);
    if (opt.resolution > 0) {
        cfg.medium.resolution[0] = opt.resolution;
        cfg.medium.resolution[1] = opt.resolution;
    }
    if (opt.tol > 0.0) cfg.verify.slack_tol = opt.tol;
    if (opt.refine) cfg.verify.refine = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generalized Forchheimer flow simulator and estimate verifier"};
    app.require_subcommand(1);

    CommonOptions sim_opt, ver_opt, pair_opt, ode_opt, sweep_opt;
    std::string report_path;

    auto* sim = app.add_subcommand("simulate", "run the solver and write diagnostics");
    add_common(sim, sim_opt);
    auto* ver = app.add_subcommand("verify", "verify the single-solution estimates");
    add_common(ver, ver_opt);
    auto* pair = app.add_subcommand("pair", "continuous-dependence verification of a pair");
    add_common(pair, pair_opt);
    auto* ode = app.add_subcommand("odecheck", "run the differential-inequality battery");
    add_common(ode, ode_opt, false);
    auto* swp = app.add_subcommand("sweep", "verify over a parameter sweep");
    add_common(swp, sweep_opt);
    auto* rep = app.add_subcommand("report", "render a report JSON as text");
    rep->add_option("--report", report_path, "report.json path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return forchlab::run_simulate(load(sim_opt), sim_opt.out_dir);
        if (ver->parsed()) return forchlab::run_verify(load(ver_opt), ver_opt.out_dir);
        if (pair->parsed()) return forchlab::run_pair(load(pair_opt), pair_opt.out_dir);
        if (ode->parsed()) {
            forchlab::RunConfig cfg;
            if (!ode_opt.config_path.empty()) cfg = load(ode_opt);
            return forchlab::run_odecheck(cfg, ode_opt.out_dir);
        }
        if (swp->parsed()) return forchlab::run_sweep(load(sweep_opt), sweep_opt.out_dir);
        if (rep->parsed()) {
            std::string digest;
            const int code = forchlab::run_report(report_path, digest);
            std::cout << digest;
            return code;
        }
    } catch (const forchlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
