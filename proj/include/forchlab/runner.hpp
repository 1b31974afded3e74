#pragma once

/**
 * @file runner.hpp
 * @brief Subcommand orchestration: simulate, verify (with optional refinement
 *        pass), pair, odecheck, sweep, report. Each run owns its output
 *        directory; the exit code is 0 exactly when no FAIL verdict was
 *        produced.
 */

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "forchlab/mms.hpp"
#include "forchlab/report.hpp"

namespace forchlab {

namespace runner_detail {

inline BoundaryExtension boundary_from(const BoundarySection& b) {
    return BoundaryExtension::from_expressions(b.psi, b.psi_t, b.psi_tt);
}

inline Field initial_from(const RunConfig& cfg, const MediumSpec& medium,
                          const std::string& expr) {
    (void)cfg;
    const Expression e = Expression::parse(expr.empty() ? "0" : expr);
    return sample_field(medium.grid, [&](double x, double y) { return e.eval(x, y, 0.0); });
}

inline SolverConfig solver_config(const RunConfig& cfg) {
    SolverConfig sc;
    sc.dt = cfg.solver.dt;
    sc.t_end = cfg.solver.t_end;
    sc.picard_tol = cfg.solver.picard_tol;
    sc.picard_max = cfg.solver.picard_max;
    sc.linear_tol = cfg.solver.linear_tol;
    sc.output_stride = cfg.solver.output_stride;
    if (!cfg.solver.source.empty()) {
        const Expression e = Expression::parse(cfg.solver.source);
        sc.source = [e](double x, double y, double t) { return e.eval(x, y, t); };
    }
    return sc;
}

inline bool boundary_is_zero(const BoundaryExtension& b, const Grid& g, double t_end) {
    for (double t : {0.0, 0.5 * t_end, t_end})
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double x = g.lo[0] + frac * (g.hi[0] - g.lo[0]);
            const double y = g.dim == 2 ? g.lo[1] + frac * (g.hi[1] - g.lo[1]) : 0.0;
            if (std::fabs(b.Psi(x, y, t)) > 1e-15) return false;
        }
    return true;
}

inline VerifyOptions verify_options(const RunConfig& cfg) {
    VerifyOptions opt;
    opt.tol = cfg.verify.slack_tol;
    opt.tail_window = cfg.verify.tail_window;
    opt.t0 = cfg.verify.t0;
    bool tails = false;
    for (const auto& f : cfg.verify.families)
        if (f == "tails") tails = true;
    opt.tails = tails;
    return opt;
}

inline std::string timestamp_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

inline void write_manifest(RunManifest& m, const RunConfig& cfg, const Timer& timer,
                           const std::string& out_dir) {
    m.config_hash = fnv1a_hash(to_toml(cfg));
    m.wall_seconds = timer.seconds();
    m.timestamp = timestamp_now();
    write_file_atomic(out_dir + "/manifest.json", m.to_json().dump(2) + "\n");
}

struct VerifyProducts {
    SingleSeries series;
    std::vector<EstimateCheck> checks;
    EstimateConstants constants;
    PoincareEstimate cp;
};

inline VerifyProducts verify_one(const RunConfig& cfg, const Trajectory& traj) {
    VerifyProducts out;
    const MediumSpec& medium = *traj.medium;
    if (medium.model.linear_test_mode)
        throw ConfigError(
            "verification requires the nonlinear model class (linear_test_mode is "
            "for solver validation only)");
    out.series = trajectory_functionals(traj);
    out.cp = estimate_cp(medium, cfg.poincare.q, cfg.seed, cfg.poincare.safety_factor,
                         cfg.poincare.family_size);
    out.constants.a = medium.weights.a;
    out.constants.cp_used = out.cp.cp_used();
    VerifyOptions opt = verify_options(cfg);
    opt.zero_forcing =
        boundary_is_zero(traj.boundary, medium.grid, cfg.solver.t_end) &&
        cfg.solver.source.empty();
    out.checks = verify_single_solution(out.series, out.constants, opt);
    return out;
}

}  // namespace runner_detail

inline int run_simulate(const RunConfig& cfg, const std::string& out_dir) {
    namespace rd = runner_detail;
    rd::Timer timer;
    const MediumSpec medium = build_medium(cfg.medium);
    const BoundaryExtension boundary = rd::boundary_from(cfg.boundary);
    const Field p0 = rd::initial_from(cfg, medium, cfg.p0);
    const Trajectory traj = simulate(medium, p0, boundary, rd::solver_config(cfg));
    const SingleSeries series = trajectory_functionals(traj);

    write_file_atomic(out_dir + "/diagnostics.csv", single_series_csv(series));
    write_trajectory(traj, out_dir);
    RunManifest m;
    m.outputs = {"diagnostics.csv", "trajectory.bin", "trajectory.json"};
    rd::write_manifest(m, cfg, timer, out_dir);
    return 0;
}

inline int run_verify(const RunConfig& cfg, const std::string& out_dir) {
    namespace rd = runner_detail;
    namespace fs = std::filesystem;
    rd::Timer timer;
    const MediumSpec medium = build_medium(cfg.medium);
    const BoundaryExtension boundary = rd::boundary_from(cfg.boundary);

    Trajectory traj;
    bool fresh = false;
    if (fs::exists(out_dir + "/trajectory.bin") && fs::exists(out_dir + "/trajectory.json")) {
        traj = load_trajectory(out_dir, medium, boundary);
    } else {
        const Field p0 = rd::initial_from(cfg, medium, cfg.p0);
        traj = simulate(medium, p0, boundary, rd::solver_config(cfg));
        fresh = true;
    }

    rd::VerifyProducts products = rd::verify_one(cfg, traj);

    if (cfg.verify.refine) {
        RunConfig fine = cfg;
        fine.medium.resolution[0] *= 2;
        fine.medium.resolution[1] *= 2;
        fine.solver.dt *= 0.5;
        const MediumSpec medium2 = build_medium(fine.medium);
        const Field p02 = rd::initial_from(fine, medium2, fine.p0);
        const Trajectory traj2 =
            simulate(medium2, p02, rd::boundary_from(fine.boundary), rd::solver_config(fine));
        rd::VerifyProducts refined = rd::verify_one(fine, traj2);
        mark_refinement(products.checks, refined.checks);
    }

    VerificationReport report;
    report.add_constants(products.constants, &products.cp);
    report.settings["tail_window"] = cfg.verify.tail_window;
    report.settings["slack_tol"] = cfg.verify.slack_tol;
    report.settings["refine"] = cfg.verify.refine;
    report.settings["differenced_boundary"] = products.series.differenced_boundary;
    report.settings["stride_warning"] = products.series.stride_warning;
    for (const auto& c : products.checks) report.add(c);

    write_file_atomic(out_dir + "/diagnostics.csv", single_series_csv(products.series));
    write_file_atomic(out_dir + "/report.json", report.to_json().dump(2) + "\n");
    if (fresh) write_trajectory(traj, out_dir);

    RunManifest m;
    m.outputs = {"diagnostics.csv", "report.json"};
    if (fresh) {
        m.outputs.push_back("trajectory.bin");
        m.outputs.push_back("trajectory.json");
    }
    m.pass = report.pass;
    m.fail = report.fail;
    m.inconclusive = report.inconclusive;
    rd::write_manifest(m, cfg, timer, out_dir);
    return report.fail > 0 ? 1 : 0;
}

inline int run_pair(const RunConfig& cfg, const std::string& out_dir) {
    namespace rd = runner_detail;
    rd::Timer timer;
    const MediumSpec medium = build_medium(cfg.medium);
    if (medium.model.linear_test_mode)
        throw ConfigError("pair verification requires the nonlinear model class");

    const BoundaryExtension bA = rd::boundary_from(cfg.boundary);
    const BoundaryExtension bB =
        cfg.pair.enabled ? rd::boundary_from(cfg.pair.boundary) : bA;
    const Field p0A = rd::initial_from(cfg, medium, cfg.p0);
    const Field p0B = rd::initial_from(
        cfg, medium, cfg.pair.p0.empty() ? cfg.p0 : cfg.pair.p0);

    const SolverConfig sc = rd::solver_config(cfg);
    const Trajectory trajA = simulate(medium, p0A, bA, sc);
    const Trajectory trajB = simulate(medium, p0B, bB, sc);
    PairRun pr = make_pair_run(trajA, trajB);

    const PoincareEstimate cp = estimate_cp(medium, cfg.poincare.q, cfg.seed,
                                            cfg.poincare.safety_factor,
                                            cfg.poincare.family_size);
    EstimateConstants cst;
    cst.a = medium.weights.a;
    cst.cp_used = cp.cp_used();

    // calibration suite: this pair plus a zero-forcing pair with perturbed
    // initial data, which is where the d₃/d₄ inequalities actually bind
    std::vector<PairRun> suite;
    {
        SolverConfig cal = sc;
        cal.t_end = std::min(sc.t_end, 2.0);
        Field bump = p0A;
        const double pi = 3.14159265358979323846;
        for (int j = 0; j < medium.grid.n[1]; ++j)
            for (int i = 0; i < medium.grid.n[0]; ++i) {
                const auto xc = medium.grid.cell_center(i, j);
                const double xh = (xc[0] - medium.grid.lo[0]) /
                                  (medium.grid.hi[0] - medium.grid.lo[0]);
                bump(i, j) += 0.1 * std::sin(pi * xh);
            }
        const Trajectory calA = simulate(medium, p0A, bA, cal);
        const Trajectory calB = simulate(medium, bump, bA, cal);
        suite.push_back(make_pair_run(calA, calB));
    }
    calibrate_pair_constants(suite, cst, rd::verify_options(cfg));

    VerifyOptions opt = rd::verify_options(cfg);
    auto checks = verify_pair(pr, cst, opt);
    auto cal_checks = verify_pair(suite[0], cst, opt);
    for (auto& c : cal_checks) c.name = "calibration." + c.name;
    checks.insert(checks.end(), cal_checks.begin(), cal_checks.end());

    VerificationReport report;
    report.add_constants(cst, &cp);
    report.settings["tail_window"] = cfg.verify.tail_window;
    report.settings["slack_tol"] = cfg.verify.slack_tol;
    for (const auto& c : checks) report.add(c);

    write_file_atomic(out_dir + "/diagnostics_a.csv", single_series_csv(pr.sa));
    write_file_atomic(out_dir + "/diagnostics_b.csv", single_series_csv(pr.sb));
    write_file_atomic(out_dir + "/pair.csv", pair_series_csv(pr.ps));
    write_file_atomic(out_dir + "/report.json", report.to_json().dump(2) + "\n");

    RunManifest m;
    m.outputs = {"diagnostics_a.csv", "diagnostics_b.csv", "pair.csv", "report.json"};
    m.pass = report.pass;
    m.fail = report.fail;
    m.inconclusive = report.inconclusive;
    rd::write_manifest(m, cfg, timer, out_dir);
    return report.fail > 0 ? 1 : 0;
}

/** The documented synthetic battery for the appendix lemma checkers. */
inline std::vector<LemmaOutcome> odecheck_battery(double horizon = 40.0, size_t samples = 4001) {
    std::vector<LemmaOutcome> outcomes;
    const auto times = uniform_times(0.0, horizon, samples);
    const size_t n = times.size();

    {  // identity φ: y' = -y + 2, envelope y0 + M
        auto y = integrate_ode(3.0, [](double, double v) { return -v + 2.0; }, times);
        std::vector<double> h(n, 1.0), f(n, 2.0), M(n, 2.0);
        auto out = check_lemma_a1(y, h, f, PhiSpec::identity(), M);
        out.name = "a1.identity";
        outcomes.push_back(out);
    }
    {  // power φ(z) = z²: y' = -√y + 1 from 4, tail ≤ 1
        auto y = integrate_ode(
            4.0, [](double, double v) { return -std::sqrt(v) + 1.0; }, times);
        std::vector<double> h(n, 1.0), f(n, 1.0), M(n, 1.0);
        auto out = check_lemma_a1(y, h, f, PhiSpec::power(1.0, 2.0), M);
        out.name = "a1.power";
        outcomes.push_back(out);
    }
    {  // mixed φ with the tracked constant, oscillatory forcing
        const auto phi = PhiSpec::mixed(1.0, 1.5);
        auto y = integrate_ode(
            10.0, [&](double t, double v) { return -phi.phi_inv(v) + 2.0 + std::sin(t); },
            times);
        std::vector<double> f(n);
        for (size_t k = 0; k < n; ++k) f[k] = 2.0 + std::sin(times[k]);
        auto out = check_lemma_a2(y, f, phi);
        out.name = "a2.mixed";
        outcomes.push_back(out);
    }
    {  // weighted comparison with g → 1
        auto y = integrate_ode(0.0, [](double, double v) { return -v + 1.0; }, times);
        std::vector<double> h(n, 1.0), f(n, 1.0), g(n);
        for (size_t k = 0; k < n; ++k) g[k] = 1.0 + 1.0 / (1.0 + times[k]);
        auto out = check_lemma_a3(y, h, f, g);
        out.name = "a3.weighted";
        outcomes.push_back(out);
    }
    {  // slope bound for f = 2 + sin t
        ScalarTrajectory f;
        f.times = times;
        f.values.resize(n);
        for (size_t k = 0; k < n; ++k) f.values[k] = 2.0 + std::sin(times[k]);
        auto out = check_lemma_a4(f);
        out.name = "a4.slope";
        outcomes.push_back(out);
    }
    {  // slow decay f = 1/(1+t): β ≈ 0
        ScalarTrajectory f;
        f.times = times;
        f.values.resize(n);
        for (size_t k = 0; k < n; ++k) f.values[k] = 1.0 / (1.0 + times[k]);
        auto out = check_lemma_a4(f);
        out.name = "a4.decay";
        outcomes.push_back(out);
    }
    return outcomes;
}

inline int run_odecheck(const RunConfig& cfg, const std::string& out_dir) {
    namespace rd = runner_detail;
    rd::Timer timer;
    const double horizon = cfg.solver.t_end > 1.0 ? cfg.solver.t_end : 40.0;
    const size_t samples = size_t(std::max(801.0, horizon / cfg.solver.dt + 1));
    auto outcomes = odecheck_battery(horizon, samples);

    VerificationReport report;
    report.settings["horizon"] = horizon;
    report.settings["samples"] = samples;
    for (const auto& o : outcomes) report.add(o);

    write_file_atomic(out_dir + "/report.json", report.to_json().dump(2) + "\n");
    RunManifest m;
    m.outputs = {"report.json"};
    m.pass = report.pass;
    m.fail = report.fail;
    m.inconclusive = report.inconclusive;
    rd::write_manifest(m, cfg, timer, out_dir);
    return report.fail > 0 ? 1 : 0;
}

namespace runner_detail {

inline void set_sweep_parameter(RunConfig& cfg, const std::string& key, double value) {
    if (key == "solver.dt") cfg.solver.dt = value;
    else if (key == "solver.t_end") cfg.solver.t_end = value;
    else if (key == "medium.resolution") {
        cfg.medium.resolution[0] = int(value);
        cfg.medium.resolution[1] = int(value);
    } else if (key == "seed") cfg.seed = std::uint64_t(value);
    else if (key == "medium.phi") cfg.medium.phi_value = value;
    else if (key == "poincare.safety_factor") cfg.poincare.safety_factor = value;
    else throw ConfigError("sweep parameter '" + key + "' is not sweepable");
}

}  // namespace runner_detail

inline int run_sweep(const RunConfig& cfg, const std::string& out_dir) {
    namespace rd = runner_detail;
    if (cfg.sweep.parameter.empty() || cfg.sweep.values.empty())
        throw ConfigError("sweep requires [sweep] parameter and values");
    rd::Timer timer;

    int workers = 2;
    if (const char* env = std::getenv("FORCHLAB_WORKERS")) workers = std::max(1, std::atoi(env));
    workers = std::min<int>(workers, int(cfg.sweep.values.size()));

    std::vector<int> codes(cfg.sweep.values.size(), 0);
    std::vector<std::string> dirs(cfg.sweep.values.size());
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= cfg.sweep.values.size()) return;
            RunConfig sub = cfg;
            sub.sweep = {};
            rd::set_sweep_parameter(sub, cfg.sweep.parameter, cfg.sweep.values[k]);
            char name[32];
            std::snprintf(name, sizeof(name), "sub_%03zu", k);
            dirs[k] = out_dir + "/" + name;
            try {
                codes[k] = run_verify(sub, dirs[k]);
            } catch (const std::exception&) {
                codes[k] = 3;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();

    nlohmann::json agg;
    agg["schema_version"] = kSchemaVersion;
    agg["parameter"] = cfg.sweep.parameter;
    nlohmann::json runs = nlohmann::json::array();
    int worst = 0;
    for (size_t k = 0; k < cfg.sweep.values.size(); ++k) {
        runs.push_back({{"value", cfg.sweep.values[k]},
                        {"dir", dirs[k]},
                        {"exit_code", codes[k]}});
        worst = std::max(worst, codes[k]);
    }
    agg["runs"] = runs;
    write_file_atomic(out_dir + "/aggregate.json", agg.dump(2) + "\n");

    RunManifest m;
    m.outputs = {"aggregate.json"};
    rd::write_manifest(m, cfg, timer, out_dir);
    return worst;
}

inline int run_report(const std::string& report_path, std::string& digest_out) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(report_path));
    VerificationReport rep;
    rep.constants = j.value("constants", nlohmann::json::object());
    rep.settings = j.value("settings", nlohmann::json::object());
    for (const auto& e : j.at("entries")) {
        rep.entries.push_back(e);
        const std::string st = e.at("status").get<std::string>();
        if (st == "PASS") ++rep.pass;
        else if (st == "FAIL") ++rep.fail;
        else ++rep.inconclusive;
    }
    digest_out = rep.digest();
    return rep.fail > 0 ? 1 : 0;
}

}  // namespace forchlab
