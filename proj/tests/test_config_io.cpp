#include "catch_amalgamated.hpp"

#include <filesystem>

#include "forchlab/io.hpp"
#include "forchlab/runner.hpp"

using namespace forchlab;
using Catch::Approx;

namespace {

const char* kMinimalConfig = R"CFG(
seed = 7

[medium]
preset = "homogeneous"
dim = 1
resolution = [32]
phi = 0.8

[model]
alphas = [0.0, 1.0]
coeffs = [1.0, 1.0]

[boundary]
psi = "0"

[solver]
dt = 0.05
t_end = 1.0
)CFG";

std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("forchlab_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("parse_config: minimal config with defaults echoed") {
    auto cfg = parse_config_text(kMinimalConfig);
    CHECK(cfg.seed == 7);
    CHECK(cfg.medium.preset == "homogeneous");
    CHECK(cfg.medium.resolution[0] == 32);
    CHECK(cfg.solver.dt == Approx(0.05));
    CHECK(cfg.solver.picard_tol == Approx(1e-10));  // default filled
    CHECK(cfg.verify.tail_window == Approx(0.25));
    CHECK(cfg.poincare.safety_factor == Approx(1.1));
}

TEST_CASE("parse_config: errors name the offending field") {
    // porosity out of (0, 1]
    std::string bad_phi = kMinimalConfig;
    bad_phi.replace(bad_phi.find("phi = 0.8"), 9, "phi = 1.5");
    CHECK_THROWS_WITH(parse_config_text(bad_phi),
                      Catch::Matchers::ContainsSubstring("porosity"));

    // exponents out of order, message cites the ordering requirement
    std::string bad_alpha = kMinimalConfig;
    bad_alpha.replace(bad_alpha.find("alphas = [0.0, 1.0]"), 19, "alphas = [0.0, 2.0, 1.0]");
    bad_alpha.replace(bad_alpha.find("coeffs = [1.0, 1.0]"), 19, "coeffs = [1.0, 1, 1.0]");
    CHECK_THROWS_WITH(parse_config_text(bad_alpha),
                      Catch::Matchers::ContainsSubstring("alpha_0=0<alpha_1<...<alpha_N"));

    // unknown field
    CHECK_THROWS_WITH(parse_config_text(std::string(kMinimalConfig) + "\nbogus = 1\n"),
                      Catch::Matchers::ContainsSubstring("bogus"));

    // malformed line carries position
    try {
        parse_config_text("[solver]\ndt 0.1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }

    // broken expression names the field
    std::string bad_expr = kMinimalConfig;
    bad_expr.replace(bad_expr.find("psi = \"0\""), 9, "psi = \"sin(\"");
    CHECK_THROWS_WITH(parse_config_text(bad_expr),
                      Catch::Matchers::ContainsSubstring("boundary.psi"));
}

TEST_CASE("config round trip: parse(to_toml(cfg)) == cfg") {
    auto cfg = parse_config_text(kMinimalConfig);
    auto again = parse_config_text(to_toml(cfg));
    CHECK(again == cfg);

    // with optional sections engaged
    std::string with_pair = std::string(kMinimalConfig) +
                            "\n[pair]\npsi = \"exp(-t)*x\"\np0 = \"x\"\n"
                            "\n[sweep]\nparameter = \"solver.dt\"\nvalues = [0.05, 0.025]\n";
    auto cfg2 = parse_config_text(with_pair);
    auto again2 = parse_config_text(to_toml(cfg2));
    CHECK(again2 == cfg2);
}

TEST_CASE("format_double: shortest round trip") {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-10, -7.25, 0.0, 1e300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("runner: simulate produces loadable checkpoints") {
    auto cfg = parse_config_text(kMinimalConfig);
    const std::string dir = temp_dir("sim");
    CHECK(run_simulate(cfg, dir) == 0);
    CHECK(std::filesystem::exists(dir + "/diagnostics.csv"));
    CHECK(std::filesystem::exists(dir + "/trajectory.bin"));
    CHECK(std::filesystem::exists(dir + "/manifest.json"));

    const MediumSpec medium = build_medium(cfg.medium);
    auto boundary = BoundaryExtension::from_expressions(cfg.boundary.psi);
    auto traj = load_trajectory(dir, medium, boundary);
    CHECK(traj.states.size() >= 2);
    CHECK(traj.states.front().t == 0.0);
}

TEST_CASE("runner: determinism contract (byte-identical outputs)") {
    const char* config = R"CFG(
seed = 11

[medium]
preset = "layered"
dim = 1
resolution = [24]
phi_regions = [0.4, 0.9]

[model]
alphas = [0.0, 1.0]
coeff_regions = [[1.0, 2.0], [1.0, 4.0]]

[boundary]
psi = "exp(-t)*x"
psi_t = "-exp(-t)*x"
psi_tt = "exp(-t)*x"

[initial]
p0 = "x"

[solver]
dt = 0.05
t_end = 4.0
output_stride = 2

[verify]
families = ["single", "tails"]
)CFG";
    auto cfg = parse_config_text(config);
    const std::string d1 = temp_dir("det1");
    const std::string d2 = temp_dir("det2");
    const int c1 = run_verify(cfg, d1);
    const int c2 = run_verify(cfg, d2);
    CHECK(c1 == 0);
    CHECK(c1 == c2);
    CHECK(read_text_file(d1 + "/diagnostics.csv") == read_text_file(d2 + "/diagnostics.csv"));
    CHECK(read_text_file(d1 + "/report.json") == read_text_file(d2 + "/report.json"));

    // CSV column contract
    const std::string csv = read_text_file(d1 + "/diagnostics.csv");
    CHECK(csv.rfind(kSingleCsvHeader, 0) == 0);
}

TEST_CASE("runner: exit-status contract on a constructed FAIL case") {
    auto cfg = parse_config_text(kMinimalConfig);
    cfg.p0 = "sin(pi*x)";
    const std::string dir = temp_dir("fail");
    CHECK(run_simulate(cfg, dir) == 0);

    // tamper with a stored state: inflate the middle snapshot so the
    // zero-forcing energy decay is violated on reload
    {
        const MediumSpec medium = build_medium(cfg.medium);
        auto boundary = BoundaryExtension::from_expressions(cfg.boundary.psi);
        auto traj = load_trajectory(dir, medium, boundary);
        REQUIRE(traj.states.size() >= 5);
        auto& st = traj.states[traj.states.size() / 2];
        for (auto& v : st.p.v) v *= 100.0;
        write_trajectory(traj, dir);
    }
    const int code = run_verify(cfg, dir);  // reuses the tampered trajectory
    CHECK(code == 1);

    // the report carries the first violation
    const auto j = nlohmann::json::parse(read_text_file(dir + "/report.json"));
    CHECK(j.at("summary").at("fail").get<int>() > 0);
    bool found = false;
    for (const auto& e : j.at("entries"))
        if (e.at("status") == "FAIL" && e.contains("first_violation_time")) found = true;
    CHECK(found);
}

TEST_CASE("runner: odecheck battery all PASS") {
    RunConfig cfg;
    const std::string dir = temp_dir("ode");
    CHECK(run_odecheck(cfg, dir) == 0);
    const auto j = nlohmann::json::parse(read_text_file(dir + "/report.json"));
    CHECK(j.at("summary").at("fail").get<int>() == 0);
    CHECK(j.at("summary").at("pass").get<int>() >= 6);
}

TEST_CASE("runner: report digest renders and preserves the exit contract") {
    RunConfig cfg;
    const std::string dir = temp_dir("digest");
    run_odecheck(cfg, dir);
    std::string digest;
    const int code = run_report(dir + "/report.json", digest);
    CHECK(code == 0);
    CHECK(digest.find("PASS") != std::string::npos);
    CHECK(digest.find("a2.mixed") != std::string::npos);
}

TEST_CASE("runner: pair with identical configs is all-PASS with zero difference") {
    const char* config = R"CFG(
seed = 3

[medium]
preset = "homogeneous"
dim = 1
resolution = [24]
phi = 0.8

[model]
alphas = [0.0, 1.0]
coeffs = [1.0, 1.0]

[boundary]
psi = "0"

[initial]
p0 = "sin(pi*x)"

[solver]
dt = 0.05
t_end = 1.5
)CFG";
    auto cfg = parse_config_text(config);
    const std::string dir = temp_dir("pair");
    CHECK(run_pair(cfg, dir) == 0);
    const std::string pair_csv = read_text_file(dir + "/pair.csv");
    CHECK(pair_csv.rfind(kPairCsvHeader, 0) == 0);
    // Pbar column is identically zero
    const auto j = nlohmann::json::parse(read_text_file(dir + "/report.json"));
    CHECK(j.at("summary").at("fail").get<int>() == 0);
}

TEST_CASE("runner: sweep runs all values and aggregates", "[slow]") {
    const char* config = R"CFG(
seed = 5

[medium]
preset = "homogeneous"
dim = 1
resolution = [16]
phi = 0.8

[model]
alphas = [0.0, 1.0]
coeffs = [1.0, 1.0]

[boundary]
psi = "0"

[initial]
p0 = "sin(pi*x)"

[solver]
dt = 0.1
t_end = 1.0

[sweep]
parameter = "solver.dt"
values = [0.1, 0.05]
)CFG";
    auto cfg = parse_config_text(config);
    const std::string dir = temp_dir("sweep");
    CHECK(run_sweep(cfg, dir) == 0);
    const auto agg = nlohmann::json::parse(read_text_file(dir + "/aggregate.json"));
    CHECK(agg.at("runs").size() == 2);
    for (const auto& r : agg.at("runs")) CHECK(r.at("exit_code").get<int>() == 0);
}

TEST_CASE("runner: verify refuses the linear test mode") {
    auto cfg = parse_config_text(kMinimalConfig);
    cfg.medium.alphas = {0.0};
    cfg.medium.coeff_values = {1.0};
    cfg.medium.linear_test_mode = true;
    const std::string dir = temp_dir("linrefuse");
    CHECK_THROWS_AS(run_verify(cfg, dir), ConfigError);
}
