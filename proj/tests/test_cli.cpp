#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "forcedosc/io.hpp"
#include "forcedosc/systems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = FORCEDOSC_CLI_PATH;
const std::string kConfigs = FORCEDOSC_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "forcedosc_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = kCli + " " + args + " > " + (log / "stdout.txt").string() + " 2> " +
                          (log / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return kConfigs + "/" + name + ".json"; }

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  forcedosc::write_text_file(p.string(), text);
  return p;
}

json load(const fs::path& p) { return json::parse(forcedosc::read_text_file(p.string())); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(forcedosc::read_text_file(p.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(CliCheck, MorseChainApplies) {
  const auto dir = scratch("check_morse");
  ASSERT_EQ(run("check --config " + config("morse_chain") + " --out " + dir.string(), dir), 0);
  const json r = load(dir / "report.json");
  EXPECT_TRUE(r["verdict"]["applies"].get<bool>());
  EXPECT_EQ(r["verdict"]["index"].get<int>(), -1);
  for (const char* name : {"H1", "H2", "energy_cap", "boundary_exit", "morse_condition"}) {
    ASSERT_TRUE(r["checks"].contains(name)) << name;
    EXPECT_TRUE(r["checks"][name]["pass"].get<bool>()) << name;
    EXPECT_GT(r["checks"][name]["margin"].get<double>(), 0.0) << name;
  }
  EXPECT_EQ(r["checks"]["morse_condition"]["details"]["parts"].size(), 6u);
  EXPECT_EQ(r["caps"].size(), 3u);
  const json m = load(dir / "manifest.json");
  EXPECT_EQ(m["command"].get<std::string>(), "check");
  const std::string text = forcedosc::read_text_file(config("morse_chain"));
  EXPECT_EQ(m["config_hash"].get<std::string>(), "fnv1a64:" + forcedosc::hex64(forcedosc::fnv1a64(text)));
}

TEST(CliCheck, UndampedPendulumFailsH1) {
  const auto dir = scratch("check_undamped");
  ASSERT_EQ(run("check --config " + config("pendulum_no_friction") + " --out " + dir.string(), dir), 1);
  const json r = load(dir / "report.json");
  EXPECT_FALSE(r["verdict"]["applies"].get<bool>());
  EXPECT_FALSE(r["checks"]["H1"]["pass"].get<bool>());
  bool names_h1 = false;
  for (const auto& reason : r["verdict"]["reasons"]) names_h1 = names_h1 || reason.get<std::string>().rfind("H1:", 0) == 0;
  EXPECT_TRUE(names_h1);
}

TEST(CliCheck, MalformedConfigExitsWithDiagnostics) {
  const auto dir = scratch("check_malformed");
  const auto cfg = write_config(dir, R"({"system": {"type": "morse_chain",)");
  EXPECT_EQ(run("check --config " + cfg.string() + " --out " + dir.string(), dir), 2);
  const std::string err = forcedosc::read_text_file((dir / "stderr.txt").string());
  EXPECT_NE(err.find("malformed JSON"), std::string::npos);
  EXPECT_NE(err.find("line"), std::string::npos);
}

TEST(CliCheck, UsageErrors) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run("", dir), 2);
  EXPECT_EQ(run("check", dir), 2);
  EXPECT_EQ(run("check --config " + (dir / "missing.json").string(), dir), 2);
  EXPECT_EQ(run("--version", dir), 0);
}

TEST(CliCheck, ReportsAreByteIdentical) {
  const auto a = scratch("determinism_a");
  const auto b = scratch("determinism_b");
  ASSERT_EQ(run("find-orbit --config " + config("pendulum_chain") + " --out " + a.string(), a), 0);
  ASSERT_EQ(run("find-orbit --jobs 4 --config " + config("pendulum_chain") + " --out " + b.string(), b), 0);
  for (const char* f : {"report.json", "orbit.json", "trajectory.csv", "manifest.json"}) {
    EXPECT_EQ(forcedosc::read_text_file((a / f).string()), forcedosc::read_text_file((b / f).string())) << f;
  }
}

TEST(CliSimulate, FreeParticleIsLinear) {
  const auto dir = scratch("sim_free");
  ASSERT_EQ(run("simulate --config " + config("free_particle") + " --out " + dir.string(), dir), 0);
  const auto rows = read_csv(dir / "trajectory.csv");
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "q_1", "p_1", "T_1", "event"}));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double t = std::stod(rows[k][0]);
    EXPECT_NEAR(std::stod(rows[k][1]), 1.0 + 0.5 * t, 1e-9);
    EXPECT_DOUBLE_EQ(std::stod(rows[k][2]), 0.5);
  }
  EXPECT_DOUBLE_EQ(std::stod(rows.back()[0]), 5.0);
}

TEST(CliSimulate, MorseTrajectoryStaysBelowCaps) {
  const auto dir = scratch("sim_morse");
  ASSERT_EQ(run("check --config " + config("morse_chain") + " --out " + dir.string(), dir), 0);
  std::vector<double> caps;
  const json report = load(dir / "report.json");
  for (const auto& c : report["caps"]) caps.push_back(c["c"].get<double>());
  ASSERT_EQ(run("simulate --config " + config("morse_chain") + " --out " + dir.string(), dir), 0);
  const auto rows = read_csv(dir / "trajectory.csv");
  ASSERT_EQ(rows[0].size(), 1u + 6u + 3u + 1u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(std::stod(rows[k][7 + i]), caps[i]);
    if (k + 1 < rows.size()) {
      EXPECT_TRUE(rows[k].back().empty());
    }
  }
  // The run ends either at t = 10 or at a recorded block exit.
  EXPECT_TRUE(rows.back().back().rfind("block_exit_", 0) == 0 || std::stod(rows.back()[0]) == 10.0);
}

TEST(CliSimulate, StateOutsideBlocksFails) {
  const auto dir = scratch("sim_outside");
  const auto cfg = write_config(dir, R"({"system": {"type": "forced_oscillator"},
                                        "simulate": {"initial_state": [3.0, 0.0]}})");
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + dir.string(), dir), 2);
}

TEST(CliFindOrbit, LinearResponse) {
  const auto dir = scratch("orbit_linear");
  ASSERT_EQ(run("find-orbit --force --config " + config("forced_oscillator") + " --out " + dir.string(), dir), 0);
  const json o = load(dir / "orbit.json");
  const auto exact = forcedosc::linear_response({});
  const auto& r = o["result"];
  EXPECT_TRUE(r["converged"].get<bool>());
  EXPECT_NEAR(r["fixed_point"][0].get<double>(), exact.x0, 1e-6);
  EXPECT_NEAR(r["fixed_point"][1].get<double>(), exact.p0, 1e-6);
  EXPECT_LT(r["residual"].get<double>(), 1e-10);
  EXPECT_FALSE(r["residual_history"].empty());
  EXPECT_TRUE(o["verdict"]["forced"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
}

TEST(CliFindOrbit, RequiresConditionsUnlessForced) {
  const auto dir = scratch("orbit_refused");
  EXPECT_EQ(run("find-orbit --config " + config("pendulum_no_friction") + " --out " + dir.string(), dir), 1);
  EXPECT_FALSE(fs::exists(dir / "orbit.json"));
  const int forced = run("find-orbit --force --config " + config("pendulum_no_friction") + " --out " + dir.string(), dir);
  EXPECT_TRUE(forced == 0 || forced == 1);
  const json o = load(dir / "orbit.json");
  EXPECT_FALSE(o["verdict"]["applies"].get<bool>());
  EXPECT_TRUE(o["verdict"]["forced"].get<bool>());
}

TEST(CliFindOrbit, MorseChainCertified) {
  const auto dir = scratch("orbit_morse");
  ASSERT_EQ(run("find-orbit --seed-grid 2 --jobs 2 --tol 1e-9 --config " + config("morse_chain") + " --out " +
                    dir.string(),
                dir),
            0);
  const json o = load(dir / "orbit.json");
  EXPECT_EQ(o["seeds"].size(), 8u);
  EXPECT_EQ(o["seed_grid"].get<int>(), 2);
  EXPECT_LT(o["result"]["residual"].get<double>(), 1e-9);
  const json margins = o["result"]["interior_margins"];
  ASSERT_EQ(margins.size(), 3u);
  for (const auto& m : margins) {
    EXPECT_GT(m["boundary"].get<double>(), 0.0);
    EXPECT_GT(m["cap"].get<double>(), 0.0);
  }
}

TEST(CliSweep, GammaAxisAllApply) {
  const auto a = scratch("sweep_gamma_a");
  const auto b = scratch("sweep_gamma_b");
  ASSERT_EQ(run("sweep --config " + config("morse_sweep_gamma") + " --out " + a.string(), a), 0);
  ASSERT_EQ(run("sweep --jobs 3 --config " + config("morse_sweep_gamma") + " --out " + b.string(), b), 0);
  EXPECT_EQ(forcedosc::read_text_file((a / "sweep.csv").string()),
            forcedosc::read_text_file((b / "sweep.csv").string()));
  const auto rows = read_csv(a / "sweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][1], "gamma");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k][2], "true");
    EXPECT_EQ(rows[k][3], "-1");
    EXPECT_EQ(rows[k][5], "true");
    EXPECT_TRUE(fs::exists(a / ("point_000" + std::to_string(k)) / "report.json"));
  }
}

TEST(CliSweep, UnforcedPointDoesNotApply) {
  const auto dir = scratch("sweep_eps");
  ASSERT_EQ(run("sweep --config " + config("morse_sweep_epsilon") + " --out " + dir.string(), dir), 0);
  const auto rows = read_csv(dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][1], "0");
  EXPECT_EQ(rows[1][2], "false");
  EXPECT_EQ(rows[2][2], "true");
}

TEST(CliSweep, EmptyAxisListIsUsageError) {
  const auto dir = scratch("sweep_empty");
  EXPECT_EQ(run("sweep --config " + config("morse_chain") + " --out " + dir.string(), dir), 2);
}

TEST(CliReport, SummarizesRunDirectory) {
  const auto dir = scratch("report");
  EXPECT_EQ(run("report --out " + dir.string(), dir), 2);
  ASSERT_EQ(run("find-orbit --config " + config("morse_chain") + " --out " + dir.string(), dir), 0);
  ASSERT_EQ(run("report --out " + dir.string(), dir), 0);
  const std::string out = forcedosc::read_text_file((dir / "stdout.txt").string());
  EXPECT_NE(out.find("index -1"), std::string::npos);
  EXPECT_NE(out.find("certified"), std::string::npos);
}
