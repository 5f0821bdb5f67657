#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "forcedosc/config.hpp"
#include "forcedosc/io.hpp"

using namespace forcedosc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

RunConfig parse(const std::string& text) { return parse_run_config_text(text); }

}  // namespace

TEST(Config, BundledConfigsParse) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(FORCEDOSC_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse(read_text_file(entry.path().string()))) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 8);
}

TEST(Config, DefaultsAndOverrides) {
  const auto cfg = parse(R"j({"system": {"type": "morse_chain"},
                              "checks": {"samples": 500},
                              "solver": {"tol": 1e-9, "method": "picard"},
                              "integrator": {"method": "rk4-fixed", "step": 0.005},
                              "seed_grid": 2})j");
  EXPECT_EQ(cfg.sampler.samples, 500);
  EXPECT_EQ(cfg.sampler.refine_iterations, 50);
  EXPECT_DOUBLE_EQ(cfg.solver.tol, 1e-9);
  EXPECT_EQ(cfg.solver.method, OrbitMethod::picard);
  EXPECT_EQ(cfg.integrator.method, IntegratorMethod::rk4_fixed);
  EXPECT_DOUBLE_EQ(cfg.integrator.step, 0.005);
  EXPECT_DOUBLE_EQ(cfg.solver.integrator.rtol, 1e-12);
  EXPECT_EQ(cfg.seed_grid, 2);
  const auto sys = build_system(cfg.system);
  EXPECT_EQ(sys.size(), 3);
  EXPECT_NEAR(sys.morse()->a, std::numbers::ln2, 1e-15);
}

TEST(Config, ExpressionNumbers) {
  const auto sys = build_system(R"j({"type": "morse_chain", "params": {"n": 1, "a": "2*ln(2)"}})j"_json);
  const double s = 1.0 + 2.0 * std::numbers::ln2;
  EXPECT_NEAR(sys.block(0).bounds()[0].lo, s, 1e-15);
  EXPECT_NEAR(sys.block(0).bounds()[0].hi, 2 * s, 1e-15);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("{"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "nope"}})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "typo": 1})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain", "params": {"gama": 1}}})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain", "params": {"a": 0.5}}})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "sweep": [{"param": "beta", "values": [1]}]})j"),
               ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "sweep": [{"param": "gamma", "values": []}]})j"),
               ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "solver": {"tol": -1}})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "integrator": {"method": "euler"}})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "morse_chain"}, "seed_grid": 0})j"), ConfigError);
  EXPECT_THROW(parse(R"j({"system": {"type": "pendulum_chain", "params": {"spacing": 1.5}}})j"), ConfigError);
  // Diagnostics mention the offending key.
  try {
    parse(R"j({"system": {"type": "morse_chain"}, "checks": {"sample": 10}})j");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'sample'"), std::string::npos);
  }
}

TEST(Config, GenericSystemMatchesHandWrittenFields) {
  const auto sys = build_system(R"j({
    "type": "generic", "period": 2.0, "params": {"k": 3.0},
    "blocks": [
      {"bounds": [[-1, 1]], "force": ["-k*q + sin(t)"], "friction": ["-0.5*p"], "friction_threshold": 2,
       "interaction": ["q[2,1] - q"]},
      {"kind": "disk_like_2d", "bounds": [[1, 3], [-1, 1]], "metric": [["1", "0"], ["0", "q1^2"]],
       "force": ["p2", "q1*q2"], "interaction": ["p[1]", "t"]}
    ]})j"_json);
  ASSERT_EQ(sys.size(), 2);
  EXPECT_DOUBLE_EQ(sys.period(), 2.0);
  EXPECT_EQ(sys.block(1).kind(), BlockKind::disk_like_2d);
  EXPECT_DOUBLE_EQ(sys.fields(0).friction.threshold, 2.0);
  const Vector x = vec({0.2, -0.3, 2.0, 0.5, 0.7, 0.1});
  const double t = 0.4;
  EXPECT_DOUBLE_EQ(sys.external_force(0, t, x)(0), -3.0 * 0.2 + std::sin(t));
  EXPECT_DOUBLE_EQ(sys.friction_force(0, t, x)(0), 0.15);
  EXPECT_DOUBLE_EQ(sys.interaction_force(0, t, x)(0), 2.0 - 0.2);
  EXPECT_DOUBLE_EQ(sys.external_force(1, t, x)(0), 0.1);
  EXPECT_DOUBLE_EQ(sys.external_force(1, t, x)(1), 2.0 * 0.5);
  EXPECT_DOUBLE_EQ(sys.interaction_force(1, t, x)(0), -0.3);
  EXPECT_DOUBLE_EQ(sys.interaction_force(1, t, x)(1), t);
  EXPECT_DOUBLE_EQ(sys.block(1).metric(vec({2.0, 0.5}))(1, 1), 4.0);
}

TEST(Config, GenericExpressionErrors) {
  auto build = [](const char* force) {
    nlohmann::json spec = R"j({"type": "generic", "blocks": [{"bounds": [[-1, 1]]}]})j"_json;
    spec["blocks"][0]["force"] = {force};
    return build_system(spec);
  };
  EXPECT_THROW(build("q +"), ConfigError);
  EXPECT_THROW(build("unknown_name"), ConfigError);
  EXPECT_THROW(build("q[1]"), ConfigError);  // indexed access is for interactions
  EXPECT_THROW(build("q2"), ConfigError);
  EXPECT_NO_THROW(build("-q + cos(2*pi*t)"));
}

TEST(Config, SweepParameterPaths) {
  const nlohmann::json spec = R"j({"type": "morse_chain", "params": {"n": 2}})j"_json;
  const auto patched = with_parameter(spec, "forcing.epsilon", 0.0);
  EXPECT_DOUBLE_EQ(patched["params"]["forcing"]["epsilon"].get<double>(), 0.0);
  EXPECT_EQ(patched["params"]["n"].get<int>(), 2);
  EXPECT_DOUBLE_EQ(with_parameter(spec, "gamma", 2.0)["params"]["gamma"].get<double>(), 2.0);
  EXPECT_THROW(with_parameter(spec, "forcing", 1.0), ConfigError);
  EXPECT_THROW(with_parameter(spec, "forcing.zeta", 1.0), ConfigError);
  const auto generic = R"j({"type": "generic", "params": {"k": 1}, "blocks": [{"bounds": [[-1, 1]], "force": ["k"]}]})j"_json;
  const auto sys = build_system(with_parameter(generic, "k", 5.0));
  EXPECT_DOUBLE_EQ(sys.external_force(0, 0.0, vec({0.0, 0.0}))(0), 5.0);
}

TEST(Config, SimulateSection) {
  const auto cfg = parse(R"j({"system": {"type": "forced_oscillator"},
      "simulate": {"t_span": [1, 3], "initial_state": [0.1, "pi/10"], "samples": 7, "block_exit_events": true}})j");
  EXPECT_DOUBLE_EQ(cfg.simulate.t0, 1.0);
  EXPECT_DOUBLE_EQ(cfg.simulate.t1, 3.0);
  ASSERT_TRUE(cfg.simulate.initial_state.has_value());
  EXPECT_DOUBLE_EQ((*cfg.simulate.initial_state)(1), std::numbers::pi / 10);
  EXPECT_EQ(cfg.simulate.samples, 7);
  EXPECT_TRUE(cfg.simulate.block_exit_events);
  EXPECT_THROW(parse(R"j({"system": {"type": "forced_oscillator"}, "simulate": {"t_span": [3, 1]}})j"), ConfigError);
}

TEST(Config, PendulumLists) {
  const auto sys = build_system(R"j({"type": "pendulum_chain",
      "params": {"n": 2, "pivots": [0, 5], "lengths": [1, 2], "gammas": [0.5, 0.7]}})j"_json);
  EXPECT_DOUBLE_EQ(sys.block(1).metric(vec({0.0}))(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(*sys.fields(1).friction.gamma_sup, -0.7);
}
