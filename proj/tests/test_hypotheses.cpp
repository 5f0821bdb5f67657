#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "forcedosc/dynamics.hpp"
#include "forcedosc/hypotheses.hpp"

using namespace forcedosc;

namespace {

CoupledSystem scalar_system(ForceField force, FrictionField friction) {
  BlockFields f{std::move(force), std::move(friction), {}};
  return CoupledSystem("scalar", {ChartBlock::interval(-1, 1)}, {f}, 1.0);
}

MorseChainParams morse(int n, double epsilon = 0.05) {
  MorseChainParams p;
  p.n = n;
  p.forcing = default_morse_forcing(epsilon, 1.5, p.period, p.delta, p.a);
  return p;
}

PendulumChainParams pendulums(int n, double kappa, double gravity = 9.81) {
  PendulumChainParams p;
  for (int i = 0; i < n; ++i) {
    p.pivots.push_back(3.0 * i);
    p.lengths.push_back(1.0);
    p.masses.push_back(1.0);
    p.gammas.push_back(0.5);
  }
  p.kappa = kappa;
  p.gravity = gravity;
  p.pivot_accel_amplitude = 0.2;
  return p;
}

SamplerConfig fast_sampler() {
  SamplerConfig s;
  s.samples = 3000;
  return s;
}

std::vector<double> gamma_sups(const CoupledSystem& sys) {
  std::vector<double> out;
  for (int i = 0; i < sys.size(); ++i) out.push_back(*sys.fields(i).friction.gamma_sup);
  return out;
}

}  // namespace

TEST(CheckH1, ViscousFrictionPasses) {
  const auto r = check_H1(scalar_system({}, viscous_friction(0.5)), 0, 1.0, 100.0, fast_sampler());
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.details["sup"].get<double>(), -0.5, 1e-14);
}

TEST(CheckH1, ZeroFrictionFails) {
  FrictionField none{[](double, const Vector& q, const Vector&) { return Vector::Zero(q.size()); }, 1.0, {}};
  const auto r = check_H1(scalar_system({}, none), 0, 1.0, 100.0, fast_sampler());
  EXPECT_FALSE(r.pass);
  EXPECT_DOUBLE_EQ(r.details["sup"].get<double>(), 0.0);
  EXPECT_LE(r.margin, 0.0);
}

TEST(CheckH1, PerturbedFrictionStaysBelowBound) {
  FrictionField perturbed{[](double, const Vector&, const Vector& p) {
                            return Vector::Constant(1, -0.5 * p(0) + 0.1 * std::sin(p(0)));
                          },
                          100.0,
                          {}};
  const double energy_max = 1e4;
  const auto r = check_H1(scalar_system({}, perturbed), 0, 100.0, energy_max, fast_sampler());
  EXPECT_TRUE(r.pass);
  const double sup = r.details["sup"].get<double>();
  EXPECT_LE(sup, -0.49);
  // Brute-force grid over |p| in [10, 100] (the quotient is even in p).
  double brute = -1.0;
  for (int k = 0; k <= 200000; ++k) {
    const double p = 10.0 + 90.0 * k / 200000.0;
    brute = std::max(brute, -0.5 + 0.1 * std::sin(p) / p);
  }
  EXPECT_NEAR(sup, brute, 1e-6);
}

TEST(CheckH1, EmptySampleSetIsConfigError) {
  EXPECT_THROW(check_H1(scalar_system({}, viscous_friction(0.5)), 0, 1.0, 1.0, fast_sampler()), ConfigError);
}

TEST(CheckH1, SupremumMonotoneInThreshold) {
  FrictionField mixed{[](double, const Vector&, const Vector& p) {
                        return Vector::Constant(1, -0.5 * p(0) + 0.3 * std::cos(p(0)));
                      },
                      1.0,
                      {}};
  const auto sys = scalar_system({}, mixed);
  double prev = std::numeric_limits<double>::infinity();
  for (double d : {1.0, 4.0, 16.0, 64.0}) {
    const double sup = check_H1(sys, 0, d, 1e4, fast_sampler()).details["sup"].get<double>();
    EXPECT_LE(sup, prev + 1e-12);
    prev = sup;
  }
}

TEST(EnergyCaps, ClosedFormExamples) {
  SamplerConfig s;
  EXPECT_DOUBLE_EQ(energy_cap_formula(1.0, 1.0, -0.5, s.cap_safety), 9.0);
  EXPECT_DOUBLE_EQ(energy_cap_formula(3.0, 0.0, -0.5, s.cap_safety), 2.25 * 3.0);
  EXPECT_DOUBLE_EQ(energy_cap_formula(10.0, 2.0, -1.0, s.cap_safety), 22.5);
  EXPECT_THROW(energy_cap_formula(1.0, 1.0, 0.0, s.cap_safety), HypothesisError);
}

TEST(EnergyCaps, SatisfyLemmaInequality) {
  const auto sys = make_morse_chain(morse(3));
  const auto caps = derive_energy_caps(sys, gamma_sups(sys), fast_sampler());
  for (std::size_t i = 0; i < caps.c.size(); ++i) {
    const double lhs = (caps.bounds[i].force + caps.bounds[i].interaction) / std::sqrt(caps.c[i]) + caps.gamma_sup[i];
    EXPECT_LT(lhs, 0.0);
    EXPECT_GE(caps.c[i], caps.thresholds[i]);
  }
}

TEST(CheckEnergyCap, DissipationOnly) {
  const auto sys = scalar_system({}, viscous_friction(0.5));
  const auto r = check_energy_cap(sys, {4.0}, fast_sampler());
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.witness.value, -2.0 * 0.5 * 4.0, 1e-12);
}

TEST(CheckEnergyCap, MorseChainCapsPass) {
  const auto sys = make_morse_chain(morse(3));
  const auto caps = derive_energy_caps(sys, gamma_sups(sys), fast_sampler());
  EXPECT_TRUE(check_energy_cap(sys, caps.c, fast_sampler()).pass);
}

TEST(CheckEnergyCap, TooSmallCapFailsWithReproducibleWitness) {
  ForceField strong{[](double t, const Vector&, const Vector&) {
                      return Vector::Constant(1, 5.0 * std::cos(2 * std::numbers::pi * t));
                    },
                    {}};
  const auto sys = scalar_system(strong, viscous_friction(0.5, 2.0));
  const auto r = check_energy_cap(sys, {1.0}, fast_sampler());  // d / 2
  ASSERT_FALSE(r.pass);
  const auto& w = r.witness;
  const Vector p = sys.layout().p(w.state, 0);
  const double again = 2.0 * metric_inner(sys.block(0), sys.layout().q(w.state, 0), sys.total_force(0, w.t, w.state), p);
  EXPECT_DOUBLE_EQ(again, w.value);
  EXPECT_GT(w.value, 0.0);
}

TEST(CheckBoundaryExit, SinglePendulumPasses) {
  const auto sys = make_pendulum_chain(pendulums(1, 0.0));
  const auto r = check_boundary_exit(sys, {100.0}, fast_sampler());
  EXPECT_TRUE(r.pass);
  // |h''| cos(pi/2) vanishes, so the outward acceleration is g / l exactly.
  EXPECT_NEAR(r.witness.value, 9.81, 1e-9);
}

TEST(CheckBoundaryExit, StablePendulumFails) {
  const auto sys = make_pendulum_chain(pendulums(1, 0.0, -9.81));
  EXPECT_FALSE(check_boundary_exit(sys, {100.0}, fast_sampler()).pass);
}

TEST(CheckBoundaryExit, MorseChainAllFaces) {
  const auto sys = make_morse_chain(morse(2));
  const auto caps = derive_energy_caps(sys, gamma_sups(sys), fast_sampler());
  const auto r = check_boundary_exit(sys, caps.c, fast_sampler());
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.details["parts"].size(), 4u);
  for (const auto& part : r.details["parts"]) EXPECT_TRUE(part["pass"].get<bool>());
}

TEST(CheckBoundaryExit, PendulumChainAnyRepulsion) {
  for (double kappa : {0.0, 0.1, 1.0, 10.0}) {
    const auto sys = make_pendulum_chain(pendulums(3, kappa));
    const auto r = check_boundary_exit(sys, {1000.0, 1000.0, 1000.0}, fast_sampler());
    EXPECT_TRUE(r.pass) << "kappa=" << kappa;
    EXPECT_GE(r.witness.value, 9.81 - 1e-9);
  }
}

TEST(CheckMorseCondition, DefaultForcingPasses) {
  const auto p = morse(3);
  const auto r = check_morse_condition(p.forcing, p.delta, p.a, p.n, p.period, fast_sampler());
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.details["parts"].size(), 6u);
  // Worst case is cos(2 pi t) = -1: -eps (b - 1).
  EXPECT_NEAR(r.witness.value, -0.05 * 0.5, 1e-12);
}

TEST(CheckMorseCondition, ZeroForcingFails) {
  const auto r = check_morse_condition([](double, double) { return 0.0; }, 1.0, std::numbers::ln2, 3, 1.0,
                                       fast_sampler());
  EXPECT_FALSE(r.pass);
}

TEST(CheckMorseCondition, NegatedForcingFailsAtFirstJunction) {
  const auto r = check_morse_condition(default_morse_forcing(-0.05, 1.5, 1.0, 1.0, std::numbers::ln2), 1.0,
                                       std::numbers::ln2, 3, 1.0, fast_sampler());
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.details["parts"][0]["pass"].get<bool>());
  EXPECT_EQ(r.details["parts"][0]["details"]["k"].get<int>(), 1);
}

TEST(CheckReports, PassIffMarginPositive) {
  const auto sys = make_morse_chain(morse(2));
  const auto caps = derive_energy_caps(sys, gamma_sups(sys), fast_sampler());
  for (const auto& r : {check_energy_cap(sys, caps.c, fast_sampler()), check_boundary_exit(sys, caps.c, fast_sampler()),
                        check_H1(sys, 0, 1.0, 10.0, fast_sampler()), check_morse_condition(sys, fast_sampler())}) {
    EXPECT_EQ(r.pass, r.margin > 0.0) << r.name;
  }
}

TEST(CapInvariance, TrajectoriesStayBelowCaps) {
  const auto sys = make_morse_chain(morse(3));
  const auto caps = derive_energy_caps(sys, gamma_sups(sys), fast_sampler());
  ASSERT_TRUE(check_energy_cap(sys, caps.c, fast_sampler()).pass);
  const SampleSpace space(sys, SampleSpace::balls(caps.c));
  LowDiscrepancySequence seq(space.dimension());
  std::vector<double> u(static_cast<std::size_t>(space.dimension()));
  IntegratorConfig cfg;
  cfg.rtol = cfg.atol = 1e-9;
  for (int k = 1; k <= 10; ++k) {
    seq.point(static_cast<std::size_t>(k), u);
    const auto start = space.map(u);
    Trajectory traj;
    try {
      traj = integrate(sys, 0.0, start.x, 10.0, cfg, {false, caps.c, true});
    } catch (const EscapeError& e) {
      traj = e.partial();  // left M+; the cap statement covers the part inside
    }
    EXPECT_TRUE(traj.events.empty());
    for (const auto& energies : traj.energy) {
      for (std::size_t i = 0; i < energies.size(); ++i) EXPECT_LE(energies[i], caps.c[i]);
    }
  }
}
