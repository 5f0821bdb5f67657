#pragma once

// Force fields and the coupled system
//   q_i' = p_i,   nabla_{p_i} p_i = f_i + f_i^friction + f_i^interaction,
// together with the two built-in lattices (inverted pendulum chain and
// Morse chain) and a forced linear oscillator used as a reference problem.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forcedosc/errors.hpp"
#include "forcedosc/geometry.hpp"

namespace forcedosc {

/// Offsets of (q_i, p_i) inside the flat state vector [q_1, p_1, ..., q_n, p_n].
class StateLayout {
 public:
  StateLayout() = default;
  explicit StateLayout(const std::vector<int>& dims) : dims_(dims) {
    for (int d : dims_) {
      offsets_.push_back(size_);
      size_ += 2 * d;
    }
  }

  [[nodiscard]] int size() const { return size_; }
  [[nodiscard]] int blocks() const { return static_cast<int>(dims_.size()); }
  [[nodiscard]] int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int q_offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] int p_offset(int i) const { return q_offset(i) + dim(i); }

  [[nodiscard]] Vector q(const Vector& x, int i) const { return x.segment(q_offset(i), dim(i)); }
  [[nodiscard]] Vector p(const Vector& x, int i) const { return x.segment(p_offset(i), dim(i)); }
  void set_q(Vector& x, int i, const Vector& value) const { x.segment(q_offset(i), dim(i)) = value; }
  void set_p(Vector& x, int i, const Vector& value) const { x.segment(p_offset(i), dim(i)) = value; }

  /// Column label for coordinate `c` of q_i or p_i, 1-based in the output.
  [[nodiscard]] std::string label(char which, int i, int c) const {
    std::string out(1, which);
    out += "_" + std::to_string(i + 1);
    if (dim(i) > 1) out += "_" + std::to_string(c + 1);
    return out;
  }

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int size_ = 0;
};

struct ForceField {
  std::function<Vector(double t, const Vector& q, const Vector& p)> eval;
  std::optional<double> declared_bound;
};

struct FrictionField {
  std::function<Vector(double t, const Vector& q, const Vector& p)> eval;
  double threshold = 1.0;             ///< d_i: the quotient must be negative for <p,p> > d_i
  std::optional<double> gamma_sup;    ///< declared upper bound for <f, p>/<p, p>, negative
};

struct InteractionField {
  std::function<Vector(double t, const StateLayout& layout, const Vector& x)> eval;
  std::optional<double> declared_bound;
};

struct BlockFields {
  ForceField force;
  FrictionField friction;
  InteractionField interaction;
};

/// Viscous friction -gamma p with its exact dissipation quotient.
inline FrictionField viscous_friction(double gamma, double threshold = 1.0) {
  return {[gamma](double, const Vector&, const Vector& p) -> Vector { return -gamma * p; }, threshold,
          -gamma};
}

struct MorseChainParams {
  int n = 3;
  double gamma = 1.0;
  double delta = 1.0;
  double a = std::numbers::ln2;
  double period = 1.0;
  double threshold = 1.0;
  std::function<double(double t, double x)> forcing;  ///< F(t, x), T-periodic in t
};

class CoupledSystem {
 public:
  CoupledSystem(std::string name, std::vector<ChartBlock> blocks, std::vector<BlockFields> fields,
                double period)
      : name_(std::move(name)), blocks_(std::move(blocks)), fields_(std::move(fields)), period_(period) {
    if (blocks_.empty()) throw ConfigError("a system needs at least one block");
    if (blocks_.size() != fields_.size()) throw ConfigError("one set of fields per block is required");
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw ConfigError("period must be positive");
    std::vector<int> dims;
    for (const auto& b : blocks_) dims.push_back(b.dim());
    layout_ = StateLayout(dims);
  }

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int size() const { return static_cast<int>(blocks_.size()); }
  [[nodiscard]] double period() const { return period_; }
  [[nodiscard]] const StateLayout& layout() const { return layout_; }
  [[nodiscard]] const std::vector<ChartBlock>& blocks() const { return blocks_; }
  [[nodiscard]] const ChartBlock& block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] const BlockFields& fields(int i) const { return fields_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] const std::optional<MorseChainParams>& morse() const { return morse_; }
  void set_morse(MorseChainParams params) { morse_ = std::move(params); }

  void require_in_domain(const Vector& x) const {
    if (x.size() != layout_.size()) throw DomainError("state has the wrong dimension");
    for (int j = 0; j < size(); ++j) block(j).require_enlarged(layout_.q(x, j));
  }

  [[nodiscard]] Vector external_force(int i, double t, const Vector& x) const {
    return eval_field(fields(i).force.eval, i, t, x);
  }
  [[nodiscard]] Vector friction_force(int i, double t, const Vector& x) const {
    return eval_field(fields(i).friction.eval, i, t, x);
  }
  [[nodiscard]] Vector interaction_force(int i, double t, const Vector& x) const {
    const auto& f = fields(i).interaction.eval;
    if (!f) return Vector::Zero(block(i).dim());
    Vector out = f(t, layout_, x);
    check_output(out, i);
    return out;
  }

  /// f_i + f_i^friction + f_i^interaction on block i.
  [[nodiscard]] Vector total_force(int i, double t, const Vector& x) const {
    require_in_domain(x);
    return external_force(i, t, x) + friction_force(i, t, x) + interaction_force(i, t, x);
  }

 private:
  using LocalFn = std::function<Vector(double, const Vector&, const Vector&)>;

  [[nodiscard]] Vector eval_field(const LocalFn& f, int i, double t, const Vector& x) const {
    if (!f) return Vector::Zero(block(i).dim());
    Vector out = f(t, layout_.q(x, i), layout_.p(x, i));
    check_output(out, i);
    return out;
  }

  void check_output(const Vector& out, int i) const {
    if (out.size() != block(i).dim()) throw ConfigError("field returned a vector of the wrong size");
    if (!out.allFinite()) throw NumericError("field value is not finite on block " + std::to_string(i + 1));
  }

  std::string name_;
  std::vector<ChartBlock> blocks_;
  std::vector<BlockFields> fields_;
  double period_;
  StateLayout layout_;
  std::optional<MorseChainParams> morse_;
};

// ---------------------------------------------------------------------------
// Pendulum chain: inverted planar pendulums on a common moving rail.

struct PendulumChainParams {
  std::vector<double> pivots;
  std::vector<double> lengths;
  std::vector<double> masses;
  std::vector<double> gammas;
  double gravity = 9.81;
  double period = 1.0;
  /// Amplitude A of the pivot acceleration h''(t) = A sin(2 pi t / T).
  double pivot_accel_amplitude = 0.0;
  /// Overrides the sinusoidal pivot law when set; must be T-periodic.
  std::function<double(double t)> pivot_accel;
  /// Repulsion magnitude f_ij(phi_i, phi_j) >= 0.  Defaults to the constant kappa.
  double kappa = 0.0;
  std::function<double(int i, int j, double phi_i, double phi_j)> repulsion;
  double threshold = 1.0;
};

/// Bob position r_i = (s_i + l_i sin phi, l_i cos phi) relative to the moving rail.
inline Eigen::Vector2d pendulum_bob(double pivot, double length, double phi) {
  return {pivot + length * std::sin(phi), length * std::cos(phi)};
}

inline CoupledSystem make_pendulum_chain(PendulumChainParams params) {
  const std::size_t n = params.pivots.size();
  if (n == 0) throw ConfigError("pendulum chain needs at least one pendulum");
  if (params.lengths.size() != n || params.masses.size() != n || params.gammas.size() != n) {
    throw ConfigError("pendulum chain parameter lists must have equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(params.lengths[i] > 0.0) || !(params.masses[i] > 0.0)) {
      throw ConfigError("pendulum lengths and masses must be positive");
    }
    if (params.gammas[i] < 0.0) throw ConfigError("pendulum friction must be non-negative");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(std::abs(params.pivots[i] - params.pivots[j]) > params.lengths[i] + params.lengths[j])) {
        throw ConfigError("pendulums " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                          " are not disjoint: pivot spacing must exceed the sum of lengths");
      }
    }
  }
  if (params.kappa < 0.0) throw ConfigError("repulsion magnitude must be non-negative");

  std::function<double(double)> accel = params.pivot_accel;
  if (!accel) {
    const double amp = params.pivot_accel_amplitude;
    const double omega = 2.0 * std::numbers::pi / params.period;
    accel = [amp, omega](double t) { return amp * std::sin(omega * t); };
  }
  auto repulsion = params.repulsion;
  if (!repulsion) {
    const double kappa = params.kappa;
    repulsion = [kappa](int, int, double, double) { return kappa; };
  }

  std::vector<ChartBlock> blocks;
  std::vector<BlockFields> fields;
  const double half_pi = 0.5 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = params.lengths[i];
    const double m = params.masses[i];
    blocks.push_back(ChartBlock::interval(-half_pi, half_pi, m * l * l));

    BlockFields f;
    const double g = params.gravity;
    f.force.eval = [accel, g, l](double t, const Vector& q, const Vector&) -> Vector {
      return Vector::Constant(1, -accel(t) / l * std::cos(q(0)) + g / l * std::sin(q(0)));
    };
    f.friction = viscous_friction(params.gammas[i], params.threshold);
    if (n > 1) {
      const auto pivots = params.pivots;
      const auto lengths = params.lengths;
      const int self = static_cast<int>(i);
      f.interaction.eval = [pivots, lengths, repulsion, self, m](double, const StateLayout& layout,
                                                                 const Vector& x) -> Vector {
        const auto si = static_cast<std::size_t>(self);
        const double phi_i = layout.q(x, self)(0);
        const Eigen::Vector2d ri = pendulum_bob(pivots[si], lengths[si], phi_i);
        const Eigen::Vector2d e_phi(std::cos(phi_i), -std::sin(phi_i));
        double torque = 0.0;
        for (int j = 0; j < layout.blocks(); ++j) {
          if (j == self) continue;
          const auto sj = static_cast<std::size_t>(j);
          const double phi_j = layout.q(x, j)(0);
          const Eigen::Vector2d sep = ri - pendulum_bob(pivots[sj], lengths[sj], phi_j);
          torque += repulsion(self, j, phi_i, phi_j) * sep.normalized().dot(e_phi);
        }
        return Vector::Constant(1, torque / (m * lengths[si]));
      };
    }
    fields.push_back(std::move(f));
  }
  return CoupledSystem("pendulum_chain", std::move(blocks), std::move(fields), params.period);
}

/// Planar force F_ij exerted on bob i by bob j, for property checks.
inline Eigen::Vector2d pendulum_pair_force(const PendulumChainParams& params, int i, int j, double phi_i,
                                           double phi_j) {
  const auto si = static_cast<std::size_t>(i);
  const auto sj = static_cast<std::size_t>(j);
  const Eigen::Vector2d sep = pendulum_bob(params.pivots[si], params.lengths[si], phi_i) -
                              pendulum_bob(params.pivots[sj], params.lengths[sj], phi_j);
  const double magnitude = params.repulsion ? params.repulsion(i, j, phi_i, phi_j) : params.kappa;
  return magnitude * sep.normalized();
}

// ---------------------------------------------------------------------------
// Morse chain with fixed end particles.

/// V'(u) for V(u) = 1/2 (1 - exp(-(u - delta)))^2.
inline double morse_dV(double gap, double delta) {
  const double e = std::exp(-(gap - delta));
  return (1.0 - e) * e;
}

inline double morse_d2V(double gap, double delta) {
  const double e = std::exp(-(gap - delta));
  return e * (2.0 * e - 1.0);
}

/// Junction abscissa k (delta + a) between neighbouring blocks, k = 0 .. 2n+1.
inline double morse_junction(const MorseChainParams& params, int k) { return k * (params.delta + params.a); }

/// F(t, x) = eps cos(pi x / (delta + a)) (b + cos(2 pi t / T)).
inline std::function<double(double, double)> default_morse_forcing(double epsilon, double b, double period,
                                                                   double delta, double a) {
  if (!(period > 0.0)) throw ConfigError("period must be positive");
  const double spacing = delta + a;
  const double omega = 2.0 * std::numbers::pi / period;
  return [epsilon, b, omega, spacing](double t, double x) {
    return epsilon * std::cos(std::numbers::pi * x / spacing) * (b + std::cos(omega * t));
  };
}

inline CoupledSystem make_morse_chain(MorseChainParams params) {
  if (params.n < 1) throw ConfigError("Morse chain needs n >= 1");
  if (!(params.gamma > 0.0)) throw ConfigError("Morse chain friction gamma must be positive");
  if (!(params.delta > 0.0)) throw ConfigError("Morse chain delta must be positive");
  // Allow the parameter to be written as ln(2) up to round-off.
  if (params.a < std::numbers::ln2 * (1.0 - 1e-12)) {
    throw ConfigError("Morse chain spacing parameter a must be at least ln 2");
  }
  if (!params.forcing) params.forcing = [](double, double) { return 0.0; };

  const int n = params.n;
  const double spacing = params.delta + params.a;
  const double right_end = (2 * n + 1) * spacing;
  std::vector<ChartBlock> blocks;
  std::vector<BlockFields> fields;
  for (int i = 0; i < n; ++i) {
    blocks.push_back(ChartBlock::interval((2 * i + 1) * spacing, (2 * i + 2) * spacing));
    BlockFields f;
    const auto forcing = params.forcing;
    f.force.eval = [forcing](double t, const Vector& q, const Vector&) -> Vector {
      return Vector::Constant(1, forcing(t, q(0)));
    };
    f.friction = viscous_friction(params.gamma, params.threshold);
    const double delta = params.delta;
    f.interaction.eval = [i, n, delta, right_end](double, const StateLayout& layout, const Vector& x) -> Vector {
      const double xi = layout.q(x, i)(0);
      const double left = i == 0 ? 0.0 : layout.q(x, i - 1)(0);
      const double right = i == n - 1 ? right_end : layout.q(x, i + 1)(0);
      return Vector::Constant(1, -morse_dV(xi - left, delta) + morse_dV(right - xi, delta));
    };
    fields.push_back(std::move(f));
  }
  CoupledSystem system("morse_chain", std::move(blocks), std::move(fields), params.period);
  system.set_morse(std::move(params));
  return system;
}

// ---------------------------------------------------------------------------
// Forced damped linear oscillator x'' = -gamma x' - omega^2 x + F0 sin(2 pi t / T).

struct ForcedOscillatorParams {
  double gamma = 0.5;
  double omega = 2.0;
  double amplitude = 1.0;
  double period = 1.0;
  double half_width = 1.0;
  double threshold = 1.0;
};

inline CoupledSystem make_forced_oscillator(const ForcedOscillatorParams& params) {
  if (!(params.half_width > 0.0)) throw ConfigError("oscillator block half-width must be positive");
  BlockFields f;
  const double w2 = params.omega * params.omega;
  const double f0 = params.amplitude;
  const double drive = 2.0 * std::numbers::pi / params.period;
  f.force.eval = [w2, f0, drive](double t, const Vector& q, const Vector&) -> Vector {
    return Vector::Constant(1, -w2 * q(0) + f0 * std::sin(drive * t));
  };
  f.friction = viscous_friction(params.gamma, params.threshold);
  return CoupledSystem("forced_oscillator", {ChartBlock::interval(-params.half_width, params.half_width)},
                       {std::move(f)}, params.period);
}

/// Closed-form steady state x(t) = A sin(Omega t - theta) of the forced oscillator.
struct LinearResponse {
  double amplitude;
  double phase;
  double x0;
  double p0;
};

inline LinearResponse linear_response(const ForcedOscillatorParams& params) {
  const double drive = 2.0 * std::numbers::pi / params.period;
  const double w2 = params.omega * params.omega;
  const double detune = w2 - drive * drive;
  const double amp = params.amplitude / std::sqrt(detune * detune + params.gamma * params.gamma * drive * drive);
  const double phase = std::atan2(params.gamma * drive, detune);
  return {amp, phase, -amp * std::sin(phase), amp * drive * std::cos(phase)};
}

}  // namespace forcedosc
