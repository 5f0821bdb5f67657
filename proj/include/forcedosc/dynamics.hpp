#pragma once

// Time integration in chart coordinates, exit events against the blocks and
// the energy caps, and the period map x0 -> x(T, 0, x0).

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "forcedosc/errors.hpp"
#include "forcedosc/geometry.hpp"
#include "forcedosc/io.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

inline IntegratorMethod integrator_method_from_string(const std::string& name) {
  if (name == "rk4-fixed" || name == "rk4") return IntegratorMethod::rk4_fixed;
  if (name == "rk45-adaptive" || name == "rk45") return IntegratorMethod::rk45_adaptive;
  throw ConfigError("unknown integrator method '" + name + "'");
}

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk45_adaptive;
  double step = 1e-2;  ///< rk4-fixed step (rounded down to divide the interval evenly)
  double rtol = 1e-10;
  double atol = 1e-10;
  long max_steps = 2'000'000;
  int samples = 200;  ///< dense output points over [t0, t1] for rk45-adaptive

  void validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("integrator tolerances must be positive");
    if (!(step > 0.0)) throw ConfigError("integrator step must be positive");
    if (max_steps < 1) throw ConfigError("integrator max_steps must be positive");
    if (samples < 1) throw ConfigError("integrator needs at least one output sample");
  }
};

enum class EventKind { block_exit, energy_cap };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::block_exit;
  int block = 0;
  std::string face;

  [[nodiscard]] std::string label() const {
    if (kind == EventKind::energy_cap) return "energy_cap_" + std::to_string(block + 1);
    return "block_exit_" + std::to_string(block + 1) + "_" + face;
  }
};

struct EventOptions {
  bool block_exit = false;
  std::vector<double> caps;  ///< empty disables energy-cap events
  bool stop = true;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<std::vector<double>> energy;  ///< T_i(t) per sample
  std::vector<Event> events;
  long steps = 0;

  [[nodiscard]] bool empty() const { return t.empty(); }
  [[nodiscard]] const Vector& final_state() const { return x.back(); }
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, Trajectory partial) : Error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// The trajectory left the enlarged blocks M+ before the end time.
class EscapeError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

inline std::vector<double> kinetic_energies(const CoupledSystem& system, const Vector& x) {
  std::vector<double> out;
  const auto& layout = system.layout();
  for (int i = 0; i < system.size(); ++i) {
    out.push_back(kinetic_energy(system.block(i), layout.q(x, i), layout.p(x, i)));
  }
  return out;
}

inline bool inside_enlarged(const CoupledSystem& system, const Vector& x) {
  for (int i = 0; i < system.size(); ++i) {
    if (!system.block(i).in_enlarged(system.layout().q(x, i))) return false;
  }
  return true;
}

/// (p_1, a_1, ..., p_n, a_n) with a_i the covariant acceleration under the total force.
inline Vector rhs(const CoupledSystem& system, double t, const Vector& x) {
  system.require_in_domain(x);
  const auto& layout = system.layout();
  Vector dx(layout.size());
  for (int i = 0; i < system.size(); ++i) {
    const Vector q = layout.q(x, i);
    const Vector p = layout.p(x, i);
    dx.segment(layout.q_offset(i), layout.dim(i)) = p;
    dx.segment(layout.p_offset(i), layout.dim(i)) =
        covariant_accel(system.block(i), q, p, system.total_force(i, t, x));
  }
  return dx;
}

namespace detail {

struct StepResult {
  Vector y;
  Vector error;  ///< embedded error estimate (zero for rk4)
};

// Dormand-Prince 5(4) tableau.
inline StepResult dopri_step(const CoupledSystem& system, double t, const Vector& x, const Vector& k1, double h) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  const Vector k2 = rhs(system, t + c2 * h, x + h * a21 * k1);
  const Vector k3 = rhs(system, t + c3 * h, x + h * (a31 * k1 + a32 * k2));
  const Vector k4 = rhs(system, t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vector k5 = rhs(system, t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vector k6 = rhs(system, t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Vector y = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vector k7 = rhs(system, t + h, y);
  Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  return {std::move(y), std::move(err)};
}

inline StepResult rk4_step(const CoupledSystem& system, double t, const Vector& x, const Vector& k1, double h) {
  const Vector k2 = rhs(system, t + 0.5 * h, x + 0.5 * h * k1);
  const Vector k3 = rhs(system, t + 0.5 * h, x + 0.5 * h * k2);
  const Vector k4 = rhs(system, t + h, x + h * k3);
  return {x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), Vector::Zero(x.size())};
}

struct EventProbe {
  EventKind kind;
  int block;
  BoundaryFace face;
};

/// Signed distance to the event surface; positive on the admissible side.
inline double event_value(const CoupledSystem& system, const EventProbe& probe, const std::vector<double>& caps,
                          const Vector& x) {
  const auto& layout = system.layout();
  const auto& block = system.block(probe.block);
  if (probe.kind == EventKind::energy_cap) {
    return caps[static_cast<std::size_t>(probe.block)] -
           kinetic_energy(block, layout.q(x, probe.block), layout.p(x, probe.block));
  }
  const double q = layout.q(x, probe.block)(probe.face.coordinate);
  return probe.face.sign() * (block.face_value(probe.face) - q);
}

}  // namespace detail

/// Integrates from (t0, x0) to t1.  Exits from the blocks and cap crossings are
/// events located by bisection; leaving the enlarged blocks raises EscapeError.
inline Trajectory integrate(const CoupledSystem& system, double t0, const Vector& x0, double t1,
                            const IntegratorConfig& config, const EventOptions& events = {}) {
  config.validate();
  if (!(t1 > t0)) throw ConfigError("integration end time must exceed start time");
  system.require_in_domain(x0);
  if (!events.caps.empty() && static_cast<int>(events.caps.size()) != system.size()) {
    throw ConfigError("energy-cap events need one cap per block");
  }

  std::vector<detail::EventProbe> probes;
  if (events.block_exit) {
    for (int i = 0; i < system.size(); ++i) {
      for (const auto& face : system.block(i).faces()) probes.push_back({EventKind::block_exit, i, face});
    }
  }
  if (!events.caps.empty()) {
    for (int i = 0; i < system.size(); ++i) probes.push_back({EventKind::energy_cap, i, {}});
  }

  Trajectory traj;
  auto record = [&](double t, const Vector& x) {
    traj.t.push_back(t);
    traj.x.push_back(x);
    traj.energy.push_back(kinetic_energies(system, x));
  };
  record(t0, x0);

  const bool adaptive = config.method == IntegratorMethod::rk45_adaptive;
  auto step_fn = adaptive ? detail::dopri_step : detail::rk4_step;
  const double span = t1 - t0;
  const double time_eps = 1e-14 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));

  std::vector<double> outputs;
  double fixed_h = 0.0;
  if (adaptive) {
    for (int k = 1; k <= config.samples; ++k) outputs.push_back(t0 + span * k / config.samples);
  } else {
    const auto count = static_cast<long>(std::ceil(span / config.step - 1e-9));
    fixed_h = span / static_cast<double>(count);
    for (long k = 1; k <= count; ++k) outputs.push_back(t0 + fixed_h * static_cast<double>(k));
  }
  outputs.back() = t1;

  double t = t0;
  Vector x = x0;
  Vector k1;
  auto fail_escape = [&](const std::string& why) -> void {
    throw EscapeError("trajectory left the enlarged blocks near t = " + format_double(t) + ": " + why, traj);
  };
  try {
    k1 = rhs(system, t, x);
  } catch (const DomainError& e) {
    fail_escape(e.what());
  }

  double h = fixed_h;
  if (adaptive) {
    // Initial step from the scaled size of the state and its derivative.
    const Vector scale = (config.atol + config.rtol * x.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((x.array() / scale.array()).square().mean());
    const double d1 = std::sqrt((k1.array() / scale.array()).square().mean());
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min({h, 0.1 * span, span});
  }

  std::size_t next_output = 0;
  while (next_output < outputs.size()) {
    if (traj.steps >= config.max_steps) {
      throw IntegrationError("maximum number of steps exceeded at t = " + format_double(t), traj);
    }
    const double target = outputs[next_output];
    const bool clipped = t + h >= target - time_eps;
    const double h_try = clipped ? target - t : h;
    if (h_try < 1e-14 * std::max(1.0, std::abs(t))) {
      throw IntegrationError("step size underflow at t = " + format_double(t), traj);
    }

    detail::StepResult step;
    try {
      step = step_fn(system, t, x, k1, h_try);
    } catch (const DomainError& e) {
      if (!adaptive) fail_escape(e.what());
      // A stage strayed outside M+; retry smaller, escaping only if that cannot help.
      h = 0.5 * h_try;
      if (h < 1e-12 * std::max(1.0, span)) fail_escape(e.what());
      continue;
    }
    double err_norm = 0.0;
    if (adaptive) {
      const Vector scale =
          (config.atol + config.rtol * x.cwiseAbs().cwiseMax(step.y.cwiseAbs()).array()).matrix();
      err_norm = std::sqrt((step.error.array() / scale.array()).square().mean());
      if (!std::isfinite(err_norm)) throw NumericError("non-finite integration error estimate");
      const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      if (err_norm > 1.0) {
        h = h_try * factor;
        continue;
      }
      const double proposed = h_try * factor;
      h = clipped ? std::max(proposed, h) : proposed;
    }
    ++traj.steps;

    if (!inside_enlarged(system, step.y)) fail_escape("state outside M+ after an accepted step");

    // Earliest crossing of any event surface inside the step.
    std::optional<std::pair<double, const detail::EventProbe*>> hit;
    for (const auto& probe : probes) {
      const double before = detail::event_value(system, probe, events.caps, x);
      const double after = detail::event_value(system, probe, events.caps, step.y);
      if (before >= 0.0 && after < 0.0) {
        double lo = 0.0;
        double hi = 1.0;
        while ((hi - lo) * h_try > 1e-10 * std::max(1.0, std::abs(t))) {
          const double mid = 0.5 * (lo + hi);
          const Vector xm = step_fn(system, t, x, k1, mid * h_try).y;
          (detail::event_value(system, probe, events.caps, xm) >= 0.0 ? lo : hi) = mid;
        }
        if (!hit || hi < hit->first) hit = std::make_pair(hi, &probe);
      }
    }
    if (hit && events.stop) {
      const double te = t + hit->first * h_try;
      const Vector xe = step_fn(system, t, x, k1, hit->first * h_try).y;
      record(te, xe);
      traj.events.push_back({te, hit->second->kind, hit->second->block,
                             hit->second->kind == EventKind::block_exit ? hit->second->face.label() : ""});
      return traj;
    }
    if (hit) {
      traj.events.push_back({t + hit->first * h_try, hit->second->kind, hit->second->block,
                             hit->second->kind == EventKind::block_exit ? hit->second->face.label() : ""});
    }

    t = clipped ? target : t + h_try;
    x = std::move(step.y);
    try {
      k1 = rhs(system, t, x);
    } catch (const DomainError& e) {
      fail_escape(e.what());
    }
    if (clipped) {
      record(t, x);
      ++next_output;
    } else if (!adaptive) {
      record(t, x);
    }
  }
  return traj;
}

/// x(t1, t0, x0) without events.
inline Vector flow(const CoupledSystem& system, double t0, const Vector& x0, double t1, IntegratorConfig config) {
  config.samples = 1;
  return integrate(system, t0, x0, t1, config).final_state();
}

/// Period map P(x0) = x(T, 0, x0).
inline Vector stroboscopic_map(const CoupledSystem& system, const Vector& x0, const IntegratorConfig& config) {
  return flow(system, 0.0, x0, system.period(), config);
}

/// CSV with header t, q_1.., p_1.., ..., T_1..T_n, event.
inline void write_trajectory_csv(std::ostream& out, const CoupledSystem& system, const Trajectory& traj) {
  const auto& layout = system.layout();
  out << "t";
  for (int i = 0; i < system.size(); ++i) {
    for (int c = 0; c < layout.dim(i); ++c) out << "," << layout.label('q', i, c);
    for (int c = 0; c < layout.dim(i); ++c) out << "," << layout.label('p', i, c);
  }
  for (int i = 0; i < system.size(); ++i) out << ",T_" << i + 1;
  out << ",event\r\n";
  for (std::size_t s = 0; s < traj.t.size(); ++s) {
    out << format_double(traj.t[s]);
    for (Eigen::Index k = 0; k < traj.x[s].size(); ++k) out << "," << format_double(traj.x[s](k));
    for (double e : traj.energy[s]) out << "," << format_double(e);
    std::string label;
    for (const auto& ev : traj.events) {
      if (ev.t == traj.t[s]) label = ev.label();
    }
    out << "," << label << "\r\n";
  }
}

}  // namespace forcedosc
