#pragma once

// Sampled checks of the dissipation and boundedness hypotheses, the kinetic
// energy caps on which d<p,p>/dt < 0, and strict outward acceleration on the
// block faces.  None of these are rigorous enclosures: each reports the worst
// sampled value, the point that produced it, and the distance from failure.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "forcedosc/errors.hpp"
#include "forcedosc/geometry.hpp"
#include "forcedosc/sampling.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

struct Witness {
  double t = 0.0;
  Vector state;
  int block = -1;
  std::string face;
  double value = 0.0;
};

/// Outcome of one sampled check.  `pass` holds exactly when `margin > 0`.
struct CheckReport {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  Witness witness;
  std::string sampler;
  nlohmann::json details = nlohmann::json::object();
};

inline nlohmann::json to_json(const Witness& w) {
  nlohmann::json state = nlohmann::json::array();
  for (Eigen::Index k = 0; k < w.state.size(); ++k) state.push_back(w.state(k));
  nlohmann::json out{{"t", w.t}, {"state", state}, {"value", w.value}};
  if (w.block >= 0) out["block"] = w.block + 1;
  if (!w.face.empty()) out["face"] = w.face;
  return out;
}

inline nlohmann::json to_json(const CheckReport& r) {
  return {{"name", r.name}, {"pass", r.pass},    {"margin", r.margin},
          {"witness", to_json(r.witness)}, {"sampler", r.sampler}, {"details", r.details}};
}

/// Worst sub-report wins; the sub-reports are kept under details.parts.
inline CheckReport combine_reports(const std::string& name, const std::vector<CheckReport>& parts,
                                   const std::string& sampler) {
  CheckReport out;
  out.name = name;
  out.sampler = sampler;
  out.details["parts"] = nlohmann::json::array();
  if (parts.empty()) {
    out.pass = true;
    out.margin = 1.0;
    out.details["note"] = "no applicable items; condition holds vacuously";
    return out;
  }
  const CheckReport* worst = &parts.front();
  for (const auto& p : parts) {
    if (p.margin < worst->margin) worst = &p;
    out.details["parts"].push_back(to_json(p));
  }
  out.margin = worst->margin;
  out.pass = out.margin > 0.0;
  out.witness = worst->witness;
  return out;
}

inline double metric_norm(const ChartBlock& block, const Vector& q, const Vector& v) {
  return std::sqrt(std::max(0.0, metric_inner(block, q, v, v)));
}

// ---------------------------------------------------------------------------
// (H2): sampled bounds of the external and interaction fields.

struct FieldBounds {
  double force = 0.0;        ///< B_i, inflated by the safety factor
  double interaction = 0.0;  ///< B_i^int, inflated
  double sampled_force = 0.0;
  double sampled_interaction = 0.0;
  bool declared_ok = true;
  std::string note;
};

inline nlohmann::json to_json(const FieldBounds& b) {
  return {{"B", b.force},
          {"B_int", b.interaction},
          {"sampled_max_force", b.sampled_force},
          {"sampled_max_interaction", b.sampled_interaction},
          {"declared_ok", b.declared_ok}};
}

/// Sampled sup of |f_i| and |f_i^int| over [0,T] x blocks x cap balls.
inline FieldBounds estimate_bounds(const CoupledSystem& system, int i, const std::vector<double>& caps,
                                   const SamplerConfig& sampler) {
  const SampleSpace space(system, SampleSpace::balls(caps));
  const auto& block = system.block(i);
  const auto& layout = system.layout();
  auto norm_of = [&](auto&& field) {
    return [&, field](std::span<const double> u) {
      const SamplePoint s = space.map(u);
      const Vector v = field(s.t, s.x);
      if (!v.allFinite()) throw NumericError("non-finite field sample on block " + std::to_string(i + 1));
      return metric_norm(block, layout.q(s.x, i), v);
    };
  };
  FieldBounds out;
  out.sampled_force =
      maximize_over_cube(space.dimension(),
                         norm_of([&](double t, const Vector& x) { return system.external_force(i, t, x); }),
                         sampler)
          .value;
  out.sampled_interaction =
      maximize_over_cube(space.dimension(),
                         norm_of([&](double t, const Vector& x) { return system.interaction_force(i, t, x); }),
                         sampler)
          .value;
  out.force = sampler.bound_safety * out.sampled_force;
  out.interaction = sampler.bound_safety * out.sampled_interaction;
  const auto& fields = system.fields(i);
  if (fields.force.declared_bound) {
    if (out.sampled_force > *fields.force.declared_bound) {
      out.declared_ok = false;
      out.note = "sampled external force exceeds its declared bound";
    } else {
      out.force = *fields.force.declared_bound;
    }
  }
  if (fields.interaction.declared_bound) {
    if (out.sampled_interaction > *fields.interaction.declared_bound) {
      out.declared_ok = false;
      out.note = "sampled interaction exceeds its declared bound";
    } else {
      out.interaction = *fields.interaction.declared_bound;
    }
  }
  return out;
}

/// Boundedness report.  With no declared bounds the only way to fail is a
/// non-finite or violated bound, so the margin is 1 / (1 + max_i (B_i + B_i^int)).
inline CheckReport check_H2(const std::vector<FieldBounds>& bounds, const SamplerConfig& sampler) {
  CheckReport out;
  out.name = "H2";
  out.sampler = sampler.describe();
  double worst = 0.0;
  bool ok = true;
  out.details["blocks"] = nlohmann::json::array();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto& b = bounds[i];
    auto entry = to_json(b);
    entry["block"] = i + 1;
    if (!b.note.empty()) entry["note"] = b.note;
    out.details["blocks"].push_back(entry);
    if (!b.declared_ok || !std::isfinite(b.force + b.interaction)) {
      ok = false;
      out.witness.block = static_cast<int>(i);
    }
    if (b.force + b.interaction >= worst) {
      worst = b.force + b.interaction;
      if (ok) out.witness.block = static_cast<int>(i);
    }
  }
  out.witness.value = worst;
  out.margin = ok ? 1.0 / (1.0 + worst) : -1.0;
  out.pass = out.margin > 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// (H1): sup <f^friction, p> / <p, p> over <p, p> > d_i.

inline CheckReport check_H1(const CoupledSystem& system, int i, double threshold, double energy_max,
                            const SamplerConfig& sampler) {
  if (!(threshold > 0.0)) throw ConfigError("H1 threshold d_i must be positive");
  if (!(energy_max > threshold)) throw ConfigError("H1 sample set is empty: energy range (d, c_max] is empty");
  std::vector<BlockSampling> spec(static_cast<std::size_t>(system.size()));
  spec[static_cast<std::size_t>(i)] = {std::nullopt, false, threshold, energy_max};
  const SampleSpace space(system, spec);
  const auto& block = system.block(i);
  const auto& layout = system.layout();
  auto quotient = [&](std::span<const double> u) {
    const SamplePoint s = space.map(u);
    const Vector q = layout.q(s.x, i);
    const Vector p = layout.p(s.x, i);
    const Vector f = system.friction_force(i, s.t, s.x);
    return metric_inner(block, q, f, p) / metric_inner(block, q, p, p);
  };
  const auto best = maximize_over_cube(space.dimension(), quotient, sampler);
  const SamplePoint at = space.map(best.u);

  CheckReport out;
  out.name = "H1 block " + std::to_string(i + 1);
  out.sampler = sampler.describe();
  out.witness = {at.t, at.x, i, "", best.value};
  out.margin = -best.value - sampler.strictness;
  out.details = {{"sup", best.value}, {"d", threshold}, {"energy_max", energy_max}};
  const auto& declared = system.fields(i).friction.gamma_sup;
  if (declared) {
    out.details["declared_gamma_sup"] = *declared;
    const double slack = *declared - best.value;
    if (slack < -1e-9 * std::max(1.0, std::abs(*declared))) {
      out.margin = std::min(out.margin, slack);
      out.details["note"] = "sampled quotient exceeds the declared gamma_sup";
    }
  }
  out.pass = out.margin > 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Energy caps c_i with (B_i + B_i^int) / sqrt(c_i) + gamma_sup_i < 0.

struct EnergyCaps {
  std::vector<double> c;
  std::vector<double> thresholds;
  std::vector<double> gamma_sup;
  std::vector<FieldBounds> bounds;
};

inline nlohmann::json to_json(const EnergyCaps& caps) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t i = 0; i < caps.c.size(); ++i) {
    blocks.push_back({{"block", i + 1},
                      {"c", caps.c[i]},
                      {"d", caps.thresholds[i]},
                      {"gamma_sup", caps.gamma_sup[i]},
                      {"B", caps.bounds[i].force},
                      {"B_int", caps.bounds[i].interaction}});
  }
  return blocks;
}

inline double energy_cap_formula(double threshold, double bound_sum, double gamma_sup, double safety) {
  if (!(gamma_sup < 0.0)) throw HypothesisError("dissipation quotient gamma_sup must be negative");
  const double ratio = bound_sum / -gamma_sup;
  return safety * safety * std::max(threshold, ratio * ratio);
}

inline EnergyCaps compute_energy_caps(const CoupledSystem& system, const std::vector<FieldBounds>& bounds,
                                      const std::vector<double>& gamma_sup, const SamplerConfig& sampler) {
  const auto n = static_cast<std::size_t>(system.size());
  if (bounds.size() != n || gamma_sup.size() != n) throw ConfigError("one bound and quotient per block");
  EnergyCaps caps;
  caps.bounds = bounds;
  caps.gamma_sup = gamma_sup;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = system.fields(static_cast<int>(i)).friction.threshold;
    const double sum = bounds[i].force + bounds[i].interaction;
    if (!std::isfinite(sum)) throw HypothesisError("field bounds must be finite");
    caps.thresholds.push_back(d);
    caps.c.push_back(energy_cap_formula(d, sum, gamma_sup[i], sampler.cap_safety));
  }
  return caps;
}

/// Alternates bound estimation over the current cap balls with the cap formula
/// until the caps stop growing, so velocity-dependent forces are handled.
inline EnergyCaps derive_energy_caps(const CoupledSystem& system, const std::vector<double>& gamma_sup,
                                     const SamplerConfig& sampler, int max_rounds = 8) {
  std::vector<double> caps;
  for (int i = 0; i < system.size(); ++i) {
    const double s = sampler.cap_safety;
    caps.push_back(s * s * system.fields(i).friction.threshold);
  }
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<FieldBounds> bounds;
    for (int i = 0; i < system.size(); ++i) bounds.push_back(estimate_bounds(system, i, caps, sampler));
    EnergyCaps next = compute_energy_caps(system, bounds, gamma_sup, sampler);
    bool grew = false;
    for (std::size_t i = 0; i < caps.size(); ++i) grew = grew || next.c[i] > caps[i] * (1.0 + 1e-12);
    if (!grew) {
      // Bounds were sampled over the previous (larger or equal) balls.
      return next;
    }
    caps = next.c;
  }
  throw HypothesisError("energy caps did not stabilize: forcing appears to grow with velocity");
}

/// Lemma check on the shells <p_i, p_i> = c_i: d<p_i,p_i>/dt = 2 <F_i, p_i> < 0.
inline CheckReport check_energy_cap(const CoupledSystem& system, const std::vector<double>& caps,
                                    const SamplerConfig& sampler) {
  if (static_cast<int>(caps.size()) != system.size()) throw ConfigError("one cap per block is required");
  std::vector<CheckReport> parts;
  const auto& layout = system.layout();
  for (int i = 0; i < system.size(); ++i) {
    auto spec = SampleSpace::balls(caps);
    spec[static_cast<std::size_t>(i)].energy_lo = caps[static_cast<std::size_t>(i)];
    const SampleSpace space(system, spec);
    const auto& block = system.block(i);
    auto rate = [&](std::span<const double> u) {
      const SamplePoint s = space.map(u);
      const Vector q = layout.q(s.x, i);
      return 2.0 * metric_inner(block, q, system.total_force(i, s.t, s.x), layout.p(s.x, i));
    };
    const auto best = maximize_over_cube(space.dimension(), rate, sampler);
    const SamplePoint at = space.map(best.u);
    CheckReport part;
    part.name = "energy_cap block " + std::to_string(i + 1);
    part.sampler = sampler.describe();
    part.witness = {at.t, at.x, i, "", best.value};
    part.margin = -best.value - sampler.strictness;
    part.pass = part.margin > 0.0;
    part.details = {{"cap", caps[static_cast<std::size_t>(i)]}, {"max_dT_dt", best.value}};
    parts.push_back(std::move(part));
  }
  return combine_reports("energy_cap", parts, sampler.describe());
}

/// Outward acceleration <nu, a> at q_i on a face with face-tangent velocity.
inline double outward_acceleration(const CoupledSystem& system, int i, const BoundaryFace& face, double t,
                                   const Vector& x) {
  const auto& layout = system.layout();
  const auto& block = system.block(i);
  const Vector q = layout.q(x, i);
  const Vector a = covariant_accel(block, q, layout.p(x, i), system.total_force(i, t, x));
  return metric_inner(block, q, block.outward_normal(face, q), a);
}

/// Faces must repel: for every sampled t, face point, tangent velocity within
/// the cap and every configuration of the other blocks, <nu, a> > 0.
inline CheckReport check_boundary_exit(const CoupledSystem& system, const std::vector<double>& caps,
                                       const SamplerConfig& sampler) {
  if (static_cast<int>(caps.size()) != system.size()) throw ConfigError("one cap per block is required");
  std::vector<CheckReport> parts;
  for (int i = 0; i < system.size(); ++i) {
    for (const auto& face : system.block(i).faces()) {
      auto spec = SampleSpace::balls(caps);
      auto& own = spec[static_cast<std::size_t>(i)];
      own.face = face;
      own.tangent_to_face = true;
      const SampleSpace space(system, spec);
      auto inward = [&](std::span<const double> u) {
        const SamplePoint s = space.map(u);
        return -outward_acceleration(system, i, face, s.t, s.x);
      };
      const auto best = maximize_over_cube(space.dimension(), inward, sampler);
      const SamplePoint at = space.map(best.u);
      CheckReport part;
      part.name = "boundary_exit block " + std::to_string(i + 1) + " " + face.label();
      part.sampler = sampler.describe();
      part.witness = {at.t, at.x, i, face.label(), -best.value};
      part.margin = -best.value - sampler.strictness;
      part.pass = part.margin > 0.0;
      part.details = {{"min_outward_acceleration", -best.value}, {"face_value", system.block(i).face_value(face)}};
      parts.push_back(std::move(part));
    }
  }
  return combine_reports("boundary_exit", parts, sampler.describe());
}

/// (-1)^(k+1) F(t, k (delta + a)) < 0 at every junction k = 1 .. 2n.
inline CheckReport check_morse_condition(const std::function<double(double, double)>& forcing, double delta,
                                         double a, int n, double period, const SamplerConfig& sampler) {
  if (!forcing) throw ConfigError("Morse condition needs a forcing function");
  std::vector<CheckReport> parts;
  for (int k = 1; k <= 2 * n; ++k) {
    const double x = k * (delta + a);
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;  // (-1)^(k+1)
    auto signed_value = [&](std::span<const double> u) { return sign * forcing(period * u[0], x); };
    const auto best = maximize_over_cube(1, signed_value, sampler);
    CheckReport part;
    part.name = "morse_condition k=" + std::to_string(k);
    part.sampler = sampler.describe();
    Vector where(1);
    where(0) = x;
    part.witness = {period * best.u[0], where, -1, "junction " + std::to_string(k), best.value};
    part.margin = -best.value - sampler.strictness;
    part.pass = part.margin > 0.0;
    part.details = {{"k", k}, {"x", x}, {"max_signed_forcing", best.value}};
    parts.push_back(std::move(part));
  }
  auto out = combine_reports("morse_condition", parts, sampler.describe());
  out.details["junctions"] = 2 * n;
  return out;
}

inline CheckReport check_morse_condition(const CoupledSystem& system, const SamplerConfig& sampler) {
  const auto& params = system.morse();
  if (!params) throw ConfigError("system is not a Morse chain");
  return check_morse_condition(params->forcing, params->delta, params->a, params->n, params->period, sampler);
}

}  // namespace forcedosc
