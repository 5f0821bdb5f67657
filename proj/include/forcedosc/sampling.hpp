#pragma once

// Deterministic worst-case search over a unit cube, and the map from cube
// points to (t, state) samples of a coupled system.
//
// Points come from the additive R_d sequence u_k = frac(1/2 + k alpha), with
// alpha_j = phi_d^-(j+1) and phi_d the real root of x^(d+1) = x + 1.  The
// worst point is then polished by a compass search.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forcedosc/errors.hpp"
#include "forcedosc/geometry.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

struct SamplerConfig {
  int samples = 10000;
  int refine_iterations = 50;
  double strictness = 1e-6;     ///< margin separating strict inequalities from round-off
  double bound_safety = 1.1;    ///< inflation of sampled field maxima
  double cap_safety = 1.5;      ///< energy caps use cap_safety^2

  [[nodiscard]] std::string describe() const {
    return "R_d low-discrepancy, " + std::to_string(samples) + " points, compass-search refinement " +
           std::to_string(refine_iterations) + " step halvings";
  }
};

class LowDiscrepancySequence {
 public:
  explicit LowDiscrepancySequence(int dim) : alpha_(static_cast<std::size_t>(dim)) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    for (int j = 0; j < dim; ++j) {
      alpha_[static_cast<std::size_t>(j)] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
    }
  }

  void point(std::size_t k, std::span<double> out) const {
    for (std::size_t j = 0; j < alpha_.size(); ++j) {
      const double v = 0.5 + static_cast<double>(k) * alpha_[j];
      out[j] = v - std::floor(v);
    }
  }

 private:
  std::vector<double> alpha_;
};

struct SearchResult {
  std::vector<double> u;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// Maximizes `badness` over [0,1]^dim.
inline SearchResult maximize_over_cube(int dim, const std::function<double(std::span<const double>)>& badness,
                                       const SamplerConfig& config) {
  if (config.samples < 1) throw ConfigError("sampler needs at least one point");
  if (dim < 1) throw ConfigError("sample space must have positive dimension");
  LowDiscrepancySequence seq(dim);
  SearchResult best;
  std::vector<double> u(static_cast<std::size_t>(dim));
  auto evaluate = [&](std::span<const double> point) {
    const double v = badness(point);
    ++best.evaluations;
    if (std::isnan(v)) throw NumericError("sampled value is not a number");
    return v;
  };
  for (int k = 1; k <= config.samples; ++k) {
    seq.point(static_cast<std::size_t>(k), u);
    const double v = evaluate(u);
    if (v > best.value) {
      best.value = v;
      best.u = u;
    }
  }

  // Compass search from the best sample: try +-step along each coordinate,
  // halving the step after a sweep without improvement.
  double step = std::min(0.5, 1.0 / std::pow(static_cast<double>(config.samples), 1.0 / dim));
  std::vector<double> probe = best.u;
  int halvings = 0;
  int sweeps = 0;
  while (halvings < config.refine_iterations && step > 1e-14 && sweeps < 100 * config.refine_iterations) {
    ++sweeps;
    bool improved = false;
    for (std::size_t j = 0; j < static_cast<std::size_t>(dim); ++j) {
      for (double sign : {1.0, -1.0}) {
        probe = best.u;
        probe[j] = std::clamp(best.u[j] + sign * step, 0.0, 1.0);
        if (probe[j] == best.u[j]) continue;
        const double v = evaluate(probe);
        if (v > best.value) {
          best.value = v;
          best.u = probe;
          improved = true;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      ++halvings;
    }
  }
  return best;
}

/// How one block's (q_i, p_i) is drawn.
struct BlockSampling {
  std::optional<BoundaryFace> face;  ///< pin q_i to this face
  bool tangent_to_face = false;      ///< restrict p_i to directions tangent to `face`
  double energy_lo = 0.0;            ///< range of <p_i, p_i>
  double energy_hi = 0.0;
};

struct SamplePoint {
  double t = 0.0;
  Vector x;
};

/// Map [0,1]^D -> [0, T) x (product of blocks and velocity shells).
class SampleSpace {
 public:
  SampleSpace(const CoupledSystem& system, std::vector<BlockSampling> spec)
      : system_(&system), spec_(std::move(spec)) {
    if (static_cast<int>(spec_.size()) != system.size()) throw ConfigError("one sampling spec per block");
    for (const auto& s : spec_) {
      if (s.energy_lo < 0.0 || s.energy_hi < s.energy_lo) throw ConfigError("invalid velocity energy range");
    }
  }

  /// Every block free in M_j with velocities in the cap ball <p_j, p_j> <= caps[j].
  static std::vector<BlockSampling> balls(const std::vector<double>& caps) {
    std::vector<BlockSampling> out;
    for (double c : caps) out.push_back({std::nullopt, false, 0.0, c});
    return out;
  }

  [[nodiscard]] int dimension() const { return 1 + 2 * (system_->layout().size() / 2); }

  [[nodiscard]] SamplePoint map(std::span<const double> u) const {
    const auto& layout = system_->layout();
    SamplePoint out;
    out.t = system_->period() * u[0];
    out.x = Vector::Zero(layout.size());
    std::size_t cursor = 1;
    for (int i = 0; i < system_->size(); ++i) {
      const auto& block = system_->block(i);
      const auto& spec = spec_[static_cast<std::size_t>(i)];
      const int dim = block.dim();
      Vector q(dim);
      for (int c = 0; c < dim; ++c) {
        const auto& b = block.bounds()[static_cast<std::size_t>(c)];
        q(c) = b.lo + b.span() * u[cursor + static_cast<std::size_t>(c)];
      }
      if (spec.face) q(spec.face->coordinate) = block.face_value(*spec.face);
      cursor += static_cast<std::size_t>(dim);
      layout.set_q(out.x, i, q);
      layout.set_p(out.x, i, velocity(block, spec, q, u.subspan(cursor, static_cast<std::size_t>(dim))));
      cursor += static_cast<std::size_t>(dim);
    }
    return out;
  }

 private:
  // Speeds, not energies, are spread evenly so slow velocities are not starved.
  static double shell_energy(const BlockSampling& spec, double s) {
    const double lo = std::sqrt(spec.energy_lo);
    const double speed = lo + (std::sqrt(spec.energy_hi) - lo) * s;
    return speed * speed;
  }

  static Vector velocity(const ChartBlock& block, const BlockSampling& spec, const Vector& q,
                         std::span<const double> u) {
    const int dim = block.dim();
    const Matrix g = block.metric(q);
    if (spec.tangent_to_face && spec.face) {
      Vector p = Vector::Zero(dim);
      if (dim == 1) return p;  // the tangent space of a point face is trivial
      const int other = 1 - spec.face->coordinate;
      const double s = 2.0 * u[0] - 1.0;
      const double energy = shell_energy(spec, std::abs(s));
      p(other) = std::copysign(std::sqrt(energy / g(other, other)), s);
      return p;
    }
    if (dim == 1) {
      const double s = 2.0 * u[0] - 1.0;
      const double energy = shell_energy(spec, std::abs(s));
      return Vector::Constant(1, std::copysign(std::sqrt(energy / g(0, 0)), s));
    }
    const double energy = shell_energy(spec, u[0]);
    const double angle = 2.0 * std::numbers::pi * u[1];
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    const Eigen::LLT<Matrix> chol(g);
    // p = sqrt(E) L^-T dir gives p^T g p = E.
    const Vector p = chol.matrixU().solve(Vector(dir));
    return std::sqrt(energy) * p;
  }

  const CoupledSystem* system_;
  std::vector<BlockSampling> spec_;
};

}  // namespace forcedosc
