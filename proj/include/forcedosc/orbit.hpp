#pragma once

// Fixed points of the period map, i.e. T-periodic solutions, found by damped
// Newton on G(x) = P(x) - x with a finite-difference Jacobian, or by plain
// iteration x <- P(x) when the map contracts.

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "forcedosc/dynamics.hpp"
#include "forcedosc/errors.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

enum class OrbitMethod { newton, picard };

inline OrbitMethod orbit_method_from_string(const std::string& name) {
  if (name == "newton") return OrbitMethod::newton;
  if (name == "picard") return OrbitMethod::picard;
  throw ConfigError("unknown orbit method '" + name + "'");
}

struct OrbitOptions {
  OrbitMethod method = OrbitMethod::newton;
  double tol = 1e-10;
  int max_iter = 50;
  int jacobian_refresh = 3;
  double fd_step = 1e-6;
  int max_restarts = 5;
  bool picard_fallback = true;
  IntegratorConfig integrator{IntegratorMethod::rk45_adaptive, 1e-2, 1e-12, 1e-12, 2'000'000, 200};
  std::vector<double> caps;  ///< energy caps for the interior margins; empty skips the cap margin
};

struct InteriorMargin {
  double boundary = 0.0;  ///< min over t of the box distance from q_i(t) to the boundary
  double cap = std::numeric_limits<double>::infinity();  ///< min over t of c_i - T_i(t)
};

struct Monodromy {
  Matrix matrix;
  std::vector<std::complex<double>> multipliers;
};

struct OrbitResult {
  Vector fixed_point;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  Trajectory orbit;
  std::vector<InteriorMargin> margins;
  std::vector<std::complex<double>> floquet;
  int iterations = 0;
  int restarts = 0;
  std::string method;
  std::vector<double> residual_history;
  std::string note;

  /// Converged and strictly inside every block and below every cap.
  [[nodiscard]] bool certified() const {
    if (!converged || margins.empty()) return false;
    return std::all_of(margins.begin(), margins.end(),
                       [](const InteriorMargin& m) { return m.boundary > 0.0 && m.cap > 0.0; });
  }
};

class OrbitError : public Error {
 public:
  using Error::Error;
};

inline double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Central finite-difference Jacobian of the period map.
inline Monodromy monodromy(const CoupledSystem& system, const Vector& x_star, const IntegratorConfig& config,
                           double step = 1e-6) {
  const auto dim = x_star.size();
  Monodromy out;
  out.matrix.resize(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    Vector plus = x_star;
    Vector minus = x_star;
    plus(k) += step;
    minus(k) -= step;
    out.matrix.col(k) = (stroboscopic_map(system, plus, config) - stroboscopic_map(system, minus, config)) / (2.0 * step);
  }
  Eigen::EigenSolver<Matrix> solver(out.matrix, false);
  if (solver.info() != Eigen::Success) throw NumericError("monodromy eigenvalue computation failed");
  for (Eigen::Index k = 0; k < dim; ++k) out.multipliers.push_back(solver.eigenvalues()(k));
  std::sort(out.multipliers.begin(), out.multipliers.end(), [](auto a, auto b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

/// Pulls an iterate back toward the block centres with halved velocities.
inline Vector project_into_blocks(const CoupledSystem& system, const Vector& x) {
  const auto& layout = system.layout();
  Vector out = x;
  for (int i = 0; i < system.size(); ++i) {
    const auto& block = system.block(i);
    Vector q = layout.q(x, i);
    for (int c = 0; c < block.dim(); ++c) {
      const auto& b = block.bounds()[static_cast<std::size_t>(c)];
      q(c) = b.center() + 0.5 * (std::clamp(q(c), b.lo, b.hi) - b.center());
    }
    layout.set_q(out, i, q);
    layout.set_p(out, i, 0.5 * layout.p(x, i));
  }
  return out;
}

inline std::vector<InteriorMargin> interior_margins(const CoupledSystem& system, const Trajectory& orbit,
                                                    const std::vector<double>& caps) {
  std::vector<InteriorMargin> out(static_cast<std::size_t>(system.size()),
                                  {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  const auto& layout = system.layout();
  for (std::size_t s = 0; s < orbit.t.size(); ++s) {
    for (int i = 0; i < system.size(); ++i) {
      auto& m = out[static_cast<std::size_t>(i)];
      m.boundary = std::min(m.boundary, system.block(i).boundary_distance(layout.q(orbit.x[s], i)));
      if (!caps.empty()) {
        m.cap = std::min(m.cap, caps[static_cast<std::size_t>(i)] - orbit.energy[s][static_cast<std::size_t>(i)]);
      }
    }
  }
  return out;
}

namespace detail {

struct MapEval {
  Vector image;
  Vector residual;
  double norm = 0.0;
};

inline MapEval eval_map(const CoupledSystem& system, const Vector& x, const IntegratorConfig& config) {
  MapEval out;
  out.image = stroboscopic_map(system, x, config);
  out.residual = out.image - x;
  out.norm = max_norm(out.residual);
  return out;
}

}  // namespace detail

inline OrbitResult find_periodic_orbit(const CoupledSystem& system, const Vector& guess, const OrbitOptions& options) {
  if (!(options.tol > 0.0)) throw ConfigError("orbit tolerance must be positive");
  if (options.max_iter < 1) throw ConfigError("orbit solver needs at least one iteration");
  if (guess.size() != system.layout().size()) throw ConfigError("initial guess has the wrong dimension");
  const auto& cfg = options.integrator;

  OrbitResult result;
  result.method = options.method == OrbitMethod::newton ? "newton" : "picard";
  Vector x = guess;
  detail::MapEval current;
  // Evaluate P at the starting point, projecting back on escape.
  for (;;) {
    try {
      current = detail::eval_map(system, x, cfg);
      break;
    } catch (const EscapeError&) {
      if (++result.restarts > options.max_restarts) throw OrbitError("period map escapes M+ from every restart");
      x = project_into_blocks(system, x);
    }
  }
  result.residual_history.push_back(current.norm);

  Vector best_x = x;
  double best_norm = current.norm;
  bool use_newton = options.method == OrbitMethod::newton;
  Matrix jacobian;
  int since_refresh = options.jacobian_refresh;  // forces a refresh on the first Newton step
  int iter = 0;

  for (; iter < options.max_iter && current.norm >= options.tol; ++iter) {
    if (use_newton) {
      if (since_refresh >= options.jacobian_refresh) {
        try {
          jacobian = monodromy(system, x, cfg, options.fd_step).matrix -
                     Matrix::Identity(x.size(), x.size());
        } catch (const EscapeError&) {
          if (++result.restarts > options.max_restarts) throw OrbitError("Jacobian columns escape M+");
          x = project_into_blocks(system, x);
          current = detail::eval_map(system, x, cfg);
          since_refresh = options.jacobian_refresh;
          continue;
        }
        since_refresh = 0;
      }
      const Vector delta = jacobian.colPivHouseholderQr().solve(-current.residual);
      double lambda = 1.0;
      bool accepted = false;
      const double base = current.residual.norm();
      while (lambda >= 1.0 / 1024.0) {
        const Vector trial = x + lambda * delta;
        if (inside_enlarged(system, trial)) {
          try {
            auto next = detail::eval_map(system, trial, cfg);
            if (next.residual.norm() <= (1.0 - 1e-4 * lambda) * base) {
              x = trial;
              current = std::move(next);
              accepted = true;
              break;
            }
          } catch (const EscapeError&) {
          }
        }
        lambda *= 0.5;
      }
      ++since_refresh;
      if (!accepted) {
        if (since_refresh > 1) {
          since_refresh = options.jacobian_refresh;  // retry with a fresh Jacobian
        } else if (options.picard_fallback) {
          use_newton = false;
          result.method = "newton+picard";
        } else {
          break;
        }
      }
    } else {
      try {
        auto next = detail::eval_map(system, current.image, cfg);
        x = current.image;
        current = std::move(next);
      } catch (const EscapeError&) {
        if (++result.restarts > options.max_restarts) throw OrbitError("iteration escapes M+ after restarts");
        x = project_into_blocks(system, x);
        current = detail::eval_map(system, x, cfg);
      }
    }
    result.residual_history.push_back(current.norm);
    if (current.norm < best_norm) {
      best_norm = current.norm;
      best_x = x;
    }
    // Stall: less than 10% reduction over the last three iterations.
    const auto h = result.residual_history.size();
    if (use_newton && options.picard_fallback && h > 3 &&
        result.residual_history[h - 1] > 0.9 * result.residual_history[h - 4]) {
      use_newton = false;
      result.method = "newton+picard";
    }
  }

  result.iterations = iter;
  result.fixed_point = best_x;
  result.residual = best_norm;
  result.converged = best_norm < options.tol;

  IntegratorConfig orbit_cfg = cfg;
  try {
    result.orbit = integrate(system, 0.0, best_x, system.period(), orbit_cfg);
    result.margins = interior_margins(system, result.orbit, options.caps);
    result.floquet = monodromy(system, best_x, cfg, options.fd_step).multipliers;
  } catch (const EscapeError& e) {
    result.orbit = e.partial();
    result.note = e.what();
  }
  return result;
}

/// Equispaced interior points per block (the diagonal for 2-D blocks), combined
/// as a product and ordered so the block centres come first.
inline std::vector<Vector> seed_grid(const CoupledSystem& system, int per_block_count) {
  if (per_block_count < 1) throw ConfigError("seed grid needs at least one point per block");
  const int n = system.size();
  if (std::pow(static_cast<double>(per_block_count), n) > 1e6) throw ResourceError("seed grid is too large");
  // Per-block indices ranked by distance from the middle index.
  std::vector<int> order(static_cast<std::size_t>(per_block_count));
  for (int k = 0; k < per_block_count; ++k) order[static_cast<std::size_t>(k)] = k;
  const double mid = 0.5 * (per_block_count - 1);
  std::stable_sort(order.begin(), order.end(),
                   [mid](int a, int b) { return std::abs(a - mid) < std::abs(b - mid); });

  struct Candidate {
    std::vector<int> ranks;
    int total = 0;
  };
  std::vector<Candidate> candidates;
  std::vector<int> ranks(static_cast<std::size_t>(n), 0);
  for (;;) {
    Candidate c{ranks, 0};
    for (int r : ranks) c.total += r;
    candidates.push_back(c);
    int pos = n - 1;
    while (pos >= 0 && ++ranks[static_cast<std::size_t>(pos)] == per_block_count) {
      ranks[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.total < b.total; });

  const auto& layout = system.layout();
  std::vector<Vector> out;
  for (const auto& c : candidates) {
    Vector x = Vector::Zero(layout.size());
    for (int i = 0; i < n; ++i) {
      const int k = order[static_cast<std::size_t>(c.ranks[static_cast<std::size_t>(i)])];
      const double frac = static_cast<double>(k + 1) / (per_block_count + 1);
      const auto& block = system.block(i);
      Vector q(block.dim());
      for (int d = 0; d < block.dim(); ++d) {
        const auto& b = block.bounds()[static_cast<std::size_t>(d)];
        q(d) = b.lo + frac * b.span();
      }
      layout.set_q(x, i, q);
    }
    out.push_back(std::move(x));
  }
  return out;
}

struct SeedOutcome {
  Vector seed;
  std::optional<OrbitResult> result;
  std::string error;
};

/// Solves from every seed, up to `jobs` at a time.  Output order follows the seeds.
inline std::vector<SeedOutcome> find_periodic_orbits(const CoupledSystem& system, const std::vector<Vector>& seeds,
                                                     const OrbitOptions& options, int jobs = 1) {
  std::vector<SeedOutcome> out(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      out[k].seed = seeds[k];
      try {
        out[k].result = find_periodic_orbit(system, seeds[k], options);
      } catch (const Error& e) {
        out[k].error = e.what();
      }
    }
  };
  const int count = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  std::vector<std::thread> threads;
  for (int j = 1; j < count; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return out;
}

/// Index of the preferred outcome: first certified, else smallest residual.
inline std::optional<std::size_t> best_outcome(const std::vector<SeedOutcome>& outcomes) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].result && outcomes[k].result->certified()) return k;
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].result) continue;
    if (!best || outcomes[k].result->residual < outcomes[*best].result->residual) best = k;
  }
  return best;
}

inline nlohmann::json to_json(const OrbitResult& r) {
  auto vec = [](const Vector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
  };
  nlohmann::json margins = nlohmann::json::array();
  for (std::size_t i = 0; i < r.margins.size(); ++i) {
    nlohmann::json m{{"block", i + 1}, {"boundary", r.margins[i].boundary}};
    m["cap"] = std::isfinite(r.margins[i].cap) ? nlohmann::json(r.margins[i].cap) : nlohmann::json(nullptr);
    margins.push_back(m);
  }
  nlohmann::json floquet = nlohmann::json::array();
  for (const auto& mu : r.floquet) {
    floquet.push_back({{"re", mu.real()}, {"im", mu.imag()}, {"abs", std::abs(mu)}});
  }
  return {{"fixed_point", vec(r.fixed_point)},
          {"residual", r.residual},
          {"converged", r.converged},
          {"certified", r.certified()},
          {"interior_margins", margins},
          {"floquet", floquet},
          {"iterations", r.iterations},
          {"restarts", r.restarts},
          {"method", r.method},
          {"residual_history", r.residual_history},
          {"note", r.note}};
}

}  // namespace forcedosc
