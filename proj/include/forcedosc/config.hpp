#pragma once

// Run configuration: one JSON document selecting a system (built-in or
// generic expression fields) plus integrator, sampler, solver, simulation and
// sweep settings.
//
// Numbers may be written as JSON numbers or as constant expression strings
// ("ln(2)", "pi/2").  Unknown keys are rejected so typos surface early.

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forcedosc/dynamics.hpp"
#include "forcedosc/errors.hpp"
#include "forcedosc/expression.hpp"
#include "forcedosc/orbit.hpp"
#include "forcedosc/sampling.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

using nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

inline double number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return evaluate_constant(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + " must be a number or a constant expression");
}

inline double number_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

inline int integer(const json& v, const std::string& where) {
  const double x = number(v, where);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(where + " must be an integer");
  return static_cast<int>(x);
}

inline int integer_or(const json& obj, const std::string& key, int fallback, const std::string& where) {
  return obj.contains(key) ? integer(obj.at(key), where + "." + key) : fallback;
}

inline std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

/// Scalar broadcast or per-block list.
inline std::vector<double> per_block(const json& v, std::size_t n, const std::string& where) {
  if (v.is_array()) {
    auto out = numbers(v, where);
    if (out.size() != n) throw ConfigError(where + " needs " + std::to_string(n) + " entries");
    return out;
  }
  return std::vector<double>(n, number(v, where));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Built-in parameter defaults.  Sweep axes must name a key present here (or
// in the generic system's "params").

inline json builtin_defaults(const std::string& type) {
  if (type == "morse_chain") {
    return {{"n", 3}, {"gamma", 1.0}, {"delta", 1.0}, {"a", "ln(2)"}, {"period", 1.0}, {"threshold", 1.0},
            {"forcing", {{"epsilon", 0.05}, {"b", 1.5}}}};
  }
  if (type == "pendulum_chain") {
    return {{"n", 2},         {"length", 1.0}, {"mass", 1.0},  {"gamma", 0.5},    {"kappa", 0.1},
            {"A", 0.2},       {"period", 1.0}, {"gravity", 9.81}, {"spacing", 3.0}, {"threshold", 1.0}};
  }
  if (type == "forced_oscillator") {
    return {{"gamma", 0.5}, {"omega", 2.0}, {"amplitude", 1.0}, {"period", 1.0}, {"half_width", 1.0},
            {"threshold", 1.0}};
  }
  if (type == "generic") return json::object();
  throw ConfigError("unknown system type '" + type + "'");
}

/// Defaults merged under the user's params (objects merge recursively).
inline json effective_params(const json& system_spec) {
  const std::string type = system_spec.at("type").get<std::string>();
  json params = builtin_defaults(type);
  if (system_spec.contains("params")) {
    const json& user = system_spec.at("params");
    if (!user.is_object()) throw ConfigError("system.params must be an object");
    if (type == "generic") return user;
    detail::check_keys(user, [&] {
      std::set<std::string> keys;
      for (auto it = params.begin(); it != params.end(); ++it) keys.insert(it.key());
      // Per-pendulum lists override the scalar defaults.
      if (type == "pendulum_chain") keys.insert({"pivots", "lengths", "masses", "gammas"});
      return keys;
    }(),
                       "system.params");
    params.merge_patch(user);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Generic systems: blocks with expression-string fields.
//
// Local fields (force, friction) see t, q, p (1-D) or q1, q2, p1, p2, and the
// named params.  Interaction fields additionally see q[j], p[j] (1-D block j)
// and q[j,c], p[j,c], with 1-based block and component indices.

namespace detail {

struct ExprContext {
  const StateLayout* layout = nullptr;
  int block = 0;
  bool global = false;  ///< interaction: slots index the full state
  std::vector<std::string> param_names;
};

inline VariableResolver make_resolver(const ExprContext& ctx) {
  return [ctx](const VariableRef& ref) -> std::optional<int> {
    const auto& layout = *ctx.layout;
    const int dim = layout.dim(ctx.block);
    const int state_slots = ctx.global ? layout.size() : 2 * dim;
    const int own_q = ctx.global ? layout.q_offset(ctx.block) : 0;
    const int own_p = ctx.global ? layout.p_offset(ctx.block) : dim;
    if (ref.name == "t" && ref.indices.empty()) return 0;
    if (ref.name == "q" || ref.name == "p") {
      const bool is_q = ref.name == "q";
      if (ref.indices.empty()) {
        if (dim != 1) throw ConfigError("use " + ref.name + "1 or " + ref.name + "2 on a 2-D block");
        return 1 + (is_q ? own_q : own_p);
      }
      if (!ctx.global) throw ConfigError("indexed " + ref.name + "[...] is only available in interaction fields");
      const int j = ref.indices[0] - 1;
      if (j < 0 || j >= layout.blocks()) throw ConfigError("block index out of range in " + ref.name + "[...]");
      const int c = ref.indices.size() > 1 ? ref.indices[1] - 1 : 0;
      if (ref.indices.size() > 2 || c < 0 || c >= layout.dim(j) || (ref.indices.size() == 1 && layout.dim(j) != 1)) {
        throw ConfigError("bad component index in " + ref.name + "[...]");
      }
      return 1 + (is_q ? layout.q_offset(j) : layout.p_offset(j)) + c;
    }
    if (ref.indices.empty() && ref.name.size() == 2 && (ref.name[0] == 'q' || ref.name[0] == 'p') &&
        (ref.name[1] == '1' || ref.name[1] == '2')) {
      const int c = ref.name[1] - '1';
      if (c >= dim) throw ConfigError("variable " + ref.name + " exceeds the block dimension");
      return 1 + (ref.name[0] == 'q' ? own_q : own_p) + c;
    }
    for (std::size_t k = 0; k < ctx.param_names.size(); ++k) {
      if (ref.indices.empty() && ctx.param_names[k] == ref.name) return 1 + state_slots + static_cast<int>(k);
    }
    return std::nullopt;
  };
}

inline std::vector<Expression> parse_exprs(const json& list, std::size_t count, const ExprContext& ctx,
                                           const std::string& where) {
  if (!list.is_array() || list.size() != count) {
    throw ConfigError(where + " must be an array of " + std::to_string(count) + " expression strings");
  }
  std::vector<Expression> out;
  const auto resolver = make_resolver(ctx);
  for (std::size_t k = 0; k < count; ++k) {
    if (!list[k].is_string() && !list[k].is_number()) throw ConfigError(where + " entries must be strings");
    const std::string text = list[k].is_string() ? list[k].get<std::string>() : list[k].dump();
    try {
      out.push_back(Expression::parse(text, resolver));
    } catch (const ConfigError& e) {
      throw ConfigError(where + "[" + std::to_string(k) + "]: " + e.what());
    }
  }
  return out;
}

inline CoupledSystem build_generic(const json& spec, const json& params) {
  check_keys(spec, {"type", "params", "period", "blocks", "name"}, "system");
  std::vector<std::string> names;
  std::vector<double> values;
  for (auto it = params.begin(); it != params.end(); ++it) {
    names.push_back(it.key());
    values.push_back(number(it.value(), "system.params." + it.key()));
  }
  const double period = number_or(params, "period", number_or(spec, "period", 1.0, "system"), "system.params");
  if (!spec.contains("blocks") || !spec.at("blocks").is_array() || spec.at("blocks").empty()) {
    throw ConfigError("generic system needs a non-empty 'blocks' array");
  }
  const json& jblocks = spec.at("blocks");

  std::vector<ChartBlock> blocks;
  std::vector<int> dims;
  for (std::size_t i = 0; i < jblocks.size(); ++i) {
    const std::string where = "system.blocks[" + std::to_string(i) + "]";
    const json& b = jblocks[i];
    check_keys(b,
               {"kind", "bounds", "metric", "chi", "force", "friction", "friction_threshold", "gamma_sup",
                "force_bound", "interaction", "interaction_bound", "margin"},
               where);
    const BlockKind kind = block_kind_from_string(b.value("kind", std::string("interval")));
    if (!b.contains("bounds") || !b.at("bounds").is_array()) throw ConfigError(where + ".bounds is required");
    std::vector<Interval> bounds;
    for (std::size_t c = 0; c < b.at("bounds").size(); ++c) {
      const auto pair = numbers(b.at("bounds")[c], where + ".bounds");
      if (pair.size() != 2 || !(pair[0] < pair[1])) throw ConfigError(where + ".bounds entries must be [lo, hi]");
      bounds.push_back({pair[0], pair[1]});
    }
    const auto dim = static_cast<int>(bounds.size());
    ChartBlock::Options opts;
    opts.margin_fraction = number_or(b, "margin", 0.1, where);
    if (b.contains("chi")) opts.chi = integer(b.at("chi"), where + ".chi");

    MetricFn metric;
    if (b.contains("metric")) {
      // Metric entries may depend on q only.
      const json& m = b.at("metric");
      if (!m.is_array() || m.size() != static_cast<std::size_t>(dim)) throw ConfigError(where + ".metric shape");
      StateLayout local({dim});
      ExprContext ctx{&local, 0, false, names};
      std::vector<std::vector<Expression>> rows;
      for (std::size_t r = 0; r < m.size(); ++r) {
        rows.push_back(parse_exprs(m[r], static_cast<std::size_t>(dim), ctx, where + ".metric"));
      }
      metric = [rows, values, dim](const Vector& q) {
        std::vector<double> slots(1 + 2 * static_cast<std::size_t>(dim), 0.0);
        for (int c = 0; c < dim; ++c) slots[1 + static_cast<std::size_t>(c)] = q(c);
        slots.insert(slots.end(), values.begin(), values.end());
        Matrix g(dim, dim);
        for (int r = 0; r < dim; ++r) {
          for (int c = 0; c < dim; ++c) g(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].eval(slots);
        }
        return g;
      };
    } else {
      metric = [dim](const Vector&) { return Matrix(Matrix::Identity(dim, dim)); };
      opts.constant_metric = true;
    }
    blocks.emplace_back(kind, std::move(bounds), std::move(metric), std::move(opts));
    dims.push_back(dim);
  }

  const StateLayout layout(dims);
  std::vector<BlockFields> fields;
  for (std::size_t i = 0; i < jblocks.size(); ++i) {
    const std::string where = "system.blocks[" + std::to_string(i) + "]";
    const json& b = jblocks[i];
    const int bi = static_cast<int>(i);
    const int dim = layout.dim(bi);
    const auto udim = static_cast<std::size_t>(dim);
    BlockFields f;

    auto local_field = [&](const std::string& key) {
      ExprContext ctx{&layout, bi, false, names};
      auto exprs = parse_exprs(b.at(key), udim, ctx, where + "." + key);
      return [exprs, values, dim](double t, const Vector& q, const Vector& p) -> Vector {
        std::vector<double> slots;
        slots.reserve(1 + 2 * static_cast<std::size_t>(dim) + values.size());
        slots.push_back(t);
        for (int c = 0; c < dim; ++c) slots.push_back(q(c));
        for (int c = 0; c < dim; ++c) slots.push_back(p(c));
        slots.insert(slots.end(), values.begin(), values.end());
        Vector out(dim);
        for (int c = 0; c < dim; ++c) out(c) = exprs[static_cast<std::size_t>(c)].eval(slots);
        return out;
      };
    };
    if (b.contains("force")) f.force.eval = local_field("force");
    if (b.contains("force_bound")) f.force.declared_bound = number(b.at("force_bound"), where + ".force_bound");
    if (b.contains("friction")) f.friction.eval = local_field("friction");
    f.friction.threshold = number_or(b, "friction_threshold", 1.0, where);
    if (b.contains("gamma_sup")) f.friction.gamma_sup = number(b.at("gamma_sup"), where + ".gamma_sup");
    if (b.contains("interaction")) {
      ExprContext ctx{&layout, bi, true, names};
      auto exprs = parse_exprs(b.at("interaction"), udim, ctx, where + ".interaction");
      f.interaction.eval = [exprs, values, dim](double t, const StateLayout& lay, const Vector& x) -> Vector {
        std::vector<double> slots;
        slots.reserve(1 + static_cast<std::size_t>(lay.size()) + values.size());
        slots.push_back(t);
        for (Eigen::Index k = 0; k < x.size(); ++k) slots.push_back(x(k));
        slots.insert(slots.end(), values.begin(), values.end());
        Vector out(dim);
        for (int c = 0; c < dim; ++c) out(c) = exprs[static_cast<std::size_t>(c)].eval(slots);
        return out;
      };
    }
    if (b.contains("interaction_bound")) {
      f.interaction.declared_bound = number(b.at("interaction_bound"), where + ".interaction_bound");
    }
    fields.push_back(std::move(f));
  }
  return CoupledSystem(spec.value("name", std::string("generic")), std::move(blocks), std::move(fields), period);
}

}  // namespace detail

inline CoupledSystem build_system(const json& spec) {
  if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string()) {
    throw ConfigError("system needs a string 'type'");
  }
  const std::string type = spec.at("type").get<std::string>();
  const json params = effective_params(spec);
  const std::string where = "system.params";
  using detail::integer_or;
  using detail::number_or;

  if (type == "generic") return detail::build_generic(spec, params);
  detail::check_keys(spec, {"type", "params"}, "system");

  if (type == "morse_chain") {
    MorseChainParams p;
    p.n = integer_or(params, "n", p.n, where);
    p.gamma = number_or(params, "gamma", p.gamma, where);
    p.delta = number_or(params, "delta", p.delta, where);
    p.a = number_or(params, "a", p.a, where);
    p.period = number_or(params, "period", p.period, where);
    p.threshold = number_or(params, "threshold", p.threshold, where);
    const json& forcing = params.at("forcing");
    if (forcing.is_string()) {
      // F(t, x) as an expression in t and x.
      const auto expr = Expression::parse(forcing.get<std::string>(), [](const VariableRef& ref) -> std::optional<int> {
        if (!ref.indices.empty()) return std::nullopt;
        if (ref.name == "t") return 0;
        if (ref.name == "x") return 1;
        return std::nullopt;
      });
      p.forcing = [expr](double t, double x) {
        const double slots[2] = {t, x};
        return expr.eval(slots);
      };
    } else {
      detail::check_keys(forcing, {"epsilon", "b"}, where + ".forcing");
      p.forcing = default_morse_forcing(number_or(forcing, "epsilon", 0.05, where + ".forcing"),
                                        number_or(forcing, "b", 1.5, where + ".forcing"), p.period, p.delta, p.a);
    }
    return make_morse_chain(std::move(p));
  }
  if (type == "pendulum_chain") {
    PendulumChainParams p;
    const int n = integer_or(params, "n", 2, where);
    if (n < 1) throw ConfigError("pendulum chain needs n >= 1");
    const auto un = static_cast<std::size_t>(n);
    p.lengths = detail::per_block(params.contains("lengths") ? params.at("lengths") : params.at("length"), un,
                                  where + ".length");
    p.masses = detail::per_block(params.contains("masses") ? params.at("masses") : params.at("mass"), un,
                                 where + ".mass");
    p.gammas = detail::per_block(params.contains("gammas") ? params.at("gammas") : params.at("gamma"), un,
                                 where + ".gamma");
    if (params.contains("pivots")) {
      p.pivots = detail::per_block(params.at("pivots"), un, where + ".pivots");
    } else {
      const double spacing = number_or(params, "spacing", 3.0, where);
      for (int i = 0; i < n; ++i) p.pivots.push_back(spacing * i);
    }
    p.gravity = number_or(params, "gravity", p.gravity, where);
    p.period = number_or(params, "period", p.period, where);
    p.pivot_accel_amplitude = number_or(params, "A", 0.0, where);
    p.kappa = number_or(params, "kappa", 0.0, where);
    p.threshold = number_or(params, "threshold", p.threshold, where);
    return make_pendulum_chain(std::move(p));
  }
  if (type == "forced_oscillator") {
    ForcedOscillatorParams p;
    p.gamma = number_or(params, "gamma", p.gamma, where);
    p.omega = number_or(params, "omega", p.omega, where);
    p.amplitude = number_or(params, "amplitude", p.amplitude, where);
    p.period = number_or(params, "period", p.period, where);
    p.half_width = number_or(params, "half_width", p.half_width, where);
    p.threshold = number_or(params, "threshold", p.threshold, where);
    return make_forced_oscillator(p);
  }
  throw ConfigError("unknown system type '" + type + "'");
}

// ---------------------------------------------------------------------------

struct SweepAxis {
  std::string param;  ///< dotted path inside system.params, e.g. "forcing.epsilon"
  std::vector<double> values;
};

struct SimulateSpec {
  double t0 = 0.0;
  double t1 = 10.0;
  std::optional<Vector> initial_state;  ///< defaults to the centre seed
  int samples = 1000;
  bool block_exit_events = false;
  bool cap_events = false;
  bool stop_on_events = true;
};

struct RunConfig {
  json system;
  IntegratorConfig integrator;
  SamplerConfig sampler;
  double h1_energy_factor = 4.0;  ///< H1 is sampled over d_i < <p,p> <= factor * c_i
  OrbitOptions solver;
  int seed_grid = 1;
  std::string output_dir = "out";
  SimulateSpec simulate;
  std::vector<SweepAxis> sweep;
};

namespace detail {

inline IntegratorConfig parse_integrator(const json& j, IntegratorConfig out) {
  check_keys(j, {"method", "step", "rtol", "atol", "max_steps", "samples"}, "integrator");
  if (j.contains("method")) out.method = integrator_method_from_string(j.at("method").get<std::string>());
  out.step = number_or(j, "step", out.step, "integrator");
  out.rtol = number_or(j, "rtol", out.rtol, "integrator");
  out.atol = number_or(j, "atol", out.atol, "integrator");
  out.max_steps = integer_or(j, "max_steps", static_cast<int>(out.max_steps), "integrator");
  out.samples = integer_or(j, "samples", out.samples, "integrator");
  out.validate();
  return out;
}

inline json* find_param(json& params, const std::string& path) {
  json* node = &params;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace detail

/// The system spec with `path` (relative to params) set to `value`.
inline json with_parameter(const json& system_spec, const std::string& path, double value) {
  json spec = system_spec;
  json params = effective_params(spec);
  json* slot = detail::find_param(params, path);
  if (!slot || slot->is_object()) throw ConfigError("sweep parameter '" + path + "' does not exist");
  *slot = value;
  spec["params"] = params;
  return spec;
}

inline RunConfig parse_run_config(const json& doc) {
  detail::check_keys(doc, {"system", "integrator", "checks", "solver", "seed_grid", "output_dir", "simulate", "sweep"},
                     "config");
  if (!doc.contains("system")) throw ConfigError("config needs a 'system' section");
  RunConfig cfg;
  cfg.system = doc.at("system");
  (void)build_system(cfg.system);  // validate eagerly

  if (doc.contains("integrator")) cfg.integrator = detail::parse_integrator(doc.at("integrator"), cfg.integrator);

  if (doc.contains("checks")) {
    const json& c = doc.at("checks");
    detail::check_keys(c, {"samples", "refine_iterations", "strictness", "bound_safety", "cap_safety", "h1_energy_factor"},
                       "checks");
    auto& s = cfg.sampler;
    s.samples = detail::integer_or(c, "samples", s.samples, "checks");
    s.refine_iterations = detail::integer_or(c, "refine_iterations", s.refine_iterations, "checks");
    s.strictness = detail::number_or(c, "strictness", s.strictness, "checks");
    s.bound_safety = detail::number_or(c, "bound_safety", s.bound_safety, "checks");
    s.cap_safety = detail::number_or(c, "cap_safety", s.cap_safety, "checks");
    cfg.h1_energy_factor = detail::number_or(c, "h1_energy_factor", cfg.h1_energy_factor, "checks");
    if (s.samples < 1 || s.refine_iterations < 0 || !(s.strictness >= 0.0) || !(s.bound_safety >= 1.0) ||
        !(s.cap_safety > 1.0) || !(cfg.h1_energy_factor > 1.0)) {
      throw ConfigError("checks: sampler settings out of range");
    }
  }

  // The orbit solver integrates with its own, tighter tolerances.
  cfg.solver.integrator = cfg.integrator;
  cfg.solver.integrator.rtol = std::min(cfg.integrator.rtol, 1e-12);
  cfg.solver.integrator.atol = std::min(cfg.integrator.atol, 1e-12);
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    detail::check_keys(s,
                       {"method", "tol", "max_iter", "jacobian_refresh", "fd_step", "max_restarts", "picard_fallback",
                        "rtol", "atol"},
                       "solver");
    auto& o = cfg.solver;
    if (s.contains("method")) o.method = orbit_method_from_string(s.at("method").get<std::string>());
    o.tol = detail::number_or(s, "tol", o.tol, "solver");
    o.max_iter = detail::integer_or(s, "max_iter", o.max_iter, "solver");
    o.jacobian_refresh = detail::integer_or(s, "jacobian_refresh", o.jacobian_refresh, "solver");
    o.fd_step = detail::number_or(s, "fd_step", o.fd_step, "solver");
    o.max_restarts = detail::integer_or(s, "max_restarts", o.max_restarts, "solver");
    o.picard_fallback = s.value("picard_fallback", o.picard_fallback);
    o.integrator.rtol = detail::number_or(s, "rtol", o.integrator.rtol, "solver");
    o.integrator.atol = detail::number_or(s, "atol", o.integrator.atol, "solver");
    if (!(o.tol > 0.0) || o.max_iter < 1 || o.jacobian_refresh < 1 || !(o.fd_step > 0.0) || o.max_restarts < 0) {
      throw ConfigError("solver settings out of range");
    }
    o.integrator.validate();
  }

  cfg.seed_grid = detail::integer_or(doc, "seed_grid", cfg.seed_grid, "config");
  if (cfg.seed_grid < 1) throw ConfigError("seed_grid must be at least 1");
  if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();

  if (doc.contains("simulate")) {
    const json& s = doc.at("simulate");
    detail::check_keys(s, {"t_span", "initial_state", "samples", "block_exit_events", "cap_events", "stop_on_events"},
                       "simulate");
    auto& sim = cfg.simulate;
    if (s.contains("t_span")) {
      const auto span = detail::numbers(s.at("t_span"), "simulate.t_span");
      if (span.size() != 2 || !(span[1] > span[0])) throw ConfigError("simulate.t_span must be [t0, t1] with t1 > t0");
      sim.t0 = span[0];
      sim.t1 = span[1];
    }
    if (s.contains("initial_state")) {
      const auto v = detail::numbers(s.at("initial_state"), "simulate.initial_state");
      sim.initial_state = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    sim.samples = detail::integer_or(s, "samples", sim.samples, "simulate");
    if (sim.samples < 1) throw ConfigError("simulate.samples must be positive");
    sim.block_exit_events = s.value("block_exit_events", sim.block_exit_events);
    sim.cap_events = s.value("cap_events", sim.cap_events);
    sim.stop_on_events = s.value("stop_on_events", sim.stop_on_events);
  }

  if (doc.contains("sweep")) {
    const json& axes = doc.at("sweep");
    if (!axes.is_array()) throw ConfigError("sweep must be an array of axes");
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const std::string where = "sweep[" + std::to_string(k) + "]";
      detail::check_keys(axes[k], {"param", "values"}, where);
      if (!axes[k].contains("param") || !axes[k].at("param").is_string()) throw ConfigError(where + ".param is required");
      SweepAxis axis{axes[k].at("param").get<std::string>(),
                     detail::numbers(axes[k].value("values", json::array()), where + ".values")};
      if (axis.values.empty()) throw ConfigError(where + " has no values");
      (void)with_parameter(cfg.system, axis.param, axis.values.front());
      cfg.sweep.push_back(std::move(axis));
    }
  }
  return cfg;
}

inline RunConfig parse_run_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_run_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

}  // namespace forcedosc
