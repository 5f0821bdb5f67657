#pragma once

// Subcommand implementations behind the forcedosc executable.  Each writes its
// files under one run directory and returns the process exit code:
//   0 success / conditions hold, 1 a condition or the solver failed,
//   2 configuration, numeric or orchestration failure.

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "forcedosc/config.hpp"
#include "forcedosc/dynamics.hpp"
#include "forcedosc/hypotheses.hpp"
#include "forcedosc/io.hpp"
#include "forcedosc/orbit.hpp"
#include "forcedosc/topology.hpp"

namespace forcedosc {

inline constexpr const char* kVersion = "0.1.0";

struct CommandContext {
  std::string config_path;
  std::string config_text;
  RunConfig config;
  std::string out_dir;
  int jobs = 1;
  bool force = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

// ---------------------------------------------------------------------------
// Condition checks.

struct CapDerivation {
  std::optional<EnergyCaps> caps;
  std::vector<double> gamma_sup;
  std::vector<CheckReport> h1;  ///< per-block H1 reports over the final sampling range
  std::string note;
};

/// Dissipation quotients and energy caps.  Undeclared gamma_sup values are
/// sampled, first over (d_i, 100 d_i] and then over (d_i, factor c_i] until
/// the caps they imply stop moving.
inline CapDerivation derive_caps(const CoupledSystem& system, const SamplerConfig& sampler, double h1_factor) {
  const int n = system.size();
  CapDerivation out;
  std::vector<bool> declared;
  for (int i = 0; i < n; ++i) {
    const auto& friction = system.fields(i).friction;
    const double d = friction.threshold;
    declared.push_back(friction.gamma_sup.has_value());
    if (friction.gamma_sup) {
      out.gamma_sup.push_back(*friction.gamma_sup);
    } else {
      out.gamma_sup.push_back(check_H1(system, i, d, 100.0 * d, sampler).details["sup"].get<double>());
    }
  }
  for (int round = 0; round < 6; ++round) {
    const bool dissipative =
        std::all_of(out.gamma_sup.begin(), out.gamma_sup.end(), [](double g) { return g < 0.0; });
    if (!dissipative) {
      out.caps.reset();
      out.note = "energy caps undefined: some dissipation quotient is not negative";
      break;
    }
    try {
      out.caps = derive_energy_caps(system, out.gamma_sup, sampler);
    } catch (const HypothesisError& e) {
      out.caps.reset();
      out.note = e.what();
      break;
    }
    out.h1.clear();
    bool raised = false;
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const double d = system.fields(i).friction.threshold;
      auto report = check_H1(system, i, d, h1_factor * out.caps->c[si], sampler);
      const double sup = report.details["sup"].get<double>();
      if (!declared[si] && sup > out.gamma_sup[si]) {
        out.gamma_sup[si] = sup;
        raised = true;
      }
      out.h1.push_back(std::move(report));
    }
    if (!raised) break;
  }
  if (out.h1.empty()) {
    for (int i = 0; i < n; ++i) {
      const double d = system.fields(i).friction.threshold;
      out.h1.push_back(check_H1(system, i, d, 100.0 * d, sampler));
    }
  }
  return out;
}

struct CheckOutcome {
  CapDerivation derivation;
  std::vector<double> sample_caps;  ///< velocity balls used by the sampled checks
  ConditionReports reports;
  Verdict verdict;
};

inline CheckOutcome run_checks(const CoupledSystem& system, const SamplerConfig& sampler, double h1_factor) {
  CheckOutcome out;
  out.derivation = derive_caps(system, sampler, h1_factor);
  const auto& der = out.derivation;
  if (der.caps) {
    out.sample_caps = der.caps->c;
  } else {
    for (int i = 0; i < system.size(); ++i) {
      out.sample_caps.push_back(sampler.cap_safety * sampler.cap_safety * system.fields(i).friction.threshold);
    }
  }
  auto& r = out.reports;
  r.h1 = combine_reports("H1", der.h1, sampler.describe());

  std::vector<FieldBounds> bounds;
  if (der.caps) {
    bounds = der.caps->bounds;
  } else {
    for (int i = 0; i < system.size(); ++i) bounds.push_back(estimate_bounds(system, i, out.sample_caps, sampler));
  }
  r.h2 = check_H2(bounds, sampler);

  if (der.caps) {
    r.energy_cap = check_energy_cap(system, der.caps->c, sampler);
  } else {
    CheckReport failed;
    failed.name = "energy_cap";
    failed.sampler = sampler.describe();
    const double worst = *std::max_element(der.gamma_sup.begin(), der.gamma_sup.end());
    failed.margin = std::min(-worst, 0.0) - sampler.strictness;
    failed.details = {{"note", der.note}};
    r.energy_cap = failed;
  }
  r.boundary_exit = check_boundary_exit(system, out.sample_caps, sampler);
  if (system.morse()) r.morse_condition = check_morse_condition(system, sampler);
  out.verdict = theorem_applies(system, r);
  return out;
}

inline json system_json(const CoupledSystem& system) {
  json blocks = json::array();
  for (int i = 0; i < system.size(); ++i) {
    const auto& b = system.block(i);
    json bounds = json::array();
    for (const auto& iv : b.bounds()) bounds.push_back({iv.lo, iv.hi});
    blocks.push_back({{"block", i + 1}, {"kind", to_string(b.kind())}, {"bounds", bounds}, {"chi", b.chi()}});
  }
  return {{"name", system.name()}, {"period", system.period()}, {"blocks", blocks}};
}

inline json report_json(const CoupledSystem& system, const CheckOutcome& o, const SamplerConfig& sampler) {
  json checks = {{"H1", to_json(*o.reports.h1)},
                 {"H2", to_json(*o.reports.h2)},
                 {"energy_cap", to_json(*o.reports.energy_cap)},
                 {"boundary_exit", to_json(*o.reports.boundary_exit)}};
  if (o.reports.morse_condition) checks["morse_condition"] = to_json(*o.reports.morse_condition);
  json caps = o.derivation.caps ? to_json(*o.derivation.caps) : json(nullptr);
  json out = {{"system", system_json(system)},
              {"sampler", sampler.describe()},
              {"gamma_sup", o.derivation.gamma_sup},
              {"caps", caps},
              {"sample_caps", o.sample_caps},
              {"checks", checks},
              {"verdict", to_json(o.verdict)}};
  if (!o.derivation.note.empty()) out["caps_note"] = o.derivation.note;
  return out;
}

// ---------------------------------------------------------------------------
// Orbit search.

struct OrbitSearch {
  std::vector<SeedOutcome> outcomes;
  std::optional<std::size_t> best;
};

inline OrbitSearch run_orbit_search(const CoupledSystem& system, const RunConfig& cfg, const std::vector<double>& caps,
                                    int jobs) {
  OrbitOptions opts = cfg.solver;
  opts.caps = caps;
  OrbitSearch out;
  out.outcomes = find_periodic_orbits(system, seed_grid(system, cfg.seed_grid), opts, jobs);
  out.best = best_outcome(out.outcomes);
  return out;
}

inline json orbit_json(const OrbitSearch& search, const Verdict& verdict, bool forced, int seed_grid_size) {
  auto vec = [](const Vector& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
  };
  json seeds = json::array();
  for (const auto& o : search.outcomes) {
    json s = {{"seed", vec(o.seed)}};
    if (o.result) {
      s["converged"] = o.result->converged;
      s["certified"] = o.result->certified();
      s["residual"] = o.result->residual;
    } else {
      s["error"] = o.error;
    }
    seeds.push_back(s);
  }
  json out = {{"verdict", {{"applies", verdict.applies}, {"index", verdict.index}, {"forced", forced}}},
              {"seed_grid", seed_grid_size},
              {"seeds", seeds}};
  if (search.best) {
    out["best_seed"] = *search.best + 1;
    out["result"] = to_json(*search.outcomes[*search.best].result);
  } else {
    out["best_seed"] = nullptr;
    out["result"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers.

namespace detail {

inline std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void write_manifest(const CommandContext& ctx, const std::string& command, const std::vector<std::string>& files,
                           int exit_code) {
  const json manifest = {{"tool", "forcedosc"},
                         {"version", kVersion},
                         {"command", command},
                         {"config_file", std::filesystem::path(ctx.config_path).filename().string()},
                         {"config_hash", "fnv1a64:" + hex64(fnv1a64(ctx.config_text))},
                         {"files", files},
                         {"exit_code", exit_code}};
  write_text_file(join(ctx.out_dir, "manifest.json"), forcedosc::dump_json(manifest));
}

inline void write_csv(const std::string& path, const CoupledSystem& system, const Trajectory& traj) {
  std::ostringstream csv;
  write_trajectory_csv(csv, system, traj);
  write_text_file(path, csv.str());
}

/// RFC-4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void print_verdict(std::ostream& out, const Verdict& v) {
  out << "index " << v.index << " (chi(M) = " << v.euler_char << ", k = " << v.two_point_boundaries << ")\n";
  out << (v.applies ? "theorem applies: " : "theorem does not apply: ") << v.conclusion << "\n";
  for (const auto& r : v.reasons) out << "  " << r << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline int cmd_check(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto system = build_system(cfg.system);
  detail::prepare_dir(ctx.out_dir);
  const auto outcome = run_checks(system, cfg.sampler, cfg.h1_energy_factor);
  write_text_file(detail::join(ctx.out_dir, "report.json"), dump_json(report_json(system, outcome, cfg.sampler)));
  const int code = outcome.verdict.applies ? 0 : 1;
  detail::write_manifest(ctx, "check", {"report.json"}, code);
  for (const auto* r : {&outcome.reports.h1, &outcome.reports.h2, &outcome.reports.energy_cap,
                        &outcome.reports.boundary_exit, &outcome.reports.morse_condition}) {
    if (*r) *ctx.out << ((*r)->pass ? "pass " : "FAIL ") << (*r)->name << "  margin " << format_double((*r)->margin) << "\n";
  }
  detail::print_verdict(*ctx.out, outcome.verdict);
  return code;
}

inline int cmd_simulate(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& sim = cfg.simulate;
  const auto system = build_system(cfg.system);
  detail::prepare_dir(ctx.out_dir);

  const Vector x0 = sim.initial_state ? *sim.initial_state : seed_grid(system, 1).front();
  if (x0.size() != system.layout().size()) {
    throw ConfigError("initial_state needs " + std::to_string(system.layout().size()) + " entries");
  }
  for (int i = 0; i < system.size(); ++i) {
    if (!system.block(i).contains(system.layout().q(x0, i))) {
      throw DomainError("initial state lies outside block " + std::to_string(i + 1));
    }
  }
  EventOptions events;
  events.block_exit = sim.block_exit_events;
  events.stop = sim.stop_on_events;
  if (sim.cap_events) {
    const auto der = derive_caps(system, cfg.sampler, cfg.h1_energy_factor);
    if (!der.caps) throw HypothesisError("cap events requested but " + der.note);
    events.caps = der.caps->c;
  }
  IntegratorConfig icfg = cfg.integrator;
  icfg.samples = sim.samples;

  Trajectory traj;
  int code = 0;
  try {
    traj = integrate(system, sim.t0, x0, sim.t1, icfg, events);
  } catch (const IntegrationError& e) {
    traj = e.partial();
    *ctx.err << "error: " << e.what() << "\n";
    code = 2;
  }
  detail::write_csv(detail::join(ctx.out_dir, "trajectory.csv"), system, traj);
  detail::write_manifest(ctx, "simulate", {"trajectory.csv"}, code);
  if (traj.events.empty()) *ctx.out << "events: none\n";
  for (const auto& ev : traj.events) *ctx.out << "event " << ev.label() << " at t = " << format_double(ev.t) << "\n";
  *ctx.out << traj.t.size() << " samples, " << traj.steps << " steps, final t = " << format_double(traj.t.back())
           << "\n";
  return code;
}

inline int cmd_find_orbit(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto system = build_system(cfg.system);
  detail::prepare_dir(ctx.out_dir);
  const auto outcome = run_checks(system, cfg.sampler, cfg.h1_energy_factor);
  write_text_file(detail::join(ctx.out_dir, "report.json"), dump_json(report_json(system, outcome, cfg.sampler)));
  if (!outcome.verdict.applies && !ctx.force) {
    *ctx.out << "conditions do not hold; rerun with --force to search anyway\n";
    detail::print_verdict(*ctx.out, outcome.verdict);
    detail::write_manifest(ctx, "find-orbit", {"report.json"}, 1);
    return 1;
  }
  const auto search = run_orbit_search(system, cfg, outcome.derivation.caps ? outcome.derivation.caps->c
                                                                            : std::vector<double>{},
                                       ctx.jobs);
  const json orbit = orbit_json(search, outcome.verdict, ctx.force && !outcome.verdict.applies, cfg.seed_grid);
  write_text_file(detail::join(ctx.out_dir, "orbit.json"), dump_json(orbit));
  std::vector<std::string> files = {"report.json", "orbit.json"};
  int code = 2;
  if (search.best) {
    const auto& r = *search.outcomes[*search.best].result;
    if (!r.orbit.empty()) {
      detail::write_csv(detail::join(ctx.out_dir, "trajectory.csv"), system, r.orbit);
      files.push_back("trajectory.csv");
    }
    code = r.certified() ? 0 : 1;
    *ctx.out << (r.converged ? "converged" : "not converged") << " (" << r.method << ", " << r.iterations
             << " iterations), residual " << format_double(r.residual) << "\n";
    for (std::size_t i = 0; i < r.margins.size(); ++i) {
      *ctx.out << "block " << i + 1 << ": boundary margin " << format_double(r.margins[i].boundary)
               << ", cap margin " << format_double(r.margins[i].cap) << "\n";
    }
    *ctx.out << (r.certified() ? "orbit certified inside the blocks\n" : "orbit not certified\n");
  } else {
    for (const auto& o : search.outcomes) *ctx.err << "seed failed: " << o.error << "\n";
  }
  if (!outcome.verdict.applies) *ctx.out << "note: the existence conditions do not hold for this system\n";
  detail::write_manifest(ctx, "find-orbit", files, code);
  return code;
}

inline int cmd_sweep(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.sweep.empty()) throw ConfigError("sweep needs at least one axis under \"sweep\"");
  detail::prepare_dir(ctx.out_dir);

  // Cartesian product, last axis fastest.
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : cfg.sweep) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points) {
      for (double v : axis.values) {
        next.push_back(p);
        next.back().push_back(v);
      }
    }
    points = std::move(next);
  }

  std::vector<std::string> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%04zu", k + 1);
      const std::string dir = detail::join(ctx.out_dir, name);
      std::ostringstream row;
      row << k + 1;
      for (double v : points[k]) row << "," << format_double(v);
      try {
        json spec = cfg.system;
        for (std::size_t a = 0; a < cfg.sweep.size(); ++a) spec = with_parameter(spec, cfg.sweep[a].param, points[k][a]);
        const auto system = build_system(spec);
        detail::prepare_dir(dir);
        const auto outcome = run_checks(system, cfg.sampler, cfg.h1_energy_factor);
        write_text_file(detail::join(dir, "report.json"), dump_json(report_json(system, outcome, cfg.sampler)));
        const auto search = run_orbit_search(
            system, cfg, outcome.derivation.caps ? outcome.derivation.caps->c : std::vector<double>{}, 1);
        write_text_file(detail::join(dir, "orbit.json"),
                        dump_json(orbit_json(search, outcome.verdict, !outcome.verdict.applies, cfg.seed_grid)));
        row << "," << (outcome.verdict.applies ? "true" : "false") << "," << outcome.verdict.index;
        if (search.best) {
          const auto& r = *search.outcomes[*search.best].result;
          double min_margin = std::numeric_limits<double>::infinity();
          std::string margins;
          for (const auto& m : r.margins) {
            min_margin = std::min({min_margin, m.boundary, m.cap});
            margins += (margins.empty() ? "" : ";") + format_double(m.boundary);
          }
          std::string mults;
          for (const auto& mu : r.floquet) mults += (mults.empty() ? "" : ";") + format_double(std::abs(mu));
          row << "," << (r.converged ? "true" : "false") << "," << (r.certified() ? "true" : "false") << ","
              << format_double(r.residual) << "," << (r.margins.empty() ? "" : format_double(min_margin)) << ","
              << margins << "," << mults << ",";
        } else {
          row << ",false,false,,,,," << detail::csv_field("no seed converged: " + search.outcomes.front().error);
        }
      } catch (const std::exception& e) {
        row << ",,,,,,,,," << detail::csv_field(e.what());
      }
      rows[k] = row.str();
    }
  };
  const int count = std::max(1, std::min<int>(ctx.jobs, static_cast<int>(points.size())));
  std::vector<std::thread> threads;
  for (int j = 1; j < count; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::ostringstream csv;
  csv << "point";
  for (const auto& axis : cfg.sweep) csv << "," << detail::csv_field(axis.param);
  csv << ",applies,index,converged,certified,residual,min_margin,boundary_margins,multiplier_abs,error\r\n";
  for (const auto& r : rows) csv << r << "\r\n";
  write_text_file(detail::join(ctx.out_dir, "sweep.csv"), csv.str());
  detail::write_manifest(ctx, "sweep", {"sweep.csv"}, 0);
  *ctx.out << points.size() << " sweep points written to " << detail::join(ctx.out_dir, "sweep.csv") << "\n";
  return 0;
}

/// Summarizes the files of an existing run directory.
inline int cmd_report(const CommandContext& ctx) {
  namespace fs = std::filesystem;
  const std::string report = detail::join(ctx.out_dir, "report.json");
  const std::string orbit = detail::join(ctx.out_dir, "orbit.json");
  const std::string sweep = detail::join(ctx.out_dir, "sweep.csv");
  if (!fs::exists(report) && !fs::exists(sweep)) {
    throw ConfigError("no report.json or sweep.csv in '" + ctx.out_dir + "'");
  }
  auto& out = *ctx.out;
  if (fs::exists(report)) {
    const json r = json::parse(read_text_file(report));
    out << "system " << r["system"]["name"].get<std::string>() << " with " << r["system"]["blocks"].size()
        << " blocks, period " << format_double(r["system"]["period"].get<double>()) << "\n";
    for (auto it = r["checks"].begin(); it != r["checks"].end(); ++it) {
      const auto& c = it.value();
      out << (c["pass"].get<bool>() ? "pass " : "FAIL ") << it.key() << "  margin "
          << (c["margin"].is_null() ? "nan" : format_double(c["margin"].get<double>())) << "\n";
    }
    const auto& v = r["verdict"];
    out << "index " << v["index"].get<long long>() << "\n";
    out << (v["applies"].get<bool>() ? "theorem applies" : "theorem does not apply") << "\n";
    for (const auto& reason : v["reasons"]) out << "  " << reason.get<std::string>() << "\n";
  }
  if (fs::exists(orbit)) {
    const json o = json::parse(read_text_file(orbit));
    if (o["result"].is_null()) {
      out << "orbit: no seed produced a result\n";
    } else {
      const auto& r = o["result"];
      out << "orbit: " << (r["converged"].get<bool>() ? "converged" : "not converged") << ", residual "
          << format_double(r["residual"].get<double>()) << ", "
          << (r["certified"].get<bool>() ? "certified" : "not certified") << "\n";
    }
  }
  if (fs::exists(sweep)) {
    const std::string text = read_text_file(sweep);
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n' ? 1 : 0;
    out << "sweep: " << (lines > 0 ? lines - 1 : 0) << " points\n";
  }
  return 0;
}

/// Maps library exceptions to exit code 2 with a diagnostic.
template <class Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace forcedosc
