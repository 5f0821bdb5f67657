#pragma once

// Euler characteristic bookkeeping for the periodic segment
//   W = [0,T] x {q in M, <p_i,p_i> <= c_i},
// its essential exit set W-- = V_1-- u ... u V_n--, and the fixed-point index
// chi(W_0) - chi(W_0-) of the period map.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forcedosc/errors.hpp"
#include "forcedosc/geometry.hpp"
#include "forcedosc/hypotheses.hpp"
#include "forcedosc/systems.hpp"

namespace forcedosc {

struct PeriodicSegmentSpec {
  std::vector<BlockKind> kinds;
  std::vector<int> chi;
  std::vector<double> caps;
  double period = 1.0;

  static PeriodicSegmentSpec from_kinds(std::vector<BlockKind> kinds, std::vector<int> closed_chi = {}) {
    PeriodicSegmentSpec spec;
    std::size_t next_closed = 0;
    for (auto kind : kinds) {
      if (kind == BlockKind::closed) {
        if (next_closed >= closed_chi.size()) throw ConfigError("closed block needs a declared chi");
        spec.chi.push_back(closed_chi[next_closed++]);
      } else {
        spec.chi.push_back(1);
      }
    }
    spec.kinds = std::move(kinds);
    return spec;
  }

  static PeriodicSegmentSpec from_system(const CoupledSystem& system, std::vector<double> caps = {}) {
    PeriodicSegmentSpec spec;
    for (const auto& b : system.blocks()) {
      spec.kinds.push_back(b.kind());
      spec.chi.push_back(b.chi());
    }
    spec.caps = std::move(caps);
    spec.period = system.period();
    return spec;
  }

  [[nodiscard]] int size() const { return static_cast<int>(kinds.size()); }

  /// Number of factors whose boundary is a two-point set.
  [[nodiscard]] int two_point_boundaries() const {
    int k = 0;
    for (auto kind : kinds) k += kind == BlockKind::interval ? 1 : 0;
    return k;
  }
};

inline std::int64_t euler_char_product(const PeriodicSegmentSpec& spec) {
  std::int64_t out = 1;
  for (int c : spec.chi) out *= c;
  return out;
}

/// chi(W--) = chi(M) (1 + (-1)^(k+1)).
inline std::int64_t exit_set_char_closed_form(const PeriodicSegmentSpec& spec) {
  const int k = spec.two_point_boundaries();
  return euler_char_product(spec) * (1 + (k % 2 == 1 ? 1 : -1));
}

/// Inclusion-exclusion over the faces V_j--, each intersection being homotopic
/// to the product with dM_j substituted for M_j, j in J.
inline std::int64_t exit_set_char_oracle(const PeriodicSegmentSpec& spec) {
  const int n = spec.size();
  if (n > 12) throw ResourceError("subset enumeration limited to n <= 12 blocks");
  std::int64_t total = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::int64_t chi = 1;
    int members = 0;
    for (int j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (mask & (1u << j)) {
        ++members;
        chi *= boundary_euler_char(spec.kinds[sj]);
      } else {
        chi *= spec.chi[sj];
      }
    }
    total += (members % 2 == 1 ? 1 : -1) * chi;
  }
  return total;
}

/// ind = chi(W_0) - chi(W_0-) = chi(M) (-1)^k.
inline std::int64_t fixed_point_index(const PeriodicSegmentSpec& spec) {
  return euler_char_product(spec) - exit_set_char_closed_form(spec);
}

struct ConditionReports {
  std::optional<CheckReport> h1;
  std::optional<CheckReport> h2;
  std::optional<CheckReport> energy_cap;
  std::optional<CheckReport> boundary_exit;
  std::optional<CheckReport> morse_condition;  ///< only for Morse chains
};

struct Verdict {
  bool applies = false;
  std::int64_t index = 0;
  std::int64_t euler_char = 0;
  std::int64_t exit_set_char = 0;
  int two_point_boundaries = 0;
  std::vector<std::string> reasons;
  std::string conclusion;
};

inline nlohmann::json to_json(const Verdict& v) {
  return {{"applies", v.applies},
          {"index", v.index},
          {"euler_char", v.euler_char},
          {"exit_set_euler_char", v.exit_set_char},
          {"k", v.two_point_boundaries},
          {"reasons", v.reasons},
          {"conclusion", v.conclusion}};
}

inline Verdict theorem_applies(const CoupledSystem& system, const ConditionReports& reports) {
  const bool needs_morse = system.morse().has_value();
  if (!reports.h1 || !reports.h2 || !reports.energy_cap || !reports.boundary_exit ||
      (needs_morse && !reports.morse_condition)) {
    throw ConfigError("theorem verdict needs every condition report");
  }
  const auto spec = PeriodicSegmentSpec::from_system(system);
  Verdict v;
  v.euler_char = euler_char_product(spec);
  v.exit_set_char = exit_set_char_closed_form(spec);
  v.index = fixed_point_index(spec);
  v.two_point_boundaries = spec.two_point_boundaries();
  for (int i = 0; i < spec.size(); ++i) {
    if (spec.chi[static_cast<std::size_t>(i)] == 0) {
      v.reasons.push_back("chi: block " + std::to_string(i + 1) + " has zero Euler characteristic");
    }
  }
  auto require = [&](const std::optional<CheckReport>& r, const std::string& tag) {
    if (r && !r->pass) v.reasons.push_back(tag + ": " + r->name + " failed with margin " + std::to_string(r->margin));
  };
  require(reports.h1, "H1");
  require(reports.h2, "H2");
  require(reports.energy_cap, "energy_cap");
  require(reports.boundary_exit, "boundary_exit");
  require(reports.morse_condition, "morse_condition");
  if (v.index == 0) v.reasons.push_back("index: fixed-point index is zero");
  v.applies = v.reasons.empty();
  v.conclusion = v.applies ? "a T-periodic solution exists with q_i(t) in the interior of M_i for every i and t"
                           : "no conclusion: the existence conditions are not all verified";
  return v;
}

}  // namespace forcedosc
