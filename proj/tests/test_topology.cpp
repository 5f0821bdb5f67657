#include <gtest/gtest.h>

#include <cmath>

#include "forcedosc/topology.hpp"

using namespace forcedosc;

namespace {

std::int64_t independent_exit_char(const std::vector<BlockKind>& kinds, const std::vector<int>& chi) {
  // chi(A u B) = chi(A) + chi(B) - chi(A n B), folded one face at a time.
  // Keep the union of the first j faces as a list of signed product terms.
  struct Term {
    std::int64_t sign;
    std::vector<bool> boundary;
  };
  const std::size_t n = kinds.size();
  auto chi_of = [&](const std::vector<bool>& boundary) {
    std::int64_t out = 1;
    for (std::size_t j = 0; j < n; ++j) out *= boundary[j] ? boundary_euler_char(kinds[j]) : chi[j];
    return out;
  };
  std::vector<Term> terms;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Term> next = terms;
    std::vector<bool> face(n, false);
    face[j] = true;
    next.push_back({1, face});
    for (const auto& t : terms) {
      auto both = t.boundary;
      both[j] = true;
      next.push_back({-t.sign, both});
    }
    terms = std::move(next);
  }
  std::int64_t total = 0;
  for (const auto& t : terms) total += t.sign * chi_of(t.boundary);
  return total;
}

}  // namespace

TEST(Topology, WorkedIndexValues) {
  using K = BlockKind;
  EXPECT_EQ(fixed_point_index(PeriodicSegmentSpec::from_kinds({K::interval})), -1);
  EXPECT_EQ(fixed_point_index(PeriodicSegmentSpec::from_kinds({K::interval, K::interval})), 1);
  EXPECT_EQ(fixed_point_index(PeriodicSegmentSpec::from_kinds({K::disk_like_2d})), 1);
  EXPECT_EQ(fixed_point_index(PeriodicSegmentSpec::from_kinds({K::interval, K::interval, K::interval})), -1);
}

TEST(Topology, ClosedFormExamples) {
  using K = BlockKind;
  EXPECT_EQ(exit_set_char_closed_form(PeriodicSegmentSpec::from_kinds({K::interval})), 2);
  EXPECT_EQ(exit_set_char_closed_form(PeriodicSegmentSpec::from_kinds({K::interval, K::interval})), 0);
  EXPECT_EQ(exit_set_char_closed_form(PeriodicSegmentSpec::from_kinds({K::disk_like_2d})), 0);
}

TEST(Topology, ClosedZeroChiBlockGivesZeroIndex) {
  const auto spec = PeriodicSegmentSpec::from_kinds({BlockKind::interval, BlockKind::closed}, {0});
  EXPECT_EQ(fixed_point_index(spec), 0);
  EXPECT_EQ(exit_set_char_oracle(spec), exit_set_char_closed_form(spec));
}

TEST(Topology, OracleMatchesClosedFormExhaustively) {
  const BlockKind all[] = {BlockKind::interval, BlockKind::disk_like_2d, BlockKind::closed};
  int cases = 0;
  for (int n = 1; n <= 6; ++n) {
    int total = 1;
    for (int j = 0; j < n; ++j) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::vector<BlockKind> kinds;
      std::vector<int> closed_chi;
      int k = 0;
      for (int j = 0, c = code; j < n; ++j, c /= 3) {
        kinds.push_back(all[c % 3]);
        if (kinds.back() == BlockKind::closed) closed_chi.push_back(2 - (j % 3));  // 2, 1, 0 cycle
        if (kinds.back() == BlockKind::interval) ++k;
      }
      const auto spec = PeriodicSegmentSpec::from_kinds(kinds, closed_chi);
      const auto oracle = exit_set_char_oracle(spec);
      ASSERT_EQ(oracle, exit_set_char_closed_form(spec)) << "n=" << n << " code=" << code;
      ASSERT_EQ(oracle, independent_exit_char(spec.kinds, spec.chi));
      const std::int64_t expected_index = euler_char_product(spec) * (k % 2 == 0 ? 1 : -1);
      ASSERT_EQ(fixed_point_index(spec), expected_index);
      ASSERT_EQ(euler_char_product(spec) - oracle, expected_index);
      ++cases;
    }
  }
  EXPECT_EQ(cases, 3 + 9 + 27 + 81 + 243 + 729);
}

TEST(Topology, OracleRefusesLargeSystems) {
  const auto spec = PeriodicSegmentSpec::from_kinds(std::vector<BlockKind>(13, BlockKind::interval));
  EXPECT_THROW(exit_set_char_oracle(spec), ResourceError);
  EXPECT_EQ(fixed_point_index(spec), -1);
}

TEST(Topology, ClosedBlockNeedsChi) {
  EXPECT_THROW(PeriodicSegmentSpec::from_kinds({BlockKind::closed}), ConfigError);
}

TEST(Topology, SpecFromSystem) {
  MorseChainParams p;
  p.n = 3;
  const auto sys = make_morse_chain(p);
  const auto spec = PeriodicSegmentSpec::from_system(sys);
  EXPECT_EQ(spec.size(), 3);
  EXPECT_EQ(spec.two_point_boundaries(), 3);
  EXPECT_EQ(fixed_point_index(spec), -1);
}

TEST(Verdict, RequiresAllReports) {
  MorseChainParams p;
  const auto sys = make_morse_chain(p);
  EXPECT_THROW(theorem_applies(sys, {}), ConfigError);
}

TEST(Verdict, ReasonsNameFailingConditions) {
  MorseChainParams p;
  p.n = 2;
  const auto sys = make_morse_chain(p);
  CheckReport ok;
  ok.name = "ok";
  ok.pass = true;
  ok.margin = 1.0;
  CheckReport bad = ok;
  bad.name = "boundary_exit";
  bad.pass = false;
  bad.margin = -0.5;
  ConditionReports reports{ok, ok, ok, bad, ok};
  const auto v = theorem_applies(sys, reports);
  EXPECT_FALSE(v.applies);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].rfind("boundary_exit:", 0), 0u);
  EXPECT_EQ(v.index, 1);

  reports.boundary_exit = ok;
  const auto good = theorem_applies(sys, reports);
  EXPECT_TRUE(good.applies);
  EXPECT_TRUE(good.reasons.empty());
  const auto j = to_json(good);
  EXPECT_EQ(j["index"].get<int>(), 1);
  EXPECT_EQ(j["k"].get<int>(), 2);
}
