#include <gtest/gtest.h>

#include <algorithm>

#include "steinbin/matern.hpp"

using namespace steinbin;

namespace {

double sup_gap(const PointPattern& p, std::size_t i, std::size_t j) {
  double g = 0.0;
  for (int k = 0; k < p.d; ++k) g = std::max(g, torus_gap(p.point(i)[k], p.point(j)[k]));
  return g;
}

std::vector<std::vector<double>> as_points(const PointPattern& p) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < p.size(); ++k) out.emplace_back(p.point(k), p.point(k) + p.d);
  std::sort(out.begin(), out.end());
  return out;
}

PointPattern uniform_pattern(int d, std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointPattern p{d, std::vector<double>(n * static_cast<std::size_t>(d))};
  for (auto& x : p.coords) x = u(eng);
  return p;
}

}  // namespace

TEST(MaternConfig, Validates) {
  EXPECT_THROW((MaternConfig{0, 10, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW((MaternConfig{1, -1, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW((MaternConfig{1, 10, 0.2}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((MaternConfig{1, 7, 1.0 / 7}).validate());
  auto c = MaternConfig::from_a(2, 400, 1.0);
  EXPECT_NEAR(c.r, 0.05, 1e-15);
  EXPECT_NEAR(c.a(), 1.0, 1e-12);
  EXPECT_THROW(MaternConfig::from_a(1, 100, 0.0), std::invalid_argument);
}

TEST(Thin, Examples) {
  PointPattern p{1, {0.1, 0.12, 0.5, 0.98}};
  auto t = thin(p, 0.1);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t.coords[0], 0.5);
  EXPECT_DOUBLE_EQ(t.coords[1], 0.98);
  // wrap-around: 0.01 and 0.99 are 0.02 apart on the torus
  PointPattern w{1, {0.01, 0.99, 0.5}};
  EXPECT_EQ(thin(w, 0.1).size(), 1u);
  EXPECT_EQ(thin(w, 0.03).size(), 3u);
  PointPattern empty{2, {}};
  EXPECT_EQ(thin(empty, 0.1).size(), 0u);
}

TEST(Thin, HardCoreAndMaximalRemoval) {
  std::mt19937_64 eng(41);
  for (int d : {1, 2, 3})
    for (int k = 0; k < 20; ++k) {
      auto raw = uniform_pattern(d, 150, eng);
      const double r = 0.06;
      auto kept = thin(raw, r);
      for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_GT(sup_gap(kept, i, j), 0.5 * r);
      // brute force: a point survives iff no other raw point sits in its cube
      std::size_t expect = 0;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        bool alone = true;
        for (std::size_t j = 0; j < raw.size() && alone; ++j)
          if (j != i && sup_gap(raw, i, j) <= 0.5 * r) alone = false;
        expect += alone;
      }
      EXPECT_EQ(kept.size(), expect);
    }
}

TEST(Thin, TranslationAndPermutationInvariant) {
  std::mt19937_64 eng(43);
  for (int d : {1, 2}) {
    auto raw = uniform_pattern(d, 200, eng);
    auto base = thin(raw, 0.05);
    PointPattern shifted = raw;
    for (auto& x : shifted.coords) x = std::fmod(x + 0.37, 1.0);
    EXPECT_EQ(thin(shifted, 0.05).size(), base.size());
    PointPattern rev{d, {}};
    for (std::size_t k = raw.size(); k-- > 0;) rev.coords.insert(rev.coords.end(), raw.point(k), raw.point(k) + d);
    EXPECT_EQ(as_points(thin(rev, 0.05)), as_points(base));
  }
}

// quadrature and mpmath references (tests/oracles/generate.py)
TEST(MaternMoments, References) {
  struct Row {
    int d;
    double lam, mean, var, lower;
  };
  const Row ref[] = {{1, 200, 73.575888234288464, 54.559725704370242, 46.508831586965926},
                     {1, 100, 36.787944117144232, 27.279862852185121, 23.254415793482963},
                     {2, 400, 147.15177646857693, 119.81781904328891, 93.017663173931852}};
  for (const auto& r : ref) {
    auto c = MaternConfig::from_a(r.d, r.lam, 1.0);
    EXPECT_NEAR(mean_total(c), r.mean, 1e-11);
    auto v = variance_total(c);
    EXPECT_NEAR(v.exact, r.var, 1e-9 * r.var);
    EXPECT_NEAR(v.lower_bound, r.lower, 1e-11);
    EXPECT_GE(v.exact, v.lower_bound);
    EXPECT_TRUE(v.quadrature);
    EXPECT_EQ(v.mc_error, 0.0);
  }
}

TEST(MaternMoments, SimulationAgrees) {
  for (const auto& c : {MaternConfig::from_a(1, 200, 1.0), MaternConfig::from_a(2, 400, 1.0),
                        MaternConfig::from_a(3, 300, 0.5)}) {
    const std::int64_t reps = 20000;
    auto t = simulate_totals(c, reps, 77, 1);
    double m = 0.0, s = 0.0;
    for (auto x : t) m += static_cast<double>(x);
    m /= reps;
    for (auto x : t) s += (static_cast<double>(x) - m) * (static_cast<double>(x) - m);
    s /= reps - 1;
    const double var = variance_total(c).exact;
    EXPECT_NEAR(m, mean_total(c), 4.0 * std::sqrt(var / reps)) << c.d;
    EXPECT_NEAR(s, var, 4.0 * var * std::sqrt(2.0 / reps) + 5.0 * variance_total(c).mc_error) << c.d;
  }
}

TEST(MaternMoments, HighDimensionFallsBackToMonteCarlo) {
  auto c = MaternConfig::from_a(4, 20000, 0.5);
  auto v = variance_total(c);
  EXPECT_FALSE(v.quadrature);
  EXPECT_GT(v.mc_error, 0.0);
  EXPECT_GT(v.exact, 0.0);
}

TEST(MaternBound, References) {
  auto c = MaternConfig::from_a(1, 200, 1.0);
  auto b = theorem42_details(c);
  EXPECT_EQ(b.m, 33);
  EXPECT_DOUBLE_EQ(b.per_point, 182.0);
  EXPECT_NEAR(theorem42_bound(c, 1), 395.14896520103669, 1e-8);
  EXPECT_NEAR(theorem42_bound(c, 2), 1314.6117141838014, 1e-7);
}

TEST(MaternBound, BlockGuards) {
  // r = 1/7 leaves a single block
  MaternConfig c{1, 70, 1.0 / 7};
  EXPECT_THROW(theorem42_bound(c, 1), InapplicableError);
  EXPECT_THROW(theorem42_bound(c, 2), InapplicableError);
  EXPECT_THROW(theorem42_bound(MaternConfig::from_a(1, 200, 1.0), 0), std::invalid_argument);
}

TEST(MaternBound, RatioAcrossIntensity) {
  // at fixed a the bound decays like lam^{-1/2}
  double prev = theorem42_bound(MaternConfig::from_a(1, 3200, 1.0), 1);
  for (double lam : {12800.0, 51200.0}) {
    const double cur = theorem42_bound(MaternConfig::from_a(1, lam, 1.0), 1);
    EXPECT_NEAR(prev / cur, 2.0, 0.02);
    prev = cur;
  }
}

TEST(MaternBound, RoughSpecReproducesBound) {
  for (const auto& c : {MaternConfig::from_a(1, 200, 1.0), MaternConfig::from_a(2, 4000, 1.0)}) {
    auto spec = rough_point_process_spec(c);
    for (int l : {1, 2}) EXPECT_NEAR(bound_corollary_3_4(spec, l).bound, theorem42_bound(c, l), 1e-9 * theorem42_bound(c, l));
  }
}

TEST(MaternSim, ReproducibleAndBelowBound) {
  auto c = MaternConfig::from_a(1, 200, 1.0);
  EXPECT_EQ(simulate_totals(c, 5000, 3, 1), simulate_totals(c, 5000, 3, 2));
  auto r = matern_empirical_distance(c, 20000, 3, 1);
  EXPECT_NEAR(r.bound_l1, 395.14896520103669, 1e-8);
  EXPECT_LE(r.tv - r.tv_floor, r.bound_l1);
  EXPECT_LE(r.loc - r.loc_floor, r.bound_l2);
  EXPECT_LT(r.tv, 0.1);
  auto p = simulate_pattern(c, 3);
  EXPECT_EQ(p.d, 1);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) EXPECT_GT(sup_gap(p, i, j), 0.5 * c.r);
}
