#include <gtest/gtest.h>

#include <random>

#include "steinbin/binomial_kernel.hpp"

using namespace steinbin;

namespace {

std::vector<std::int64_t> subset(std::uint32_t mask, std::int64_t n) {
  std::vector<std::int64_t> a;
  for (std::int64_t z = 0; z <= n; ++z)
    if (mask >> z & 1u) a.push_back(z);
  return a;
}

}  // namespace

TEST(BinomialParams, Validates) {
  EXPECT_THROW(BinomialParams(0, 0.5), std::invalid_argument);
  EXPECT_THROW(BinomialParams(3, 0.0), std::invalid_argument);
  EXPECT_THROW(BinomialParams(3, 1.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(BinomialParams(3, 0.25).q(), 0.75);
}

TEST(BinomialPmf, SmallCases) {
  auto a = binomial_pmf({2, 0.5});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_DOUBLE_EQ(a.probs()[0], 0.25);
  EXPECT_DOUBLE_EQ(a.probs()[1], 0.5);
  EXPECT_DOUBLE_EQ(a.probs()[2], 0.25);
  auto b = binomial_pmf({1, 0.3});
  EXPECT_NEAR(b.probs()[0], 0.7, 1e-16);
  EXPECT_NEAR(b.probs()[1], 0.3, 1e-16);
}

TEST(BinomialPmf, Moments) {
  auto a = binomial_pmf({50, 0.4});
  EXPECT_NEAR(a.mass(), 1.0, 1e-12);
  EXPECT_NEAR(a.mean(), 20.0, 1e-9);
  EXPECT_NEAR(a.variance(), 12.0, 1e-9);
}

TEST(BinomialPmf, LargeNStable) {
  auto a = binomial_pmf({1'000'000, 0.3});
  EXPECT_NEAR(a.mass(), 1.0, 1e-10);
  EXPECT_NEAR(a.mean(), 300000.0, 1e-4);
  EXPECT_NEAR(a.variance() / 210000.0, 1.0, 1e-9);
  // mode term against a log-gamma evaluation
  const double ref = std::exp(std::lgamma(1e6 + 1) - std::lgamma(300001.0) - std::lgamma(700001.0) +
                              300000 * std::log(0.3) + 700000 * std::log(0.7));
  EXPECT_NEAR(a.at_index(300000) / ref, 1.0, 1e-8);
}

TEST(CenteringParams, Examples) {
  auto a = centering_params(2.0, 0.0);
  EXPECT_EQ(a.n, 8);
  EXPECT_EQ(a.delta, 0.0);
  EXPECT_EQ(a.t, 0.0);
  auto b = centering_params(2.3, 0.5);
  EXPECT_EQ(b.n, 10);
  EXPECT_NEAR(b.delta, 0.8, 1e-12);
  EXPECT_NEAR(b.t, 0.05, 1e-12);
  EXPECT_NEAR(b.success_prob(), 0.45, 1e-12);
  EXPECT_NEAR(b.shift(), -4.5, 1e-12);
  EXPECT_THROW(centering_params(1.0, 0.0), InapplicableError);
  EXPECT_THROW(centering_params(0.5, 0.0), InapplicableError);
}

TEST(CenteringParams, SnapNearIntegers) {
  auto a = centering_params(2.0 + 1e-12, 0.0);
  EXPECT_EQ(a.n, 8);
  EXPECT_EQ(a.delta, 0.0);
  auto b = centering_params(2.0 - 1e-12, 1.0 - 1e-12);
  EXPECT_EQ(b.n, 8);
  EXPECT_EQ(b.t, 0.0);
}

TEST(CenteredBinomial, Examples) {
  auto a = centered_binomial(centering_params(2.0, 0.0));
  EXPECT_EQ(a, binomial_pmf({8, 0.5}).shifted(-4.0));
  EXPECT_DOUBLE_EQ(a.position(0), -4.0);
  auto b = centered_binomial(centering_params(2.3, 0.5));
  EXPECT_NEAR(b.mean(), 0.0, 1e-12);
  EXPECT_NEAR(b.offset(), 0.5, 1e-12);
  EXPECT_NEAR(b.variance(), 2.475, 1e-12);
}

TEST(CenteredBinomial, PropertySweep) {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> s2(1.0001, 500.0), an(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double sigma2 = s2(eng), a = an(eng);
    auto cp = centering_params(sigma2, a);
    EXPECT_NEAR(static_cast<double>(cp.n), 4 * sigma2 + cp.delta, 1e-9);
    EXPECT_GE(cp.t, 0.0);
    EXPECT_LT(cp.t, 1.0 / static_cast<double>(cp.n));
    auto b = centered_binomial(cp);
    EXPECT_NEAR(b.mean(), 0.0, 1e-9);
    EXPECT_LE(offset_gap(b.offset(), a), 1e-9);
    EXPECT_GE(b.variance(), sigma2 - 1.0);
    EXPECT_LE(b.variance(), sigma2 + 1.0);
    EXPECT_LE(ehm_bound(BinomialParams(cp.n, cp.success_prob())), 1.0 / sigma2 + 1e-12);
  }
}

TEST(SteinSolution, TwoPointCase) {
  BinomialParams b(1, 0.5);
  std::vector<std::int64_t> a{0};
  auto g = stein_solution(b, a);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g[0], -1.0, 1e-15);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_LT(stein_residual(b, g, a), 1e-15);
}

TEST(SteinSolution, EmptySetGivesZero) {
  for (std::int64_t n : {1, 5, 40}) {
    auto g = stein_solution({n, 0.37}, {});
    for (double v : g) EXPECT_EQ(v, 0.0);
  }
}

TEST(SteinSolution, RejectsOutOfRange) {
  std::vector<std::int64_t> a{11};
  EXPECT_THROW(stein_solution({10, 0.5}, a), std::invalid_argument);
}

TEST(SteinSolution, ResidualsRandomized) {
  std::mt19937_64 eng(5);
  std::uniform_int_distribution<std::int64_t> nd(1, 200);
  std::uniform_real_distribution<double> pd(0.02, 0.98), u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    BinomialParams b(nd(eng), pd(eng));
    std::vector<std::int64_t> a;
    const double keep = u(eng);
    for (std::int64_t z = 0; z <= b.n; ++z)
      if (u(eng) < keep) a.push_back(z);
    auto g = stein_solution(b, a);
    EXPECT_LT(stein_residual(b, g, a), 1e-9) << "n=" << b.n << " p=" << b.p;
  }
}

// exhaustive maximum from tests/oracles/generate.py (40-digit arithmetic)
TEST(SteinSolution, ExhaustiveDifferenceBound) {
  BinomialParams b(10, 0.45);
  double worst = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << 11); ++mask)
    worst = std::max(worst, delta_sup_norm(stein_solution(b, subset(mask, 10))));
  EXPECT_NEAR(worst, 0.30448019359375, 1e-12);
  EXPECT_LE(worst, ehm_bound(b));
}

TEST(SteinSolution, SingletonSupNormReference) {
  BinomialParams b(12, 0.3);
  double worst = 0.0;
  for (std::int64_t z = 0; z <= 12; ++z) {
    std::vector<std::int64_t> a{z};
    worst = std::max(worst, sup_norm(stein_solution(b, a)));
  }
  EXPECT_NEAR(worst, 0.27726513637909091, 1e-12);
  EXPECT_LE(worst, sup_norm_bound(b));
}

TEST(SteinSolution, CharacterizationIdentity) {
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    BinomialParams b(30, 0.2 + 0.01 * k);
    std::vector<double> g(31);
    for (auto& v : g) v = u(eng);
    g[30] = 0.0;
    auto pi = binomial_pmf(b);
    double s = 0.0;
    for (std::int64_t z = 0; z <= 30; ++z) s += pi.at_index(z) * stein_operator(b, g, z);
    EXPECT_NEAR(s, 0.0, 1e-10);
  }
}

TEST(EhmBound, Values) {
  EXPECT_DOUBLE_EQ(ehm_bound({1, 0.5}), 1.0);
  EXPECT_NEAR(ehm_bound({10, 0.45}), 0.3667414687890625, 1e-15);
  // numerator ~ (n+1)p as p -> 0, so the value tends to 1 for fixed n
  EXPECT_NEAR(ehm_bound({10, 1e-6}), 1.0, 1e-4);
}

TEST(SupNormBound, Values) {
  EXPECT_DOUBLE_EQ(sup_norm_bound({1, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(sup_norm_bound({100, 0.5}), 0.2);
}

TEST(ShiftBound, Values) {
  BinomialParams b(10, 0.5);
  EXPECT_EQ(shift_bound(b, 0.0, Metric::tv), 0.0);
  EXPECT_EQ(shift_bound(b, 0.0, Metric::loc), 0.0);
  EXPECT_NEAR(shift_bound(b, 0.05, Metric::tv), 0.43769203146194248, 1e-14);
  EXPECT_NEAR(shift_bound(b, 0.05, Metric::loc), 0.32146426544510455, 1e-14);
  auto lo = binomial_pmf({10, 0.45}), hi = binomial_pmf({10, 0.5});
  EXPECT_NEAR(tv_distance(lo, hi), 0.12745146665292966, 1e-14);
  EXPECT_NEAR(loc_distance(lo, hi), 0.049290792878906239, 1e-14);
  EXPECT_THROW(shift_bound(b, 0.5, Metric::tv), std::invalid_argument);
  EXPECT_THROW(shift_bound(b, -0.5, Metric::tv), std::invalid_argument);
}

TEST(ShiftBound, DominatesOnGrid) {
  for (std::int64_t n : {5, 10, 50, 200})
    for (double p : {0.3, 0.5, 0.7})
      for (double f : {0.2, -0.2, 0.02, -0.02}) {
        const double t = f * p;
        BinomialParams b(n, p);
        auto x = binomial_pmf({n, p - t}), y = binomial_pmf(b);
        EXPECT_LE(tv_distance(x, y), shift_bound(b, t, Metric::tv));
        EXPECT_LE(loc_distance(x, y), shift_bound(b, t, Metric::loc));
      }
}
