#include <gtest/gtest.h>

#include <random>

#include "steinbin/mc_engine.hpp"

using namespace steinbin;

namespace {

double centered_binomial_draw(std::mt19937_64& eng) {
  std::binomial_distribution<int> b(40, 0.5);
  return b(eng) - 20.0;
}

}  // namespace

TEST(Replicate, DeterministicAcrossWorkerCounts) {
  auto draw = [](std::mt19937_64& eng) { return static_cast<double>(eng() % 1000); };
  const std::int64_t reps = 3 * kBlockReps + 17;
  auto a = replicate<double>(draw, reps, 99, 1);
  for (unsigned w : {2u, 3u, 8u}) EXPECT_EQ(a, replicate<double>(draw, reps, 99, w));
  EXPECT_NE(a, replicate<double>(draw, reps, 100, 1));
  EXPECT_EQ(a.size(), static_cast<std::size_t>(reps));
  EXPECT_THROW(replicate<double>(draw, 0, 1, 1), std::invalid_argument);
}

TEST(Replicate, BlocksUseDistinctStreams) {
  auto e0 = block_engine(5, 0), e1 = block_engine(5, 1), f0 = block_engine(5, 0);
  EXPECT_NE(e0(), e1());
  e0 = block_engine(5, 0);
  EXPECT_EQ(e0(), f0());
}

TEST(Experiment, PointMassExample) {
  // all draws at 0 against the centered Bi(8, 1/2): 1 - 70/256
  std::vector<double> zeros(1000, 0.0);
  auto r = summarize_samples(zeros, 2.0, 0.0, 1);
  EXPECT_DOUBLE_EQ(r.tv, 0.7265625);
  EXPECT_EQ(r.params.n, 8);
  EXPECT_EQ(r.tv_floor, 0.0);
  EXPECT_DOUBLE_EQ(r.tv_ci.lo, r.tv);
  EXPECT_DOUBLE_EQ(r.tv_ci.hi, r.tv);
  EXPECT_THROW(summarize_samples(zeros, 1.0, 0.0, 1), InapplicableError);
}

TEST(Experiment, ReproducibleAndWorkerIndependent) {
  auto a = run_experiment(centered_binomial_draw, {{"app", "test"}}, 20000, 7, 10.0, 0.0, 1);
  auto b = run_experiment(centered_binomial_draw, {{"app", "test"}}, 20000, 7, 10.0, 0.0, 4);
  EXPECT_TRUE(a.same_content(b));
  auto c = run_experiment(centered_binomial_draw, {{"app", "test"}}, 20000, 8, 10.0, 0.0, 1);
  EXPECT_FALSE(a.same_content(c));
}

TEST(Experiment, ExactModelSitsAtTheNoiseFloor) {
  // W is exactly the approximant, so the distance is pure sampling noise
  auto r = run_experiment(centered_binomial_draw, {}, 200000, 11, 10.0, 0.0, 1);
  EXPECT_EQ(r.params.n, 40);
  EXPECT_LT(r.tv, 3.0 * r.tv_floor);
  EXPECT_LT(r.loc, 4.0 * r.loc_floor);
  EXPECT_TRUE(r.tv_ci.contains(r.tv));
  EXPECT_TRUE(r.loc_ci.contains(r.loc));
  EXPECT_NEAR(r.sample_mean(), 0.0, 0.05);
  EXPECT_NEAR(r.sample_variance(), 10.0, 0.15);
}

TEST(Experiment, CountsMatchSamples) {
  std::mt19937_64 eng(3);
  std::binomial_distribution<std::int64_t> b(30, 0.4);
  std::vector<std::int64_t> n(5000);
  std::vector<double> w(n.size());
  for (std::size_t k = 0; k < n.size(); ++k) {
    n[k] = b(eng);
    w[k] = static_cast<double>(n[k]) - 12.0;
  }
  auto a = summarize_counts(n, -12.0, 7.2, 4);
  auto c = summarize_samples(w, 7.2, 0.0, 4);
  EXPECT_TRUE(a.same_content(c));
}

TEST(Experiment, JsonAndCsv) {
  std::vector<double> zeros(100, 0.0);
  auto r = summarize_samples(zeros, 2.0, 0.0, 1, {{"k", "v"}});
  auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j["tv"].get<double>(), 0.7265625);
  EXPECT_EQ(j["reps"].get<std::int64_t>(), 100);
  const std::string cols = experiment_csv_columns(), row = experiment_csv_fields(r);
  EXPECT_EQ(std::count(cols.begin(), cols.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(NoiseFloor, Examples) {
  auto p = LatticePMF::from_probs({0.5, 0.5});
  EXPECT_DOUBLE_EQ(tv_noise_floor(p, 100), 0.05);
  EXPECT_DOUBLE_EQ(loc_noise_floor(p, 100), 0.05);
  EXPECT_EQ(tv_noise_floor(LatticePMF::point_mass(0.0), 10), 0.0);
}

TEST(Bootstrap, IntervalsContainTheEstimate) {
  std::mt19937_64 eng(17);
  std::binomial_distribution<int> b(12, 0.35);
  std::vector<double> s(3000);
  for (auto& x : s) x = b(eng);
  auto emp = empirical_pmf(s, 0.0);
  auto target = binomial_pmf({12, 0.4});
  auto ci = bootstrap_distances(emp, 3000, target, 5);
  const double tv = tv_distance(emp, target), loc = loc_distance(emp, target);
  EXPECT_TRUE(ci.tv.contains(tv));
  EXPECT_TRUE(ci.loc.contains(loc));
  EXPECT_GE(ci.tv.lo, 0.0);
  EXPECT_LE(ci.tv.hi, 1.0);
  EXPECT_LT(ci.tv.hi - ci.tv.lo, 0.1);
  EXPECT_EQ(ci.tv, bootstrap_distances(emp, 3000, target, 5).tv);
}

TEST(FitRate, RecoversSyntheticSlopes) {
  for (double slope : {-0.5, -1.0, 0.25}) {
    std::vector<RatePoint> pts;
    for (double x : {100.0, 400.0, 1600.0, 6400.0}) pts.push_back({x, 3.0 * std::pow(x, slope)});
    auto f = fit_rate(pts);
    EXPECT_NEAR(f.slope, slope, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-10);
    EXPECT_NEAR(f.slope_ci.lo, slope, 1e-12);
    EXPECT_NEAR(f.slope_ci.hi, slope, 1e-12);
  }
}

TEST(FitRate, NoisyIntervalBracketsFit) {
  std::mt19937_64 eng(23);
  std::normal_distribution<double> e(0.0, 0.05);
  std::vector<RatePoint> pts;
  for (double x : {400.0, 1600.0, 6400.0, 25600.0, 102400.0}) pts.push_back({x, std::pow(x, -0.5) * std::exp(e(eng))});
  auto f = fit_rate(pts);
  EXPECT_LE(f.slope_ci.lo, f.slope);
  EXPECT_GE(f.slope_ci.hi, f.slope);
  EXPECT_NEAR(f.slope, -0.5, 0.05);
}

TEST(FitRate, Rejections) {
  EXPECT_THROW(fit_rate({{1, 1}, {2, 1}}), std::invalid_argument);
  EXPECT_THROW(fit_rate({{1, 1}, {1, 1}, {2, 1}}), std::invalid_argument);
  EXPECT_THROW(fit_rate({{1, 1}, {2, 0}, {3, 1}}), std::invalid_argument);
  EXPECT_THROW(fit_rate({{0, 1}, {2, 1}, {3, 1}}), std::invalid_argument);
}

TEST(FitRate, FilterDropsPointsNearTheFloor) {
  std::vector<RatePoint> pts{{100, 0.1, 0.001}, {400, 0.05, 0.001}, {1600, 0.025, 0.001}, {6400, 0.002, 0.001}};
  auto f = fit_rate_filtered(pts);
  ASSERT_EQ(f.dropped.size(), 1u);
  EXPECT_EQ(f.dropped[0], 6400.0);
  EXPECT_NEAR(f.slope, -0.5, 1e-12);
  pts[2].floor = 0.01;
  EXPECT_THROW(fit_rate_filtered(pts), std::invalid_argument);
}
