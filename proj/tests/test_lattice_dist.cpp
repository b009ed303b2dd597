#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "steinbin/binomial_kernel.hpp"
#include "steinbin/lattice_dist.hpp"
#include "steinbin/lattice_io.hpp"

using namespace steinbin;

namespace {

LatticePMF random_pmf(std::mt19937_64& eng, double offset) {
  std::uniform_int_distribution<int> len(1, 12), lo(-5, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(len(eng)));
  for (auto& x : w) x = u(eng) < 0.15 ? 0.0 : u(eng);
  w.front() += 0.01;
  w.back() += 0.01;
  return LatticePMF::from_probs(std::move(w), lo(eng), offset, true);
}

LatticePMF half_half() { return LatticePMF::from_probs({0.5, 0.5}); }

}  // namespace

TEST(LatticePMF, RejectsBadInput) {
  EXPECT_THROW(LatticePMF::from_probs({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(LatticePMF::from_probs({-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(LatticePMF::from_probs({}), std::invalid_argument);
  EXPECT_THROW(LatticePMF::from_probs({1.0}, 0, std::nan("")), std::invalid_argument);
}

TEST(LatticePMF, TrimsAndCarriesAnchor) {
  auto p = LatticePMF::from_probs({0.0, 0.25, 0.75, 0.0}, 3, 2.25);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.min_index(), 6);  // 3 + 1 trimmed + carry 2
  EXPECT_DOUBLE_EQ(p.offset(), 0.25);
  EXPECT_DOUBLE_EQ(p.position(0), 6.25);
  EXPECT_DOUBLE_EQ(p.mean(), 6.25 * 0.25 + 7.25 * 0.75);
}

TEST(LatticePMF, NegativeAnchorNormalized) {
  auto p = LatticePMF::point_mass(-0.3);
  EXPECT_NEAR(p.offset(), 0.7, 1e-15);
  EXPECT_EQ(p.min_index(), -1);
  EXPECT_NEAR(p.position(0), -0.3, 1e-15);
}

TEST(TvDistance, Examples) {
  auto p = half_half();
  EXPECT_EQ(tv_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, p.shifted(1.0)), 0.5);
  EXPECT_EQ(tv_distance(p, p.shifted(0.5)), 1.0);
}

TEST(TvDistance, LatticeToleranceSnapsNearbyOffsets) {
  auto p = half_half();
  EXPECT_DOUBLE_EQ(tv_distance(p, p.shifted(1.0 + 1e-12)), 0.5);
  EXPECT_EQ(tv_distance(p, p.shifted(1e-6)), 1.0);
}

TEST(LocDistance, Examples) {
  auto p = half_half();
  EXPECT_EQ(loc_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(loc_distance(p, p.shifted(1.0)), 0.5);
  auto a = LatticePMF::from_probs({0.25, 0.5, 0.25});
  auto b = LatticePMF::from_probs({1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(loc_distance(a, b), 1.0 / 6, 1e-15);
  EXPECT_THROW(loc_distance(p, p.shifted(0.5)), LatticeMismatchError);
}

TEST(Convolve, Examples) {
  auto d = convolve(LatticePMF::point_mass(0.25), LatticePMF::point_mass(1.5));
  EXPECT_EQ(d.size(), 1u);
  EXPECT_NEAR(d.position(0), 1.75, 1e-15);
  auto sq = convolve(half_half(), half_half());
  ASSERT_EQ(sq.size(), 3u);
  EXPECT_DOUBLE_EQ(sq.probs()[0], 0.25);
  EXPECT_DOUBLE_EQ(sq.probs()[1], 0.5);
  EXPECT_DOUBLE_EQ(sq.probs()[2], 0.25);
}

TEST(Convolve, SixFoldBernoulliIsBinomial) {
  LatticePMF acc = LatticePMF::point_mass(0.0);
  for (int k = 0; k < 6; ++k) acc = convolve(acc, half_half());
  const double expect[] = {1, 6, 15, 20, 15, 6, 1};
  ASSERT_EQ(acc.size(), 7u);
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(acc.probs()[static_cast<std::size_t>(k)], expect[k] / 64.0, 1e-16);
}

TEST(Convolve, OffsetsAddWithCarry) {
  auto a = LatticePMF::from_probs({0.5, 0.5}, 0, 0.75);
  auto b = LatticePMF::from_probs({1.0}, 2, 0.5);
  auto c = convolve(a, b);
  EXPECT_NEAR(c.offset(), 0.25, 1e-15);
  EXPECT_NEAR(c.position(0), 3.25, 1e-15);
}

TEST(DFunctional, Examples) {
  auto d0 = LatticePMF::point_mass(0.0);
  EXPECT_DOUBLE_EQ(d_functional(d0, 1), 2.0);
  EXPECT_DOUBLE_EQ(d_functional(d0, 2), 4.0);
  EXPECT_DOUBLE_EQ(d_functional(LatticePMF::from_probs({0.25, 0.5, 0.25}), 1), 1.0);
  EXPECT_THROW(d_functional(d0, 3), std::invalid_argument);
  EXPECT_THROW(d_functional(d0, 0), std::invalid_argument);
}

// mpmath references (tests/oracles/generate.py)
TEST(DFunctional, BinomialReferenceValues) {
  EXPECT_NEAR(d_functional(binomial_pmf({9, 0.5}), 1), 0.4921875, 1e-15);
  EXPECT_NEAR(d_functional(binomial_pmf({10, 0.5}), 2), 0.3515625, 1e-15);
  EXPECT_NEAR(d_functional(binomial_pmf({16, 0.5}), 1), 0.39276123046875, 1e-15);
}

TEST(EmpiricalPmf, Examples) {
  std::vector<double> s{0, 0, 1, 1};
  auto p = empirical_pmf(s, 0.0);
  EXPECT_EQ(p, half_half());
  std::vector<double> c(5, 2.5);
  auto q = empirical_pmf(c, 0.5);
  EXPECT_EQ(q.size(), 1u);
  EXPECT_DOUBLE_EQ(q.position(0), 2.5);
}

TEST(EmpiricalPmf, OffLatticeSampleReported) {
  std::vector<double> s{0.0, 1.0, 1.3};
  try {
    empirical_pmf(s, 0.0);
    FAIL() << "expected OffLatticeError";
  } catch (const OffLatticeError& e) {
    EXPECT_DOUBLE_EQ(e.value(), 1.3);
  }
}

TEST(EmpiricalPmf, LargeBinomialSample) {
  std::mt19937_64 eng(7);
  std::binomial_distribution<int> bin(10, 0.5);
  std::vector<double> s(1'000'000);
  for (auto& x : s) x = bin(eng);
  EXPECT_LT(tv_distance(empirical_pmf(s, 0.0), binomial_pmf({10, 0.5})), 0.005);
}

// ---- properties over randomized pmfs -----------------------------------------------

TEST(LatticeProperties, DifferenceIdentity) {
  std::mt19937_64 eng(11);
  for (int k = 0; k < 1000; ++k) {
    auto m = random_pmf(eng, 0.3);
    EXPECT_NEAR(d_functional(m, 1), 2.0 * tv_distance(m, m.shifted(1.0)), 1e-12);
  }
}

TEST(LatticeProperties, SecondDifferenceOfConvolution) {
  std::mt19937_64 eng(12);
  for (int k = 0; k < 1000; ++k) {
    auto m = random_pmf(eng, 0.0), l = random_pmf(eng, 0.5);
    EXPECT_LE(d_functional(convolve(m, l), 2), d_functional(m, 1) * d_functional(l, 1) + 1e-12);
  }
}

TEST(LatticeProperties, TvMetricAxioms) {
  std::mt19937_64 eng(13);
  for (int k = 0; k < 1000; ++k) {
    auto a = random_pmf(eng, 0.1), b = random_pmf(eng, 0.1), c = random_pmf(eng, 0.1);
    const double ab = tv_distance(a, b);
    EXPECT_EQ(ab, tv_distance(b, a));
    EXPECT_LE(ab, tv_distance(a, c) + tv_distance(c, b) + 1e-12);
    EXPECT_NEAR(tv_distance(a, a), 0.0, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_LE(loc_distance(a, b), 2.0 * ab + 1e-15);
    EXPECT_LE(loc_distance(a, b), 1.0);
  }
}

TEST(LatticeProperties, ConvolutionCommutesAndAssociates) {
  std::mt19937_64 eng(14);
  for (int k = 0; k < 200; ++k) {
    auto a = random_pmf(eng, 0.2), b = random_pmf(eng, 0.7), c = random_pmf(eng, 0.4);
    EXPECT_LE(tv_distance(convolve(a, b), convolve(b, a)), 1e-12);
    EXPECT_LE(tv_distance(convolve(convolve(a, b), c), convolve(a, convolve(b, c))), 1e-12);
    EXPECT_NEAR(convolve(a, b).mass(), 1.0, 1e-12);
  }
}

TEST(LatticeProperties, DFunctionalRange) {
  std::mt19937_64 eng(15);
  for (int k = 0; k < 500; ++k) {
    auto a = random_pmf(eng, 0.0);
    EXPECT_GT(d_functional(a, 1), 0.0);
    EXPECT_LE(d_functional(a, 1), 2.0 + 1e-12);
    EXPECT_GT(d_functional(a, 2), 0.0);
    EXPECT_LE(d_functional(a, 2), 4.0 + 1e-12);
  }
}

TEST(LatticeIo, RoundTrip) {
  std::mt19937_64 eng(16);
  for (int k = 0; k < 50; ++k) {
    auto a = random_pmf(eng, 0.375);
    std::stringstream ss;
    write_pmf_csv(ss, a);
    EXPECT_EQ(read_pmf_csv(ss), a);
  }
  auto d = LatticePMF::from_probs({0.25, 0.5, 0.25}, -3, 0.5);
  std::stringstream ss;
  write_pmf_csv(ss, d);
  EXPECT_EQ(read_pmf_csv(ss), d);
}

TEST(LatticeIo, RejectsMalformed) {
  std::stringstream ss("# lattice_pmf offset=0 min_index=0\nindex,position,prob\n0,0,0.5\n2,2,0.5\n");
  EXPECT_THROW(read_pmf_csv(ss), std::invalid_argument);
  std::stringstream nohdr("0,0,1\n");
  EXPECT_THROW(read_pmf_csv(nohdr), std::invalid_argument);
}
