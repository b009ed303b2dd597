#pragma once

// Counts of r-scan windows at or below a threshold:
//   R_i = X_i + ... + X_{i+r-1},  N = #{i <= n : R_i <= a},  X_k iid F.
// Exceedance probability, window covariance terms psi(d), the exact variance,
// a fast simulator and the assembled local-dependence bound for N - np.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "steinbin/errors.hpp"
#include "steinbin/mc_engine.hpp"
#include "steinbin/quadrature.hpp"
#include "steinbin/stein_bounds.hpp"

namespace steinbin {

enum class BaseDist { exponential, uniform01 };

inline const char* to_string(BaseDist d) { return d == BaseDist::exponential ? "exponential" : "uniform"; }

struct RScanConfig {
  std::int64_t n = 0;
  int r = 1;
  double a = 1.0;
  BaseDist base = BaseDist::exponential;
  double rate = 1.0;  // exponential only

  void validate() const {
    if (r < 1) throw std::invalid_argument("rscan: r must be >= 1");
    if (n < 3 * static_cast<std::int64_t>(r) - 2)
      throw std::invalid_argument("rscan: n must be >= 3r - 2");
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("rscan: a must be finite and >= 0");
    if (base == BaseDist::exponential && !(rate > 0.0 && std::isfinite(rate)))
      throw std::invalid_argument("rscan: rate must be positive");
    if (base == BaseDist::uniform01 && r > 20)
      throw std::invalid_argument("rscan: uniform windows limited to r <= 20");
  }

  ConfigEcho echo() const {
    return {{"n", std::to_string(n)},
            {"r", std::to_string(r)},
            {"a", std::to_string(a)},
            {"dist", to_string(base)},
            {"rate", std::to_string(rate)}};
  }
};

namespace detail {

// Irwin-Hall CDF and density for k uniforms.
inline double irwin_hall_cdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= k) return 1.0;
  long double s = 0.0L;
  for (int j = 0; j <= static_cast<int>(std::floor(x)); ++j) {
    long double term = boost::math::binomial_coefficient<long double>(static_cast<unsigned>(k),
                                                                       static_cast<unsigned>(j)) *
                       std::pow(static_cast<long double>(x - j), k);
    s += (j % 2 == 0) ? term : -term;
  }
  return std::clamp(static_cast<double>(s / boost::math::factorial<long double>(static_cast<unsigned>(k))),
                    0.0, 1.0);
}

inline double irwin_hall_pdf(int k, double x) {
  if (x <= 0.0 || x >= k) return 0.0;
  if (k == 1) return 1.0;
  long double s = 0.0L;
  for (int j = 0; j <= static_cast<int>(std::floor(x)); ++j) {
    long double term = boost::math::binomial_coefficient<long double>(static_cast<unsigned>(k),
                                                                       static_cast<unsigned>(j)) *
                       std::pow(static_cast<long double>(x - j), k - 1);
    s += (j % 2 == 0) ? term : -term;
  }
  return std::max(0.0, static_cast<double>(s / boost::math::factorial<long double>(static_cast<unsigned>(k - 1))));
}

// CDF of the sum of k iid copies of F.
inline double window_cdf(const RScanConfig& c, int k, double x) {
  if (k == 0) return x >= 0.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 0.0;
  if (c.base == BaseDist::exponential) return boost::math::gamma_p(static_cast<double>(k), c.rate * x);
  return irwin_hall_cdf(k, x);
}

inline double window_pdf(const RScanConfig& c, int k, double x) {
  if (x <= 0.0) return 0.0;
  if (c.base == BaseDist::exponential)
    return c.rate * boost::math::gamma_p_derivative(static_cast<double>(k), c.rate * x);
  return irwin_hall_pdf(k, x);
}

// P[x < X <= y] for a single X ~ F.
inline double interval_prob(const RScanConfig& c, double x, double y) {
  if (y <= x) return 0.0;
  if (c.base == BaseDist::exponential) return std::exp(-c.rate * std::max(0.0, x)) - std::exp(-c.rate * std::max(0.0, y));
  return std::clamp(y, 0.0, 1.0) - std::clamp(x, 0.0, 1.0);
}

// Uniform on the open interval (0, 1).
inline double open_uniform(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// p = P[R_1 <= a].
inline double exceedance_prob(const RScanConfig& c) {
  c.validate();
  return detail::window_cdf(c, c.r, c.a);
}

// P[R_1 <= a, R_{d+1} <= a] = int f_C(s) F_d(a - s)^2 ds with C the sum of the
// r - d shared variables.
inline double joint_prob(const RScanConfig& c, int d) {
  c.validate();
  if (d < 1 || d > c.r - 1) throw std::invalid_argument("psi: d must lie in [1, r-1]");
  const int shared = c.r - d;
  // exponential: beyond the 1e-20 upper tail of the shared sum nothing is left to integrate
  const double hi = c.base == BaseDist::uniform01
                        ? std::min(c.a, static_cast<double>(shared))
                        : std::min(c.a, boost::math::gamma_q_inv(static_cast<double>(shared), 1e-20) / c.rate);
  if (hi <= 0.0) return 0.0;
  auto f = [&](double s) {
    double g = detail::window_cdf(c, d, c.a - s);
    return detail::window_pdf(c, shared, s) * g * g;
  };
  if (c.base == BaseDist::exponential) return quad::integrate_panels<64>(f, 0.0, hi, 8);
  // Piecewise polynomial: split at s integer and at a - s integer.
  std::vector<double> cuts{0.0, hi};
  for (int k = 1; k < shared; ++k)
    if (k < hi) cuts.push_back(k);
  for (int k = 0; k <= d; ++k) {
    double s = c.a - k;
    if (s > 0.0 && s < hi) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    if (cuts[k + 1] > cuts[k]) total += quad::integrate<64>(f, cuts[k], cuts[k + 1]);
  return total;
}

// psi(d) = P[R_{d+1} <= a | R_1 <= a] - p.
inline double psi(const RScanConfig& c, int d) {
  const double p = exceedance_prob(c);
  if (p <= 0.0) return 0.0;
  return joint_prob(c, d) / p - p;
}

// np (1 - p + 2 sum_{d<r} (1 - d/n) psi(d)).
inline double variance_formula(const RScanConfig& c) {
  const double p = exceedance_prob(c);
  const double n = static_cast<double>(c.n);
  double s = 1.0 - p;
  for (int d = 1; d < c.r; ++d) s += 2.0 * (1.0 - d / n) * psi(c, d);
  return n * p * s;
}

// One draw of N. Exponential windows are tested as products of the uniforms
// behind X = -log(V)/rate, which avoids the logarithms.
inline std::int64_t sample_count(const RScanConfig& c, std::mt19937_64& eng) {
  const int r = c.r;
  std::vector<double> ring(static_cast<std::size_t>(r));
  std::int64_t count = 0;
  const std::int64_t total = c.n + r - 1;
  if (c.base == BaseDist::exponential) {
    const double thr = std::exp(-c.rate * c.a);
    if (r == 2) {
      double prev = detail::open_uniform(eng);
      for (std::int64_t k = 1; k < total; ++k) {
        double cur = detail::open_uniform(eng);
        count += (prev * cur >= thr);
        prev = cur;
      }
      return count;
    }
    for (std::int64_t k = 0; k < total; ++k) {
      ring[static_cast<std::size_t>(k % r)] = detail::open_uniform(eng);
      if (k >= r - 1) {
        double prod = 1.0;
        for (double v : ring) prod *= v;
        count += (prod >= thr);
      }
    }
    return count;
  }
  for (std::int64_t k = 0; k < total; ++k) {
    ring[static_cast<std::size_t>(k % r)] = detail::open_uniform(eng);
    if (k >= r - 1) {
      double s = 0.0;
      for (double v : ring) s += v;
      count += (s <= c.a);
    }
  }
  return count;
}

inline std::vector<std::int64_t> simulate_counts(const RScanConfig& c, std::int64_t reps, std::uint64_t seed,
                                                 unsigned workers = default_workers()) {
  c.validate();
  return replicate<std::int64_t>([&](std::mt19937_64& eng) { return sample_count(c, eng); }, reps, seed,
                                 workers);
}

// ---- bound ------------------------------------------------------------------

struct RScanBoundDetails {
  double p = 0.0;
  double sigma2 = 0.0;
  std::int64_t m = 0;
  std::vector<int> big_indices;    // constrained to (a/r, a(r+1)/r^2]
  std::vector<int> small_indices;  // constrained to (0, a/(2r^2)]
  int pivot = 0;                   // 2r - 1, big for p0 and small for p1
  double big_prob = 0.0;
  double small_prob = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
  double pmin = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double theta_factor = 0.0;  // 16r^2 - 20r + 6
  double bound_l1 = 0.0;
  double bound_l2 = 0.0;
};

// Assembles the bound for N - np. Both metrics are filled in when the block
// count allows; a metric with too few blocks is left at +inf.
inline RScanBoundDetails theorem41_details(const RScanConfig& c) {
  c.validate();
  if (!(c.a > 0.0)) throw InapplicableError("rscan bound: requires a > 0");
  RScanBoundDetails d;
  const int r = c.r;
  d.p = exceedance_prob(c);
  d.sigma2 = variance_formula(c);
  d.m = c.n / (3 * static_cast<std::int64_t>(r) - 2);
  for (int k = r; k <= 2 * r - 2; ++k) d.big_indices.push_back(k);
  for (int k = 2 * r + 1; k <= 3 * r - 2; ++k) d.big_indices.push_back(k);
  d.small_indices.push_back(2 * r);
  d.pivot = 2 * r - 1;
  const double rr = static_cast<double>(r);
  d.big_prob = detail::interval_prob(c, c.a / rr, c.a * (rr + 1.0) / (rr * rr));
  d.small_prob = detail::interval_prob(c, 0.0, c.a / (2.0 * rr * rr));
  const double nb = static_cast<double>(d.big_indices.size());
  const double ns = static_cast<double>(d.small_indices.size());
  d.p0 = std::pow(d.big_prob, nb + 1.0) * std::pow(d.small_prob, ns);
  d.p1 = std::pow(d.big_prob, nb) * std::pow(d.small_prob, ns + 1.0);
  d.pmin = std::min({0.5, d.p0, d.p1});
  if (!(d.pmin > 0.0)) throw InapplicableError("rscan bound: p0 or p1 vanishes");
  const double m = static_cast<double>(d.m);
  d.c1 = d.m > 2 ? 2.0 / std::sqrt(d.pmin * (m - 2.0)) : std::numeric_limits<double>::infinity();
  d.c2 = d.m > 4 ? 8.0 / (d.pmin * (m - 4.0)) : std::numeric_limits<double>::infinity();
  d.theta_factor = 16.0 * rr * rr - 20.0 * rr + 6.0;
  const double n = static_cast<double>(c.n);
  d.bound_l1 = (n * d.c1 * d.theta_factor + kSteinConstant) / d.sigma2;
  d.bound_l2 = (n * d.c2 * d.theta_factor + kSteinConstant) / d.sigma2;
  return d;
}

inline double theorem41_bound(const RScanConfig& c, int l) {
  detail::check_l(l);
  c.validate();
  const std::int64_t m = c.n / (3 * static_cast<std::int64_t>(c.r) - 2);
  if ((l == 1 && m <= 2) || (l == 2 && m <= 4))
    throw InapplicableError("rscan bound: only " + std::to_string(m) + " blocks");
  auto d = theorem41_details(c);
  detail::check_sigma2(d.sigma2);
  return l == 1 ? d.bound_l1 : d.bound_l2;
}

// Empirical distances of N - np to the matched centered binomial.
inline ExperimentResult rscan_empirical_distance(const RScanConfig& c, std::int64_t reps, std::uint64_t seed,
                                                 unsigned workers = default_workers()) {
  c.validate();
  const double sigma2 = variance_formula(c);
  detail::check_sigma2(sigma2);
  const double np = static_cast<double>(c.n) * exceedance_prob(c);
  const auto start = std::chrono::steady_clock::now();
  auto counts = simulate_counts(c, reps, seed, workers);
  auto r = summarize_counts(counts, -np, sigma2, seed, c.echo());
  for (int l : {1, 2}) {
    try {
      (l == 1 ? r.bound_l1 : r.bound_l2) = theorem41_bound(c, l);
    } catch (const InapplicableError&) {
    }
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace steinbin
