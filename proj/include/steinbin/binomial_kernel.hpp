#pragma once

// Binomial and centered binomial laws, the lattice-matching parameters used
// to pick the approximating centered binomial for a sum W, the binomial Stein
// operator and the solution of its Stein equation, and the classical bounds on
// that solution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinbin/errors.hpp"
#include "steinbin/lattice_dist.hpp"

namespace steinbin {

enum class Metric { tv, loc };

inline const char* to_string(Metric m) { return m == Metric::tv ? "tv" : "loc"; }

struct BinomialParams {
  std::int64_t n;
  double p;

  BinomialParams(std::int64_t trials, double success) : n(trials), p(success) {
    if (n < 1) throw std::invalid_argument("BinomialParams: n must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("BinomialParams: p must be in (0, 1)");
  }
  double q() const noexcept { return 1.0 - p; }
};

// Parameters of the centered binomial matched to a law with variance sigma2 on
// the lattice Z + a: n = ceil(4 sigma2), success probability 1/2 - t.
struct CenteringParams {
  double sigma2;
  double a;
  std::int64_t n;
  double delta;
  double t;

  double success_prob() const noexcept { return 0.5 - t; }
  // The approximant is Bi(n, 1/2 - t) shifted by this amount.
  double shift() const noexcept { return -static_cast<double>(n) * (0.5 - t); }
};

namespace detail {

// <x> with values within kLatticeTol of an integer snapped to 0.
inline double frac_snapped(double x) {
  double r = std::nearbyint(x);
  if (std::fabs(x - r) <= kLatticeTol) return 0.0;
  return x - std::floor(x);
}

inline std::int64_t binomial_mode(const BinomialParams& b) {
  auto m = static_cast<std::int64_t>(std::floor((static_cast<double>(b.n) + 1.0) * b.p));
  return std::clamp<std::int64_t>(m, 0, b.n);
}

}  // namespace detail

// Bi(n, p) on {0, ..., n}. Built by the ratio recurrence outward from the mode
// and normalized, which keeps relative accuracy near 1e-13 for n up to 1e6.
inline LatticePMF binomial_pmf(const BinomialParams& b) {
  const std::int64_t n = b.n;
  const double odds = b.p / b.q();
  const std::int64_t mode = detail::binomial_mode(b);
  std::vector<double> w(static_cast<std::size_t>(n + 1), 0.0);
  w[static_cast<std::size_t>(mode)] = 1.0;
  for (std::int64_t k = mode; k < n; ++k) {
    double prev = w[static_cast<std::size_t>(k)];
    if (prev == 0.0) break;
    w[static_cast<std::size_t>(k + 1)] =
        prev * (static_cast<double>(n - k) / static_cast<double>(k + 1)) * odds;
  }
  for (std::int64_t k = mode; k > 0; --k) {
    double prev = w[static_cast<std::size_t>(k)];
    if (prev == 0.0) break;
    w[static_cast<std::size_t>(k - 1)] =
        prev * (static_cast<double>(k) / static_cast<double>(n - k + 1)) / odds;
  }
  long double total = 0.0L;
  for (double v : w) total += v;
  for (double& v : w) v = static_cast<double>(v / total);
  return LatticePMF::trusted(std::move(w), 0, 0.0);
}

// B^i(n, p): Bi(n, p) shifted by -np.
inline LatticePMF centered_binomial(const BinomialParams& b) {
  return binomial_pmf(b).shifted(-static_cast<double>(b.n) * b.p);
}

// delta = <-4 sigma2>, n = 4 sigma2 + delta, t = <a + 2 sigma2 + delta/2> / (4 sigma2 + delta).
inline CenteringParams centering_params(double sigma2, double a) {
  if (!(sigma2 > 1.0) || !std::isfinite(sigma2))
    throw InapplicableError("centering_params: requires sigma^2 > 1, got " + std::to_string(sigma2));
  if (!std::isfinite(a)) throw std::invalid_argument("centering_params: anchor is not finite");
  const double four = 4.0 * sigma2;
  const double delta = detail::frac_snapped(-four);
  const auto n = static_cast<std::int64_t>(std::llround(four + delta));
  const double t = detail::frac_snapped(a + 2.0 * sigma2 + 0.5 * delta) / (four + delta);
  return {sigma2, a, n, delta, t};
}

// B^i(n, 1/2 - t) for the matched parameters; mean 0, lattice Z + a.
inline LatticePMF centered_binomial(const CenteringParams& cp) {
  return binomial_pmf(BinomialParams(cp.n, cp.success_prob())).shifted(cp.shift());
}

// (Bg)(z) = q z g(z-1) - p (n - z) g(z), with g given on {0..n} and zero
// elsewhere.
inline double stein_operator(const BinomialParams& b, std::span<const double> g, std::int64_t z) {
  auto at = [&](std::int64_t k) {
    return (k >= 0 && k < static_cast<std::int64_t>(g.size())) ? g[static_cast<std::size_t>(k)]
                                                                 : 0.0;
  };
  const double zd = static_cast<double>(z);
  return b.q() * zd * at(z - 1) - b.p * (static_cast<double>(b.n) - zd) * at(z);
}

// Solution g_A of (Bg)(z) = 1[0 <= z <= n] (1_A(z) - P[Y in A]), Y ~ Bi(n, p),
// returned on {0..n} with g(n) = 0 (and g = 0 off {0..n-1}).
//
// With pi the Bi(n, p) pmf, p (n - z) pi(z) g(z) = -sum_{k<=z} pi(k) h(k)
// = sum_{k>z} pi(k) h(k). Below the mode the lower sum is accumulated upward,
// above it the upper sum downward; both recurrences contract, so no error is
// amplified by the 1/pi(z) factor.
inline std::vector<double> stein_solution(const BinomialParams& b,
                                          std::span<const std::int64_t> target_set) {
  const std::int64_t n = b.n;
  const double p = b.p, q = b.q();
  const LatticePMF pi = binomial_pmf(b);
  std::vector<char> in_a(static_cast<std::size_t>(n + 1), 0);
  for (std::int64_t z : target_set) {
    if (z < 0 || z > n) throw std::invalid_argument("stein_solution: target outside {0..n}");
    in_a[static_cast<std::size_t>(z)] = 1;
  }
  double prob_a = 0.0;
  for (std::int64_t z = 0; z <= n; ++z)
    if (in_a[static_cast<std::size_t>(z)]) prob_a += pi.at_index(z);
  auto h = [&](std::int64_t z) { return (in_a[static_cast<std::size_t>(z)] ? 1.0 : 0.0) - prob_a; };

  std::vector<double> g(static_cast<std::size_t>(n + 1), 0.0);
  const std::int64_t split = std::min(detail::binomial_mode(b), n - 1);

  double lower = 0.0;  // -sum_{k<=z} pi(k) h(k) / pi(z)
  for (std::int64_t z = 0; z <= split; ++z) {
    const double ratio = z == 0 ? 0.0 : (static_cast<double>(z) * q) / (static_cast<double>(n - z + 1) * p);
    lower = -h(z) + ratio * lower;
    g[static_cast<std::size_t>(z)] = lower / (p * static_cast<double>(n - z));
  }
  double upper = 0.0;  // sum_{k>z} pi(k) h(k) / pi(z)
  for (std::int64_t z = n - 1; z > split; --z) {
    const double ratio = (static_cast<double>(n - z) * p) / (static_cast<double>(z + 1) * q);
    upper = ratio * (h(z + 1) + upper);
    g[static_cast<std::size_t>(z)] = upper / (p * static_cast<double>(n - z));
  }
  return g;
}

// max_z |(Bg)(z) - (1_A(z) - P[Y in A])| over {0..n}.
inline double stein_residual(const BinomialParams& b, std::span<const double> g,
                             std::span<const std::int64_t> target_set) {
  const LatticePMF pi = binomial_pmf(b);
  std::vector<char> in_a(static_cast<std::size_t>(b.n + 1), 0);
  for (std::int64_t z : target_set) in_a[static_cast<std::size_t>(z)] = 1;
  double prob_a = 0.0;
  for (std::int64_t z = 0; z <= b.n; ++z)
    if (in_a[static_cast<std::size_t>(z)]) prob_a += pi.at_index(z);
  double worst = 0.0;
  for (std::int64_t z = 0; z <= b.n; ++z) {
    double rhs = (in_a[static_cast<std::size_t>(z)] ? 1.0 : 0.0) - prob_a;
    worst = std::max(worst, std::fabs(stein_operator(b, g, z) - rhs));
  }
  return worst;
}

// ||g|| over Z for g supported on {0..n}.
inline double sup_norm(std::span<const double> g) {
  double m = 0.0;
  for (double v : g) m = std::max(m, std::fabs(v));
  return m;
}

// ||Delta g|| over Z, counting the jumps from and back to the zero extension.
inline double delta_sup_norm(std::span<const double> g) {
  if (g.empty()) return 0.0;
  double m = std::max(std::fabs(g.front()), std::fabs(g.back()));
  for (std::size_t z = 0; z + 1 < g.size(); ++z) m = std::max(m, std::fabs(g[z + 1] - g[z]));
  return m;
}

// Ehm's bound on ||Delta g_A||: (1 - p^{n+1} - q^{n+1}) / ((n+1) p q).
// Also bounds ||g_{b}|| for singletons.
inline double ehm_bound(const BinomialParams& b) {
  const double n1 = static_cast<double>(b.n) + 1.0;
  return (1.0 - std::pow(b.p, n1) - std::pow(b.q(), n1)) / (n1 * b.p * b.q());
}

// ||g_A|| <= 1 ^ (npq)^{-1/2} for indicator h.
inline double sup_norm_bound(const BinomialParams& b) {
  return std::min(1.0, 1.0 / std::sqrt(static_cast<double>(b.n) * b.p * b.q()));
}

// Bound on d(Bi(n, p - t), Bi(n, p)) for -(1 - p) < t < p.
inline double shift_bound(const BinomialParams& b, double t, Metric metric) {
  const double p = b.p, q = b.q();
  if (!(t > -q && t < p))
    throw std::invalid_argument("shift_bound: t must lie in (-(1-p), p), got " + std::to_string(t));
  const double n = static_cast<double>(b.n);
  const double pq = p * q;
  const double tail = std::sqrt((p - t) * (q + t)) / (pq * std::sqrt(n));
  if (metric == Metric::tv) return std::fabs(t) * (std::sqrt(n) / std::sqrt(pq) + (p - t) / pq + tail);
  return std::fabs(t) * ((1.0 + p - t) / pq + tail);
}

}  // namespace steinbin
