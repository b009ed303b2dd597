#pragma once

// Exact laws for small instances: sums of independent lattice variables and
// the 2-runs statistic W = sum_{i=1}^n X_i X_{i+1} with X_i iid Bernoulli(p),
// together with the neighbourhood moments and smoothness constants that the
// local-dependence bounds need for it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "steinbin/binomial_kernel.hpp"
#include "steinbin/errors.hpp"
#include "steinbin/lattice_dist.hpp"
#include "steinbin/stein_bounds.hpp"

namespace steinbin {

inline constexpr std::size_t kExactSupportCap = 1'000'000;

// Full convolution of independent summands. Pairs are merged in a balanced
// tree with long double accumulation; this deliberately does not reuse
// convolve() so the two can check each other.
inline LatticePMF exact_sum_pmf(const std::vector<LatticePMF>& summands) {
  if (summands.empty()) throw std::invalid_argument("exact_sum_pmf: no summands");
  std::size_t support = 1;
  for (const auto& s : summands) support += s.size() - 1;
  if (support > kExactSupportCap)
    throw std::length_error("exact_sum_pmf: support of size " + std::to_string(support) +
                            " exceeds cap " + std::to_string(kExactSupportCap));

  struct Node {
    std::vector<long double> w;
    std::int64_t lo;
    double offset;
  };
  std::vector<Node> level;
  for (const auto& s : summands)
    level.push_back({std::vector<long double>(s.probs().begin(), s.probs().end()), s.min_index(),
                     s.offset()});
  while (level.size() > 1) {
    std::vector<Node> next;
    for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
      const Node& a = level[k];
      const Node& b = level[k + 1];
      std::vector<long double> w(a.w.size() + b.w.size() - 1, 0.0L);
      for (std::size_t i = 0; i < a.w.size(); ++i)
        for (std::size_t j = 0; j < b.w.size(); ++j) w[i + j] += a.w[i] * b.w[j];
      next.push_back({std::move(w), a.lo + b.lo, a.offset + b.offset});
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  Node& root = level.front();
  std::vector<double> probs(root.w.begin(), root.w.end());
  return LatticePMF::trusted(std::move(probs), root.lo, root.offset);
}

// ---- 2-runs model -------------------------------------------------------------

struct TwoRunsModel {
  std::int64_t n;
  double p;

  TwoRunsModel(std::int64_t n_, double p_) : n(n_), p(p_) {
    if (n < 3) throw std::invalid_argument("TwoRunsModel: n must be >= 3");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("TwoRunsModel: p must be in (0, 1)");
  }
  double mean() const { return static_cast<double>(n) * p * p; }
};

namespace detail {

// Law of sum_{j<len} x_j x_{j+1} over a chain of `len` iid Bernoulli(p)
// variables, optionally with the first value fixed, conditioned on the last
// value when `last` is set.
inline LatticePMF chain_pair_sum(std::int64_t len, double p, std::optional<int> first,
                                 std::optional<int> last) {
  if (len <= 0) return LatticePMF();
  const double q = 1.0 - p;
  // dp[x][s]: probability of (current value x, partial sum s)
  std::array<std::vector<long double>, 2> dp;
  dp[0].assign(static_cast<std::size_t>(len), 0.0L);
  dp[1].assign(static_cast<std::size_t>(len), 0.0L);
  if (first) {
    dp[*first][0] = 1.0L;
  } else {
    dp[0][0] = q;
    dp[1][0] = p;
  }
  for (std::int64_t pos = 1; pos < len; ++pos) {
    std::array<std::vector<long double>, 2> nx;
    nx[0].assign(dp[0].size(), 0.0L);
    nx[1].assign(dp[0].size(), 0.0L);
    for (int x = 0; x < 2; ++x)
      for (std::size_t s = 0; s < dp[x].size(); ++s) {
        long double m = dp[x][s];
        if (m == 0.0L) continue;
        nx[0][s] += m * q;
        nx[1][s + static_cast<std::size_t>(x)] += m * p;
      }
    dp = std::move(nx);
  }
  std::vector<long double> w(dp[0].size(), 0.0L);
  for (int x = 0; x < 2; ++x) {
    if (last && *last != x) continue;
    for (std::size_t s = 0; s < w.size(); ++s) w[s] += dp[x][s];
  }
  long double total = 0.0L;
  for (auto v : w) total += v;
  std::vector<double> probs(w.size());
  for (std::size_t s = 0; s < w.size(); ++s) probs[s] = static_cast<double>(w[s] / total);
  return LatticePMF::trusted(std::move(probs), 0, 0.0);
}

}  // namespace detail

// Exact law of W_raw = sum_{i=1}^n X_i X_{i+1}, on {0..n}.
inline LatticePMF two_runs_pmf(const TwoRunsModel& m) {
  if (m.n > 10'000) throw std::invalid_argument("two_runs_pmf: n must be <= 10^4");
  return detail::chain_pair_sum(m.n + 1, m.p, std::nullopt, std::nullopt);
}

// Law of the centered sum W_raw - n p^2 on Z + <-n p^2>.
inline LatticePMF two_runs_centered_pmf(const TwoRunsModel& m) {
  return two_runs_pmf(m).shifted(-m.mean());
}

struct TwoRunsIndexMoments {
  std::int64_t i = 0;     // 1-based summand index
  double m_xi_eta2 = 0;   // E|xi eta^2|
  double m_xi_eta_tau = 0;  // E|xi eta (tau - eta)|
  double e_xi_eta = 0;    // E xi eta (signed)
  double m_cov = 0;       // |E xi eta|
  double m_tau = 0;       // E|tau|
};

namespace detail {

// Calls fn(prob, x) for every assignment of X_{i-2}..X_{i+3} clipped to
// [1, n+1]; x(k) returns X_k for k in the window.
template <class Fn>
void for_each_window(const TwoRunsModel& m, std::int64_t i, Fn&& fn) {
  const std::int64_t lo = std::max<std::int64_t>(1, i - 2);
  const std::int64_t hi = std::min<std::int64_t>(m.n + 1, i + 3);
  const int width = static_cast<int>(hi - lo + 1);
  for (unsigned mask = 0; mask < (1u << width); ++mask) {
    double prob = 1.0;
    for (int b = 0; b < width; ++b) prob *= ((mask >> b) & 1u) ? m.p : 1.0 - m.p;
    auto x = [&](std::int64_t k) -> int { return static_cast<int>((mask >> (k - lo)) & 1u); };
    fn(prob, x);
  }
}

// Centered summand xi_j = X_j X_{j+1} - p^2, zero off [1, n].
template <class X>
double xi_at(const TwoRunsModel& m, X&& x, std::int64_t j) {
  if (j < 1 || j > m.n) return 0.0;
  return static_cast<double>(x(j) * x(j + 1)) - m.p * m.p;
}

template <class X>
double range_sum(const TwoRunsModel& m, X&& x, std::int64_t from, std::int64_t to) {
  double s = 0.0;
  for (std::int64_t j = from; j <= to; ++j) s += xi_at(m, x, j);
  return s;
}

}  // namespace detail

// Exact moments with A_i = {i-1, i, i+1}, B_i = {i-2, ..., i+2} (clipped).
inline std::vector<TwoRunsIndexMoments> two_runs_moments(const TwoRunsModel& m) {
  std::vector<TwoRunsIndexMoments> out;
  for (std::int64_t i = 1; i <= m.n; ++i) {
    TwoRunsIndexMoments r;
    r.i = i;
    detail::for_each_window(m, i, [&](double prob, auto&& x) {
      const double xi = detail::xi_at(m, x, i);
      const double eta = detail::range_sum(m, x, i - 1, i + 1);
      const double tau = detail::range_sum(m, x, i - 2, i + 2);
      r.m_xi_eta2 += prob * std::fabs(xi * eta * eta);
      r.m_xi_eta_tau += prob * std::fabs(xi * eta * (tau - eta));
      r.e_xi_eta += prob * xi * eta;
      r.m_tau += prob * std::fabs(tau);
    });
    r.m_cov = std::fabs(r.e_xi_eta);
    out.push_back(r);
  }
  return out;
}

// Var W as sum_i E xi_i eta_i.
inline double two_runs_sigma2(const TwoRunsModel& m) {
  double s = 0.0;
  for (const auto& r : two_runs_moments(m)) s += r.e_xi_eta;
  return s;
}

// ---- smoothness constants ----------------------------------------------------------

enum class SmoothnessRoute { smoothing, exact };

namespace detail {

// Given the window X_{i-2}..X_{i+3}, W minus the window summands splits as
// W_L + W_R with W_L a function of X_1..X_{i-2} and W_R of X_{i+3}..X_{n+1},
// conditionally independent. Only the endpoint values enter.
struct WindowSplit {
  std::int64_t left_len;   // X_1..X_{i-2}
  std::int64_t right_lo;   // first index of the right chain (i+3)
  std::int64_t right_len;  // X_{i+3}..X_{n+1}
};

inline WindowSplit window_split(const TwoRunsModel& m, std::int64_t i) {
  WindowSplit w;
  w.left_len = std::max<std::int64_t>(0, i - 2);
  w.right_lo = i + 3;
  w.right_len = std::max<std::int64_t>(0, m.n + 1 - (i + 3) + 1);
  return w;
}

// v = min(1/2, 1 - d_TV(S, S+1)) for a free run of `len` Bernoulli(p)
// variables with optional fixed neighbours, S the pair sum it contributes.
inline double run_smoothness(int len, std::optional<int> left, std::optional<int> right, double p) {
  if (len <= 0) return 0.0;
  if (len > 20) throw std::logic_error("run_smoothness: run too long");
  std::vector<double> w(static_cast<std::size_t>(len + 2), 0.0);
  for (unsigned mask = 0; mask < (1u << len); ++mask) {
    double prob = 1.0;
    int s = 0;
    for (int b = 0; b < len; ++b) {
      int xb = static_cast<int>((mask >> b) & 1u);
      prob *= xb ? p : 1.0 - p;
      if (b + 1 < len) s += xb * static_cast<int>((mask >> (b + 1)) & 1u);
    }
    int first = static_cast<int>(mask & 1u), lastv = static_cast<int>((mask >> (len - 1)) & 1u);
    if (left) s += *left * first;
    if (right) s += lastv * *right;
    w[static_cast<std::size_t>(s)] += prob;
  }
  LatticePMF S = LatticePMF::trusted(std::move(w), 0, 0.0);
  return std::min(0.5, 1.0 - 0.5 * d_functional(S, 1));
}

struct VState {
  double V;
  double v_star;
  double prob;
};

// Distribution of (V, v*) for the chain X_lo..X_hi when the X at indices
// divisible by 3 are revealed, with `forced` pinning one endpoint.
inline std::vector<VState> chain_smoothness(std::int64_t lo, std::int64_t hi, double p,
                                            std::int64_t forced_pos, int forced_value) {
  if (hi < lo) return {{0.0, 0.0, 1.0}};
  std::vector<std::int64_t> fixed;
  for (std::int64_t k = lo; k <= hi; ++k)
    if (k == forced_pos || k % 3 == 0) fixed.push_back(k);

  // key: (last fixed value, V, v*) rounded
  using Key = std::tuple<int, long long, long long>;
  auto key = [](int last, double V, double vs) {
    return Key{last, std::llround(V * 1e9), std::llround(vs * 1e9)};
  };
  std::map<Key, VState> states;
  auto add = [&](std::map<Key, VState>& into, int last, double V, double vs, double prob) {
    auto [it, fresh] = into.try_emplace(key(last, V, vs), VState{V, vs, 0.0});
    it->second.prob += prob;
  };

  std::int64_t first_fixed = fixed.front();
  for (int x = 0; x < 2; ++x) {
    double prob = first_fixed == forced_pos ? (x == forced_value ? 1.0 : 0.0) : (x ? p : 1.0 - p);
    if (prob == 0.0) continue;
    double v = run_smoothness(static_cast<int>(first_fixed - lo), std::nullopt, x, p);
    add(states, x, v, v, prob);
  }
  for (std::size_t f = 1; f < fixed.size(); ++f) {
    std::map<Key, VState> next;
    const int gap = static_cast<int>(fixed[f] - fixed[f - 1] - 1);
    for (const auto& [k, st] : states) {
      const int last = std::get<0>(k);
      for (int x = 0; x < 2; ++x) {
        double prob = fixed[f] == forced_pos ? (x == forced_value ? 1.0 : 0.0) : (x ? p : 1.0 - p);
        if (prob == 0.0) continue;
        double v = run_smoothness(gap, last, x, p);
        add(next, x, st.V + v, std::max(st.v_star, v), st.prob * prob);
      }
    }
    states = std::move(next);
  }
  std::vector<VState> out;
  const int tail = static_cast<int>(hi - fixed.back());
  for (const auto& [k, st] : states) {
    double v = run_smoothness(tail, std::get<0>(k), std::nullopt, p);
    out.push_back({st.V + v, std::max(st.v_star, v), st.prob});
  }
  return out;
}

// E min(2^l, bound(V_Z, v*_Z)) over the revealed values, for fixed endpoints.
inline double smoothing_constant_for(const TwoRunsModel& m, std::int64_t i, int xl, int xr, int l) {
  const WindowSplit w = window_split(m, i);
  auto left = chain_smoothness(1, w.left_len, m.p, w.left_len, xl);
  auto right = chain_smoothness(w.right_lo, m.n + 1, m.p, w.right_lo, xr);
  std::vector<ConditionalSmoothing> per_z;
  for (const auto& a : left)
    for (const auto& b : right)
      per_z.push_back({a.prob * b.prob, a.V + b.V, std::max(a.v_star, b.v_star)});
  double total = 0.0;
  for (const auto& z : per_z) total += z.weight;
  for (auto& z : per_z) z.weight /= total;
  auto bounds = smoothing_conditional_capped(per_z);
  return l == 1 ? bounds.d1 : bounds.d2;
}

inline std::vector<int> endpoint_values(bool present) {
  return present ? std::vector<int>{0, 1} : std::vector<int>{0};
}

}  // namespace detail

// a.s. bound on D^l(L(W | X_{i-2..i+3})), hence on D^l(L(W | xi_{B_i})).
// Built from the smoothing bounds after revealing X_k for k divisible by 3.
inline double two_runs_smoothness(const TwoRunsModel& m, std::int64_t i, int l) {
  detail::check_l(l);
  const auto w = detail::window_split(m, i);
  double c = 0.0;
  for (int xl : detail::endpoint_values(w.left_len > 0))
    for (int xr : detail::endpoint_values(w.right_len > 0))
      c = std::max(c, detail::smoothing_constant_for(m, i, xl, xr, l));
  return c;
}

// The same supremum evaluated exactly from the conditional laws of W_L, W_R.
inline double two_runs_exact_smoothness(const TwoRunsModel& m, std::int64_t i, int l) {
  detail::check_l(l);
  const auto w = detail::window_split(m, i);
  double c = 0.0;
  for (int xl : detail::endpoint_values(w.left_len > 0))
    for (int xr : detail::endpoint_values(w.right_len > 0)) {
      LatticePMF left = w.left_len > 0
                            ? detail::chain_pair_sum(w.left_len, m.p, std::nullopt, xl)
                            : LatticePMF();
      LatticePMF right =
          w.right_len > 0 ? detail::chain_pair_sum(w.right_len, m.p, xr, std::nullopt) : LatticePMF();
      c = std::max(c, d_functional(convolve(left, right), l));
    }
  return c;
}

inline double two_runs_c(const TwoRunsModel& m, std::int64_t i, int l, SmoothnessRoute route) {
  return route == SmoothnessRoute::smoothing ? two_runs_smoothness(m, i, l)
                                             : two_runs_exact_smoothness(m, i, l);
}

inline LocalDependenceSpec two_runs_local_spec(const TwoRunsModel& m,
                                               SmoothnessRoute route = SmoothnessRoute::smoothing) {
  LocalDependenceSpec spec;
  spec.anchor = split_anchor(-m.mean()).offset;
  for (const auto& r : two_runs_moments(m)) {
    LocalTerm t;
    t.m_xi_eta2 = r.m_xi_eta2;
    t.m_xi_eta_tau = r.m_xi_eta_tau;
    t.m_cov = r.m_cov;
    t.m_tau = r.m_tau;
    t.c1 = two_runs_c(m, r.i, 1, route);
    t.c2 = two_runs_c(m, r.i, 2, route);
    spec.sigma2 += r.e_xi_eta;
    spec.terms.push_back(t);
  }
  return spec;
}

// Pairwise decomposition: K_i = A_i, Z_ik = xi_k, V_ik = sum over A_k \ A_i.
// W_ik = W - sum over A_i u A_k is independent of (xi_i, xi_k).
inline DecomposableSpec two_runs_decomposition(const TwoRunsModel& m,
                                               SmoothnessRoute route = SmoothnessRoute::smoothing) {
  DecomposableSpec spec;
  spec.anchor = split_anchor(-m.mean()).offset;
  for (std::int64_t i = 1; i <= m.n; ++i) {
    DecomposableTerm t;
    std::vector<std::int64_t> ks;
    for (std::int64_t k = std::max<std::int64_t>(1, i - 1); k <= std::min(m.n, i + 1); ++k) ks.push_back(k);
    std::vector<DecompositionPart> parts(ks.size());
    std::vector<double> e_xi_z(ks.size(), 0.0);
    double e_xi_eta = 0.0;
    detail::for_each_window(m, i, [&](double prob, auto&& x) {
      const double xi = detail::xi_at(m, x, i);
      const double z = detail::range_sum(m, x, i - 1, i + 1);
      t.m_xi_Z2 += prob * std::fabs(xi) * z * z;
      e_xi_eta += prob * xi * z;
      for (std::size_t a = 0; a < ks.size(); ++a) {
        const std::int64_t k = ks[a];
        const double zk = detail::xi_at(m, x, k);
        // A_k \ A_i = {k-1, k, k+1} \ {i-1, i, i+1}
        double v = 0.0;
        for (std::int64_t j = k - 1; j <= k + 1; ++j)
          if (j < i - 1 || j > i + 1) v += detail::xi_at(m, x, j);
        parts[a].m_xi_Z_V += prob * std::fabs(xi * zk * v);
        e_xi_z[a] += prob * xi * zk;
        parts[a].m_ZV += prob * std::fabs(z + v);
      }
    });
    for (std::size_t a = 0; a < ks.size(); ++a) parts[a].m_cov = std::fabs(e_xi_z[a]);
    t.parts = std::move(parts);
    t.c1 = two_runs_c(m, i, 1, route);
    t.c2 = two_runs_c(m, i, 2, route);
    spec.sigma2 += e_xi_eta;
    spec.terms.push_back(std::move(t));
  }
  return spec;
}

// ---- exact distances ---------------------------------------------------------------

struct ExactDistanceReport {
  double tv;
  double loc;
  CenteringParams params;
};

// Distances from a centered law to its matched centered binomial.
inline ExactDistanceReport exact_distance_report(const LatticePMF& w) {
  const double var = w.variance();
  if (!(var > 1.0)) throw InapplicableError("exact_distance_report: variance " + std::to_string(var) + " <= 1");
  if (std::fabs(w.mean()) > kMeanTol)
    throw std::invalid_argument("exact_distance_report: law is not centered (mean " +
                                std::to_string(w.mean()) + ")");
  const CenteringParams cp = centering_params(var, w.offset());
  const LatticePMF approx = centered_binomial(cp);
  return {tv_distance(w, approx), loc_distance(w, approx), cp};
}

}  // namespace steinbin
