#pragma once

// Error-bound calculators for centered binomial approximation. Specs carry the
// moment functionals and smoothness constants that the bounds consume, so all
// of this is deterministic arithmetic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinbin/binomial_kernel.hpp"
#include "steinbin/errors.hpp"
#include "steinbin/lattice_dist.hpp"

namespace steinbin {

inline constexpr double kSteinConstant = 1.75;
inline constexpr double kMeanTol = 1e-9;

// ---- spec types ------------------------------------------------------------

struct IndependentSummandSpec {
  std::vector<LatticePMF> summands;  // laws of the centered xi_i
};

// Per-index moments for the local dependence bound:
//   m_xi_eta2   = E|xi eta^2|
//   m_xi_eta_tau = E|xi eta (tau - eta)|
//   m_cov       = |E xi eta|
//   m_tau       = E|tau|
// and a.s. bounds c1, c2 on D^l(L(W | xi_B)).
struct LocalTerm {
  double m_xi_eta2 = 0.0;
  double m_xi_eta_tau = 0.0;
  double m_cov = 0.0;
  double m_tau = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  friend bool operator==(const LocalTerm&, const LocalTerm&) = default;
};

struct LocalDependenceSpec {
  std::vector<LocalTerm> terms;
  double sigma2 = 0.0;
  double anchor = 0.0;

  friend bool operator==(const LocalDependenceSpec&, const LocalDependenceSpec&) = default;
};

// One evaluation point of the point-process bound. `weight` is the mass
// mu(d alpha) attached to it; the homogeneous case is one term with
// weight = mu_total.
struct PointProcessTerm {
  double weight = 0.0;
  double palm_prod = 0.0;   // E Phi_a(A) Phi_a(B)
  double plain_prod = 0.0;  // E Phi(A) Phi(B)
  double mu_A = 0.0;
  double mu_B = 0.0;
  double palm_B = 0.0;  // E Phi_a(B)
  double c1 = 0.0;
  double c2 = 0.0;

  friend bool operator==(const PointProcessTerm&, const PointProcessTerm&) = default;
};

struct PointProcessSpec {
  double mu_total = 0.0;
  std::vector<PointProcessTerm> terms;
  double sigma2 = 0.0;
  double anchor = 0.0;

  static PointProcessSpec homogeneous(double mu_total, PointProcessTerm t, double sigma2,
                                      double anchor) {
    t.weight = mu_total;
    return {mu_total, {t}, sigma2, anchor};
  }

  friend bool operator==(const PointProcessSpec&, const PointProcessSpec&) = default;
};

// Decomposition W = W_i + Z_i, Z_i = sum_k Z_ik, W_i = W_ik + V_ik.
//   m_xi_Z2 = E|xi_i| Z_i^2
// per k:
//   m_xi_Z_V = E|xi_i Z_ik V_ik|,  m_cov = |E xi_i Z_ik|,  m_ZV = E|Z_i + V_ik|
// c1, c2 bound the conditional D^l terms a.s.
struct DecompositionPart {
  double m_xi_Z_V = 0.0;
  double m_cov = 0.0;
  double m_ZV = 0.0;

  friend bool operator==(const DecompositionPart&, const DecompositionPart&) = default;
};

struct DecomposableTerm {
  double m_xi_Z2 = 0.0;
  std::vector<DecompositionPart> parts;
  double c1 = 0.0;
  double c2 = 0.0;

  friend bool operator==(const DecomposableTerm&, const DecomposableTerm&) = default;
};

struct DecomposableSpec {
  std::vector<DecomposableTerm> terms;
  double sigma2 = 0.0;
  double anchor = 0.0;

  friend bool operator==(const DecomposableSpec&, const DecomposableSpec&) = default;
};

// ---- reports ---------------------------------------------------------------

struct BoundReport {
  int l = 1;
  double sigma2 = 0.0;
  double theta_sum = 0.0;
  double constant = kSteinConstant;
  double bound = 0.0;
  CenteringParams params{};

  // The centered binomial the bound refers to.
  LatticePMF approximant() const { return centered_binomial(params); }
};

struct CorollaryReport {
  Metric metric = Metric::tv;
  double bound = 0.0;
  double sigma2 = 0.0;
  double mu = 0.0;
  double V = 0.0;
  double v_star = 0.0;
  double rho_sum = 0.0;
  double smoothness = 0.0;  // 2/(V - v*)^{1/2} or 8/(V - 4v*)_+
  double trailing = 0.0;
  std::int64_t n = 0;
  std::int64_t s = 0;
  LatticePMF approximant;  // Bi(n, 1/2) * delta_s
};

struct SmoothingBounds {
  double d1 = 0.0;
  double d2 = 0.0;
};

struct ConditionalSmoothing {
  double weight = 0.0;
  double V = 0.0;
  double v_star = 0.0;
};

// ---- helpers ---------------------------------------------------------------

namespace detail {

inline void check_l(int l) {
  if (l != 1 && l != 2) throw std::invalid_argument("l must be 1 or 2, got " + std::to_string(l));
}

inline void check_sigma2(double sigma2) {
  if (!std::isfinite(sigma2) || !(sigma2 > 1.0))
    throw InapplicableError("bound requires sigma^2 > 1, got " + std::to_string(sigma2));
}

inline void check_nonneg(double v, const std::string& what) {
  if (!std::isfinite(v) || v < 0.0)
    throw std::invalid_argument(what + " must be finite and >= 0, got " + std::to_string(v));
}

inline double pick_c(double c1, double c2, int l) { return l == 1 ? c1 : c2; }

// 1/x_+ with 1/0 = +inf.
inline double inv_positive_part(double x) {
  return x > 0.0 ? 1.0 / x : std::numeric_limits<double>::infinity();
}

inline BoundReport finish(int l, double sigma2, double anchor, double theta_sum) {
  BoundReport r;
  r.l = l;
  r.sigma2 = sigma2;
  r.theta_sum = theta_sum;
  r.bound = (theta_sum + kSteinConstant) / sigma2;
  r.params = centering_params(sigma2, anchor);
  return r;
}

}  // namespace detail

// ---- independent summands --------------------------------------------------

// sigma^3 + (1/2) E|xi|^3 of a centered summand.
inline double rho(const LatticePMF& summand) {
  const double mu = summand.mean();
  const double var = summand.variance();
  return var * std::sqrt(var) + 0.5 * summand.abs_moment(3.0, mu);
}

// D^l(L(W - xi_i)) for every i, from prefix and suffix convolutions.
inline std::vector<double> leave_one_out_smoothness_all(const IndependentSummandSpec& spec, int l) {
  detail::check_l(l);
  const auto& s = spec.summands;
  const std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("leave_one_out_smoothness: need at least two summands");
  std::vector<LatticePMF> prefix(n + 1), suffix(n + 1);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = convolve(prefix[i], s[i]);
  for (std::size_t i = n; i-- > 0;) suffix[i] = convolve(suffix[i + 1], s[i]);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Equal neighbours give equal leave-one-out laws.
    if (i > 0 && s[i] == s[i - 1]) {
      out[i] = out[i - 1];
      continue;
    }
    out[i] = d_functional(convolve(prefix[i], suffix[i + 1]), l);
  }
  return out;
}

inline double leave_one_out_smoothness(const IndependentSummandSpec& spec, std::size_t i, int l) {
  detail::check_l(l);
  const auto& s = spec.summands;
  if (s.size() < 2) throw std::invalid_argument("leave_one_out_smoothness: need at least two summands");
  if (i >= s.size()) throw std::out_of_range("leave_one_out_smoothness: index out of range");
  LatticePMF acc;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (j != i) acc = convolve(acc, s[j]);
  return d_functional(acc, l);
}

inline double total_variance(const IndependentSummandSpec& spec) {
  double s = 0.0;
  for (const auto& x : spec.summands) s += x.variance();
  return s;
}

// Lattice anchor of W = sum xi_i.
inline double total_anchor(const IndependentSummandSpec& spec) {
  double a = 0.0;
  for (const auto& x : spec.summands) a += x.offset();
  return split_anchor(a).offset;
}

inline void validate(const IndependentSummandSpec& spec) {
  if (spec.summands.size() < 2)
    throw std::invalid_argument("independent spec: need at least two summands");
  for (std::size_t i = 0; i < spec.summands.size(); ++i)
    if (std::fabs(spec.summands[i].mean()) > kMeanTol)
      throw std::invalid_argument("independent spec: summand " + std::to_string(i) +
                                  " is not centered (mean " +
                                  std::to_string(spec.summands[i].mean()) + ")");
}

// sigma^{-2} (sum_i c_{l,i} rho_i + 1.75) with exact c_{l,i} = D^l(L(W - xi_i)).
inline BoundReport bound_theorem_2_1(const IndependentSummandSpec& spec, int l) {
  detail::check_l(l);
  validate(spec);
  const double sigma2 = total_variance(spec);
  detail::check_sigma2(sigma2);
  const auto c = leave_one_out_smoothness_all(spec, l);
  double theta = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) theta += c[i] * rho(spec.summands[i]);
  return detail::finish(l, sigma2, total_anchor(spec), theta);
}

// The same configuration as a local dependence spec with A_i = B_i = {i}:
// eta = tau = xi_i and c_{l,i} = D^l(L(W - xi_i)).
inline LocalDependenceSpec independent_as_local(const IndependentSummandSpec& spec) {
  validate(spec);
  const auto c1 = leave_one_out_smoothness_all(spec, 1);
  const auto c2 = leave_one_out_smoothness_all(spec, 2);
  LocalDependenceSpec out;
  out.sigma2 = total_variance(spec);
  out.anchor = total_anchor(spec);
  for (std::size_t i = 0; i < spec.summands.size(); ++i) {
    const auto& x = spec.summands[i];
    LocalTerm t;
    t.m_xi_eta2 = x.abs_moment(3.0);
    t.m_xi_eta_tau = 0.0;
    t.m_cov = x.variance();
    t.m_tau = x.abs_moment(1.0);
    t.c1 = c1[i];
    t.c2 = c2[i];
    out.terms.push_back(t);
  }
  return out;
}

// ---- smoothing ---------------------------------------------------------------

inline SmoothingBounds smoothing_bounds(const std::vector<double>& v_list) {
  double V = 0.0, v_star = 0.0;
  for (double v : v_list) {
    if (!(v >= 0.0 && v <= 0.5)) throw std::invalid_argument("smoothing_bounds: v must lie in [0, 1/2]");
    V += v;
    v_star = std::max(v_star, v);
  }
  return {2.0 * detail::inv_positive_part(std::sqrt(V)), 8.0 * detail::inv_positive_part(V - 2.0 * v_star)};
}

inline SmoothingBounds smoothing_bounds(double V, double v_star) {
  if (!(V >= 0.0) || !(v_star >= 0.0 && v_star <= 0.5))
    throw std::invalid_argument("smoothing_bounds: need V >= 0 and v* in [0, 1/2]");
  return {2.0 * detail::inv_positive_part(std::sqrt(V)), 8.0 * detail::inv_positive_part(V - 2.0 * v_star)};
}

namespace detail {

inline SmoothingBounds smoothing_conditional_impl(const std::vector<ConditionalSmoothing>& per_z,
                                                  double cap1, double cap2) {
  if (per_z.empty()) throw std::invalid_argument("smoothing_conditional: empty");
  double total = 0.0;
  SmoothingBounds out;
  for (const auto& z : per_z) {
    if (!(z.weight >= 0.0)) throw std::invalid_argument("smoothing_conditional: negative weight");
    total += z.weight;
    if (z.weight == 0.0) continue;
    auto b = smoothing_bounds(z.V, z.v_star);
    out.d1 += z.weight * std::min(cap1, b.d1);
    out.d2 += z.weight * std::min(cap2, b.d2);
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("smoothing_conditional: weights must sum to 1");
  // rounding in the weighted sum can push a fully capped average past the cap
  out.d1 = std::min(out.d1, cap1);
  out.d2 = std::min(out.d2, cap2);
  return out;
}

}  // namespace detail

// E over z of the per-z smoothing bounds.
inline SmoothingBounds smoothing_conditional(const std::vector<ConditionalSmoothing>& per_z) {
  const double inf = std::numeric_limits<double>::infinity();
  return detail::smoothing_conditional_impl(per_z, inf, inf);
}

// As above with each per-z value first capped at the trivial D^1 <= 2,
// D^2 <= 4, so atoms with V_z = 0 do not make the average infinite.
inline SmoothingBounds smoothing_conditional_capped(const std::vector<ConditionalSmoothing>& per_z) {
  return detail::smoothing_conditional_impl(per_z, 2.0, 4.0);
}

// Splits v_list into two groups whose sums differ by at most v*, so each is
// at least V/2 - v*. Returns the index sets.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> half_split(
    const std::vector<double>& v_list) {
  std::vector<std::size_t> order(v_list.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v_list[a] > v_list[b]; });
  std::vector<std::size_t> g1, g2;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i : order) {
    if (s1 <= s2) {
      g1.push_back(i);
      s1 += v_list[i];
    } else {
      g2.push_back(i);
      s2 += v_list[i];
    }
  }
  return {g1, g2};
}

// ---- Corollary for integer summands ------------------------------------------

inline CorollaryReport bound_corollary_2_3(const std::vector<LatticePMF>& summands, Metric metric) {
  if (summands.empty()) throw std::invalid_argument("corollary bound: no summands");
  CorollaryReport r;
  r.metric = metric;
  for (std::size_t i = 0; i < summands.size(); ++i) {
    const auto& x = summands[i];
    if (!same_lattice(x.offset(), 0.0))
      throw std::invalid_argument("corollary bound: summand " + std::to_string(i) + " is not integer valued");
    r.mu += x.mean();
    r.sigma2 += x.variance();
    r.rho_sum += rho(x);
    const double v = std::min(0.5, 1.0 - tv_distance(x, x.shifted_by_index(1)));
    r.V += v;
    r.v_star = std::max(r.v_star, v);
  }
  detail::check_sigma2(r.sigma2);
  const double sigma = std::sqrt(r.sigma2);
  if (metric == Metric::tv) {
    const double room = r.V - r.v_star;
    if (!(room > 0.0))
      throw InapplicableError("corollary bound: V - v* = " + std::to_string(room) + " <= 0");
    r.smoothness = 2.0 / std::sqrt(room);
    r.trailing = (1.0 + 2.25 / sigma + 0.25 / r.sigma2) / sigma;
    r.bound = 2.0 * r.rho_sum / (r.sigma2 * std::sqrt(room)) + r.trailing;
  } else {
    const double room = r.V - 4.0 * r.v_star;
    if (!(room > 0.0))
      throw InapplicableError("corollary bound: V - 4v* = " + std::to_string(room) + " <= 0");
    r.smoothness = 8.0 / room;
    r.trailing = (3.25 + 0.25 / sigma) / r.sigma2;
    r.bound = 8.0 * r.rho_sum / (r.sigma2 * room) + r.trailing;
  }
  r.n = centering_params(r.sigma2, 0.0).n;
  r.s = static_cast<std::int64_t>(std::ceil(r.mu - static_cast<double>(r.n) / 2.0 - kLatticeTol));
  r.approximant = binomial_pmf(BinomialParams(r.n, 0.5)).shifted_by_index(r.s);
  return r;
}

// ---- local dependence ----------------------------------------------------------

inline void validate(const LocalDependenceSpec& spec) {
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& t = spec.terms[i];
    const std::string at = "terms[" + std::to_string(i) + "].";
    detail::check_nonneg(t.m_xi_eta2, at + "m_xi_eta2");
    detail::check_nonneg(t.m_xi_eta_tau, at + "m_xi_eta_tau");
    detail::check_nonneg(t.m_cov, at + "m_cov");
    detail::check_nonneg(t.m_tau, at + "m_tau");
    detail::check_nonneg(t.c1, at + "c1");
    detail::check_nonneg(t.c2, at + "c2");
    if (t.c1 > 2.0 || t.c2 > 4.0)
      throw std::invalid_argument(at + "c1 must be <= 2 and c2 <= 4 (D^l never exceeds 2^l)");
  }
  if (!std::isfinite(spec.anchor)) throw std::invalid_argument("anchor must be finite");
}

// c_{l,i} (1/2 E|xi eta^2| + E|xi eta (tau - eta)| + |E xi eta| E|tau|).
inline double theta_local(const LocalTerm& t, int l) {
  return detail::pick_c(t.c1, t.c2, l) *
         (0.5 * t.m_xi_eta2 + t.m_xi_eta_tau + t.m_cov * t.m_tau);
}

inline BoundReport bound_theorem_3_1(const LocalDependenceSpec& spec, int l) {
  detail::check_l(l);
  validate(spec);
  detail::check_sigma2(spec.sigma2);
  double theta = 0.0;
  for (const auto& t : spec.terms) theta += theta_local(t, l);
  return detail::finish(l, spec.sigma2, spec.anchor, theta);
}

// ---- point processes ------------------------------------------------------------

inline void validate(const PointProcessSpec& spec) {
  detail::check_nonneg(spec.mu_total, "mu_total");
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& t = spec.terms[i];
    const std::string at = "terms[" + std::to_string(i) + "].";
    if (!std::isfinite(t.weight) || t.weight < 0.0)
      throw std::invalid_argument(at + "weight: quadrature weights must be finite and >= 0");
    detail::check_nonneg(t.palm_prod, at + "palm_prod");
    detail::check_nonneg(t.plain_prod, at + "plain_prod");
    detail::check_nonneg(t.mu_A, at + "mu_A");
    detail::check_nonneg(t.mu_B, at + "mu_B");
    detail::check_nonneg(t.palm_B, at + "palm_B");
    detail::check_nonneg(t.c1, at + "c1");
    detail::check_nonneg(t.c2, at + "c2");
  }
  if (!std::isfinite(spec.anchor)) throw std::invalid_argument("anchor must be finite");
}

inline double point_process_bracket(const PointProcessTerm& t) {
  return 1.5 * t.palm_prod + 1.5 * t.plain_prod + 6.0 * t.mu_A * t.mu_B + 4.0 * t.mu_B * t.palm_B;
}

inline double theta_point_process(const PointProcessTerm& t, int l) {
  return detail::pick_c(t.c1, t.c2, l) * point_process_bracket(t);
}

// sigma^{-2} (integral of theta_l over mu + 1.75), the integral being the
// weighted sum over the spec's evaluation points.
inline BoundReport bound_corollary_3_4(const PointProcessSpec& spec, int l) {
  detail::check_l(l);
  validate(spec);
  detail::check_sigma2(spec.sigma2);
  double integral = 0.0;
  for (const auto& t : spec.terms) integral += t.weight * theta_point_process(t, l);
  return detail::finish(l, spec.sigma2, spec.anchor, integral);
}

// ---- decomposable ------------------------------------------------------------------

inline void validate(const DecomposableSpec& spec) {
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& t = spec.terms[i];
    const std::string at = "terms[" + std::to_string(i) + "].";
    detail::check_nonneg(t.m_xi_Z2, at + "m_xi_Z2");
    detail::check_nonneg(t.c1, at + "c1");
    detail::check_nonneg(t.c2, at + "c2");
    for (std::size_t k = 0; k < t.parts.size(); ++k) {
      const std::string pk = at + "parts[" + std::to_string(k) + "].";
      detail::check_nonneg(t.parts[k].m_xi_Z_V, pk + "m_xi_Z_V");
      detail::check_nonneg(t.parts[k].m_cov, pk + "m_cov");
      detail::check_nonneg(t.parts[k].m_ZV, pk + "m_ZV");
    }
  }
  if (!std::isfinite(spec.anchor)) throw std::invalid_argument("anchor must be finite");
}

inline double theta_decomposable(const DecomposableTerm& t, int l) {
  double s = 0.5 * t.m_xi_Z2;
  for (const auto& p : t.parts) s += p.m_xi_Z_V + p.m_cov * p.m_ZV;
  return detail::pick_c(t.c1, t.c2, l) * s;
}

inline BoundReport bound_theorem_6_1(const DecomposableSpec& spec, int l) {
  detail::check_l(l);
  validate(spec);
  detail::check_sigma2(spec.sigma2);
  double theta = 0.0;
  for (const auto& t : spec.terms) theta += theta_decomposable(t, l);
  return detail::finish(l, spec.sigma2, spec.anchor, theta);
}

// K_i = {i}, Z_i = eta_i, V_ii = tau_i - eta_i.
inline DecomposableSpec local_as_decomposable(const LocalDependenceSpec& spec) {
  DecomposableSpec out;
  out.sigma2 = spec.sigma2;
  out.anchor = spec.anchor;
  for (const auto& t : spec.terms)
    out.terms.push_back({t.m_xi_eta2, {{t.m_xi_eta_tau, t.m_cov, t.m_tau}}, t.c1, t.c2});
  return out;
}

}  // namespace steinbin
