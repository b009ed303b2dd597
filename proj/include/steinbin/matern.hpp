#pragma once

// Matérn type-I hard-core process on the unit torus [0,1)^d with cube
// neighbourhoods: a Poisson(lam) pattern in which every point that has another
// point within max-norm torus distance r/2 is deleted. Moments of the total
// count, a simulator and the assembled point-process bound.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinbin/errors.hpp"
#include "steinbin/mc_engine.hpp"
#include "steinbin/quadrature.hpp"
#include "steinbin/stein_bounds.hpp"

namespace steinbin {

struct MaternConfig {
  int d = 1;
  double lam = 1.0;
  double r = 0.1;

  static MaternConfig from_a(int d, double lam, double a) {
    if (!(lam > 0.0) || !(a > 0.0)) throw std::invalid_argument("matern: lambda and a must be positive");
    return {d, lam, std::pow(a / lam, 1.0 / d)};
  }

  double a() const { return lam * std::pow(r, d); }

  void validate() const {
    if (d < 1) throw std::invalid_argument("matern: d must be >= 1");
    if (!(lam > 0.0) || !std::isfinite(lam)) throw std::invalid_argument("matern: lambda must be positive");
    if (!(r > 0.0) || r > 1.0 / 7.0 + 1e-12)
      throw std::invalid_argument("matern: r must lie in (0, 1/7], got " + std::to_string(r));
  }

  ConfigEcho echo() const {
    return {{"d", std::to_string(d)}, {"lambda", std::to_string(lam)}, {"r", std::to_string(r)},
            {"a", std::to_string(a())}};
  }
};

struct PointPattern {
  int d = 1;
  std::vector<double> coords;  // point k occupies coords[k*d .. k*d + d)

  std::size_t size() const { return coords.size() / static_cast<std::size_t>(d); }
  const double* point(std::size_t k) const { return coords.data() + k * static_cast<std::size_t>(d); }
};

// Per-coordinate torus distance.
inline double torus_gap(double x, double y) {
  double g = std::fabs(x - y);
  return std::min(g, 1.0 - g);
}

// Whether y lies in the closed cube of side r centered at x.
inline bool in_cube(const double* x, const double* y, int d, double r) {
  for (int i = 0; i < d; ++i)
    if (torus_gap(x[i], y[i]) > 0.5 * r) return false;
  return true;
}

namespace detail {

struct ThinScratch {
  std::vector<std::int64_t> cell;
  std::vector<std::int64_t> start;
  std::vector<std::int64_t> order;
  std::vector<char> keep;
};

// Marks points that have no other point in their K_r cube. Points are bucketed
// in a grid with cells of side >= r/2, so neighbours sit in adjacent cells.
inline void mark_retained(const std::vector<double>& coords, int d, double r, ThinScratch& s) {
  const std::size_t n = coords.size() / static_cast<std::size_t>(d);
  s.keep.assign(n, 1);
  if (n < 2) return;
  const auto g = static_cast<std::int64_t>(std::floor(2.0 / r));
  std::int64_t cells = 1;
  for (int i = 0; i < d && g >= 3; ++i) cells *= g;
  if (g < 3 || cells > static_cast<std::int64_t>(8 * n + 1024)) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (in_cube(&coords[a * d], &coords[b * d], d, r)) s.keep[a] = s.keep[b] = 0;
    return;
  }
  s.cell.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t c = 0;
    for (int i = 0; i < d; ++i) {
      auto ci = static_cast<std::int64_t>(coords[k * d + i] * static_cast<double>(g));
      c = c * g + std::min(ci, g - 1);
    }
    s.cell[k] = c;
  }
  s.start.assign(static_cast<std::size_t>(cells + 1), 0);
  for (std::size_t k = 0; k < n; ++k) ++s.start[static_cast<std::size_t>(s.cell[k] + 1)];
  for (std::int64_t c = 0; c < cells; ++c) s.start[static_cast<std::size_t>(c + 1)] += s.start[static_cast<std::size_t>(c)];
  s.order.resize(n);
  {
    std::vector<std::int64_t> fill(s.start.begin(), s.start.end() - 1);
    for (std::size_t k = 0; k < n; ++k) s.order[static_cast<std::size_t>(fill[static_cast<std::size_t>(s.cell[k])]++)] = static_cast<std::int64_t>(k);
  }
  std::int64_t neighbours = 1;
  for (int i = 0; i < d; ++i) neighbours *= 3;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t c = s.cell[k];
    for (int i = d - 1; i >= 0; --i) {
      idx[static_cast<std::size_t>(i)] = c % g;
      c /= g;
    }
    for (std::int64_t nb = 0; nb < neighbours; ++nb) {
      std::int64_t code = nb, cell = 0;
      for (int i = 0; i < d; ++i) {
        std::int64_t off = code % 3 - 1;
        code /= 3;
        cell = cell * g + ((idx[static_cast<std::size_t>(i)] + off + g) % g);
      }
      for (std::int64_t q = s.start[static_cast<std::size_t>(cell)]; q < s.start[static_cast<std::size_t>(cell + 1)]; ++q) {
        auto j = static_cast<std::size_t>(s.order[static_cast<std::size_t>(q)]);
        if (j <= k) continue;
        if (in_cube(&coords[k * d], &coords[j * d], d, r)) s.keep[k] = s.keep[j] = 0;
      }
    }
  }
}

inline void draw_poisson_points(const MaternConfig& cfg, std::mt19937_64& eng, std::vector<double>& coords) {
  std::poisson_distribution<std::int64_t> tau(cfg.lam);
  const std::int64_t n = tau(eng);
  coords.resize(static_cast<std::size_t>(n * cfg.d));
  for (auto& x : coords) x = static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Retained points of an explicit pattern.
inline PointPattern thin(const PointPattern& raw, double r) {
  detail::ThinScratch s;
  detail::mark_retained(raw.coords, raw.d, r, s);
  PointPattern out{raw.d, {}};
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (s.keep[k]) out.coords.insert(out.coords.end(), raw.point(k), raw.point(k) + raw.d);
  return out;
}

inline PointPattern simulate_pattern(const MaternConfig& cfg, std::mt19937_64& eng) {
  cfg.validate();
  PointPattern raw{cfg.d, {}};
  detail::draw_poisson_points(cfg, eng, raw.coords);
  return thin(raw, cfg.r);
}

inline PointPattern simulate_pattern(const MaternConfig& cfg, std::uint64_t seed) {
  auto eng = block_engine(seed, 0);
  return simulate_pattern(cfg, eng);
}

// Phi(J) for one draw.
inline std::int64_t sample_total(const MaternConfig& cfg, std::mt19937_64& eng) {
  thread_local std::vector<double> coords;
  thread_local detail::ThinScratch scratch;
  detail::draw_poisson_points(cfg, eng, coords);
  detail::mark_retained(coords, cfg.d, cfg.r, scratch);
  std::int64_t kept = 0;
  for (char k : scratch.keep) kept += k;
  return kept;
}

inline std::vector<std::int64_t> simulate_totals(const MaternConfig& cfg, std::int64_t reps, std::uint64_t seed,
                                                 unsigned workers = default_workers()) {
  cfg.validate();
  return replicate<std::int64_t>([&](std::mt19937_64& eng) { return sample_total(cfg, eng); }, reps, seed,
                                 workers);
}

// ---- moments ----------------------------------------------------------------

// mu(J) = lam e^{-a}.
inline double mean_total(const MaternConfig& cfg) {
  cfg.validate();
  return cfg.lam * std::exp(-cfg.a());
}

struct MaternVariance {
  double exact = 0.0;
  double lower_bound = 0.0;
  double mc_error = 0.0;  // standard error; nonzero only for the Monte Carlo fallback
  bool quadrature = true;
};

namespace detail {

// int over K_{2r} \ K_r of exp(-lam (2 r^d - prod (r - |x_i|))).
inline double shell_integral(const MaternConfig& cfg, double& err_out) {
  const int d = cfg.d;
  const double r = cfg.r, lam = cfg.lam;
  const double rd = std::pow(r, d);
  err_out = 0.0;
  auto f = [&](const std::vector<double>& absx) {
    double overlap = 1.0;
    for (double v : absx) overlap *= (r - v);
    return std::exp(-lam * (2.0 * rd - overlap));
  };
  if (d <= 3) {
    const auto& rule = quad::gauss_legendre<64>();
    const double half = 0.25 * r;
    // |x_i| in [0, r/2] (inner) or [r/2, r] (outer); at least one outer.
    double total = 0.0;
    std::vector<double> absx(static_cast<std::size_t>(d));
    for (unsigned pieces = 1; pieces < (1u << d); ++pieces) {
      std::int64_t nodes = 1;
      for (int i = 0; i < d; ++i) nodes *= 64;
      for (std::int64_t k = 0; k < nodes; ++k) {
        std::int64_t code = k;
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
          const auto node = static_cast<std::size_t>(code % 64);
          code /= 64;
          const double mid = ((pieces >> i) & 1u) ? 0.75 * r : 0.25 * r;
          absx[static_cast<std::size_t>(i)] = mid + half * rule.nodes[node];
          w *= half * rule.weights[node];
        }
        total += w * f(absx);
      }
    }
    return total * std::pow(2.0, d);
  }
  // Monte Carlo over [0, r]^d with the inner cube excluded.
  const std::int64_t draws = 2'000'000;
  auto eng = block_engine(0x6d61746572ULL, static_cast<std::uint64_t>(d));
  std::uniform_real_distribution<double> u(0.0, r);
  std::vector<double> absx(static_cast<std::size_t>(d));
  double s = 0.0, s2 = 0.0;
  for (std::int64_t k = 0; k < draws; ++k) {
    bool outer = false;
    for (auto& v : absx) {
      v = u(eng);
      outer = outer || v > 0.5 * r;
    }
    const double val = outer ? f(absx) : 0.0;
    s += val;
    s2 += val * val;
  }
  const double vol = std::pow(2.0 * r, d);
  const double mean = s / draws;
  err_out = vol * std::sqrt(std::max(0.0, s2 / draws - mean * mean) / draws);
  return vol * mean;
}

}  // namespace detail

// sigma^2 = mu(J) + M(J) - mu(J)^2 with
// M(J) = lam^2 [shell integral + (1 - (2r)^d) e^{-2a}].
inline MaternVariance variance_total(const MaternConfig& cfg) {
  cfg.validate();
  const double a = cfg.a();
  const double mu = mean_total(cfg);
  MaternVariance v;
  const double shell = detail::shell_integral(cfg, v.mc_error);
  v.quadrature = cfg.d <= 3;
  v.mc_error *= cfg.lam * cfg.lam;
  const double M = cfg.lam * cfg.lam * (shell + (1.0 - std::pow(2.0 * cfg.r, cfg.d)) * std::exp(-2.0 * a));
  v.exact = mu + M - mu * mu;
  v.lower_bound = mu * (1.0 - a * std::exp(-a));
  return v;
}

// ---- bound ------------------------------------------------------------------------

struct MaternBoundDetails {
  std::int64_t m = 0;
  double blocks = 0.0;  // m^d
  double p0 = 0.0;
  double p1 = 0.0;
  double pmin = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double per_point = 0.0;  // 26 * 7^d
  double mu = 0.0;
  double sigma2 = 0.0;
  double bound_l1 = 0.0;
  double bound_l2 = 0.0;
};

inline MaternBoundDetails theorem42_details(const MaternConfig& cfg) {
  cfg.validate();
  MaternBoundDetails b;
  const double a = cfg.a();
  b.m = static_cast<std::int64_t>(std::floor(1.0 / (6.0 * cfg.r) + 1e-9));
  b.blocks = std::pow(static_cast<double>(b.m), cfg.d);
  b.p0 = std::exp(-a);
  b.p1 = a * std::exp(-std::pow(3.0, cfg.d) * a);
  b.pmin = std::min({0.5, b.p0, b.p1});
  b.c1 = 2.0 * detail::inv_positive_part(std::sqrt(b.pmin * std::max(0.0, b.blocks - 2.0)));
  b.c2 = 8.0 * detail::inv_positive_part(b.pmin * std::max(0.0, b.blocks - 3.0));
  b.per_point = 26.0 * std::pow(7.0, cfg.d);
  b.mu = mean_total(cfg);
  b.sigma2 = variance_total(cfg).exact;
  b.bound_l1 = (b.mu * b.per_point * b.c1 + kSteinConstant) / b.sigma2;
  b.bound_l2 = (b.mu * b.per_point * b.c2 + kSteinConstant) / b.sigma2;
  return b;
}

inline double theorem42_bound(const MaternConfig& cfg, int l) {
  detail::check_l(l);
  auto b = theorem42_details(cfg);
  if ((l == 1 && !(b.blocks > 2.0)) || (l == 2 && !(b.blocks > 3.0)))
    throw InapplicableError("matern bound: only " + std::to_string(b.blocks) + " blocks");
  detail::check_sigma2(b.sigma2);
  return l == 1 ? b.bound_l1 : b.bound_l2;
}

// Homogeneous point-process spec whose bracket equals the rough per-point
// estimate 26 * 7^d, with c_l from the block argument.
inline PointProcessSpec rough_point_process_spec(const MaternConfig& cfg) {
  auto b = theorem42_details(cfg);
  const double k = 2.0 * std::pow(7.0, cfg.d);
  PointProcessTerm t;
  t.palm_prod = k;
  t.plain_prod = k;
  t.mu_A = std::sqrt(k);
  t.mu_B = std::sqrt(k);
  t.palm_B = std::sqrt(k);
  t.c1 = b.c1;
  t.c2 = b.c2;
  return PointProcessSpec::homogeneous(b.mu, t, b.sigma2, split_anchor(-b.mu).offset);
}

inline ExperimentResult matern_empirical_distance(const MaternConfig& cfg, std::int64_t reps, std::uint64_t seed,
                                                  unsigned workers = default_workers()) {
  cfg.validate();
  const double sigma2 = variance_total(cfg).exact;
  detail::check_sigma2(sigma2);
  const double mu = mean_total(cfg);
  const auto start = std::chrono::steady_clock::now();
  auto totals = simulate_totals(cfg, reps, seed, workers);
  auto r = summarize_counts(totals, -mu, sigma2, seed, cfg.echo());
  for (int l : {1, 2}) {
    try {
      (l == 1 ? r.bound_l1 : r.bound_l2) = theorem42_bound(cfg, l);
    } catch (const InapplicableError&) {
    }
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace steinbin
