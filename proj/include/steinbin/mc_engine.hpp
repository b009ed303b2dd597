#pragma once

// Seeded replication, empirical distances to the matched centered binomial
// with bootstrap intervals, and log-log rate fits.
//
// Replications are cut into fixed blocks of kBlockReps; block b draws from its
// own mt19937_64 seeded with (seed, b). Blocks are handed to workers
// round-robin and written into place, so the output depends on the seed only,
// never on the worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steinbin/binomial_kernel.hpp"
#include "steinbin/errors.hpp"
#include "steinbin/lattice_dist.hpp"

namespace steinbin {

inline constexpr std::int64_t kBlockReps = 4096;
inline constexpr int kBootstrapResamples = 200;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

inline unsigned default_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

inline std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// reps draws of sampler(engine) -> T.
template <class T, class Sampler>
std::vector<T> replicate(Sampler&& sampler, std::int64_t reps, std::uint64_t seed,
                         unsigned workers = default_workers()) {
  if (reps < 1) throw std::invalid_argument("replicate: reps must be >= 1");
  std::vector<T> out(static_cast<std::size_t>(reps));
  const std::int64_t blocks = (reps + kBlockReps - 1) / kBlockReps;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
  auto run = [&](unsigned w) {
    for (std::int64_t b = w; b < blocks; b += workers) {
      auto eng = block_engine(seed, static_cast<std::uint64_t>(b));
      const std::int64_t lo = b * kBlockReps, hi = std::min(reps, lo + kBlockReps);
      for (std::int64_t k = lo; k < hi; ++k) out[static_cast<std::size_t>(k)] = sampler(eng);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

// ---- noise floors ------------------------------------------------------------

// (1/2) sum_k sqrt(p_k (1 - p_k) / reps): the typical tv between a pmf and
// its own empirical estimate.
inline double tv_noise_floor(const LatticePMF& p, std::int64_t reps) {
  double s = 0.0;
  for (double pk : p.probs()) s += std::sqrt(pk * (1.0 - pk) / static_cast<double>(reps));
  return 0.5 * s;
}

inline double loc_noise_floor(const LatticePMF& p, std::int64_t reps) {
  double m = 0.0;
  for (double pk : p.probs()) m = std::max(m, std::sqrt(pk * (1.0 - pk) / static_cast<double>(reps)));
  return m;
}

// ---- bootstrap ------------------------------------------------------------------

namespace detail {

// Multinomial(reps, p) counts by sequential conditional binomials.
inline std::vector<std::int64_t> multinomial(std::mt19937_64& eng, std::int64_t reps,
                                             const std::vector<double>& p) {
  std::vector<std::int64_t> c(p.size(), 0);
  std::int64_t left = reps;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < p.size() && left > 0; ++k) {
    double pk = mass > 0.0 ? std::clamp(p[k] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> bin(left, pk);
    c[k] = bin(eng);
    left -= c[k];
    mass -= p[k];
  }
  if (!p.empty()) c.back() += left;
  return c;
}

inline double quantile(std::vector<double> v, double prob) {
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
}

// Basic bootstrap interval, widened to contain the estimate and clamped to [0, 1].
inline Interval basic_interval(double est, const std::vector<double>& boot) {
  const double qlo = quantile(boot, 0.025), qhi = quantile(boot, 0.975);
  Interval ci{2.0 * est - qhi, 2.0 * est - qlo};
  ci.lo = std::clamp(std::min(ci.lo, est), 0.0, 1.0);
  ci.hi = std::clamp(std::max(ci.hi, est), 0.0, 1.0);
  return ci;
}

}  // namespace detail

struct BootstrapIntervals {
  Interval tv;
  Interval loc;
};

// Resamples the empirical pmf and recomputes both distances to `target`.
inline BootstrapIntervals bootstrap_distances(const LatticePMF& empirical, std::int64_t reps,
                                              const LatticePMF& target, std::uint64_t seed,
                                              int resamples = kBootstrapResamples) {
  auto eng = block_engine(seed, 0, 0xb007u);
  std::vector<double> tvs, locs;
  tvs.reserve(static_cast<std::size_t>(resamples));
  locs.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    auto counts = detail::multinomial(eng, reps, empirical.probs());
    LatticePMF star = pmf_from_counts(std::span<const std::int64_t>(counts), empirical.min_index(),
                                      empirical.offset());
    tvs.push_back(tv_distance(star, target));
    locs.push_back(loc_distance(star, target));
  }
  return {detail::basic_interval(tv_distance(empirical, target), tvs),
          detail::basic_interval(loc_distance(empirical, target), locs)};
}

// ---- experiments -------------------------------------------------------------------

struct ExperimentResult {
  ConfigEcho config_echo;
  std::int64_t reps = 0;
  LatticePMF empirical;
  double sigma2_used = 0.0;
  CenteringParams params{};
  double tv = 0.0;
  Interval tv_ci;
  double loc = 0.0;
  Interval loc_ci;
  double tv_floor = 0.0;
  double loc_floor = 0.0;
  double bound_l1 = std::numeric_limits<double>::quiet_NaN();
  double bound_l2 = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds; not part of the reproducible content

  double sample_mean() const { return empirical.mean(); }
  double sample_variance() const { return empirical.variance(); }
  double distance(Metric m) const { return m == Metric::tv ? tv : loc; }
  double floor(Metric m) const { return m == Metric::tv ? tv_floor : loc_floor; }
  Interval ci(Metric m) const { return m == Metric::tv ? tv_ci : loc_ci; }

  // Equality of everything except wall time.
  bool same_content(const ExperimentResult& o) const {
    auto eq = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    return config_echo == o.config_echo && reps == o.reps && empirical == o.empirical &&
           sigma2_used == o.sigma2_used && params.n == o.params.n && params.t == o.params.t &&
           tv == o.tv && tv_ci == o.tv_ci && loc == o.loc && loc_ci == o.loc_ci &&
           tv_floor == o.tv_floor && loc_floor == o.loc_floor && eq(bound_l1, o.bound_l1) &&
           eq(bound_l2, o.bound_l2) && seed == o.seed;
  }
};

// Builds the result from samples of W already on Z + anchor.
inline ExperimentResult summarize_samples(std::span<const double> samples, double sigma2, double anchor,
                                          std::uint64_t seed, ConfigEcho echo = {}) {
  if (!std::isfinite(sigma2) || !(sigma2 > 1.0))
    throw InapplicableError("experiment requires sigma^2 > 1, got " + std::to_string(sigma2));
  ExperimentResult r;
  r.config_echo = std::move(echo);
  r.reps = static_cast<std::int64_t>(samples.size());
  r.seed = seed;
  r.sigma2_used = sigma2;
  r.params = centering_params(sigma2, anchor);
  r.empirical = empirical_pmf(samples, anchor);
  const LatticePMF target = centered_binomial(r.params);
  r.tv = tv_distance(r.empirical, target);
  r.loc = loc_distance(r.empirical, target);
  r.tv_floor = tv_noise_floor(r.empirical, r.reps);
  r.loc_floor = loc_noise_floor(r.empirical, r.reps);
  auto boot = bootstrap_distances(r.empirical, r.reps, target, seed);
  r.tv_ci = boot.tv;
  r.loc_ci = boot.loc;
  return r;
}

// sampler(engine) -> double draws W on Z + anchor.
template <class Sampler>
ExperimentResult run_experiment(Sampler&& sampler, ConfigEcho echo, std::int64_t reps,
                                std::uint64_t seed, double sigma2, double anchor,
                                unsigned workers = default_workers()) {
  if (!std::isfinite(sigma2) || !(sigma2 > 1.0))
    throw InapplicableError("experiment requires sigma^2 > 1, got " + std::to_string(sigma2));
  const auto start = std::chrono::steady_clock::now();
  auto samples = replicate<double>(sampler, reps, seed, workers);
  auto r = summarize_samples(samples, sigma2, anchor, seed, std::move(echo));
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// Samples given as integer counts N, with W = N + shift.
inline ExperimentResult summarize_counts(std::span<const std::int64_t> counts, double shift,
                                         double sigma2, std::uint64_t seed, ConfigEcho echo = {}) {
  if (counts.empty()) throw std::invalid_argument("summarize_counts: no samples");
  if (!std::isfinite(sigma2) || !(sigma2 > 1.0))
    throw InapplicableError("experiment requires sigma^2 > 1, got " + std::to_string(sigma2));
  auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  std::vector<std::int64_t> hist(static_cast<std::size_t>(*hi - *lo + 1), 0);
  for (auto c : counts) ++hist[static_cast<std::size_t>(c - *lo)];
  ExperimentResult r;
  r.config_echo = std::move(echo);
  r.reps = static_cast<std::int64_t>(counts.size());
  r.seed = seed;
  r.sigma2_used = sigma2;
  r.empirical = pmf_from_counts(std::span<const std::int64_t>(hist), *lo, shift);
  r.params = centering_params(sigma2, r.empirical.offset());
  const LatticePMF target = centered_binomial(r.params);
  r.tv = tv_distance(r.empirical, target);
  r.loc = loc_distance(r.empirical, target);
  r.tv_floor = tv_noise_floor(r.empirical, r.reps);
  r.loc_floor = loc_noise_floor(r.empirical, r.reps);
  auto boot = bootstrap_distances(r.empirical, r.reps, target, seed);
  r.tv_ci = boot.tv;
  r.loc_ci = boot.loc;
  return r;
}

// ---- serialization ------------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json j;
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [k, v] : r.config_echo) echo[k] = v;
  j["config"] = echo;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["sigma2_used"] = r.sigma2_used;
  j["centering"] = {{"n", r.params.n}, {"delta", r.params.delta}, {"t", r.params.t}, {"anchor", r.params.a}};
  j["tv"] = r.tv;
  j["tv_ci"] = {r.tv_ci.lo, r.tv_ci.hi};
  j["loc"] = r.loc;
  j["loc_ci"] = {r.loc_ci.lo, r.loc_ci.hi};
  j["tv_floor"] = r.tv_floor;
  j["loc_floor"] = r.loc_floor;
  j["bound_l1"] = std::isnan(r.bound_l1) ? nlohmann::json(nullptr) : nlohmann::json(r.bound_l1);
  j["bound_l2"] = std::isnan(r.bound_l2) ? nlohmann::json(nullptr) : nlohmann::json(r.bound_l2);
  j["wall_time"] = r.wall_time;
  j["empirical"] = {{"offset", r.empirical.offset()},
                    {"min_index", r.empirical.min_index()},
                    {"probs", r.empirical.probs()}};
  return j;
}

inline const char* experiment_csv_columns() {
  return "reps,seed,sigma2,binom_n,t,bound_l1,bound_l2,emp_tv,emp_tv_lo,emp_tv_hi,emp_loc,emp_loc_lo,"
         "emp_loc_hi,tv_floor,loc_floor,mean,variance,wall_time";
}

inline std::string experiment_csv_fields(const ExperimentResult& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.reps << ',' << r.seed << ',' << r.sigma2_used << ',' << r.params.n << ',' << r.params.t << ','
     << r.bound_l1 << ',' << r.bound_l2 << ',' << r.tv << ',' << r.tv_ci.lo << ',' << r.tv_ci.hi << ','
     << r.loc << ',' << r.loc_ci.lo << ',' << r.loc_ci.hi << ',' << r.tv_floor << ',' << r.loc_floor
     << ',' << r.sample_mean() << ',' << r.sample_variance() << ',' << r.wall_time;
  return os.str();
}

// ---- rate fitting ----------------------------------------------------------------------

struct RatePoint {
  double scale;
  double distance;
  double floor = 0.0;
};

struct RateFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  Interval slope_ci;
  double intercept = 0.0;
  std::vector<double> dropped;  // scales removed by the floor filter
};

namespace detail {

inline std::pair<double, double> ols(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace detail

// Least squares of log distance on log scale. slope_ci spans the slopes of
// all leave-one-out refits together with the full fit.
inline RateFit fit_rate(const std::vector<RatePoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  RateFit f;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!(points[k].scale > 0.0)) throw std::invalid_argument("fit_rate: scales must be positive");
    if (!(points[k].distance > 0.0)) throw std::invalid_argument("fit_rate: distances must be positive");
    if (k > 0 && !(points[k].scale > points[k - 1].scale))
      throw std::invalid_argument("fit_rate: scales must be strictly increasing");
    f.xs.push_back(points[k].scale);
    f.ys.push_back(points[k].distance);
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < f.xs.size(); ++k) {
    lx.push_back(std::log(f.xs[k]));
    ly.push_back(std::log(f.ys[k]));
  }
  std::tie(f.slope, f.intercept) = detail::ols(lx, ly);
  f.slope_ci = {f.slope, f.slope};
  for (std::size_t drop = 0; drop < lx.size(); ++drop) {
    std::vector<double> ax, ay;
    for (std::size_t k = 0; k < lx.size(); ++k)
      if (k != drop) {
        ax.push_back(lx[k]);
        ay.push_back(ly[k]);
      }
    double s = detail::ols(ax, ay).first;
    f.slope_ci.lo = std::min(f.slope_ci.lo, s);
    f.slope_ci.hi = std::max(f.slope_ci.hi, s);
  }
  return f;
}

// Drops points whose distance is within 3x their noise floor, then fits.
// Throws if fewer than 3 points survive.
inline RateFit fit_rate_filtered(const std::vector<RatePoint>& points) {
  std::vector<RatePoint> kept;
  std::vector<double> dropped;
  for (const auto& p : points) {
    if (p.distance > 3.0 * p.floor)
      kept.push_back(p);
    else
      dropped.push_back(p.scale);
  }
  if (kept.size() < 3)
    throw std::invalid_argument("fit_rate: only " + std::to_string(kept.size()) +
                                " points lie above 3x their noise floor");
  RateFit f = fit_rate(kept);
  f.dropped = std::move(dropped);
  return f;
}

}  // namespace steinbin
