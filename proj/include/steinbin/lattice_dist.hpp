#pragma once

// Finitely supported distributions on unit-span lattices Z + a, the total
// variation and local metrics between them, and the smoothness functionals
// D^l(mu) = || mu * (delta_1 - delta_0)^{*l} ||.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinbin/errors.hpp"

namespace steinbin {

// Two offsets describe the same lattice when they agree mod 1 within this.
inline constexpr double kLatticeTol = 1e-9;
// Empirical samples must sit this close to a lattice point.
inline constexpr double kSampleSnapTol = 1e-6;
// Allowed deviation of a pmf's total mass from one.
inline constexpr double kMassTol = 1e-12;

struct LatticeAnchor {
  double offset;       // in [0, 1)
  std::int64_t carry;  // integer part removed from the raw anchor
};

// Splits a real anchor x into floor-carry and fractional offset. Offsets that
// round up to within kLatticeTol of 1 are snapped to 0 with a carry, so every
// stored offset is in [0, 1 - kLatticeTol).
inline LatticeAnchor split_anchor(double x) {
  double whole = std::floor(x);
  double frac = x - whole;
  if (frac >= 1.0 - kLatticeTol) {
    frac = 0.0;
    whole += 1.0;
  }
  return {frac, static_cast<std::int64_t>(whole)};
}

// Circular distance of two offsets on [0, 1).
inline double offset_gap(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

namespace detail {

template <class Vec>
void trim_zeros(Vec& v, std::int64_t& min_index) {
  std::size_t first = 0;
  while (first < v.size() && v[first] == 0.0) ++first;
  if (first == v.size()) {
    v.clear();
    return;
  }
  std::size_t last = v.size();
  while (last > first && v[last - 1] == 0.0) --last;
  v.erase(v.begin() + static_cast<std::ptrdiff_t>(last), v.end());
  v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(first));
  min_index += static_cast<std::int64_t>(first);
}

}  // namespace detail

// Signed measure on Z + offset; used for mu * (delta_1 - delta_0)^{*l}.
struct SignedLatticeMeasure {
  double offset = 0.0;
  std::int64_t min_index = 0;
  std::vector<double> values;

  double norm() const {
    double s = 0.0;
    for (double v : values) s += std::fabs(v);
    return s;
  }
  double total() const { return std::accumulate(values.begin(), values.end(), 0.0); }
};

class LatticePMF {
 public:
  // The unit mass at 0.
  LatticePMF() : offset_(0.0), min_index_(0), probs_{1.0} {}

  // Validating factory. `anchor` is any real; atom k sits at
  // min_index + k + anchor. Throws std::invalid_argument on negative or
  // non-finite entries, or mass that is not 1 within kMassTol (unless
  // `normalize` is set, in which case the probabilities are rescaled).
  static LatticePMF from_probs(std::vector<double> probs, std::int64_t min_index = 0,
                               double anchor = 0.0, bool normalize = false) {
    if (!std::isfinite(anchor)) throw std::invalid_argument("LatticePMF: anchor is not finite");
    double mass = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0)
        throw std::invalid_argument("LatticePMF: probabilities must be finite and >= 0");
      mass += p;
    }
    if (mass <= 0.0) throw std::invalid_argument("LatticePMF: zero total mass");
    if (normalize) {
      for (double& p : probs) p /= mass;
    } else if (std::fabs(mass - 1.0) > kMassTol) {
      throw std::invalid_argument("LatticePMF: probabilities sum to " + std::to_string(mass));
    }
    return trusted(std::move(probs), min_index, anchor);
  }

  static LatticePMF point_mass(double x) { return trusted({1.0}, 0, x); }

  // Builds without validation. The caller guarantees nonnegative entries with
  // unit mass up to accumulated rounding.
  static LatticePMF trusted(std::vector<double> probs, std::int64_t min_index, double anchor) {
    LatticeAnchor s = split_anchor(anchor);
    LatticePMF out;
    out.offset_ = s.offset;
    out.min_index_ = min_index + s.carry;
    out.probs_ = std::move(probs);
    detail::trim_zeros(out.probs_, out.min_index_);
    if (out.probs_.empty()) throw std::invalid_argument("LatticePMF: empty support");
    return out;
  }

  double offset() const noexcept { return offset_; }
  std::int64_t min_index() const noexcept { return min_index_; }
  std::int64_t max_index() const noexcept {
    return min_index_ + static_cast<std::int64_t>(probs_.size()) - 1;
  }
  std::size_t size() const noexcept { return probs_.size(); }
  const std::vector<double>& probs() const noexcept { return probs_; }

  double position(std::size_t k) const {
    return static_cast<double>(min_index_ + static_cast<std::int64_t>(k)) + offset_;
  }
  // Probability of the atom with lattice index `index` (0 off the support).
  double at_index(std::int64_t index) const {
    if (index < min_index_ || index > max_index()) return 0.0;
    return probs_[static_cast<std::size_t>(index - min_index_)];
  }

  double mass() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  double mean() const {
    // Accumulate relative to the first atom to keep large offsets harmless.
    double s = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) s += probs_[k] * static_cast<double>(k);
    return position(0) + s;
  }

  double variance() const {
    double mu_rel = mean() - position(0);
    double s = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      double d = static_cast<double>(k) - mu_rel;
      s += probs_[k] * d * d;
    }
    return s;
  }

  // E|X - center|^order.
  double abs_moment(double order, double center = 0.0) const {
    double s = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k)
      s += probs_[k] * std::pow(std::fabs(position(k) - center), order);
    return s;
  }

  LatticePMF shifted(double by) const {
    LatticePMF out = *this;
    LatticeAnchor s = split_anchor(offset_ + by);
    out.offset_ = s.offset;
    out.min_index_ = min_index_ + s.carry;
    return out;
  }

  LatticePMF shifted_by_index(std::int64_t steps) const {
    LatticePMF out = *this;
    out.min_index_ += steps;
    return out;
  }

  friend bool operator==(const LatticePMF&, const LatticePMF&) = default;

 private:
  double offset_;
  std::int64_t min_index_;
  std::vector<double> probs_;
};

inline bool same_lattice(double offset_a, double offset_b) {
  return offset_gap(offset_a, offset_b) <= kLatticeTol;
}
inline bool same_lattice(const LatticePMF& p, const LatticePMF& q) {
  return same_lattice(p.offset(), q.offset());
}

// Integer c such that index j of q aligns with index j + c in p's frame.
// Only meaningful when same_lattice(p, q).
inline std::int64_t alignment_carry(double offset_p, double offset_q) {
  return static_cast<std::int64_t>(std::llround(offset_q - offset_p));
}

namespace detail {

// Calls fn(p_k, q_k) over the union of both supports on p's lattice frame.
template <class Fn>
void for_each_aligned(const LatticePMF& p, const LatticePMF& q, Fn&& fn) {
  const std::int64_t c = alignment_carry(p.offset(), q.offset());
  const std::int64_t q_lo = q.min_index() + c;
  const std::int64_t q_hi = q.max_index() + c;
  const std::int64_t lo = std::min(p.min_index(), q_lo);
  const std::int64_t hi = std::max(p.max_index(), q_hi);
  for (std::int64_t i = lo; i <= hi; ++i) fn(p.at_index(i), q.at_index(i - c));
}

}  // namespace detail

// d_TV(p, q) = (1/2) sum |p_k - q_k|; exactly 1 for disjoint lattices.
inline double tv_distance(const LatticePMF& p, const LatticePMF& q) {
  if (!same_lattice(p, q)) return 1.0;
  double s = 0.0;
  detail::for_each_aligned(p, q, [&](double a, double b) { s += std::fabs(a - b); });
  return std::min(1.0, 0.5 * s);
}

// d_loc(p, q) = sup_x |P[x, x+1) - Q[x, x+1)|. On a common span-1 lattice a
// unit window holds exactly one atom of each, so this is max_k |p_k - q_k|.
inline double loc_distance(const LatticePMF& p, const LatticePMF& q) {
  if (!same_lattice(p, q))
    throw LatticeMismatchError("loc_distance: offsets " + std::to_string(p.offset()) + " and " +
                               std::to_string(q.offset()) + " differ mod 1");
  double m = 0.0;
  detail::for_each_aligned(p, q, [&](double a, double b) { m = std::max(m, std::fabs(a - b)); });
  return m;
}

inline LatticePMF convolve(const LatticePMF& p, const LatticePMF& q) {
  const auto& a = p.probs();
  const auto& b = q.probs();
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    double* dst = out.data() + i;
    for (std::size_t j = 0; j < b.size(); ++j) dst[j] += ai * b[j];
  }
  return LatticePMF::trusted(std::move(out), p.min_index() + q.min_index(),
                             p.offset() + q.offset());
}

// mu * (delta_1 - delta_0)^{*l}: the l-th backward difference over the
// support padded by l zero atoms.
inline SignedLatticeMeasure difference_measure(const LatticePMF& p, int l) {
  SignedLatticeMeasure m{p.offset(), p.min_index(), p.probs()};
  for (int step = 0; step < l; ++step) {
    std::vector<double> next(m.values.size() + 1, 0.0);
    for (std::size_t k = 0; k < next.size(); ++k) {
      double cur = k < m.values.size() ? m.values[k] : 0.0;
      double prev = k > 0 ? m.values[k - 1] : 0.0;
      next[k] = cur - prev;
    }
    m.values = std::move(next);
  }
  return m;
}

// D^l(p) for l in {1, 2}.
inline double d_functional(const LatticePMF& p, int l) {
  if (l != 1 && l != 2) throw std::invalid_argument("d_functional: l must be 1 or 2");
  return difference_measure(p, l).norm();
}

// Relative-frequency pmf from integer counts on consecutive lattice indices.
template <class Count>
LatticePMF pmf_from_counts(std::span<const Count> counts, std::int64_t min_index, double anchor) {
  long double total = 0.0L;
  for (Count c : counts) total += static_cast<long double>(c);
  if (total <= 0.0L) throw std::invalid_argument("pmf_from_counts: no samples");
  std::vector<double> probs(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    probs[k] = static_cast<double>(static_cast<long double>(counts[k]) / total);
  return LatticePMF::trusted(std::move(probs), min_index, anchor);
}

// Relative-frequency pmf of samples that must lie on Z + anchor.
inline LatticePMF empirical_pmf(std::span<const double> samples, double anchor) {
  if (samples.empty()) throw std::invalid_argument("empirical_pmf: no samples");
  std::vector<std::int64_t> idx(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    double rel = samples[s] - anchor;
    double k = std::nearbyint(rel);
    if (!std::isfinite(rel) || std::fabs(rel - k) > kSampleSnapTol) throw OffLatticeError(samples[s]);
    idx[s] = static_cast<std::int64_t>(k);
  }
  auto [lo, hi] = std::minmax_element(idx.begin(), idx.end());
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(*hi - *lo + 1), 0);
  for (std::int64_t k : idx) ++counts[static_cast<std::size_t>(k - *lo)];
  return pmf_from_counts(std::span<const std::uint64_t>(counts), *lo, anchor);
}

}  // namespace steinbin
