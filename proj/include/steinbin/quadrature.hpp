#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace steinbin::quad {

template <std::size_t N>
struct GaussLegendreRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_N.
template <std::size_t N>
GaussLegendreRule<N> make_gauss_legendre() {
  GaussLegendreRule<N> rule;
  const std::size_t half = (N + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (N + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= N; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = N * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[N - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[N - 1 - i] = w;
  }
  return rule;
}

template <std::size_t N>
const GaussLegendreRule<N>& gauss_legendre() {
  static const GaussLegendreRule<N> rule = make_gauss_legendre<N>();
  return rule;
}

// Integral of f over [lo, hi] with one N-point panel.
template <std::size_t N = 64, class F>
double integrate(F&& f, double lo, double hi) {
  const auto& rule = gauss_legendre<N>();
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s += rule.weights[k] * f(mid + half * rule.nodes[k]);
  return s * half;
}

// Composite rule over `panels` equal panels.
template <std::size_t N = 64, class F>
double integrate_panels(F&& f, double lo, double hi, int panels) {
  double s = 0.0, h = (hi - lo) / panels;
  for (int i = 0; i < panels; ++i) s += integrate<N>(f, lo + i * h, lo + (i + 1) * h);
  return s;
}

}  // namespace steinbin::quad
