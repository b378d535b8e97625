#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "alphanoise/errors.hpp"

namespace alphanoise::quad {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

/// One Gauss-Kronrod 15 panel on [a, b]; error is |K15 - G7|.
template <class F>
Estimate gauss_kronrod15(const F& f, double a, double b) {
  using namespace detail;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

struct Tolerance {
  double absolute = 1e-13;
  double relative = 1e-9;
  int max_subdivisions = 2000;
};

/// Globally adaptive GK15 on [a, b], seeded with the given initial panel edges.
///
/// The panel with the largest error estimate is bisected until the summed error
/// falls below max(absolute, relative * |value|). Throws NumericError carrying the
/// attained error estimate when the subdivision budget runs out.
template <class F>
Estimate integrate(const F& f, const std::vector<double>& edges, Tolerance tol = {}) {
  struct Panel {
    double a, b;
    Estimate est;
    bool operator<(const Panel& other) const { return est.error < other.est.error; }
  };
  std::priority_queue<Panel> heap;
  Estimate total;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    Panel p{edges[i], edges[i + 1], gauss_kronrod15(f, edges[i], edges[i + 1])};
    total.value += p.est.value;
    total.error += p.est.error;
    heap.push(p);
  }
  int splits = 0;
  while (!heap.empty() && total.error > std::max(tol.absolute, tol.relative * std::abs(total.value))) {
    if (splits++ >= tol.max_subdivisions) {
      throw NumericError("adaptive quadrature did not converge", total.error);
    }
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left{worst.a, mid, gauss_kronrod15(f, worst.a, mid)};
    const Panel right{mid, worst.b, gauss_kronrod15(f, mid, worst.b)};
    total.value += left.est.value + right.est.value - worst.est.value;
    total.error += left.est.error + right.est.error - worst.est.error;
    heap.push(left);
    heap.push(right);
  }
  if (!std::isfinite(total.value)) throw NumericError("quadrature produced a non-finite value", total.error);
  return total;
}

template <class F>
Estimate integrate(const F& f, double a, double b, Tolerance tol = {}) {
  return integrate(f, std::vector<double>{a, b}, tol);
}

}  // namespace alphanoise::quad
