#include "ldmatrix/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/stats.hpp"

namespace ldmatrix {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double wrap_angle(double th) {
  while (th < 0.0) th += kPi;
  while (th >= kPi) th -= kPi;
  return th;
}

}  // namespace

SphereGrid::Interp SphereGrid::locate(const Vector& x) const {
  Interp out;
  if (nodes.size() == 1) return out;
  if (dim == 2 && cone == Cone::kNonnegative) {
    const double denom = x(0) + x(1);
    if (!(denom > 0.0))
      throw NumericalError("grid: point outside the nonnegative quadrant");
    const double ux = x(0) / denom;
    auto it = std::upper_bound(u.begin(), u.end(), ux);
    int hi = static_cast<int>(it - u.begin());
    hi = std::clamp(hi, 1, static_cast<int>(u.size()) - 1);
    const int lo = hi - 1;
    const double span = u[hi] - u[lo];
    const double t = span > 0.0 ? std::clamp((ux - u[lo]) / span, 0.0, 1.0)
                                : 0.0;
    out.i0 = lo;
    out.i1 = hi;
    out.w0 = 1.0 - t;
    out.w1 = t;
    return out;
  }
  if (dim == 2 && cone == Cone::kInvertible) {
    const double th = wrap_angle(std::atan2(x(1), x(0)));
    const int n = static_cast<int>(nodes.size());
    const double step = kPi / n;
    const double pos = th / step;
    int lo = static_cast<int>(std::floor(pos));
    const double t = pos - lo;
    lo = ((lo % n) + n) % n;
    out.i0 = lo;
    out.i1 = (lo + 1) % n;
    out.w0 = 1.0 - t;
    out.w1 = t;
    return out;
  }
  // Nearest node (d >= 3).
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = (nodes[i] - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  out.i0 = best;
  out.i1 = best;
  out.w0 = 1.0;
  out.w1 = 0.0;
  return out;
}

double SphereGrid::interpolate(const std::vector<double>& f,
                               const Vector& x) const {
  const Interp it = locate(x);
  return it.w0 * f[it.i0] + it.w1 * f[it.i1];
}

SphereGrid build_grid(const MatrixEnsemble& ens, int resolution) {
  if (resolution < 1) throw ValidationError("grid: resolution too small");
  if (ens.dim >= 2 && resolution < 2)
    throw ValidationError("grid: resolution too small for interpolation");
  if (ens.dim >= 2 && resolution < 8)
    log_warn("grid: resolution below 8 gives a very coarse sphere grid");
  SphereGrid g;
  g.cone = ens.cone;
  g.dim = ens.dim;
  g.norm = ens.norm;
  const int d = ens.dim;
  if (d == 1) {
    Vector x = Vector::Ones(1);
    g.nodes.push_back(normalize(x, ens.cone, ens.norm).coords);
    g.weights.push_back(1.0);
    g.u.push_back(0.0);
    return g;
  }
  if (d == 2 && ens.cone == Cone::kNonnegative) {
    const int n = resolution;
    g.nodes.reserve(n);
    g.u.reserve(n);
    g.weights.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i) {
      const double ui = static_cast<double>(i) / (n - 1);
      Vector x(2);
      x << ui, 1.0 - ui;
      g.nodes.push_back(normalize(x, ens.cone, ens.norm).coords);
      g.u.push_back(ui);
    }
    g.weights.front() = 0.5 / (n - 1);
    g.weights.back() = 0.5 / (n - 1);
    for (int i = 1; i + 1 < n; ++i) g.weights[i] = 1.0 / (n - 1);
    const double wsum =
        std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
    for (auto& w : g.weights) w /= wsum;
    return g;
  }
  if (d == 2 && ens.cone == Cone::kInvertible) {
    const int n = resolution;
    g.nodes.reserve(n);
    g.u.reserve(n);
    g.weights.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i) {
      const double th = kPi * static_cast<double>(i) / n;
      Vector x(2);
      x << std::cos(th), std::sin(th);
      g.nodes.push_back(normalize(x, ens.cone, ens.norm).coords);
      g.u.push_back(th);
    }
    return g;
  }
  // d >= 3: Halton directions.
  static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                    23, 29, 31, 37, 41, 43, 47, 53};
  if (d > 16) throw ValidationError("grid: dim > 16 not supported for d>=3 grids");
  const int n = std::max(d + 1, resolution);
  g.weights.assign(n, 1.0 / n);
  g.nodes.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector x(d);
    for (int k = 0; k < d; ++k) {
      const double h = halton(static_cast<std::size_t>(i), primes[k]);
      if (ens.cone == Cone::kNonnegative) {
        x(k) = -std::log(h);
      } else {
        // Inverse-CDF-free symmetric direction: map h to (-1,1) and shape it.
        const double s = 2.0 * h - 1.0;
        x(k) = std::copysign(-std::log(1.0 - std::abs(s)), s);
      }
    }
    g.nodes.push_back(normalize(x, ens.cone, ens.norm).coords);
  }
  return g;
}

}  // namespace ldmatrix
