#include "ldmatrix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldmatrix/errors.hpp"

namespace ldmatrix {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.39894228040143267793994605993438;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

double normal_sf(double x) {
  return 0.5 * std::erfc(x * 0.70710678118654752440084436210485);
}

MeanSE jackknife_mean(const std::vector<double>& values) {
  MeanSE out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  out.mean = mean;
  if (values.size() < 2) return out;
  // Delete-one means: m_i = (sum - x_i) / (n-1).  Jackknife variance of the
  // mean is (n-1)/n * sum_i (m_i - mbar)^2 with mbar the average of m_i
  // (equal to the full mean).
  double ss = 0.0;
  for (double v : values) {
    const double mi = (sum - v) / (n - 1.0);
    ss += (mi - mean) * (mi - mean);
  }
  out.se = std::sqrt(ss * (n - 1.0) / n);
  return out;
}

double log_sum_exp(const std::vector<double>& x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

LogMeanSE log_domain_mean(const std::vector<double>& logs) {
  LogMeanSE out{-std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  if (logs.empty()) return out;
  const double n = static_cast<double>(logs.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logs) m = std::max(m, v);
  if (!std::isfinite(m)) {
    // All contributions are zero.
    return out;
  }
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : logs) {
    const double e = std::exp(v - m);
    s1 += e;
    s2 += e * e;
  }
  out.log_mean = m + std::log(s1 / n);
  if (logs.size() >= 2) {
    // Var = (s2 - s1^2/n) / (n-1), all in units of exp(m)^2.
    const double var = std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0));
    if (var > 0.0) out.log_se = m + 0.5 * std::log(var / n);
  }
  return out;
}

double clopper_pearson_zero_upper(std::size_t n, double confidence) {
  if (n == 0) return 1.0;
  // Upper bound p_u solves (1-p_u)^n = 1 - confidence.
  return 1.0 - std::pow(1.0 - confidence, 1.0 / static_cast<double>(n));
}

double dkw_epsilon(std::size_t n, double delta) {
  if (n == 0) throw ValidationError("dkw_epsilon: n must be positive");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double kolmogorov_sf(double lam) {
  if (lam <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw ValidationError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  return {d, kolmogorov_sf(lam)};
}

double halton(std::size_t index, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  std::size_t i = index + 1;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

BestRational best_rational(double x, long long max_den) {
  if (max_den < 1) throw ValidationError("best_rational: max_den < 1");
  const double sign = x < 0 ? -1.0 : 1.0;
  double y = std::abs(x);
  // Continued fraction convergents p/q, tracking the previous pair so that
  // semiconvergents can be formed when the denominator cap is hit.
  long long p0 = 0, q0 = 1;  // previous convergent
  long long p1 = 1, q1 = 0;  // current convergent seed
  double frac = y;
  BestRational best{0, 1, std::abs(x)};
  auto consider = [&](long long p, long long q) {
    if (q < 1 || q > max_den) return;
    const double err = std::abs(y - static_cast<double>(p) / q);
    if (err < best.err) best = {p, q, err};
  };
  consider(static_cast<long long>(std::floor(y)), 1);
  consider(static_cast<long long>(std::ceil(y)), 1);
  for (int it = 0; it < 64; ++it) {
    const double af = std::floor(frac);
    if (af > 9e17) break;
    const long long a = static_cast<long long>(af);
    // Next convergent p2/q2 = a * (p1,q1) + (p0,q0).
    if (q1 != 0 && a > (std::numeric_limits<long long>::max() - q0) / q1) break;
    const long long p2 = a * p1 + p0;
    const long long q2 = a * q1 + q0;
    if (q2 > max_den && q1 > 0) {
      // Best semiconvergent within the cap: k * (p1,q1) + (p0,q0).
      const long long k = (max_den - q0) / q1;
      if (k >= 1) consider(k * p1 + p0, k * q1 + q0);
      break;
    }
    consider(p2, q2);
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double rem = frac - af;
    if (rem < 1e-18) break;
    frac = 1.0 / rem;
  }
  best.p *= static_cast<long long>(sign);
  best.err = std::abs(x - static_cast<double>(best.p) / best.q);
  return best;
}

}  // namespace ldmatrix
