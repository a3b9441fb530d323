#pragma once

#include <cstdint>
#include <vector>

#include "ldmatrix/tilt.hpp"

namespace ldmatrix {

// Naive Monte Carlo estimate of P_x(S_n >= n q).
struct NaiveTail {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t hits = 0;
  std::size_t paths = 0;
  // One-sided 95% Clopper-Pearson upper bound, reported when hits == 0.
  double zero_hit_upper = 0.0;
};
NaiveTail naive_tail(const ConeVector& x0, const MatrixEnsemble& ens, int n,
                     double q, std::size_t paths, std::uint64_t seed);

// Tilted estimates through the fundamental identity
//   E_x[e_s(X_n) 1{S_n >= nq}] = e_s(x) k^n E_{Q_x^s}[w e^{-s S_n} 1{...}]
//   P_x(S_n >= nq)            = same with an extra 1/e_s(X_n) inside.
struct LdpEstimate {
  ConeVector x0;
  int n = 0;
  double q = 0.0;
  double s = 0.0;
  bool has_naive = false;
  double naive = 0.0;
  double naive_se = 0.0;
  double tilted = 0.0;  // estimate of E[e_s(X_n) 1{S_n >= nq}]
  double tilted_se = 0.0;
  double tilted_prob = 0.0;  // estimate of P_x(S_n >= nq)
  double tilted_prob_se = 0.0;
  double log_tilted = 0.0;  // log-domain copies (robust at extreme n)
  double log_tilted_prob = 0.0;
  double prediction = 0.0;  // Bahadur-Rao value for the tilted expectation
  double log_prediction = 0.0;
  double ratio = 0.0;  // tilted / prediction
  std::size_t hits = 0;
  std::size_t paths = 0;
  double ess_fraction = 1.0;  // effective sample size / paths
  bool ess_warning = false;   // ESS below 1% of paths
  double max_step_residual = 0.0;
};
LdpEstimate tilted_tail(const ConeVector& x0, const MatrixEnsemble& ens,
                        const SpectralProfile& profile, int n, double q,
                        std::size_t paths, std::uint64_t seed);

// Bahadur-Rao prediction e_s(x0) e^{-n Lambda*(q)} / (s sigma sqrt(2 pi n))
// for E[e_s(X_n) 1{S_n >= nq}]; requires s > 0 and sigma2 > 0 in the profile.
double br_prediction(const ConeVector& x0, const SpectralProfile& profile,
                     int n, double q);

// Edgeworth comparison: empirical CDF of (S_n - n q)/(sigma sqrt n) under
// Q_x^s against G_n(u) = Phi(u) + (m3/(6 sigma^3 sqrt n))(1-u^2) phi(u)
//                      - (b(x0)/(sigma sqrt n)) phi(u).
struct EdgeworthReport {
  ConeVector x0;
  int n = 0;
  std::vector<double> u;
  std::vector<double> f_hat;
  std::vector<double> g_n;
  double sup_gap = 0.0;
  double scaled_gap = 0.0;  // sqrt(n) * sup_gap
  std::size_t paths = 0;
};
EdgeworthReport edgeworth_curve(const ConeVector& x0,
                                const MatrixEnsemble& ens,
                                const SpectralProfile& profile,
                                const BiasFunction& bias, int n,
                                std::size_t paths,
                                const std::vector<double>& u_grid,
                                std::uint64_t seed);

// Default Edgeworth u-grid: 201 points on [-4, 4].
std::vector<double> default_u_grid();

// Evaluates G_n(u) directly (exposed for limit checks and plotting).
double edgeworth_g(double u, double sigma2, double m3, double bias_at_x0,
                   int n);

}  // namespace ldmatrix
