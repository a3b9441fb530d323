#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ldmatrix/grid.hpp"
#include "ldmatrix/stats.hpp"

namespace ldmatrix {

// Dominant eigendata of the discretized transfer operator
// P_s f(x) = E |A x|^s f(A.x) at one tilt parameter s, with the cumulant
// derivatives filled in by cgf_profile.
struct SpectralProfile {
  double s = 0.0;
  double k = 0.0;      // dominant eigenvalue
  double log_k = 0.0;  // Lambda(s)
  std::vector<double> e_s;   // eigenfunction on nodes, sup-normalized to 1
  std::vector<double> nu_s;  // adjoint eigen-weights, probability vector
  std::vector<double> pi_s;  // e_s * nu_s / nu_s(e_s)
  double eigen_residual = 0.0;  // sup |P_s e_s - k e_s| over nodes
  // Cumulant derivatives of Lambda at s (NaN until cgf_profile fills them).
  double q = std::numeric_limits<double>::quiet_NaN();       // Lambda'
  double sigma2 = std::numeric_limits<double>::quiet_NaN();  // Lambda''
  double m3 = std::numeric_limits<double>::quiet_NaN();      // Lambda'''
  double fd_step = std::numeric_limits<double>::quiet_NaN();
  SphereGrid grid;
};

struct RateFunctionPoint {
  double q = 0.0;
  double s = 0.0;
  double lambda_star = 0.0;
};

// One application of the discretized transfer operator to nodal values f.
// transpose=true applies the operator of the transposed matrix law.
std::vector<double> apply_transfer(const MatrixEnsemble& ens, double s,
                                   const SphereGrid& grid,
                                   const std::vector<double>& f,
                                   bool transpose = false);

// Power iteration for (k, e_s) plus adjoint iteration for nu_s.
// Throws NumericalError (carrying the last residual) if the sup-ratio has not
// stabilized to within tol after max_iter iterations.
SpectralProfile dominant_pair(const MatrixEnsemble& ens, double s,
                              const SphereGrid& grid, int max_iter = 100000,
                              double tol = 1e-13);

// Lambda(s) = log k(s).  Uses the exact Mellin transform for the scalar
// parametric laws that have one; otherwise log of the dominant eigenvalue.
double log_mellin(const MatrixEnsemble& ens, double s, const SphereGrid& grid,
                  int max_iter = 100000, double tol = 1e-13);

// Exact E ||A_n ... A_1||^s for finite-support laws by full enumeration.
// Throws NumericalError when |support|^n exceeds 1e7 terms.
double enum_moment(const MatrixEnsemble& ens, double s, int n);

// Monte Carlo estimate of E ||A_n ... A_1||^s with jackknife standard error;
// log-domain accumulation guards overflow.  Deterministic given seed,
// identical for any worker-thread count.
MeanSE mc_moment(const MatrixEnsemble& ens, double s, int n,
                 std::size_t paths, std::uint64_t seed);

// Profiles with Lambda', Lambda'', Lambda''' filled by five-point central
// differences at step fd_step (with a Richardson consistency check at
// fd_step/2, logged when it disagrees).
std::vector<SpectralProfile> cgf_profile(const MatrixEnsemble& ens,
                                         const SphereGrid& grid,
                                         const std::vector<double>& s_values,
                                         double fd_step = 1e-3);

// Root of Lambda(alpha) = 0 with alpha > 0, by bisection on [s_lo, s_hi].
// Requires Lambda(0) = 0, Lambda'(0) < 0 and Lambda(s_hi) > 0; throws
// NumericalError("NoRootInBracket ...") otherwise.
double solve_alpha(const MatrixEnsemble& ens, const SphereGrid& grid,
                   double s_lo, double s_hi);

// Solves Lambda'(s) = q and returns (q, s, lambda_star = s q - Lambda(s)).
// Throws NumericalError("DriftUnattainable ...") when q is outside the range
// of Lambda' over [s_lo, s_hi].
RateFunctionPoint rate_function(const MatrixEnsemble& ens,
                                const SphereGrid& grid, double q,
                                double s_lo = 0.0, double s_hi = 40.0);

// Monte Carlo top Lyapunov exponent: mean of (1/n) log ||Pi_n|| over paths.
MeanSE lyapunov(const MatrixEnsemble& ens, int n, std::size_t paths,
                std::uint64_t seed);

}  // namespace ldmatrix
