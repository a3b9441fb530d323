#pragma once

#include <cstdint>
#include <vector>

#include "ldmatrix/spectral.hpp"

namespace ldmatrix {

// Stochastic recurrence model R =_d M R + B.  `ensemble` is the joint law of
// (M, B); spectral quantities (alpha, e_alpha) are computed for the law of
// A := M^T per the stationary-tail convention.
struct RdeModel {
  MatrixEnsemble ensemble;
  // Bracket used when solving k(alpha) = 1 on the transposed law.
  double alpha_lo = 0.05;
  double alpha_hi = 10.0;
  int grid_resolution = 512;
};

// ARCH(2) preset: M = [[a1 e^2, a2],[e^2, 0]], B = (1, 0); requires
// a1, a2 > 0 and a1 + a2 < 1.
RdeModel arch2_preset(double a1, double a2);

// Scalar model M lognormal (log M ~ N(m, v)), B = 1.
RdeModel lognormal_model(double m, double v);

// One stationary draw via the truncated backward series
// R = sum_{k>=1} M_1...M_{k-1} B_k.
struct RdeDraw {
  Vector r;
  int depth_used = 0;
  bool converged = false;      // running product norm fell below tol * |sum|
  double final_norm = 0.0;     // ||M_1...M_depth|| at truncation
};
RdeDraw rde_sample(const RdeModel& model, int depth, double tol,
                   RngStream& stream);

struct KestenCondition {
  bool satisfied = false;
  double s0 = 0.0;  // first grid s with E[(min row sum M)^s] >= d^{s/2}
  std::vector<double> s_grid;
  std::vector<double> lhs;  // E[(min row sum)^s]
  std::vector<double> rhs;  // d^{s/2}
};
KestenCondition kesten_condition(const RdeModel& model,
                                 const std::vector<double>& s_grid);

struct MomentBoundRow {
  double s = 0.0;
  double k_s = 0.0;
  bool finite = false;      // k(s) < 1, series bound applies (s >= 1 only)
  double bound = 0.0;       // upper bound on (E|R|^s)^{1/s}; inf when !finite
  bool bound_applicable = false;  // s >= 1
  double empirical = 0.0;         // MC E|R|^s at the sample budget
  double empirical_half = 0.0;    // same at half the budget
  bool stable = false;            // doubling stability of the empirical value
};
std::vector<MomentBoundRow> moment_bound_scan(const RdeModel& model,
                                              const std::vector<double>& s_grid,
                                              std::size_t samples = 20000,
                                              std::uint64_t seed = 0,
                                              int depth = 400,
                                              double tol = 1e-12);

struct TailReport {
  Vector x;  // direction
  std::size_t samples = 0;
  std::size_t positives = 0;
  std::vector<double> t_grid;
  std::vector<double> ccdf;
  std::vector<double> t_alpha_ccdf;  // t^alpha_hat * ccdf
  std::vector<double> hill_k;        // top-k values used by the trace
  std::vector<double> hill_alpha;    // Hill alpha(k)
  double alpha_hat = 0.0;
  double ci_lo = 0.0;  // bootstrap 95% percentile interval
  double ci_hi = 0.0;
  double alpha_theory = 0.0;  // k(alpha) = 1 on the transposed law
  double e_alpha_at_x = 0.0;
  int window_lo = 0;  // trace indices of the chosen plateau window
  int window_hi = 0;
  double mean_depth = 0.0;  // truncation diagnostics
  int max_depth = 0;
};
TailReport tail_report(const RdeModel& model, const Vector& x,
                       std::size_t samples, std::uint64_t seed,
                       int depth = 400, double tol = 1e-12);

}  // namespace ldmatrix
