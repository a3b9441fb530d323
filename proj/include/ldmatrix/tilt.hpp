#pragma once

#include <cstdint>
#include <vector>

#include "ldmatrix/spectral.hpp"

namespace ldmatrix {

// One step of the shifted (tilted) chain.
struct StepOutcome {
  int atom_index = -1;  // finite laws: chosen atom; -1 for parametric draws
  Matrix a;             // the chosen/sampled matrix
  ConeVector x1;        // next direction
  double increment = 0.0;   // log |a x|
  double residual = 0.0;    // |1 - sum of unnormalized tilted probabilities|
  double weight_log = 0.0;  // importance log-weight (0 under exact tilting)
};

// Sampler for the shifted measure Q_x^s.
//  kExactFinite: finite-support law, per-step probabilities
//    p_i |a_i x|^s e_s(a_i.x) / (k e_s(x)) renormalized; residual recorded.
//  kExactScalar: scalar laws with closed-form tilted distributions
//    (lognormal(m, v) tilts to lognormal(m + v s, v); log-exponential
//    Exp(rate) - c tilts to Exp(rate - s) - c); exact, weightless.
//  kWeighted: any other parametric law; samples from the base law and carries
//    the log-weight s log|ax| + log e_s(a.x) - log k - log e_s(x).
enum class TiltMode { kExactFinite, kExactScalar, kWeighted };

class TiltedSampler {
 public:
  TiltedSampler(const MatrixEnsemble& ens, const SpectralProfile& profile);
  StepOutcome step(const ConeVector& x, RngStream& stream) const;
  TiltMode mode() const { return mode_; }
  const SpectralProfile& profile() const { return *profile_; }
  const MatrixEnsemble& ensemble() const { return *ens_; }

 private:
  const MatrixEnsemble* ens_;
  const SpectralProfile* profile_;
  TiltMode mode_;
  double tilt_m_ = 0.0;     // kExactScalar lognormal: N(m + v s, v) on log A
  double tilt_sd_ = 0.0;
  double tilt_rate_ = 0.0;  // kExactScalar logexp: Exp(rate - s) - c on log A
  double tilt_c_ = 0.0;
};

// Exact tilted step for laws that admit exact tilting (finite support or the
// closed-form scalar families).  Throws NumericalError("grid too coarse...")
// when the per-step residual exceeds 0.1, and ValidationError for laws that
// require weighting.
StepOutcome tilted_step(const ConeVector& x, const MatrixEnsemble& ens,
                        const SpectralProfile& profile, RngStream& stream);

// Weighted step for parametric laws (valid for any law); never errors.
StepOutcome weighted_step(const ConeVector& x, const MatrixEnsemble& ens,
                          const SpectralProfile& profile, RngStream& stream);

struct TiltedPath {
  ConeVector x0;
  std::vector<int> atom_indices;       // -1 entries for parametric draws
  std::vector<ConeVector> states;      // X_1 .. X_n
  std::vector<double> s_values;        // S_1 .. S_n (S_0 = 0)
  std::vector<double> norm_residuals;  // per-step kernel residuals
  double weight_log = 0.0;
  bool residual_flagged = false;  // some step residual above the bound
};

// n tilted (or weighted, by law type) steps from x0.  residual_bound flags
// paths whose per-step kernel residual exceeds it.
TiltedPath tilted_path(const ConeVector& x0, int n, const MatrixEnsemble& ens,
                       const SpectralProfile& profile, RngStream& stream,
                       double residual_bound = 1e-3);

// pi^s-centered Neumann-series solution of the Poisson equation
// b = h + Q^s b, with h(x) = E_{Q_x^s}[S_1] - q.
struct BiasFunction {
  std::vector<double> values;  // on grid nodes
  int series_depth = 0;
  double truncation_residual = 0.0;  // sup-norm of the last added term
  double recursion_residual = 0.0;   // sup |b - h - Q b| on the grid
  double pi_b = 0.0;                 // pi^s(b), forced ~0 by centering
  double drift_discrete = 0.0;       // pi-averaged one-step drift on the grid
  SphereGrid grid;
};
BiasFunction bias_function(const SpectralProfile& profile,
                           const MatrixEnsemble& ens, const SphereGrid& grid,
                           int depth = 10000);

// Monte Carlo (1/n)-scaled central moments of S_n under Q^s, with starts
// drawn from pi^s; standard errors from 50 path batches.
struct CumulantEstimates {
  MeanSE sigma2;
  MeanSE m3;
};
CumulantEstimates cumulant_estimates(const MatrixEnsemble& ens,
                                     const SpectralProfile& profile, int n,
                                     std::size_t paths, std::uint64_t seed);

}  // namespace ldmatrix
