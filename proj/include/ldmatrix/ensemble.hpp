#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ldmatrix/rng.hpp"

namespace ldmatrix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Invariant cone the matrices act on.
//  kNonnegative: the closed nonnegative orthant; matrices have nonnegative
//    entries and map the orthant into itself.
//  kInvertible: no cone constraint; matrices are invertible and act on
//    projective space (vectors are canonicalized up to sign).
enum class Cone { kNonnegative, kInvertible };

// Norm used both for vectors and (induced) for matrices.
enum class NormKind { kOne, kTwo };

enum class LawType {
  kFinite,             // finitely many atoms with probabilities
  kScalarLognormal,    // d=1, log A ~ N(m, v)
  kScalarLogexp,       // d=1, log A ~ Exponential(rate) - shift_c
  kArch2,              // d=2, M = [[a1 e^2, a2], [e^2, 0]], e ~ N(0,1)
  kEntrywiseLognormal  // each entry iid lognormal(m, v)
};

struct Atom {
  Matrix a;
  double p = 0.0;
};

// A point on the unit sphere of the cone (norm 1, canonicalized).
struct ConeVector {
  Vector coords;
  NormKind norm = NormKind::kOne;
};

// One draw from the matrix law, optionally with a coupled shift vector.
struct Draw {
  int atom_index = -1;  // >= 0 only for finite laws
  Matrix a;
  bool has_shift = false;
  Vector b;
};

struct MatrixEnsemble {
  int dim = 1;
  Cone cone = Cone::kNonnegative;
  NormKind norm = NormKind::kOne;
  LawType law_type = LawType::kFinite;
  std::vector<Atom> atoms;                // finite laws
  std::map<std::string, double> params;  // parametric laws
  bool transpose_law = false;  // sample the transpose of the named law
  bool has_shift = false;
  Vector shift;  // constant shift vector B (affine recursions)
  // Deterministic quadrature used to represent parametric laws in spectral
  // computations; independent of any run seed so spectral quantities are a
  // pure function of the ensemble description.
  std::size_t quad_count = 4096;
  std::uint64_t quad_seed = 0;
  std::string name = "custom";
};

// Throws ValidationError when the ensemble violates its declared structure
// (probabilities must sum to 1 within 1e-9, cone/entry constraints, dims,
// parameter domains).
void validate_ensemble(const MatrixEnsemble& ens);

// Draws one matrix (and coupled shift when has_shift) from the law.
Draw sample(const MatrixEnsemble& ens, RngStream& stream);

// Frozen equal-weight quadrature atoms representing a parametric law; for
// finite laws returns the atoms themselves (with their probabilities).
// Every draw carries weight 1/size for parametric laws.
struct QuadratureSet {
  std::vector<Draw> draws;
  std::vector<double> weights;  // sums to 1
};
QuadratureSet make_quadrature(const MatrixEnsemble& ens);

double vec_norm(const Vector& v, NormKind norm);
double op_norm(const Matrix& a, NormKind norm);  // induced matrix norm

// Canonical representative of x on the projective sphere: unit norm; for the
// invertible cone the first nonzero coordinate is made positive.
ConeVector normalize(const Vector& x, Cone cone, NormKind norm);

// x' = a.x / |a.x| and the additive increment log |a.x|.  Throws
// NumericalError("degenerate action ...") when a.x = 0.
struct ActionResult {
  ConeVector x1;
  double increment;
};
ActionResult act(const Matrix& a, const ConeVector& x, Cone cone);

// iota(a) = min over unit cone vectors x of |a.x|.
//  exact for: nonnegative cone with the 1-norm (min column sum) and the
//  invertible cone with the 2-norm (smallest singular value);
//  otherwise a grid lower bound is returned with exact=false.
struct IotaResult {
  double value;
  bool exact;
};
IotaResult iota(const Matrix& a, Cone cone, NormKind norm);

// Projective distance between unit cone vectors: Hilbert metric on the
// nonnegative cone (+inf when supports differ), angle metric otherwise.
double cone_metric(const ConeVector& x, const ConeVector& y, Cone cone);

// Grid lower bound for the projective contraction coefficient
// sup d(a.x, a.y) / d(x, y) of a single matrix; pairs are taken from the
// supplied unit vectors.  Returns the bound and the maximizing pair.
struct ContractionResult {
  double coefficient;  // lower bound for the true sup
  int arg_i = -1;
  int arg_j = -1;
};
ContractionResult contraction_coefficient(const Matrix& a,
                                          const std::vector<Vector>& nodes,
                                          Cone cone, NormKind norm);

// Structural diagnosis of the ensemble: allowability, positivity,
// arithmeticity certificate for the additive increments.
enum class ArithmeticStatus { kNonArithmeticCertified, kInconclusive };

struct ConditionReport {
  bool allowable_all = false;   // every atom maps cone\{0} into cone\{0}
  bool positive_exists = false; // some product of atoms is strictly positive
  int positive_length = 0;      // shortest such product length (finite laws)
  // Some support matrix or short product has a real, algebraically simple
  // dominant eigenvalue.
  bool proximality_hint = false;
  ArithmeticStatus arithmetic = ArithmeticStatus::kInconclusive;
  // Witness for the arithmetic certificate: two strictly positive products
  // whose dominant eigenvalue logs have an irrational-looking ratio.
  double log_ratio = 0.0;
  long long best_p = 0;
  long long best_q = 1;
  double rational_distance = 0.0;  // |ratio - p/q| for the best q <= 1e6
  std::string notes;
};
ConditionReport check_conditions(const MatrixEnsemble& ens);

// The transposed ensemble (law of A^T); used by the stationary-tail theory.
MatrixEnsemble transposed(const MatrixEnsemble& ens);

// Named presets --------------------------------------------------------

// d=1, two atoms 2 and 1/2 with probabilities 0.2 / 0.8.
MatrixEnsemble preset_two_point();
// d=2 nonnegative pair: [[2,1],[1,1]] and [[0.3,0.2],[0.1,0.4]], each w.p.
// 1/2.
MatrixEnsemble preset_e3();
// Scaled-copy extension of preset_e3: each atom also appears multiplied by a
// constant (1.7x and 2.3x), probabilities 1/4 each.  Same projective chain,
// spread-out additive increments.
MatrixEnsemble preset_e4();
// d=1, log A ~ N(m, v).
MatrixEnsemble preset_lognormal(double m, double v);
// d=1, log A ~ Exponential(rate) - shift_c.
MatrixEnsemble preset_logexp(double rate, double shift_c);
// d=2 ARCH(2) volatility recursion in the form Y_t = M_t Y_{t-1} + B with
// Y_t = (sigma_{t+1}^2, X_t^2), M = [[a1 e^2, a2],[e^2, 0]] for e ~ N(0,1),
// and constant B = (a0, 0) = (1, 0); pass transpose=true for the law of M^T.
MatrixEnsemble preset_arch2(double a1, double a2, bool transpose);

}  // namespace ldmatrix
