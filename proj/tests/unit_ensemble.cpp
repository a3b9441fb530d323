#include <cmath>

#include "doctest.h"
#include "ldmatrix/ensemble.hpp"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/rng.hpp"

using namespace ldmatrix;

namespace {
constexpr std::uint64_t kOp = RngStream::op_label("ldmatrix.test_ensemble");

MatrixEnsemble identity_ensemble() {
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(1);
  ens.atoms[0].a = Matrix::Identity(2, 2);
  ens.atoms[0].p = 1.0;
  ens.name = "identity";
  return ens;
}
}  // namespace

TEST_CASE("ensemble: validation rejects malformed laws") {
  MatrixEnsemble ens = preset_e3();
  ens.atoms[0].p = 0.7;  // probabilities now sum to 1.2
  CHECK_THROWS_AS(validate_ensemble(ens), ValidationError);
  CHECK_THROWS_AS(preset_arch2(0.8, 0.3, false), ValidationError);
  CHECK_THROWS_AS(preset_arch2(0.3, 0.0, false), ValidationError);
}

TEST_CASE("ensemble: two-point sampling matches the declared weights") {
  MatrixEnsemble ens = preset_two_point();
  RngStream stream(11, kOp, 0);
  int hi = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Draw d = sample(ens, stream);
    if (d.a(0, 0) > 1.0) ++hi;
    else CHECK(d.a(0, 0) == doctest::Approx(0.5));
  }
  const double p_hat = static_cast<double>(hi) / n;
  CHECK(std::abs(p_hat - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / n));
}

TEST_CASE("ensemble: act returns unit direction and log-norm increment") {
  MatrixEnsemble ens = preset_e3();
  const ConeVector e1 = normalize(Vector::Unit(2, 0), ens.cone, ens.norm);
  const ActionResult r = act(ens.atoms[0].a, e1, ens.cone);
  // [[2,1],[1,1]] e1 = (2,1): 1-norm 3.
  CHECK(r.increment == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(vec_norm(r.x1.coords, ens.norm) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.x1.coords[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ensemble: act rejects a zero image") {
  const Matrix z = Matrix::Zero(2, 2);
  const ConeVector e1 =
      normalize(Vector::Unit(2, 0), Cone::kNonnegative, NormKind::kOne);
  CHECK_THROWS_AS(act(z, e1, Cone::kNonnegative), NumericalError);
}

TEST_CASE("ensemble: induced norms and iota closed forms") {
  Matrix a(2, 2);
  a << 2.0, 1.0, 1.0, 1.0;
  CHECK(op_norm(a, NormKind::kOne) == doctest::Approx(3.0));  // max col sum
  const IotaResult io = iota(a, Cone::kNonnegative, NormKind::kOne);
  CHECK(io.exact);
  CHECK(io.value == doctest::Approx(2.0));  // min col sum
  // Invertible cone with the 2-norm: smallest singular value of a rotation
  // is 1.
  Matrix rot(2, 2);
  const double th = 0.3;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const IotaResult io2 = iota(rot, Cone::kInvertible, NormKind::kTwo);
  CHECK(io2.exact);
  CHECK(io2.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ensemble: Hilbert metric and contraction bound") {
  const Cone cone = Cone::kNonnegative;
  const NormKind norm = NormKind::kOne;
  const ConeVector x = normalize(Vector::Ones(2), cone, norm);
  CHECK(cone_metric(x, x, cone) == doctest::Approx(0.0));
  Vector y_raw(2);
  y_raw << 3.0, 1.0;
  const ConeVector y = normalize(y_raw, cone, norm);
  // Hilbert distance between (1,1) and (3,1) directions: log 3.
  CHECK(cone_metric(x, y, cone) == doctest::Approx(std::log(3.0)));
  // A strictly positive matrix contracts the metric: coefficient < 1.
  Matrix a(2, 2);
  a << 2.0, 1.0, 1.0, 1.0;
  const ContractionResult c = contraction_coefficient(
      a, std::vector<Vector>{x.coords, y.coords}, cone, norm);
  CHECK(c.coefficient < 1.0);
  CHECK(c.coefficient > 0.0);
}

TEST_CASE("ensemble: condition report on E3 certifies the good case") {
  const ConditionReport rep = check_conditions(preset_e3());
  CHECK(rep.allowable_all);
  CHECK(rep.positive_exists);
  CHECK(rep.positive_length == 1);  // both atoms strictly positive
  CHECK(rep.proximality_hint);
  CHECK(rep.arithmetic == ArithmeticStatus::kNonArithmeticCertified);
  CHECK(rep.rational_distance > 1e-13);
}

TEST_CASE("ensemble: condition report stays honest on lattice laws") {
  // Scalar two-point law {2, 1/2}: log-ratio -1 is rational -> Inconclusive.
  const ConditionReport two = check_conditions(preset_two_point());
  CHECK(two.arithmetic == ArithmeticStatus::kInconclusive);
  // Identity-only law: no positivity, no usable spectral-radius ratios.
  const ConditionReport id = check_conditions(identity_ensemble());
  CHECK(id.allowable_all);
  CHECK_FALSE(id.positive_exists);
  CHECK(id.arithmetic == ArithmeticStatus::kInconclusive);
}

TEST_CASE("ensemble: allowability requires a positive entry in every row "
          "and column") {
  MatrixEnsemble ens = identity_ensemble();
  ens.atoms[0].a << 1.0, 1.0, 0.0, 0.0;  // zero row, columns both nonzero
  const ConditionReport rep = check_conditions(ens);
  CHECK_FALSE(rep.allowable_all);
}

TEST_CASE("ensemble: parametric laws are certified analytically") {
  const ConditionReport rep = check_conditions(preset_lognormal(-0.5, 1.0));
  CHECK(rep.allowable_all);
  CHECK(rep.arithmetic == ArithmeticStatus::kNonArithmeticCertified);
}

TEST_CASE("ensemble: transposition is an involution on finite laws") {
  const MatrixEnsemble ens = preset_e3();
  const MatrixEnsemble tt = transposed(transposed(ens));
  for (std::size_t i = 0; i < ens.atoms.size(); ++i) {
    CHECK((tt.atoms[i].a - ens.atoms[i].a).cwiseAbs().maxCoeff() == 0.0);
  }
  const MatrixEnsemble t = transposed(ens);
  CHECK(t.atoms[0].a(0, 1) == doctest::Approx(ens.atoms[0].a(1, 0)));
}

TEST_CASE("ensemble: arch2 matrices carry the squared innovation") {
  MatrixEnsemble ens = preset_arch2(0.3, 0.25, false);
  RngStream stream(5, kOp, 3);
  const Draw d = sample(ens, stream);
  // M = [[a1 e^2, a2], [e^2, 0]]: recover e^2 from both entries.
  CHECK(d.a(0, 0) == doctest::Approx(0.3 * d.a(1, 0)).epsilon(1e-12));
  CHECK(d.a(0, 1) == doctest::Approx(0.25));
  CHECK(d.a(1, 1) == 0.0);
  CHECK(d.a(1, 0) >= 0.0);
}

TEST_CASE("ensemble: quadrature of finite laws is the exact atom set") {
  const MatrixEnsemble ens = preset_e3();
  const QuadratureSet q = make_quadrature(ens);
  REQUIRE(q.draws.size() == 2);
  CHECK(q.weights[0] == doctest::Approx(0.5));
  CHECK(q.weights[1] == doctest::Approx(0.5));
}

TEST_CASE("ensemble: parametric quadrature is frozen by quad_seed") {
  MatrixEnsemble ens = preset_lognormal(-0.5, 1.0);
  ens.quad_count = 64;
  const QuadratureSet a = make_quadrature(ens);
  const QuadratureSet b = make_quadrature(ens);
  REQUIRE(a.draws.size() == 64);
  for (std::size_t i = 0; i < 64; ++i)
    CHECK(a.draws[i].a(0, 0) == b.draws[i].a(0, 0));
  ens.quad_seed = 1;
  const QuadratureSet c = make_quadrature(ens);
  CHECK(a.draws[0].a(0, 0) != c.draws[0].a(0, 0));
}
