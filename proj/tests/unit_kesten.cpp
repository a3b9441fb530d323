#include <cmath>
#include <vector>

#include "doctest.h"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/kesten.hpp"

using namespace ldmatrix;

namespace {
constexpr std::uint64_t kOp = RngStream::op_label("ldmatrix.test_kesten");

// Deterministic scalar recursion R = c R + 1 with a single atom c.
RdeModel constant_model(double c) {
  RdeModel model;
  MatrixEnsemble ens;
  ens.dim = 1;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(1);
  ens.atoms[0].a = Matrix::Constant(1, 1, c);
  ens.atoms[0].p = 1.0;
  ens.has_shift = true;
  ens.shift = Vector::Ones(1);
  ens.name = "constant";
  model.ensemble = ens;
  model.grid_resolution = 1;
  return model;
}
}  // namespace

TEST_CASE("kesten: deterministic fixed point R = 1 / (1 - c)") {
  const RdeModel model = constant_model(0.5);
  RngStream stream(1, kOp, 0);
  const RdeDraw draw = rde_sample(model, 400, 1e-12, stream);
  CHECK(draw.converged);
  CHECK(draw.r[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(draw.depth_used < 60);
}

TEST_CASE("kesten: non-contracting recursion raises a diagnostic") {
  const RdeModel model = constant_model(1.5);
  RngStream stream(2, kOp, 0);
  CHECK_THROWS_WITH_AS(rde_sample(model, 50, 1e-12, stream),
                       doctest::Contains("norm trace"), NumericalError);
}

TEST_CASE("kesten: moment bound is tight for the deterministic recursion") {
  const RdeModel model = constant_model(0.5);
  const std::vector<MomentBoundRow> rows =
      moment_bound_scan(model, {1.0}, 1000, 3, 400, 1e-12);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].k_s == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rows[0].finite);
  CHECK(rows[0].bound_applicable);
  // sum_n (0.5)^n * E|B| = 2: the bound collapses to the exact value.
  CHECK(rows[0].bound == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rows[0].empirical == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rows[0].stable);
}

TEST_CASE("kesten: moment rows below s = 1 report empirical values only") {
  const RdeModel model = constant_model(0.5);
  const std::vector<MomentBoundRow> rows =
      moment_bound_scan(model, {0.5, 2.0}, 1000, 4, 400, 1e-12);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].bound_applicable);  // s = 0.5 < 1
  CHECK_FALSE(rows[0].finite);
  CHECK(std::isinf(rows[0].bound));
  CHECK(rows[0].empirical == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(rows[1].bound_applicable);  // s = 2, k(2) = 0.25 < 1
  CHECK(rows[1].finite);
}

TEST_CASE("kesten: condition witness for the all-ones lattice matrix") {
  // M identically [[1,1],[1,1]]: min row sum 2, lhs 2^s >= rhs 2^{s/2}.
  RdeModel model;
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(1);
  ens.atoms[0].a = Matrix::Ones(2, 2);
  ens.atoms[0].p = 1.0;
  ens.has_shift = true;
  ens.shift = Vector::Ones(2);
  model.ensemble = ens;
  const KestenCondition cond = kesten_condition(model, {0.5, 1.0, 2.0});
  CHECK(cond.satisfied);
  CHECK(cond.s0 == doctest::Approx(0.5));
  for (std::size_t i = 0; i < cond.s_grid.size(); ++i) {
    CHECK(cond.lhs[i] ==
          doctest::Approx(std::pow(2.0, cond.s_grid[i])).epsilon(1e-12));
    CHECK(cond.rhs[i] ==
          doctest::Approx(std::pow(2.0, 0.5 * cond.s_grid[i])).epsilon(1e-12));
  }
}

TEST_CASE("kesten: condition correctly fails for a shrinking matrix") {
  RdeModel model;
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(1);
  ens.atoms[0].a = 0.1 * Matrix::Ones(2, 2);
  ens.atoms[0].p = 1.0;
  ens.has_shift = true;
  ens.shift = Vector::Ones(2);
  model.ensemble = ens;
  const KestenCondition cond = kesten_condition(model, {0.5, 1.0, 2.0, 4.0});
  CHECK_FALSE(cond.satisfied);  // 0.2^s < 2^{s/2} for every s > 0
}

TEST_CASE("kesten: scalar lognormal model draws are reproducible and "
          "positive") {
  const RdeModel model = lognormal_model(-0.5, 1.0);
  RngStream a(7, kOp, 9);
  RngStream b(7, kOp, 9);
  const RdeDraw da = rde_sample(model, 400, 1e-12, a);
  const RdeDraw db = rde_sample(model, 400, 1e-12, b);
  CHECK(da.r[0] == db.r[0]);
  CHECK(da.depth_used == db.depth_used);
  CHECK(da.r[0] > 0.0);
  CHECK(da.converged);
}

TEST_CASE("kesten: tail_report rejects directions that miss the support") {
  const RdeModel model = lognormal_model(-0.5, 1.0);
  Vector x(1);
  x << -1.0;  // R > 0 a.s., so projections on -e1 are all negative
  CHECK_THROWS_WITH_AS(tail_report(model, x, 100000, 5, 200, 1e-10),
                       doctest::Contains("insufficient tail data"),
                       NumericalError);
}

TEST_CASE("kesten: arch2 preset wiring") {
  const RdeModel model = arch2_preset(0.3, 0.25);
  CHECK(model.ensemble.dim == 2);
  CHECK(model.ensemble.has_shift);
  CHECK(model.ensemble.shift[0] == doctest::Approx(1.0));
  CHECK(model.ensemble.shift[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(arch2_preset(0.0, 0.25), ValidationError);
  CHECK_THROWS_AS(arch2_preset(0.7, 0.3), ValidationError);
}
