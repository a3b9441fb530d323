#include <cmath>
#include <vector>

#include "doctest.h"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/grid.hpp"
#include "ldmatrix/spectral.hpp"
#include "ldmatrix/tilt.hpp"

using namespace ldmatrix;

namespace {
constexpr std::uint64_t kOp = RngStream::op_label("ldmatrix.test_tilt");

SpectralProfile e3_profile(int resolution = 512) {
  const MatrixEnsemble ens = preset_e3();
  const SphereGrid grid = build_grid(ens, resolution);
  return cgf_profile(ens, grid, {1.0}).front();
}
}  // namespace

TEST_CASE("tilt: finite-law step normalizes within the residual budget") {
  const MatrixEnsemble ens = preset_e3();
  const SpectralProfile prof = e3_profile();
  const TiltedSampler sampler(ens, prof);
  CHECK(sampler.mode() == TiltMode::kExactFinite);
  RngStream stream(3, kOp, 0);
  ConeVector x = normalize(Vector::Ones(2), ens.cone, ens.norm);
  double max_residual = 0.0;
  for (int i = 0; i < 200; ++i) {
    const StepOutcome out = sampler.step(x, stream);
    max_residual = std::max(max_residual, out.residual);
    CHECK(out.weight_log == 0.0);
    CHECK(out.atom_index >= 0);
    x = out.x1;
  }
  CHECK(max_residual < 1e-3);
}

TEST_CASE("tilt: kernel residual shrinks as the grid refines") {
  const MatrixEnsemble ens = preset_e3();
  // s = 1 would be degenerate for this check: the transfer operator at s = 1
  // maps linear functions to linear functions, so e_1 is linear in the grid
  // parameter and piecewise-linear interpolation represents it exactly (the
  // residual sits at the rounding floor for every resolution).  s = 1.5 has a
  // genuinely curved eigenfunction.
  double prev = 1.0;
  for (int resolution : {256, 1024, 4096}) {
    const SphereGrid grid = build_grid(ens, resolution);
    const SpectralProfile prof = cgf_profile(ens, grid, {1.5}).front();
    const TiltedSampler sampler(ens, prof);
    RngStream stream(4, kOp, 0);
    ConeVector x = normalize(Vector::Ones(2), ens.cone, ens.norm);
    double max_residual = 0.0;
    for (int i = 0; i < 100; ++i) {
      const StepOutcome out = sampler.step(x, stream);
      max_residual = std::max(max_residual, out.residual);
      x = out.x1;
    }
    // Strict decrease until the rounding floor.
    CHECK(max_residual < std::max(prev, 1e-12));
    prev = max_residual;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("tilt: scalar lognormal tilts exactly to N(m + v s, v)") {
  const MatrixEnsemble ens = preset_lognormal(-0.5, 1.0);
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const TiltedSampler sampler(ens, prof);
  CHECK(sampler.mode() == TiltMode::kExactScalar);
  RngStream stream(5, kOp, 0);
  const ConeVector x = normalize(Vector::Ones(1), ens.cone, ens.norm);
  const int n = 100000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const StepOutcome out = sampler.step(x, stream);
    CHECK(out.residual == 0.0);
    CHECK(out.weight_log == 0.0);
    m1 += out.increment;
    m2 += out.increment * out.increment;
  }
  m1 /= n;
  m2 = m2 / n - m1 * m1;
  // Tilted mean m + v s = 0.5 (= Lambda'(1)); variance v = 1.
  CHECK(std::abs(m1 - 0.5) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m2 - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("tilt: scalar logexp tilts exactly to Exp(rate - s) - c") {
  const MatrixEnsemble ens = preset_logexp(1.0, 1.5);
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {0.5}).front();
  const TiltedSampler sampler(ens, prof);
  CHECK(sampler.mode() == TiltMode::kExactScalar);
  RngStream stream(6, kOp, 0);
  const ConeVector x = normalize(Vector::Ones(1), ens.cone, ens.norm);
  const int n = 100000;
  double m1 = 0.0;
  for (int i = 0; i < n; ++i) m1 += sampler.step(x, stream).increment;
  m1 /= n;
  // Exp(0.5) - 1.5 has mean 2 - 1.5 = 0.5; SD of the mean is 2/sqrt(n).
  CHECK(std::abs(m1 - 0.5) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("tilt: weighted steps carry the correcting log-weight") {
  MatrixEnsemble ens = preset_arch2(0.3, 0.25, false);
  // k and e_s come from the frozen quadrature while the sampler draws from
  // the true law, so E[w] - 1 carries an O(1/sqrt(quad_count)) offset; a
  // larger quadrature keeps it below the statistical allowance.
  ens.quad_count = 65536;
  const SphereGrid grid = build_grid(ens, 256);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const TiltedSampler sampler(ens, prof);
  CHECK(sampler.mode() == TiltMode::kWeighted);
  RngStream exact_stream(7, kOp, 0);
  CHECK_THROWS_AS(tilted_step(normalize(Vector::Ones(2), ens.cone, ens.norm),
                              ens, prof, exact_stream),
                  ValidationError);
  // E[w] = 1 under the base law: check the empirical mean of exp(weight_log).
  RngStream stream(7, kOp, 1);
  const ConeVector x = normalize(Vector::Ones(2), ens.cone, ens.norm);
  const int n = 20000;
  std::vector<double> logs(n);
  for (int i = 0; i < n; ++i) logs[i] = sampler.step(x, stream).weight_log;
  const LogMeanSE lm = log_domain_mean(logs);
  // 4e-3 absolute slack absorbs the residual quadrature offset of k and e_s.
  CHECK(std::abs(std::expm1(lm.log_mean)) <=
        3.0 * std::exp(lm.log_se) + 4e-3);
}

TEST_CASE("tilt: tilted_path tracks the shifted drift") {
  const MatrixEnsemble ens = preset_e3();
  const SpectralProfile prof = e3_profile();
  RngStream stream(8, kOp, 0);
  const ConeVector x0 = normalize(Vector::Ones(2), ens.cone, ens.norm);
  const int n = 20000;
  const TiltedPath path = tilted_path(x0, n, ens, prof, stream);
  REQUIRE(path.s_values.size() == static_cast<std::size_t>(n));
  REQUIRE(path.states.size() == static_cast<std::size_t>(n));
  CHECK_FALSE(path.residual_flagged);
  const double drift = path.s_values.back() / n;
  const double se = std::sqrt(prof.sigma2 / n);
  CHECK(std::abs(drift - prof.q) <= 4.0 * se);
  for (int i = 0; i < 5; ++i)
    CHECK(vec_norm(path.states[i].coords, ens.norm) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tilt: bias function solves the Poisson equation on E3") {
  const MatrixEnsemble ens = preset_e3();
  const SphereGrid grid = build_grid(ens, 512);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const BiasFunction bias = bias_function(prof, ens, grid);
  CHECK(bias.recursion_residual <= 1e-6);
  CHECK(std::abs(bias.pi_b) <= 1e-6);
  CHECK(bias.truncation_residual <= 1e-9);
  // Spot values computed independently (series at depth 16, 4096 nodes).
  const std::vector<double> u_probe = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> b_probe = {-0.3479, -0.1954, -0.0554, 0.0736,
                                       0.1932};
  for (std::size_t i = 0; i < u_probe.size(); ++i) {
    Vector x(2);
    x << u_probe[i], 1.0 - u_probe[i];
    const double b = bias.grid.interpolate(bias.values, x);
    CHECK(b == doctest::Approx(b_probe[i]).epsilon(0.02));
  }
}

TEST_CASE("tilt: scalar laws have identically zero bias") {
  const MatrixEnsemble ens = preset_two_point();
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const BiasFunction bias = bias_function(prof, ens, grid);
  REQUIRE(bias.values.size() == 1);
  CHECK(bias.values[0] == 0.0);
  // The residual is measured against the finite-difference Lambda', which
  // differs from the quadrature drift only at rounding level.
  CHECK(bias.recursion_residual <= 1e-12);
}

TEST_CASE("tilt: cumulant estimates recover the CGF derivatives quickly") {
  const MatrixEnsemble ens = preset_e3();
  const SpectralProfile prof = e3_profile();
  const CumulantEstimates est = cumulant_estimates(ens, prof, 100, 2000, 99);
  CHECK(std::abs(est.sigma2.mean - prof.sigma2) <= 3.0 * est.sigma2.se);
  CHECK(std::abs(est.m3.mean - prof.m3) <= 3.0 * est.m3.se);
  CHECK(est.sigma2.se > 0.0);
  CHECK(est.m3.se > 0.0);
}

TEST_CASE("tilt: degenerate single-atom law tilts to itself") {
  MatrixEnsemble ens;
  ens.dim = 1;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(1);
  ens.atoms[0].a = Matrix::Constant(1, 1, 2.0);
  ens.atoms[0].p = 1.0;
  ens.name = "degenerate";
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  CHECK(prof.k == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(prof.sigma2 == doctest::Approx(0.0).epsilon(1e-6));
  const TiltedSampler sampler(ens, prof);
  RngStream stream(10, kOp, 0);
  const ConeVector x = normalize(Vector::Ones(1), ens.cone, ens.norm);
  const StepOutcome out = sampler.step(x, stream);
  CHECK(out.residual <= 1e-12);
  CHECK(out.increment == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}
