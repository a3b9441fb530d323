#include <cmath>
#include <vector>

#include "doctest.h"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/grid.hpp"
#include "ldmatrix/ldp.hpp"
#include "ldmatrix/stats.hpp"

using namespace ldmatrix;

namespace {

// Exact P(S_n >= n q) for the two-point law: S_n = (n - 2 B) log 2 with
// B ~ Binomial(n, 0.8) counting the 1/2-draws.
double two_point_exact_tail(int n, double q) {
  double total = 0.0;
  for (int b = 0; b <= n; ++b) {
    const double s = (n - 2.0 * b) * std::log(2.0);
    if (s >= n * q) {
      double log_term = std::lgamma(n + 1.0) - std::lgamma(b + 1.0) -
                        std::lgamma(n - b + 1.0) + b * std::log(0.8) +
                        (n - b) * std::log(0.2);
      total += std::exp(log_term);
    }
  }
  return total;
}

struct TwoPointFixture {
  MatrixEnsemble ens = preset_two_point();
  SphereGrid grid;
  TwoPointFixture() { grid = build_grid(ens, 1); }
  SpectralProfile profile_for_q(double q) {
    const RateFunctionPoint pt = rate_function(ens, grid, q);
    return cgf_profile(ens, grid, {pt.s}).front();
  }
  ConeVector x0() { return normalize(Vector::Ones(1), ens.cone, ens.norm); }
};

}  // namespace

TEST_CASE("ldp: tilted tail matches the exact binomial oracle at n = 10") {
  TwoPointFixture fx;
  const int n = 10;
  // Midpoint threshold between the lattice values for B = 3 and B = 4.
  const double q = (n - 2.0 * 3 - 1.0) * std::log(2.0) / n;
  const double exact = two_point_exact_tail(n, q);
  const SpectralProfile prof = fx.profile_for_q(q);
  const LdpEstimate est =
      tilted_tail(fx.x0(), fx.ens, prof, n, q, 20000, 314);
  CHECK(std::abs(est.tilted_prob - exact) <= 3.0 * est.tilted_prob_se);
  // Scalar laws have e_s identically 1, so both estimates coincide.
  CHECK(est.tilted == doctest::Approx(est.tilted_prob).epsilon(1e-12));
  CHECK(est.hits > 0);
  CHECK(est.ess_fraction > 0.1);
}

TEST_CASE("ldp: naive and tilted estimates agree on an easy event") {
  TwoPointFixture fx;
  const int n = 20;
  const double q = -0.2;  // mild threshold, naive MC still sees hits
  const SpectralProfile prof = fx.profile_for_q(q);
  const LdpEstimate tilted =
      tilted_tail(fx.x0(), fx.ens, prof, n, q, 20000, 11);
  const NaiveTail naive = naive_tail(fx.x0(), fx.ens, n, q, 50000, 12);
  CHECK(naive.hits > 0);
  const double se =
      std::sqrt(naive.se * naive.se + tilted.tilted_prob_se * tilted.tilted_prob_se);
  CHECK(std::abs(naive.estimate - tilted.tilted_prob) <= 3.5 * se);
}

TEST_CASE("ldp: estimates decrease as the threshold rises (shared seed)") {
  TwoPointFixture fx;
  const int n = 30;
  double prev = 1.0;
  for (double q : {-0.1, 0.05, 0.2, 0.35}) {
    const SpectralProfile prof = fx.profile_for_q(q);
    const LdpEstimate est =
        tilted_tail(fx.x0(), fx.ens, prof, n, q, 5000, 77);
    CHECK(est.tilted_prob < prev);
    CHECK(est.tilted_prob > 0.0);
    CHECK(est.tilted_prob <= 1.0 + 1e-12);
    prev = est.tilted_prob;
  }
}

TEST_CASE("ldp: naive zero hits reports a Clopper-Pearson upper bound") {
  TwoPointFixture fx;
  // q beyond everything 2000 paths will reach at n = 40.
  const NaiveTail naive = naive_tail(fx.x0(), fx.ens, 40, 0.6, 2000, 5);
  CHECK(naive.hits == 0);
  CHECK(naive.estimate == 0.0);
  CHECK(naive.zero_hit_upper ==
        doctest::Approx(1.0 - std::pow(0.05, 1.0 / 2000)).epsilon(1e-9));
}

TEST_CASE("ldp: br_prediction validates its domain") {
  TwoPointFixture fx;
  SpectralProfile prof = fx.profile_for_q(0.2);
  const ConeVector x0 = fx.x0();
  CHECK(br_prediction(x0, prof, 100, 0.2) > 0.0);
  SpectralProfile bad = prof;
  bad.sigma2 = 0.0;
  CHECK_THROWS_WITH_AS(br_prediction(x0, bad, 100, 0.2),
                       doctest::Contains("degenerate variance"),
                       NumericalError);
  SpectralProfile neg = prof;
  neg.s = -0.3;
  CHECK_THROWS_AS(br_prediction(x0, neg, 100, 0.2), ValidationError);
}

// Recorded, not asserted: for the E3 pair the tilted/BR-prediction ratio at
// s=1 oscillates in roughly [0.63, 1.26] out past n = 1600 (exact enumeration
// to n = 22 shows the same swing with period ~ 7 in n).  E3 is certified
// non-arithmetic, but its increment spread (~0.17) is far below the effective
// lattice spacing (~0.8), so the prefactor limit is approached extremely
// slowly.  The acceptance benchmark for the BR constant therefore uses E4,
// whose scaled atom copies decohere the increment phases while leaving the
// projective chain identical.
TEST_CASE("ldp: Bahadur-Rao ratio approaches 1 for the Gaussian surrogate") {
  const MatrixEnsemble ens = preset_lognormal(-0.5, 1.0);
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const ConeVector x0 = normalize(Vector::Ones(1), ens.cone, ens.norm);
  const LdpEstimate est = tilted_tail(x0, ens, prof, 100, 0.5, 20000, 2718);
  // Exact tail P(S_100 >= 50) = normal_sf(10).
  const double exact = normal_sf(10.0);
  CHECK(std::abs(est.tilted_prob - exact) <= 3.0 * est.tilted_prob_se);
  CHECK(est.ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ldp: edgeworth G_n has the correct limits and grid default") {
  const std::vector<double> u = default_u_grid();
  REQUIRE(u.size() == 201);
  CHECK(u.front() == doctest::Approx(-4.0));
  CHECK(u.back() == doctest::Approx(4.0));
  CHECK(u[100] == doctest::Approx(0.0));
  // Limits at u -> -inf / +inf: 0 and 1 within 1e-6 by |u| = 8.
  CHECK(std::abs(edgeworth_g(-8.0, 1.0, 2.0, 0.3, 50) - 0.0) <= 1e-6);
  CHECK(std::abs(edgeworth_g(8.0, 1.0, 2.0, 0.3, 50) - 1.0) <= 1e-6);
  // With no skewness and no bias G_n is the standard normal CDF.
  CHECK(edgeworth_g(0.7, 1.0, 0.0, 0.0, 50) ==
        doctest::Approx(normal_cdf(0.7)).epsilon(1e-12));
}

TEST_CASE("ldp: edgeworth curve for the exactly-Gaussian tilted law") {
  const MatrixEnsemble ens = preset_lognormal(-0.5, 1.0);
  const SphereGrid grid = build_grid(ens, 1);
  const SpectralProfile prof = cgf_profile(ens, grid, {1.0}).front();
  const BiasFunction bias = bias_function(prof, ens, grid);
  const ConeVector x0 = normalize(Vector::Ones(1), ens.cone, ens.norm);
  const EdgeworthReport rep =
      edgeworth_curve(x0, ens, prof, bias, 50, 20000, default_u_grid(), 31);
  REQUIRE(rep.u.size() == 201);
  // Standardized S_n is exactly N(0,1); F_hat must sit in the DKW band
  // around G_n = Phi + O(1/sqrt n)*0 (m3 = 0, b = 0).
  CHECK(rep.sup_gap <= dkw_epsilon(20000, 0.01));
  for (std::size_t i = 1; i < rep.u.size(); ++i) {
    CHECK(rep.f_hat[i] >= rep.f_hat[i - 1]);  // a CDF is monotone
    CHECK(rep.g_n[i] >= 0.0);
  }
}
