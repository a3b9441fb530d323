#include "ldmatrix/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/parallel.hpp"
#include "ldmatrix/stats.hpp"

namespace ldmatrix {

namespace {

constexpr std::uint64_t kNaiveLabel = RngStream::op_label("ldmatrix.naive_tail");
constexpr std::uint64_t kTiltedLabel = RngStream::op_label("ldmatrix.tilted_tail");
constexpr std::uint64_t kEdgeworthLabel = RngStream::op_label("ldmatrix.edgeworth");

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PathSummary {
  double s_n = 0.0;
  double weight_log = 0.0;
  double e_end = 1.0;       // e_s(X_n)
  double max_residual = 0.0;
};

// Lean tilted-path runner used by the estimators: consumes the stream exactly
// like tilted_path but keeps only the endpoint summary.
PathSummary run_tilted(const TiltedSampler& sampler, const ConeVector& x0,
                       int n, RngStream& stream) {
  PathSummary ps;
  ConeVector x = x0;
  for (int k = 0; k < n; ++k) {
    const StepOutcome o = sampler.step(x, stream);
    ps.s_n += o.increment;
    ps.weight_log += o.weight_log;
    ps.max_residual = std::max(ps.max_residual, o.residual);
    x = o.x1;
  }
  const SpectralProfile& prof = sampler.profile();
  ps.e_end = prof.grid.interpolate(prof.e_s, x.coords);
  return ps;
}

double log_br_prediction(const ConeVector& x0, const SpectralProfile& profile,
                         int n, double q) {
  if (!(profile.s > 0.0))
    throw ValidationError("br_prediction: requires s > 0");
  if (!std::isfinite(profile.sigma2))
    throw ValidationError(
        "br_prediction: profile lacks cumulants (run cgf_profile)");
  if (!(profile.sigma2 > 0.0))
    throw NumericalError("br_prediction: degenerate variance sigma2 <= 0");
  const double e0 = profile.grid.interpolate(profile.e_s, x0.coords);
  const double lambda_star = profile.s * q - profile.log_k;
  return std::log(e0) - n * lambda_star -
         std::log(profile.s * std::sqrt(profile.sigma2) *
                  std::sqrt(2.0 * 3.14159265358979323846 * n));
}

}  // namespace

NaiveTail naive_tail(const ConeVector& x0, const MatrixEnsemble& ens, int n,
                     double q, std::size_t paths, std::uint64_t seed) {
  validate_ensemble(ens);
  if (n < 1) throw ValidationError("naive_tail: n must be >= 1");
  if (paths < 1000) throw ValidationError("naive_tail: paths must be >= 1000");
  std::vector<unsigned char> hit(paths, 0);
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kNaiveLabel, p);
    ConeVector x = x0;
    double s_acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const Draw d = sample(ens, stream);
      const ActionResult ar = act(d.a, x, ens.cone);
      s_acc += ar.increment;
      x = ar.x1;
    }
    hit[p] = s_acc >= n * q ? 1 : 0;
  });
  NaiveTail out;
  out.paths = paths;
  for (unsigned char h : hit) out.hits += h;
  out.estimate = static_cast<double>(out.hits) / static_cast<double>(paths);
  out.se = std::sqrt(out.estimate * (1.0 - out.estimate) /
                     static_cast<double>(paths));
  if (out.hits == 0) {
    out.zero_hit_upper = clopper_pearson_zero_upper(paths, 0.95);
    log_info("naive_tail: zero hits; Clopper-Pearson 95% upper bound " +
             std::to_string(out.zero_hit_upper));
  }
  return out;
}

LdpEstimate tilted_tail(const ConeVector& x0, const MatrixEnsemble& ens,
                        const SpectralProfile& profile, int n, double q,
                        std::size_t paths, std::uint64_t seed) {
  validate_ensemble(ens);
  if (n < 1) throw ValidationError("tilted_tail: n must be >= 1");
  if (paths < 100) throw ValidationError("tilted_tail: paths must be >= 100");
  const TiltedSampler sampler(ens, profile);
  LdpEstimate est;
  est.x0 = x0;
  est.n = n;
  est.q = q;
  est.s = profile.s;
  est.paths = paths;

  std::vector<double> l_e(paths);      // weight_log - s(S_n - nq) on hits
  std::vector<double> l_p(paths);      // same minus log e_s(X_n)
  std::vector<double> wlogs(paths);    // weight_log for ESS
  std::vector<double> resid(paths);
  const double nq = static_cast<double>(n) * q;
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kTiltedLabel, p);
    const PathSummary ps = run_tilted(sampler, x0, n, stream);
    wlogs[p] = ps.weight_log;
    resid[p] = ps.max_residual;
    if (ps.s_n >= nq) {
      const double l = ps.weight_log - profile.s * (ps.s_n - nq);
      l_e[p] = l;
      l_p[p] = l - std::log(ps.e_end);
    } else {
      l_e[p] = kNegInf;
      l_p[p] = kNegInf;
    }
  });
  for (double r : resid) est.max_step_residual = std::max(est.max_step_residual, r);
  for (double l : l_e)
    if (l > kNegInf) ++est.hits;

  // log of the constant prefactor e_s(x0) k^n e^{-s n q}.
  const double e0 = profile.grid.interpolate(profile.e_s, x0.coords);
  const double log_c =
      std::log(e0) - static_cast<double>(n) * (profile.s * q - profile.log_k);

  const LogMeanSE me = log_domain_mean(l_e);
  const LogMeanSE mp = log_domain_mean(l_p);
  est.log_tilted = log_c + me.log_mean;
  est.log_tilted_prob = log_c + mp.log_mean;
  est.tilted = std::exp(est.log_tilted);
  est.tilted_se = std::exp(log_c + me.log_se);
  est.tilted_prob = std::exp(est.log_tilted_prob);
  est.tilted_prob_se = std::exp(log_c + mp.log_se);

  // Effective sample size of the importance weights (1 under exact tilting).
  const double lse_w = log_sum_exp(wlogs);
  std::vector<double> wlogs2(wlogs);
  for (double& v : wlogs2) v *= 2.0;
  const double lse_w2 = log_sum_exp(wlogs2);
  est.ess_fraction =
      std::exp(2.0 * lse_w - lse_w2 - std::log(static_cast<double>(paths)));
  if (est.ess_fraction < 0.01) {
    est.ess_warning = true;
    log_warn("tilted_tail: effective sample size below 1% of paths");
  }
  if (est.hits == 0)
    log_warn("tilted_tail: no tilted path crossed the threshold; estimate 0");

  // Bahadur-Rao prediction and ratio (when the profile carries cumulants).
  if (std::isfinite(profile.sigma2) && profile.sigma2 > 0.0 &&
      profile.s > 0.0) {
    est.log_prediction = log_br_prediction(x0, profile, n, q);
    est.prediction = std::exp(est.log_prediction);
    est.ratio = std::exp(est.log_tilted - est.log_prediction);
  } else {
    est.prediction = std::numeric_limits<double>::quiet_NaN();
    est.log_prediction = std::numeric_limits<double>::quiet_NaN();
    est.ratio = std::numeric_limits<double>::quiet_NaN();
  }
  return est;
}

double br_prediction(const ConeVector& x0, const SpectralProfile& profile,
                     int n, double q) {
  return std::exp(log_br_prediction(x0, profile, n, q));
}

std::vector<double> default_u_grid() {
  std::vector<double> u;
  u.reserve(201);
  for (int i = 0; i < 201; ++i) u.push_back(-4.0 + 8.0 * i / 200.0);
  return u;
}

double edgeworth_g(double u, double sigma2, double m3, double bias_at_x0,
                   int n) {
  const double sigma = std::sqrt(sigma2);
  const double rn = std::sqrt(static_cast<double>(n));
  return normal_cdf(u) +
         m3 / (6.0 * sigma * sigma * sigma * rn) * (1.0 - u * u) *
             normal_pdf(u) -
         bias_at_x0 / (sigma * rn) * normal_pdf(u);
}

EdgeworthReport edgeworth_curve(const ConeVector& x0,
                                const MatrixEnsemble& ens,
                                const SpectralProfile& profile,
                                const BiasFunction& bias, int n,
                                std::size_t paths,
                                const std::vector<double>& u_grid,
                                std::uint64_t seed) {
  validate_ensemble(ens);
  if (n < 1) throw ValidationError("edgeworth_curve: n must be >= 1");
  if (paths < 100)
    throw ValidationError("edgeworth_curve: paths must be >= 100");
  if (u_grid.size() < 2)
    throw ValidationError("edgeworth_curve: u_grid needs >= 2 points");
  if (!std::isfinite(profile.sigma2) || !(profile.sigma2 > 0.0))
    throw ValidationError(
        "edgeworth_curve: profile needs sigma2 > 0 (run cgf_profile)");
  const TiltedSampler sampler(ens, profile);
  const double sigma = std::sqrt(profile.sigma2);
  const double rn = std::sqrt(static_cast<double>(n));

  std::vector<double> w_val(paths);
  std::vector<double> w_log(paths);
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kEdgeworthLabel, p);
    const PathSummary ps = run_tilted(sampler, x0, n, stream);
    w_val[p] = (ps.s_n - n * profile.q) / (sigma * rn);
    w_log[p] = ps.weight_log;
  });

  // Weighted empirical CDF (weights all equal under exact tilting).
  std::vector<std::size_t> order(paths);
  for (std::size_t i = 0; i < paths; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return w_val[a] < w_val[b];
  });
  std::vector<double> sorted_w(paths);
  std::vector<double> cum_weight(paths);
  double max_wlog = -std::numeric_limits<double>::infinity();
  for (double v : w_log) max_wlog = std::max(max_wlog, v);
  double total = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    sorted_w[i] = w_val[order[i]];
    total += std::exp(w_log[order[i]] - max_wlog);
    cum_weight[i] = total;
  }

  EdgeworthReport rep;
  rep.x0 = x0;
  rep.n = n;
  rep.paths = paths;
  rep.u = u_grid;
  rep.f_hat.reserve(u_grid.size());
  rep.g_n.reserve(u_grid.size());
  const double b0 = bias.values.empty()
                        ? 0.0
                        : bias.grid.interpolate(bias.values, x0.coords);
  for (double u : u_grid) {
    const auto it = std::upper_bound(sorted_w.begin(), sorted_w.end(), u);
    const std::size_t cnt = static_cast<std::size_t>(it - sorted_w.begin());
    const double f = cnt == 0 ? 0.0 : cum_weight[cnt - 1] / total;
    rep.f_hat.push_back(f);
    rep.g_n.push_back(edgeworth_g(u, profile.sigma2, profile.m3, b0, n));
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < u_grid.size(); ++i)
    gap = std::max(gap, std::abs(rep.f_hat[i] - rep.g_n[i]));
  rep.sup_gap = gap;
  rep.scaled_gap = rn * gap;
  return rep;
}

}  // namespace ldmatrix
