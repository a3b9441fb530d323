#include "ldmatrix/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/parallel.hpp"

namespace ldmatrix {

namespace {

constexpr std::uint64_t kCumulantLabel = RngStream::op_label("ldmatrix.cumulants");

double interp_e(const SpectralProfile& prof, const Vector& x) {
  return prof.grid.interpolate(prof.e_s, x);
}

}  // namespace

TiltedSampler::TiltedSampler(const MatrixEnsemble& ens,
                             const SpectralProfile& profile)
    : ens_(&ens), profile_(&profile) {
  switch (ens.law_type) {
    case LawType::kFinite:
      mode_ = TiltMode::kExactFinite;
      break;
    case LawType::kScalarLognormal: {
      mode_ = TiltMode::kExactScalar;
      const double m = ens.params.at("m");
      const double v = ens.params.at("v");
      tilt_m_ = m + v * profile.s;
      tilt_sd_ = std::sqrt(v);
      break;
    }
    case LawType::kScalarLogexp: {
      mode_ = TiltMode::kExactScalar;
      const double rate = ens.params.at("rate");
      tilt_c_ = ens.params.at("shift_c");
      tilt_rate_ = rate - profile.s;
      if (!(tilt_rate_ > 0.0))
        throw ValidationError(
            "tilted sampler: s >= rate leaves the log-exponential moment "
            "domain");
      break;
    }
    default:
      mode_ = TiltMode::kWeighted;
      break;
  }
}

StepOutcome TiltedSampler::step(const ConeVector& x, RngStream& stream) const {
  StepOutcome out;
  const SpectralProfile& prof = *profile_;
  switch (mode_) {
    case TiltMode::kExactFinite: {
      const double ex = interp_e(prof, x.coords);
      const std::size_t na = ens_->atoms.size();
      // Unnormalized tilted probabilities and the realized actions.
      std::vector<double> w(na);
      std::vector<ActionResult> acts(na);
      double z = 0.0;
      for (std::size_t i = 0; i < na; ++i) {
        acts[i] = act(ens_->atoms[i].a, x, ens_->cone);
        const double ei = interp_e(prof, acts[i].x1.coords);
        w[i] = ens_->atoms[i].p * std::exp(prof.s * acts[i].increment) * ei /
               (prof.k * ex);
        z += w[i];
      }
      out.residual = std::abs(1.0 - z);
      if (out.residual > 0.1) {
        std::ostringstream msg;
        msg << "tilted_step: grid too coarse, kernel residual "
            << out.residual << " exceeds 0.1";
        throw NumericalError(msg.str());
      }
      const std::size_t i = stream.categorical(w.data(), na, z);
      out.atom_index = static_cast<int>(i);
      out.a = ens_->atoms[i].a;
      out.x1 = acts[i].x1;
      out.increment = acts[i].increment;
      out.weight_log = 0.0;
      return out;
    }
    case TiltMode::kExactScalar: {
      double log_a;
      if (ens_->law_type == LawType::kScalarLognormal) {
        log_a = tilt_m_ + tilt_sd_ * stream.normal();
      } else {
        log_a = stream.exponential() / tilt_rate_ - tilt_c_;
      }
      out.atom_index = -1;
      out.a = Matrix::Constant(1, 1, std::exp(log_a));
      out.x1 = x;
      out.increment = log_a;
      out.residual = 0.0;
      out.weight_log = 0.0;
      return out;
    }
    case TiltMode::kWeighted: {
      const Draw d = sample(*ens_, stream);
      const ActionResult ar = act(d.a, x, ens_->cone);
      out.atom_index = d.atom_index;
      out.a = d.a;
      out.x1 = ar.x1;
      out.increment = ar.increment;
      out.residual = 0.0;
      out.weight_log = prof.s * ar.increment +
                       std::log(interp_e(prof, ar.x1.coords)) - prof.log_k -
                       std::log(interp_e(prof, x.coords));
      return out;
    }
  }
  throw NumericalError("tilted sampler: unreachable mode");
}

StepOutcome tilted_step(const ConeVector& x, const MatrixEnsemble& ens,
                        const SpectralProfile& profile, RngStream& stream) {
  TiltedSampler sampler(ens, profile);
  if (sampler.mode() == TiltMode::kWeighted)
    throw ValidationError(
        "tilted_step: law admits no exact tilting; use weighted_step");
  return sampler.step(x, stream);
}

StepOutcome weighted_step(const ConeVector& x, const MatrixEnsemble& ens,
                          const SpectralProfile& profile, RngStream& stream) {
  const Draw d = sample(ens, stream);
  const ActionResult ar = act(d.a, x, ens.cone);
  StepOutcome out;
  out.atom_index = d.atom_index;
  out.a = d.a;
  out.x1 = ar.x1;
  out.increment = ar.increment;
  out.residual = 0.0;
  out.weight_log = profile.s * ar.increment +
                   std::log(profile.grid.interpolate(profile.e_s,
                                                     ar.x1.coords)) -
                   profile.log_k -
                   std::log(profile.grid.interpolate(profile.e_s, x.coords));
  return out;
}

TiltedPath tilted_path(const ConeVector& x0, int n, const MatrixEnsemble& ens,
                       const SpectralProfile& profile, RngStream& stream,
                       double residual_bound) {
  if (n < 1) throw ValidationError("tilted_path: n must be >= 1");
  const TiltedSampler sampler(ens, profile);
  TiltedPath path;
  path.x0 = x0;
  path.atom_indices.reserve(n);
  path.states.reserve(n);
  path.s_values.reserve(n);
  path.norm_residuals.reserve(n);
  ConeVector x = x0;
  double s_acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const StepOutcome o = sampler.step(x, stream);
    s_acc += o.increment;
    path.atom_indices.push_back(o.atom_index);
    path.states.push_back(o.x1);
    path.s_values.push_back(s_acc);
    path.norm_residuals.push_back(o.residual);
    path.weight_log += o.weight_log;
    if (o.residual > residual_bound) path.residual_flagged = true;
    x = o.x1;
  }
  return path;
}

BiasFunction bias_function(const SpectralProfile& profile,
                           const MatrixEnsemble& ens, const SphereGrid& grid,
                           int depth) {
  if (depth < 1) throw ValidationError("bias_function: depth must be >= 1");
  BiasFunction bias;
  bias.grid = grid;
  const std::size_t n = grid.size();
  // Eigenfunction values on this grid (interpolated from the profile grid).
  std::vector<double> e(n);
  for (std::size_t j = 0; j < n; ++j)
    e[j] = profile.grid.interpolate(profile.e_s, grid.nodes[j]);

  // Per-node one-step tilted drift h_raw and the node-to-node tilted kernel
  // Q[j] -> (col, prob), built from the same quadrature as the transfer
  // operator; rows are normalized exactly so Q is row-stochastic.
  const QuadratureSet quad = make_quadrature(ens);
  std::vector<double> h_raw(n, 0.0);
  std::vector<std::vector<std::pair<int, double>>> q_rows(n);
  std::vector<double> acc(n, 0.0);
  std::vector<int> touched;
  for (std::size_t j = 0; j < n; ++j) {
    ConeVector xj{grid.nodes[j], grid.norm};
    double z = 0.0;
    double hj = 0.0;
    touched.clear();
    for (std::size_t d = 0; d < quad.draws.size(); ++d) {
      const ActionResult ar = act(quad.draws[d].a, xj, grid.cone);
      const double ei = grid.interpolate(e, ar.x1.coords);
      const double w =
          quad.weights[d] * std::exp(profile.s * ar.increment) * ei;
      z += w;
      hj += w * ar.increment;
      const SphereGrid::Interp ip = grid.locate(ar.x1.coords);
      // Spread the transition mass onto the interpolation nodes, e-weighted
      // consistently with the interpolated image value.
      const double base =
          quad.weights[d] * std::exp(profile.s * ar.increment);
      if (acc[ip.i0] == 0.0 && ip.w0 * e[ip.i0] != 0.0)
        touched.push_back(ip.i0);
      acc[ip.i0] += base * ip.w0 * e[ip.i0];
      if (ip.i1 != ip.i0) {
        if (acc[ip.i1] == 0.0 && ip.w1 * e[ip.i1] != 0.0)
          touched.push_back(ip.i1);
        acc[ip.i1] += base * ip.w1 * e[ip.i1];
      }
    }
    if (!(z > 0.0))
      throw NumericalError("bias_function: degenerate tilted kernel row");
    h_raw[j] = hj / z;
    std::sort(touched.begin(), touched.end());
    double rowsum = 0.0;
    for (int col : touched) rowsum += acc[col];
    auto& row = q_rows[j];
    row.reserve(touched.size());
    for (int col : touched) {
      if (acc[col] != 0.0) row.emplace_back(col, acc[col] / rowsum);
      acc[col] = 0.0;
    }
  }

  // Stationary law of the discrete tilted kernel (left fixed vector).
  std::vector<double> pi = profile.pi_s.size() == n
                               ? profile.pi_s
                               : std::vector<double>(n, 1.0 / n);
  std::vector<double> next(n);
  for (int it = 0; it < 20000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& [col, p] : q_rows[j]) next[col] += p * pi[j];
    double diff = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      diff += std::abs(next[j] - pi[j]);
      total += next[j];
    }
    for (std::size_t j = 0; j < n; ++j) pi[j] = next[j] / total;
    if (diff < 1e-14) break;
  }

  // pi-averaged one-step drift; centering target for the Neumann series.
  double drift = 0.0;
  for (std::size_t j = 0; j < n; ++j) drift += pi[j] * h_raw[j];
  bias.drift_discrete = drift;

  auto recenter = [&](std::vector<double>& v) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += pi[j] * v[j];
    for (double& x : v) x -= mean;
  };
  auto sup_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };

  std::vector<double> term(n);
  for (std::size_t j = 0; j < n; ++j) term[j] = h_raw[j] - drift;
  recenter(term);
  std::vector<double> b = term;
  const double initial_sup = sup_norm(term);
  int used = 0;
  double last_sup = initial_sup;
  for (used = 1; used < depth; ++used) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double acc2 = 0.0;
      for (const auto& [col, p] : q_rows[j]) acc2 += p * term[col];
      next[j] = acc2;
    }
    term.swap(next);
    recenter(term);
    for (std::size_t j = 0; j < n; ++j) b[j] += term[j];
    last_sup = sup_norm(term);
    if (last_sup < 1e-9) break;
  }
  if (last_sup >= 1e-9 && last_sup >= initial_sup && initial_sup > 0.0) {
    std::ostringstream msg;
    msg << "bias_function: Neumann series terms do not decay (sup "
        << last_sup << " after " << used
        << " terms vs initial " << initial_sup
        << "); spectral gap failure on this grid";
    throw NumericalError(msg.str());
  }
  bias.values = b;
  bias.series_depth = used;
  bias.truncation_residual = last_sup;

  // Recursion residual sup |b - h - Q b| with h = h_raw - q (profile drift
  // when available, the discrete drift otherwise).
  const double q_center = std::isfinite(profile.q) ? profile.q : drift;
  double resid = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double qb = 0.0;
    for (const auto& [col, p] : q_rows[j]) qb += p * b[col];
    resid = std::max(resid,
                     std::abs(b[j] - (h_raw[j] - q_center) - qb));
  }
  bias.recursion_residual = resid;
  double pib = 0.0;
  for (std::size_t j = 0; j < n; ++j) pib += pi[j] * b[j];
  bias.pi_b = pib;
  return bias;
}

CumulantEstimates cumulant_estimates(const MatrixEnsemble& ens,
                                     const SpectralProfile& profile, int n,
                                     std::size_t paths, std::uint64_t seed) {
  if (n < 1) throw ValidationError("cumulant_estimates: n must be >= 1");
  if (paths < 200)
    throw ValidationError("cumulant_estimates: paths must be >= 200");
  const TiltedSampler sampler(ens, profile);
  const std::size_t nodes = profile.grid.size();
  std::vector<double> s_n(paths);
  std::vector<double> w_log(paths);
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kCumulantLabel, p);
    const std::size_t start =
        nodes == 1 ? 0
                   : stream.categorical(profile.pi_s.data(), nodes, 1.0);
    ConeVector x{profile.grid.nodes[start], profile.grid.norm};
    double s_acc = 0.0;
    double wl = 0.0;
    for (int k = 0; k < n; ++k) {
      const StepOutcome o = sampler.step(x, stream);
      s_acc += o.increment;
      wl += o.weight_log;
      x = o.x1;
    }
    s_n[p] = s_acc;
    w_log[p] = wl;
  });
  // Self-normalized weighted central moments (weights are all 1 under exact
  // tilting).  Batch means over contiguous path blocks give the SEs.
  auto moments = [&](std::size_t lo, std::size_t hi, double* v2, double* v3) {
    double wsum = 0.0;
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double w = std::exp(w_log[i]);
      wsum += w;
      mean += w * s_n[i];
    }
    mean /= wsum;
    double m2 = 0.0;
    double m3 = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double w = std::exp(w_log[i]);
      const double d = s_n[i] - mean;
      m2 += w * d * d;
      m3 += w * d * d * d;
    }
    *v2 = m2 / wsum / n;
    *v3 = m3 / wsum / n;
  };
  CumulantEstimates out;
  double v2 = 0.0;
  double v3 = 0.0;
  moments(0, paths, &v2, &v3);
  out.sigma2.mean = v2;
  out.m3.mean = v3;
  out.sigma2.n = paths;
  out.m3.n = paths;
  const std::size_t batches = std::min<std::size_t>(50, paths / 20);
  if (batches >= 2) {
    std::vector<double> b2(batches);
    std::vector<double> b3(batches);
    const std::size_t chunk = paths / batches;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * chunk;
      const std::size_t hi = b + 1 == batches ? paths : lo + chunk;
      moments(lo, hi, &b2[b], &b3[b]);
    }
    out.sigma2.se = jackknife_mean(b2).se;
    out.m3.se = jackknife_mean(b3).se;
  }
  return out;
}

}  // namespace ldmatrix
