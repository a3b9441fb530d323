#include "ldmatrix/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/parallel.hpp"

namespace ldmatrix {

namespace {

constexpr std::uint64_t kMcMomentLabel = RngStream::op_label("ldmatrix.mc_moment");
constexpr std::uint64_t kLyapunovLabel = RngStream::op_label("ldmatrix.lyapunov");

// Row-compressed discretization of P_s on the grid nodes.
struct Transfer {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  void apply(const std::vector<double>& f, std::vector<double>& out) const {
    out.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const auto& [col, w] : rows[j]) acc += w * f[col];
      out[j] = acc;
    }
  }

  void apply_adjoint(const std::vector<double>& g,
                     std::vector<double>& out) const {
    out.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      for (const auto& [col, w] : rows[j]) out[col] += w * g[j];
    }
  }
};

Transfer build_transfer(const MatrixEnsemble& ens, double s,
                        const SphereGrid& grid, bool transpose) {
  const MatrixEnsemble* law = &ens;
  MatrixEnsemble law_t;
  if (transpose) {
    law_t = transposed(ens);
    law = &law_t;
  }
  const QuadratureSet quad = make_quadrature(*law);
  const int n = static_cast<int>(grid.size());
  Transfer t;
  t.n = n;
  t.rows.resize(n);
  std::vector<double> acc(n, 0.0);
  std::vector<int> touched;
  touched.reserve(64);
  for (int j = 0; j < n; ++j) {
    ConeVector xj{grid.nodes[j], grid.norm};
    touched.clear();
    for (std::size_t q = 0; q < quad.draws.size(); ++q) {
      ActionResult ar;
      try {
        ar = act(quad.draws[q].a, xj, grid.cone);
      } catch (const NumericalError&) {
        throw NumericalError(
            "apply_transfer: non-allowable atom encountered (degenerate "
            "action on a grid node)");
      }
      const double w = quad.weights[q] * std::exp(s * ar.increment);
      const SphereGrid::Interp ip = grid.locate(ar.x1.coords);
      if (acc[ip.i0] == 0.0 && ip.w0 != 0.0) touched.push_back(ip.i0);
      acc[ip.i0] += w * ip.w0;
      if (ip.i1 != ip.i0) {
        if (acc[ip.i1] == 0.0 && ip.w1 != 0.0) touched.push_back(ip.i1);
        acc[ip.i1] += w * ip.w1;
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& row = t.rows[j];
    row.reserve(touched.size());
    for (int col : touched) {
      if (acc[col] != 0.0) row.emplace_back(col, acc[col]);
      acc[col] = 0.0;
    }
  }
  return t;
}

struct EigResult {
  double k = 0.0;
  std::vector<double> vec;  // sup-normalized (right) or l1-normalized (left)
  int iterations = 0;
};

EigResult power_iterate(const Transfer& t, int max_iter, double tol,
                        bool adjoint) {
  const int n = t.n;
  EigResult res;
  std::vector<double> f(n, adjoint ? 1.0 / n : 1.0);
  std::vector<double> g;
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    if (adjoint) {
      t.apply_adjoint(f, g);
    } else {
      t.apply(f, g);
    }
    double scale = 0.0;
    if (adjoint) {
      for (double v : g) scale += std::abs(v);
    } else {
      for (double v : g) scale = std::max(scale, std::abs(v));
    }
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw NumericalError(
          "dominant_pair: transfer operator iteration degenerated");
    for (double& v : g) v /= scale;
    f.swap(g);
    if (it >= 2 && std::abs(scale - prev) <= tol * std::max(1.0, scale)) {
      res.k = scale;
      res.vec = std::move(f);
      res.iterations = it + 1;
      return res;
    }
    prev = scale;
  }
  // Not converged: report the last residual.
  std::vector<double> h;
  if (adjoint) {
    t.apply_adjoint(f, h);
  } else {
    t.apply(f, h);
  }
  double resid = 0.0;
  for (int j = 0; j < n; ++j) resid = std::max(resid, std::abs(h[j] - prev * f[j]));
  std::ostringstream msg;
  msg << "dominant_pair: no convergence within " << max_iter
      << " iterations; last ratio " << prev << ", residual " << resid;
  throw NumericalError(msg.str());
}

bool has_exact_log_mellin(const MatrixEnsemble& ens) {
  return ens.law_type == LawType::kScalarLognormal ||
         ens.law_type == LawType::kScalarLogexp;
}

double exact_log_mellin(const MatrixEnsemble& ens, double s) {
  if (ens.law_type == LawType::kScalarLognormal) {
    const double m = ens.params.at("m");
    const double v = ens.params.at("v");
    return m * s + 0.5 * v * s * s;
  }
  const double rate = ens.params.at("rate");
  const double c = ens.params.at("shift_c");
  if (s >= rate)
    throw NumericalError(
        "log_mellin: s is outside the moment domain (s >= rate for the "
        "log-exponential law)");
  return -c * s + std::log(rate / (rate - s));
}

}  // namespace

std::vector<double> apply_transfer(const MatrixEnsemble& ens, double s,
                                   const SphereGrid& grid,
                                   const std::vector<double>& f,
                                   bool transpose) {
  if (f.size() != grid.size())
    throw ValidationError("apply_transfer: f has wrong length");
  for (double v : f) {
    if (!std::isfinite(v))
      throw ValidationError("apply_transfer: f must be finite on all nodes");
  }
  const Transfer t = build_transfer(ens, s, grid, transpose);
  std::vector<double> out;
  t.apply(f, out);
  return out;
}

SpectralProfile dominant_pair(const MatrixEnsemble& ens, double s,
                              const SphereGrid& grid, int max_iter,
                              double tol) {
  validate_ensemble(ens);
  SpectralProfile prof;
  prof.s = s;
  prof.grid = grid;
  if (has_exact_log_mellin(ens)) {
    // Scalar law with a closed-form Mellin transform: the sphere is a single
    // point and k(s) = E A^s exactly.
    prof.log_k = exact_log_mellin(ens, s);
    prof.k = std::exp(prof.log_k);
    prof.e_s.assign(1, 1.0);
    prof.nu_s.assign(1, 1.0);
    prof.pi_s.assign(1, 1.0);
    prof.eigen_residual = 0.0;
    return prof;
  }
  const Transfer t = build_transfer(ens, s, grid, false);
  const EigResult right = power_iterate(t, max_iter, tol, false);
  const EigResult left = power_iterate(t, max_iter, tol, true);
  prof.k = right.k;
  prof.log_k = std::log(right.k);
  prof.e_s = right.vec;
  prof.nu_s = left.vec;
  if (std::abs(left.k - right.k) > 1e-8 * std::max(1.0, right.k)) {
    log_warn("dominant_pair: left/right eigenvalue mismatch " +
             std::to_string(std::abs(left.k - right.k)));
  }
  // pi = e * nu / nu(e).
  const std::size_t n = grid.size();
  prof.pi_s.assign(n, 0.0);
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    prof.pi_s[j] = prof.e_s[j] * prof.nu_s[j];
    z += prof.pi_s[j];
  }
  if (!(z > 0.0))
    throw NumericalError("dominant_pair: degenerate stationary weights");
  for (double& v : prof.pi_s) v /= z;
  // nu normalized to total mass 1 (power_iterate already normalizes by the
  // l1 norm; entries are nonnegative).
  double nusum = 0.0;
  for (double v : prof.nu_s) nusum += v;
  for (double& v : prof.nu_s) v /= nusum;
  // Residual sup |P_s e - k e|.
  std::vector<double> te;
  t.apply(prof.e_s, te);
  double resid = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    resid = std::max(resid, std::abs(te[j] - prof.k * prof.e_s[j]));
  prof.eigen_residual = resid;
  for (double v : prof.e_s) {
    if (!(v > 0.0))
      throw NumericalError(
          "dominant_pair: eigenfunction is not strictly positive on the "
          "grid (non-irreducible ensemble or grid too coarse)");
  }
  return prof;
}

double log_mellin(const MatrixEnsemble& ens, double s, const SphereGrid& grid,
                  int max_iter, double tol) {
  if (has_exact_log_mellin(ens)) return exact_log_mellin(ens, s);
  const Transfer t = build_transfer(ens, s, grid, false);
  return std::log(power_iterate(t, max_iter, tol, false).k);
}

double enum_moment(const MatrixEnsemble& ens, double s, int n) {
  validate_ensemble(ens);
  if (ens.law_type != LawType::kFinite)
    throw ValidationError("enum_moment: finite-support law required");
  if (n < 1) throw ValidationError("enum_moment: n must be >= 1");
  const double total = std::pow(static_cast<double>(ens.atoms.size()),
                                static_cast<double>(n));
  if (total > 1e7)
    throw NumericalError("enum_moment: combinatorial budget exceeded");
  double sum = 0.0;
  // DFS over words, maintaining prefix products and probabilities.
  std::vector<Matrix> prefix(static_cast<std::size_t>(n) + 1);
  std::vector<double> prob(static_cast<std::size_t>(n) + 1);
  prefix[0] = Matrix::Identity(ens.dim, ens.dim);
  prob[0] = 1.0;
  std::function<void(int)> dfs = [&](int depth) {
    if (depth == n) {
      sum += prob[n] * std::pow(op_norm(prefix[n], ens.norm), s);
      return;
    }
    for (const auto& atom : ens.atoms) {
      prefix[depth + 1] = atom.a * prefix[depth];
      prob[depth + 1] = prob[depth] * atom.p;
      dfs(depth + 1);
    }
  };
  dfs(0);
  return sum;
}

MeanSE mc_moment(const MatrixEnsemble& ens, double s, int n,
                 std::size_t paths, std::uint64_t seed) {
  validate_ensemble(ens);
  if (paths < 100) throw ValidationError("mc_moment: paths must be >= 100");
  if (n < 1) throw ValidationError("mc_moment: n must be >= 1");
  std::vector<double> logs(paths);
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kMcMomentLabel, p);
    Matrix prod = Matrix::Identity(ens.dim, ens.dim);
    double log_acc = 0.0;
    for (int step = 0; step < n; ++step) {
      const Draw d = sample(ens, stream);
      prod = (d.a * prod).eval();
      const double nn = op_norm(prod, ens.norm);
      if (!(nn > 0.0) || !std::isfinite(nn))
        throw NumericalError("mc_moment: degenerate running product");
      log_acc += std::log(nn);
      prod /= nn;
    }
    logs[p] = s * log_acc;
  });
  const LogMeanSE lm = log_domain_mean(logs);
  MeanSE out;
  out.mean = std::exp(lm.log_mean);
  out.se = std::exp(lm.log_se);
  out.n = paths;
  return out;
}

namespace {

struct CgfDerivatives {
  double q;
  double sigma2;
  double m3;
};

CgfDerivatives five_point(const std::function<double(double)>& lam, double s,
                          double h, double l0) {
  const double l1 = lam(s + h);
  const double l2 = lam(s + 2.0 * h);
  const double lm1 = lam(s - h);
  const double lm2 = lam(s - 2.0 * h);
  CgfDerivatives d;
  d.q = (-l2 + 8.0 * l1 - 8.0 * lm1 + lm2) / (12.0 * h);
  d.sigma2 =
      (-l2 + 16.0 * l1 - 30.0 * l0 + 16.0 * lm1 - lm2) / (12.0 * h * h);
  d.m3 = (l2 - 2.0 * l1 + 2.0 * lm1 - lm2) / (2.0 * h * h * h);
  return d;
}

}  // namespace

std::vector<SpectralProfile> cgf_profile(const MatrixEnsemble& ens,
                                         const SphereGrid& grid,
                                         const std::vector<double>& s_values,
                                         double fd_step) {
  if (!(fd_step > 0.0))
    throw ValidationError("cgf_profile: fd_step must be positive");
  std::vector<SpectralProfile> out;
  out.reserve(s_values.size());
  auto lam = [&](double s) { return log_mellin(ens, s, grid); };
  for (double s : s_values) {
    SpectralProfile prof = dominant_pair(ens, s, grid);
    const double h = fd_step;
    const CgfDerivatives d = five_point(lam, s, h, prof.log_k);
    const CgfDerivatives dh = five_point(lam, s, 0.5 * h, prof.log_k);
    prof.q = d.q;
    prof.sigma2 = d.sigma2;
    prof.m3 = d.m3;
    prof.fd_step = h;
    if (std::abs(d.q - dh.q) > 1e-6 * std::max(1.0, std::abs(d.q))) {
      std::ostringstream msg;
      msg << "cgf_profile: Richardson check at h/2 disagrees on Lambda' at s="
          << s << " (" << d.q << " vs " << dh.q << ")";
      log_warn(msg.str());
    }
    if (prof.sigma2 < -1e-8) {
      std::ostringstream msg;
      msg << "cgf_profile: negative Lambda'' = " << prof.sigma2 << " at s="
          << s << " violates log-convexity beyond tolerance";
      log_warn(msg.str());
    }
    out.push_back(std::move(prof));
  }
  return out;
}

double solve_alpha(const MatrixEnsemble& ens, const SphereGrid& grid,
                   double s_lo, double s_hi) {
  if (!(s_lo < s_hi))
    throw ValidationError("solve_alpha: require s_lo < s_hi");
  auto lam = [&](double s) { return log_mellin(ens, s, grid); };
  const double h = 1e-3;
  const double lam0 = lam(0.0);
  if (std::abs(lam0) > 1e-9)
    throw NumericalError(
        "solve_alpha: Lambda(0) != 0 (operator at s=0 is not Markov)");
  const double dlam0 = (lam(h) - lam(-h)) / (2.0 * h);
  if (!(dlam0 < 0.0))
    throw NumericalError(
        "NoRootInBracket: Lambda'(0) >= 0, no positive root of Lambda");
  double lo = std::max(s_lo, 1e-12);
  double hi = s_hi;
  double flo = lam(lo);
  double fhi = lam(hi);
  if (!(fhi > 0.0) || !(flo < 0.0)) {
    std::ostringstream msg;
    msg << "NoRootInBracket: Lambda has no sign change on [" << lo << ", "
        << hi << "] (Lambda(lo)=" << flo << ", Lambda(hi)=" << fhi << ")";
    throw NumericalError(msg.str());
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = lam(mid);
    if (fm > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  mid = 0.5 * (lo + hi);
  const double fm = lam(mid);
  const double dm = (lam(mid + h) - lam(mid - h)) / (2.0 * h);
  if (std::abs(fm) > 1e-10 * std::max(1.0, std::abs(dm))) {
    std::ostringstream msg;
    msg << "solve_alpha: bisection stalled, |Lambda(alpha)| = " << std::abs(fm)
        << " exceeds tolerance";
    throw NumericalError(msg.str());
  }
  return mid;
}

RateFunctionPoint rate_function(const MatrixEnsemble& ens,
                                const SphereGrid& grid, double q, double s_lo,
                                double s_hi) {
  if (!(s_lo < s_hi))
    throw ValidationError("rate_function: require s_lo < s_hi");
  auto lam = [&](double s) { return log_mellin(ens, s, grid); };
  const double h = 1e-3;
  auto dlam = [&](double s) {
    return (-lam(s + 2 * h) + 8 * lam(s + h) - 8 * lam(s - h) + lam(s - 2 * h)) /
           (12.0 * h);
  };
  double lo = s_lo;
  double hi = s_hi;
  const double dlo = dlam(lo);
  const double dhi = dlam(hi);
  if (q < dlo - 1e-12 || q > dhi + 1e-12) {
    std::ostringstream msg;
    msg << "DriftUnattainable: q=" << q << " outside the attainable range ["
        << dlo << ", " << dhi << "] of Lambda' over [" << lo << ", " << hi
        << "]";
    throw NumericalError(msg.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dlam(mid) >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  RateFunctionPoint pt;
  pt.q = q;
  pt.s = 0.5 * (lo + hi);
  pt.lambda_star = pt.s * q - lam(pt.s);
  if (pt.lambda_star < -1e-9)
    throw NumericalError(
        "rate_function: negative Fenchel-Legendre value beyond tolerance");
  return pt;
}

MeanSE lyapunov(const MatrixEnsemble& ens, int n, std::size_t paths,
                std::uint64_t seed) {
  validate_ensemble(ens);
  if (n < 10) throw ValidationError("lyapunov: n must be >= 10");
  if (paths < 1) throw ValidationError("lyapunov: paths must be >= 1");
  std::vector<double> vals(paths);
  parallel_for_index(paths, [&](std::size_t p) {
    RngStream stream(seed, kLyapunovLabel, p);
    Matrix prod = Matrix::Identity(ens.dim, ens.dim);
    double log_acc = 0.0;
    for (int step = 0; step < n; ++step) {
      const Draw d = sample(ens, stream);
      prod = (d.a * prod).eval();
      const double nn = op_norm(prod, ens.norm);
      if (!(nn > 0.0) || !std::isfinite(nn))
        throw NumericalError("lyapunov: degenerate running product");
      log_acc += std::log(nn);
      prod /= nn;
    }
    vals[p] = log_acc / static_cast<double>(n);
  });
  return jackknife_mean(vals);
}

}  // namespace ldmatrix
