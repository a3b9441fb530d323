#include "ldmatrix/kesten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/grid.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/parallel.hpp"

namespace ldmatrix {

namespace {

constexpr std::uint64_t kRdeLabel = RngStream::op_label("ldmatrix.rde");
constexpr std::uint64_t kBootstrapLabel = RngStream::op_label("ldmatrix.bootstrap");
constexpr std::uint64_t kConditionLabel = RngStream::op_label("ldmatrix.kesten_condition");

double min_row_sum(const Matrix& m) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < m.rows(); ++r) best = std::min(best, m.row(r).sum());
  return best;
}

}  // namespace

RdeModel arch2_preset(double a1, double a2) {
  if (!(a1 > 0.0) || !(a2 > 0.0))
    throw ValidationError("arch2_preset: requires a1 > 0 and a2 > 0");
  if (a1 + a2 >= 1.0)
    throw ValidationError("arch2_preset: requires a1 + a2 < 1");
  RdeModel model;
  model.ensemble = preset_arch2(a1, a2, /*transpose=*/false);
  model.alpha_lo = 0.5;
  model.alpha_hi = 10.0;
  model.grid_resolution = 512;
  return model;
}

RdeModel lognormal_model(double m, double v) {
  RdeModel model;
  model.ensemble = preset_lognormal(m, v);
  model.ensemble.has_shift = true;
  model.ensemble.shift = Vector::Ones(1);
  model.ensemble.name = "kesten_lognormal";
  model.alpha_lo = 0.05;
  model.alpha_hi = 10.0;
  model.grid_resolution = 1;
  return model;
}

RdeDraw rde_sample(const RdeModel& model, int depth, double tol,
                   RngStream& stream) {
  if (depth < 1) throw ValidationError("rde_sample: depth must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("rde_sample: tol must be positive");
  const MatrixEnsemble& ens = model.ensemble;
  if (!ens.has_shift)
    throw ValidationError("rde_sample: model has no shift law B");
  const int d = ens.dim;
  RdeDraw out;
  Vector sum = Vector::Zero(d);
  Matrix prod = Matrix::Identity(d, d);
  double prod_norm = 1.0;
  std::vector<double> trace;
  for (int k = 1; k <= depth; ++k) {
    const Draw draw = sample(ens, stream);
    sum += prod * draw.b;
    prod = (prod * draw.a).eval();
    prod_norm = op_norm(prod, ens.norm);
    out.depth_used = k;
    if ((k & 31) == 0 || k == depth) trace.push_back(prod_norm);
    const double scale = std::max(vec_norm(sum, ens.norm), 1.0);
    if (prod_norm <= tol * scale) {
      out.converged = true;
      break;
    }
  }
  out.final_norm = prod_norm;
  if (!out.converged && prod_norm >= 1.0) {
    std::ostringstream msg;
    msg << "rde_sample: no decay within depth " << depth
        << " (divergence suspicion); norm trace:";
    for (double v : trace) msg << " " << v;
    throw NumericalError(msg.str());
  }
  out.r = sum;
  return out;
}

KestenCondition kesten_condition(const RdeModel& model,
                                 const std::vector<double>& s_grid) {
  if (s_grid.empty())
    throw ValidationError("kesten_condition: empty s-grid");
  const MatrixEnsemble& ens = model.ensemble;
  if (ens.cone != Cone::kNonnegative)
    throw ValidationError("kesten_condition: nonnegative model required");
  KestenCondition out;
  out.s_grid = s_grid;
  const double d = static_cast<double>(ens.dim);
  // Min-row-sum sample: exact atoms for finite laws, frozen MC otherwise.
  std::vector<double> values;
  std::vector<double> weights;
  if (ens.law_type == LawType::kFinite) {
    for (const auto& atom : ens.atoms) {
      values.push_back(min_row_sum(atom.a));
      weights.push_back(atom.p);
    }
  } else {
    const std::size_t count = 500000;
    values.reserve(count);
    weights.assign(count, 1.0 / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
      RngStream stream(ens.quad_seed, kConditionLabel, i);
      values.push_back(min_row_sum(sample(ens, stream).a));
    }
  }
  for (double s : s_grid) {
    double lhs = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      lhs += weights[i] * std::pow(values[i], s);
    const double rhs = std::pow(d, 0.5 * s);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    if (!out.satisfied && lhs >= rhs) {
      out.satisfied = true;
      out.s0 = s;
    }
  }
  return out;
}

std::vector<MomentBoundRow> moment_bound_scan(const RdeModel& model,
                                              const std::vector<double>& s_grid,
                                              std::size_t samples,
                                              std::uint64_t seed, int depth,
                                              double tol) {
  if (s_grid.empty())
    throw ValidationError("moment_bound_scan: empty s-grid");
  const MatrixEnsemble& ens = model.ensemble;
  if (!ens.has_shift)
    throw ValidationError("moment_bound_scan: model has no shift law B");
  const SphereGrid grid = build_grid(ens, model.grid_resolution);
  // Stationary draws for the empirical moments (shared across rows).
  std::vector<double> norms(samples);
  parallel_for_index(samples, [&](std::size_t p) {
    RngStream stream(seed, kRdeLabel, p);
    const RdeDraw draw = rde_sample(model, depth, tol, stream);
    norms[p] = vec_norm(draw.r, ens.norm);
  });
  const double b_norm = vec_norm(ens.shift, ens.norm);
  std::vector<MomentBoundRow> rows;
  rows.reserve(s_grid.size());
  for (double s : s_grid) {
    if (!(s > 0.0))
      throw ValidationError("moment_bound_scan: s values must be positive");
    MomentBoundRow row;
    row.s = s;
    row.k_s = std::exp(log_mellin(ens, s, grid));
    row.bound_applicable = s >= 1.0;
    if (row.bound_applicable && row.k_s < 1.0) {
      // (E|R|^s)^{1/s} <= sum_n (E||Pi_n||^s)^{1/s} (E|B|^s)^{1/s}; partial
      // terms computed exactly (finite) or by MC, tail summed geometrically
      // with ratio k(s)^{1/s}.
      const int terms = 12;
      double acc = 0.0;
      double t_n = 1.0;  // (E||Pi_0||^s)^{1/s} = 1
      for (int nn = 0; nn <= terms; ++nn) {
        if (nn > 0) {
          double m;
          if (ens.law_type == LawType::kFinite &&
              std::pow(static_cast<double>(ens.atoms.size()),
                       static_cast<double>(nn)) <= 1e6) {
            m = enum_moment(ens, s, nn);
          } else {
            m = mc_moment(ens, s, nn, 20000, seed).mean;
          }
          t_n = std::pow(m, 1.0 / s);
        }
        acc += t_n;
      }
      const double r = std::pow(row.k_s, 1.0 / s);
      acc += t_n * r / (1.0 - r);
      row.bound = acc * b_norm;
      row.finite = true;
    } else {
      row.bound = std::numeric_limits<double>::infinity();
      row.finite = false;
    }
    double emp = 0.0;
    double emp_half = 0.0;
    const std::size_t half = samples / 2;
    for (std::size_t i = 0; i < samples; ++i) {
      const double v = std::pow(norms[i], s);
      emp += v;
      if (i < half) emp_half += v;
    }
    row.empirical = emp / static_cast<double>(samples);
    row.empirical_half = emp_half / static_cast<double>(half);
    row.stable =
        std::abs(std::log(row.empirical / row.empirical_half)) < 0.5;
    rows.push_back(row);
  }
  return rows;
}

TailReport tail_report(const RdeModel& model, const Vector& x,
                       std::size_t samples, std::uint64_t seed, int depth,
                       double tol) {
  const MatrixEnsemble& ens = model.ensemble;
  if (x.size() != ens.dim)
    throw ValidationError("tail_report: direction has wrong dimension");
  if (samples < 100000)
    throw ValidationError("tail_report: samples must be >= 1e5");
  TailReport rep;
  rep.x = x;
  rep.samples = samples;

  // Theory side: alpha and e_alpha for the transposed law.
  const MatrixEnsemble law_t = transposed(ens);
  const SphereGrid grid = build_grid(law_t, model.grid_resolution);
  rep.alpha_theory = solve_alpha(law_t, grid, model.alpha_lo, model.alpha_hi);
  {
    const SpectralProfile prof = dominant_pair(law_t, rep.alpha_theory, grid);
    const ConeVector xn = normalize(x, ens.cone, ens.norm);
    rep.e_alpha_at_x = prof.grid.interpolate(prof.e_s, xn.coords);
  }

  // Stationary sample of projections.
  std::vector<double> proj(samples);
  std::vector<int> depths(samples);
  parallel_for_index(samples, [&](std::size_t p) {
    RngStream stream(seed, kRdeLabel, p);
    const RdeDraw draw = rde_sample(model, depth, tol, stream);
    proj[p] = x.dot(draw.r);
    depths[p] = draw.depth_used;
  });
  double dsum = 0.0;
  for (int dv : depths) {
    dsum += dv;
    rep.max_depth = std::max(rep.max_depth, dv);
  }
  rep.mean_depth = dsum / static_cast<double>(samples);

  std::vector<double> pos;
  pos.reserve(samples);
  for (double v : proj)
    if (v > 0.0) pos.push_back(v);
  rep.positives = pos.size();
  if (pos.size() < 100)
    throw NumericalError(
        "tail_report: insufficient tail data (fewer than 100 positive "
        "projections)");
  std::sort(pos.begin(), pos.end(), std::greater<double>());
  const std::size_t np = pos.size();

  // Hill trace over a geometric k-range in [sqrt(N), N/10].
  const int k_min = std::max(5, static_cast<int>(std::sqrt(
                                    static_cast<double>(np))));
  const int k_max =
      std::max(k_min + 10, static_cast<int>(static_cast<double>(np) / 10.0));
  std::vector<int> ks;
  const int trace_points = 400;
  double lk = std::log(static_cast<double>(k_min));
  const double lstep = (std::log(static_cast<double>(k_max)) - lk) /
                       (trace_points - 1);
  int prev = 0;
  for (int i = 0; i < trace_points; ++i) {
    const int k = static_cast<int>(std::floor(std::exp(lk + lstep * i)));
    if (k > prev && k + 1 < static_cast<int>(np)) {
      ks.push_back(k);
      prev = k;
    }
  }
  std::vector<double> desc_logs(np);
  for (std::size_t i = 0; i < np; ++i) desc_logs[i] = std::log(pos[i]);
  std::vector<double> prefix(np + 1, 0.0);
  for (std::size_t i = 0; i < np; ++i) prefix[i + 1] = prefix[i] + desc_logs[i];
  rep.hill_k.reserve(ks.size());
  rep.hill_alpha.reserve(ks.size());
  for (int k : ks) {
    const double a =
        static_cast<double>(k) / (prefix[k] - k * desc_logs[k]);
    rep.hill_k.push_back(k);
    rep.hill_alpha.push_back(a);
  }

  // Plateau: minimum-variance sliding window over the trace.
  const int len = static_cast<int>(rep.hill_alpha.size());
  const int width = std::max(5, len / 10);
  int best_lo = 0;
  double best_var = std::numeric_limits<double>::infinity();
  for (int lo = 0; lo + width <= len; ++lo) {
    double mean = 0.0;
    for (int i = lo; i < lo + width; ++i) mean += rep.hill_alpha[i];
    mean /= width;
    double var = 0.0;
    for (int i = lo; i < lo + width; ++i) {
      const double dvi = rep.hill_alpha[i] - mean;
      var += dvi * dvi;
    }
    if (var < best_var) {
      best_var = var;
      best_lo = lo;
    }
  }
  rep.window_lo = best_lo;
  rep.window_hi = best_lo + width - 1;
  double ahat = 0.0;
  for (int i = best_lo; i < best_lo + width; ++i) ahat += rep.hill_alpha[i];
  rep.alpha_hat = ahat / width;

  // Bootstrap CI: resample the positive projections, recompute the window
  // mean at the same k values.
  const int k_hi = static_cast<int>(rep.hill_k[rep.window_hi]);
  const int resamples = 200;
  std::vector<double> boot(resamples);
  std::vector<double> top(static_cast<std::size_t>(k_hi) + 2);
  for (int b = 0; b < resamples; ++b) {
    RngStream stream(seed, kBootstrapLabel, static_cast<std::uint64_t>(b));
    // Draw np indices with replacement, keeping only the top k_hi + 2 values
    // via a bounded insertion (partial selection).
    std::vector<double> sel;
    sel.reserve(np);
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t idx = static_cast<std::size_t>(
          stream.uniform01() * static_cast<double>(np));
      sel.push_back(pos[std::min(idx, np - 1)]);
    }
    const std::size_t keep = std::min<std::size_t>(k_hi + 2, np);
    std::nth_element(sel.begin(), sel.begin() + (keep - 1), sel.end(),
                     std::greater<double>());
    std::partial_sort(sel.begin(), sel.begin() + keep, sel.end(),
                      std::greater<double>());
    for (std::size_t i = 0; i < keep; ++i) top[i] = std::log(sel[i]);
    double pm = 0.0;
    double acc2 = 0.0;
    int cnt = 0;
    int pos_i = 0;
    double run = 0.0;
    for (int i = rep.window_lo; i <= rep.window_hi; ++i) {
      const int k = static_cast<int>(rep.hill_k[i]);
      while (pos_i < k) run += top[pos_i++];
      pm = static_cast<double>(k) / (run - k * top[k]);
      acc2 += pm;
      ++cnt;
    }
    boot[b] = acc2 / cnt;
  }
  std::sort(boot.begin(), boot.end());
  rep.ci_lo = boot[static_cast<std::size_t>(0.025 * (resamples - 1))];
  rep.ci_hi = boot[static_cast<std::size_t>(std::ceil(0.975 * (resamples - 1)))];

  // Threshold grid: geometric between the median and the 0.999 quantile.
  const double t_lo = pos[np / 2];
  const double t_hi = pos[static_cast<std::size_t>(0.001 * np)];
  const int nt = 16;
  for (int i = 0; i < nt; ++i) {
    const double t =
        t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (nt - 1));
    // CCDF over all samples (projections can be nonpositive).
    const auto it = std::upper_bound(pos.rbegin(), pos.rend(), t);
    const std::size_t above = static_cast<std::size_t>(pos.rend() - it);
    const double ccdf =
        static_cast<double>(above) / static_cast<double>(samples);
    rep.t_grid.push_back(t);
    rep.ccdf.push_back(ccdf);
    rep.t_alpha_ccdf.push_back(std::pow(t, rep.alpha_hat) * ccdf);
  }
  return rep;
}

}  // namespace ldmatrix
