#include "ldmatrix/ensemble.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/stats.hpp"

namespace ldmatrix {

namespace {

constexpr std::uint64_t kQuadratureLabel = RngStream::op_label("ldmatrix.quadrature");

bool needs_param(const MatrixEnsemble& ens, const char* key, double* out) {
  auto it = ens.params.find(key);
  if (it == ens.params.end()) return false;
  *out = it->second;
  return true;
}

double require_param(const MatrixEnsemble& ens, const char* key) {
  double v = 0.0;
  if (!needs_param(ens, key, &v)) {
    throw ValidationError(std::string("ensemble: missing parameter '") + key +
                          "' for law " + ens.name);
  }
  return v;
}

Matrix arch2_matrix(double a1, double a2, double e2, bool transpose) {
  Matrix m(2, 2);
  m(0, 0) = a1 * e2;
  m(0, 1) = a2;
  m(1, 0) = e2;
  m(1, 1) = 0.0;
  if (transpose) return m.transpose();
  return m;
}

// True when the modulus-dominant eigenvalue is real and algebraically simple
// (strictly larger in modulus than the rest).
bool has_simple_real_dominant(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) return false;
  const auto ev = es.eigenvalues();
  int top = 0;
  for (int i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i]) > std::abs(ev[top])) top = i;
  const double mod = std::abs(ev[top]);
  if (!(mod > 0.0)) return false;
  if (std::abs(ev[top].imag()) > 1e-9 * mod) return false;
  for (int i = 0; i < ev.size(); ++i) {
    if (i == top) continue;
    if (std::abs(ev[i]) > mod * (1.0 - 1e-9)) return false;
  }
  return true;
}

// Allowable nonnegative matrix: a positive entry in every row and column.
bool rows_cols_nonzero(const Matrix& a) {
  for (int j = 0; j < a.cols(); ++j) {
    if (a.col(j).cwiseAbs().maxCoeff() == 0.0) return false;
  }
  for (int i = 0; i < a.rows(); ++i) {
    if (a.row(i).cwiseAbs().maxCoeff() == 0.0) return false;
  }
  return true;
}

// Dominant eigenvalue of a strictly positive matrix (Perron root) by power
// iteration from the all-ones vector.
double perron_root(const Matrix& a) {
  if (a.rows() == 1) return a(0, 0);
  Vector v = Vector::Ones(a.rows());
  v /= v.lpNorm<1>();
  double lam = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Vector w = a * v;
    const double n = w.lpNorm<1>();
    if (n == 0.0) return 0.0;
    w /= n;
    if (it > 4 && std::abs(n - lam) <= 1e-15 * std::max(1.0, std::abs(n))) {
      return n;
    }
    lam = n;
    v = w;
  }
  return lam;
}

}  // namespace

void validate_ensemble(const MatrixEnsemble& ens) {
  if (ens.dim < 1 || ens.dim > 64)
    throw ValidationError("ensemble: dim must be in [1, 64]");
  if (ens.has_shift && ens.shift.size() != ens.dim)
    throw ValidationError("ensemble: shift vector has wrong dimension");
  switch (ens.law_type) {
    case LawType::kFinite: {
      if (ens.atoms.empty())
        throw ValidationError("ensemble: finite law needs at least one atom");
      double psum = 0.0;
      for (const auto& atom : ens.atoms) {
        if (atom.a.rows() != ens.dim || atom.a.cols() != ens.dim)
          throw ValidationError("ensemble: atom dimension mismatch");
        if (!(atom.p >= 0.0))
          throw ValidationError("ensemble: atom probability must be >= 0");
        if (!atom.a.allFinite())
          throw ValidationError("ensemble: atom entries must be finite");
        if (ens.cone == Cone::kNonnegative && atom.a.minCoeff() < 0.0)
          throw ValidationError(
              "ensemble: nonnegative cone requires nonnegative atom entries");
        psum += atom.p;
      }
      if (std::abs(psum - 1.0) > 1e-9)
        throw ValidationError(
            "ensemble: atom probabilities must sum to 1 within 1e-9");
      break;
    }
    case LawType::kScalarLognormal: {
      if (ens.dim != 1)
        throw ValidationError("ensemble: scalar_lognormal requires dim=1");
      const double v = require_param(ens, "v");
      require_param(ens, "m");
      if (!(v > 0.0))
        throw ValidationError("ensemble: scalar_lognormal needs v > 0");
      break;
    }
    case LawType::kScalarLogexp: {
      if (ens.dim != 1)
        throw ValidationError("ensemble: scalar_logexp requires dim=1");
      const double rate = require_param(ens, "rate");
      require_param(ens, "shift_c");
      if (!(rate > 0.0))
        throw ValidationError("ensemble: scalar_logexp needs rate > 0");
      break;
    }
    case LawType::kArch2: {
      if (ens.dim != 2)
        throw ValidationError("ensemble: arch2 requires dim=2");
      const double a1 = require_param(ens, "a1");
      const double a2 = require_param(ens, "a2");
      if (!(a1 >= 0.0) || !(a2 > 0.0))
        throw ValidationError("ensemble: arch2 needs a1 >= 0 and a2 > 0");
      if (a1 + a2 >= 1.0)
        throw ValidationError(
            "ensemble: arch2 needs a1 + a2 < 1 (second-moment stationarity)");
      break;
    }
    case LawType::kEntrywiseLognormal: {
      const double v = require_param(ens, "v");
      require_param(ens, "m");
      if (!(v > 0.0))
        throw ValidationError("ensemble: entrywise_lognormal needs v > 0");
      if (ens.cone != Cone::kNonnegative)
        throw ValidationError(
            "ensemble: entrywise_lognormal lives on the nonnegative cone");
      break;
    }
  }
  if (ens.law_type != LawType::kFinite && ens.quad_count < 16)
    throw ValidationError("ensemble: quadrature count must be >= 16");
}

Draw sample(const MatrixEnsemble& ens, RngStream& stream) {
  Draw d;
  d.has_shift = ens.has_shift;
  if (ens.has_shift) d.b = ens.shift;
  switch (ens.law_type) {
    case LawType::kFinite: {
      std::vector<double> w;
      w.reserve(ens.atoms.size());
      for (const auto& atom : ens.atoms) w.push_back(atom.p);
      const std::size_t i = stream.categorical(w.data(), w.size(), 1.0);
      d.atom_index = static_cast<int>(i);
      d.a = ens.atoms[i].a;
      return d;
    }
    case LawType::kScalarLognormal: {
      const double m = ens.params.at("m");
      const double v = ens.params.at("v");
      d.a = Matrix::Constant(1, 1, std::exp(m + std::sqrt(v) * stream.normal()));
      return d;
    }
    case LawType::kScalarLogexp: {
      const double rate = ens.params.at("rate");
      const double c = ens.params.at("shift_c");
      d.a = Matrix::Constant(1, 1, std::exp(stream.exponential() / rate - c));
      return d;
    }
    case LawType::kArch2: {
      const double a1 = ens.params.at("a1");
      const double a2 = ens.params.at("a2");
      const double e = stream.normal();
      d.a = arch2_matrix(a1, a2, e * e, ens.transpose_law);
      return d;
    }
    case LawType::kEntrywiseLognormal: {
      const double m = ens.params.at("m");
      const double sd = std::sqrt(ens.params.at("v"));
      Matrix a(ens.dim, ens.dim);
      for (int r = 0; r < ens.dim; ++r)
        for (int c = 0; c < ens.dim; ++c)
          a(r, c) = std::exp(m + sd * stream.normal());
      if (ens.transpose_law) a.transposeInPlace();
      d.a = a;
      return d;
    }
  }
  throw ValidationError("ensemble: unknown law type");
}

QuadratureSet make_quadrature(const MatrixEnsemble& ens) {
  QuadratureSet q;
  if (ens.law_type == LawType::kFinite) {
    q.draws.reserve(ens.atoms.size());
    q.weights.reserve(ens.atoms.size());
    int idx = 0;
    for (const auto& atom : ens.atoms) {
      Draw d;
      d.atom_index = idx++;
      d.a = atom.a;
      d.has_shift = ens.has_shift;
      if (ens.has_shift) d.b = ens.shift;
      q.draws.push_back(std::move(d));
      q.weights.push_back(atom.p);
    }
    return q;
  }
  q.draws.reserve(ens.quad_count);
  q.weights.assign(ens.quad_count, 1.0 / static_cast<double>(ens.quad_count));
  for (std::size_t i = 0; i < ens.quad_count; ++i) {
    RngStream stream(ens.quad_seed, kQuadratureLabel, i);
    q.draws.push_back(sample(ens, stream));
  }
  return q;
}

double vec_norm(const Vector& v, NormKind norm) {
  return norm == NormKind::kOne ? v.lpNorm<1>() : v.norm();
}

double op_norm(const Matrix& a, NormKind norm) {
  if (norm == NormKind::kOne) {
    double best = 0.0;
    for (int j = 0; j < a.cols(); ++j)
      best = std::max(best, a.col(j).lpNorm<1>());
    return best;
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

ConeVector normalize(const Vector& x, Cone cone, NormKind norm) {
  const double n = vec_norm(x, norm);
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericalError("normalize: zero or non-finite vector");
  ConeVector out;
  out.norm = norm;
  out.coords = x / n;
  if (cone == Cone::kInvertible) {
    for (int i = 0; i < out.coords.size(); ++i) {
      if (out.coords(i) != 0.0) {
        if (out.coords(i) < 0.0) out.coords = -out.coords;
        break;
      }
    }
  }
  return out;
}

ActionResult act(const Matrix& a, const ConeVector& x, Cone cone) {
  Vector y = a * x.coords;
  const double n = vec_norm(y, x.norm);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw NumericalError(
        "act: degenerate action, |a.x| is zero or non-finite");
  }
  ActionResult res;
  res.x1 = normalize(y, cone, x.norm);
  res.increment = std::log(n);
  return res;
}

IotaResult iota(const Matrix& a, Cone cone, NormKind norm) {
  if (cone == Cone::kNonnegative && norm == NormKind::kOne &&
      a.minCoeff() >= 0.0) {
    // |a.x|_1 is linear on the simplex, minimized at a vertex: min col sum.
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < a.cols(); ++j)
      best = std::min(best, a.col(j).lpNorm<1>());
    return {best, true};
  }
  if (cone == Cone::kInvertible && norm == NormKind::kTwo) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return {svd.singularValues()(svd.singularValues().size() - 1), true};
  }
  // Grid lower-bound fallback over low-discrepancy cone directions.
  const int d = static_cast<int>(a.cols());
  const std::size_t count = 512;
  double best = std::numeric_limits<double>::infinity();
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  for (std::size_t i = 0; i < count; ++i) {
    Vector x(d);
    for (int k = 0; k < d; ++k) {
      const double u = halton(i, primes[k % 10]);
      x(k) = cone == Cone::kNonnegative
                 ? -std::log(u)
                 : -std::log(u) * (halton(i + 977, primes[(k + 3) % 10]) < 0.5
                                       ? -1.0
                                       : 1.0);
    }
    const double n = vec_norm(x, norm);
    if (!(n > 0.0)) continue;
    best = std::min(best, vec_norm(a * (x / n), norm));
  }
  return {best, false};
}

double cone_metric(const ConeVector& x, const ConeVector& y, Cone cone) {
  if (cone == Cone::kNonnegative) {
    // Hilbert projective metric; +inf when supports differ.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = 0; i < x.coords.size(); ++i) {
      const double xi = x.coords(i);
      const double yi = y.coords(i);
      if (xi == 0.0 && yi == 0.0) continue;
      if (xi <= 0.0 || yi <= 0.0)
        return std::numeric_limits<double>::infinity();
      const double r = xi / yi;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (!(hi > 0.0)) return 0.0;
    return std::log(hi / lo);
  }
  const double nx = x.coords.norm();
  const double ny = y.coords.norm();
  double c = std::abs(x.coords.dot(y.coords)) / (nx * ny);
  c = std::min(1.0, std::max(-1.0, c));
  return std::acos(c);
}

ContractionResult contraction_coefficient(const Matrix& a,
                                          const std::vector<Vector>& nodes,
                                          Cone cone, NormKind norm) {
  ContractionResult out;
  out.coefficient = 0.0;
  std::vector<ConeVector> xs;
  std::vector<ConeVector> axs;
  xs.reserve(nodes.size());
  axs.reserve(nodes.size());
  for (const auto& v : nodes) {
    ConeVector x = normalize(v, cone, norm);
    axs.push_back(act(a, x, cone).x1);
    xs.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double d0 = cone_metric(xs[i], xs[j], cone);
      if (!(d0 > 0.0) || !std::isfinite(d0)) continue;
      const double d1 = cone_metric(axs[i], axs[j], cone);
      const double c = d1 / d0;
      if (c > out.coefficient) {
        out.coefficient = c;
        out.arg_i = static_cast<int>(i);
        out.arg_j = static_cast<int>(j);
      }
    }
  }
  return out;
}

namespace {

// Bit pattern of the support of a d x d nonnegative matrix (d <= 8).
std::uint64_t support_pattern(const Matrix& a) {
  std::uint64_t bits = 0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      if (a(r, c) > 0.0) bits |= 1ULL << (r * a.cols() + c);
  return bits;
}

// Boolean matrix product of support patterns.
std::uint64_t pattern_product(std::uint64_t x, std::uint64_t y, int d) {
  std::uint64_t out = 0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      bool hit = false;
      for (int k = 0; k < d && !hit; ++k) {
        hit = ((x >> (r * d + k)) & 1ULL) && ((y >> (k * d + c)) & 1ULL);
      }
      if (hit) out |= 1ULL << (r * d + c);
    }
  }
  return out;
}

}  // namespace

ConditionReport check_conditions(const MatrixEnsemble& ens) {
  validate_ensemble(ens);
  ConditionReport rep;
  std::ostringstream notes;

  if (ens.law_type != LawType::kFinite) {
    // Continuous laws: allowability holds by construction for the supported
    // parametric families (positive scalars; arch2/entrywise matrices have
    // nonzero columns almost surely), and the additive increment has an
    // absolutely continuous component, which rules out arithmetic support.
    rep.allowable_all = true;
    rep.positive_exists = true;
    rep.positive_length = ens.law_type == LawType::kArch2 ? 2 : 1;
    rep.proximality_hint = true;
    rep.arithmetic = ArithmeticStatus::kNonArithmeticCertified;
    notes << "parametric law with an absolutely continuous increment "
             "component; certified non-arithmetic analytically";
    rep.notes = notes.str();
    return rep;
  }

  const int d = ens.dim;
  // Allowability of every atom.
  rep.allowable_all = true;
  for (const auto& atom : ens.atoms) {
    bool ok = ens.cone == Cone::kNonnegative
                  ? rows_cols_nonzero(atom.a)
                  : std::abs(atom.a.determinant()) >
                        1e-12 * std::pow(op_norm(atom.a, ens.norm),
                                         static_cast<double>(d));
    if (!ok) {
      rep.allowable_all = false;
      notes << "atom fails allowability (zero row/column or singular); ";
      break;
    }
  }

  // Positivity: BFS over support patterns of products (nonnegative cone).
  if (ens.cone == Cone::kNonnegative && d <= 8) {
    const std::uint64_t full = (d * d == 64)
                                   ? ~0ULL
                                   : ((1ULL << (d * d)) - 1ULL);
    std::vector<std::uint64_t> frontier;
    std::set<std::uint64_t> seen;
    for (const auto& atom : ens.atoms) {
      const std::uint64_t pat = support_pattern(atom.a);
      if (seen.insert(pat).second) frontier.push_back(pat);
    }
    for (int len = 1; len <= 8 && !rep.positive_exists; ++len) {
      for (std::uint64_t pat : frontier) {
        if (pat == full) {
          rep.positive_exists = true;
          rep.positive_length = len;
          break;
        }
      }
      if (rep.positive_exists) break;
      std::vector<std::uint64_t> next;
      for (std::uint64_t pat : frontier) {
        for (const auto& atom : ens.atoms) {
          const std::uint64_t np =
              pattern_product(pat, support_pattern(atom.a), d);
          if (seen.insert(np).second) next.push_back(np);
        }
      }
      frontier.swap(next);
      if (frontier.empty()) break;
    }
    if (!rep.positive_exists)
      notes << "no strictly positive product found up to length 8; ";
  } else if (ens.cone == Cone::kInvertible) {
    rep.positive_exists = false;
    notes << "positivity test not applicable to the invertible cone; ";
  }

  // Proximality hint: a strictly positive product has a real simple dominant
  // eigenvalue (Perron-Frobenius); otherwise scan atoms and pair products
  // for a real eigenvalue strictly dominating in modulus.
  if (rep.positive_exists) {
    rep.proximality_hint = true;
  } else {
    std::vector<Matrix> probe;
    for (const auto& atom : ens.atoms) probe.push_back(atom.a);
    for (const auto& ai : ens.atoms)
      for (const auto& aj : ens.atoms) probe.push_back(ai.a * aj.a);
    for (const auto& m : probe) {
      if (has_simple_real_dominant(m)) {
        rep.proximality_hint = true;
        break;
      }
    }
  }

  // Non-arithmeticity certificate: scan ratios of log Perron roots of
  // strictly positive products up to length 3.
  std::vector<Matrix> products;
  const std::size_t na = ens.atoms.size();
  for (std::size_t i = 0; i < na; ++i) products.push_back(ens.atoms[i].a);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j)
      products.push_back(ens.atoms[i].a * ens.atoms[j].a);
  if (na <= 8) {
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < na; ++j)
        for (std::size_t k = 0; k < na; ++k)
          products.push_back(ens.atoms[i].a * ens.atoms[j].a *
                             ens.atoms[k].a);
  }
  std::vector<double> logs;
  for (const auto& m : products) {
    if (ens.cone == Cone::kNonnegative && m.minCoeff() <= 0.0) continue;
    const double lam =
        ens.cone == Cone::kNonnegative ? perron_root(m) : 0.0;
    if (lam > 0.0) {
      const double lg = std::log(lam);
      if (std::abs(lg) > 1e-12) logs.push_back(lg);
    }
  }
  double best_score = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (std::size_t j = 0; j < logs.size(); ++j) {
      if (i == j) continue;
      const double r = logs[i] / logs[j];
      const BestRational br = best_rational(r, 1000000);
      const double score = br.err / std::max(1.0, std::abs(r));
      if (score > best_score) {
        best_score = score;
        rep.log_ratio = r;
        rep.best_p = br.p;
        rep.best_q = br.q;
        rep.rational_distance = br.err;
      }
    }
  }
  if (best_score > 1e-13) {
    rep.arithmetic = ArithmeticStatus::kNonArithmeticCertified;
    notes << "ratio of log spectral radii " << rep.log_ratio
          << " is at distance " << rep.rational_distance
          << " from its best rational with denominator <= 1e6";
  } else {
    rep.arithmetic = ArithmeticStatus::kInconclusive;
    notes << "all examined log-spectral-radius ratios admit close rational "
             "approximations (possible lattice support)";
  }
  rep.notes = notes.str();
  return rep;
}

MatrixEnsemble transposed(const MatrixEnsemble& ens) {
  MatrixEnsemble out = ens;
  if (ens.law_type == LawType::kFinite) {
    for (auto& atom : out.atoms) atom.a = atom.a.transpose().eval();
  } else {
    out.transpose_law = !ens.transpose_law;
  }
  out.name = ens.name + "_transposed";
  return out;
}

MatrixEnsemble preset_two_point() {
  MatrixEnsemble ens;
  ens.dim = 1;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(2);
  ens.atoms[0].a = Matrix::Constant(1, 1, 2.0);
  ens.atoms[0].p = 0.2;
  ens.atoms[1].a = Matrix::Constant(1, 1, 0.5);
  ens.atoms[1].p = 0.8;
  ens.name = "two_point";
  return ens;
}

MatrixEnsemble preset_e3() {
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(2);
  ens.atoms[0].a = Matrix(2, 2);
  ens.atoms[0].a << 2.0, 1.0, 1.0, 1.0;
  ens.atoms[0].p = 0.5;
  ens.atoms[1].a = Matrix(2, 2);
  ens.atoms[1].a << 0.3, 0.2, 0.1, 0.4;
  ens.atoms[1].p = 0.5;
  ens.name = "e3";
  return ens;
}

MatrixEnsemble preset_e4() {
  MatrixEnsemble base = preset_e3();
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kFinite;
  ens.atoms.resize(4);
  ens.atoms[0].a = base.atoms[0].a;
  ens.atoms[0].p = 0.25;
  ens.atoms[1].a = 1.7 * base.atoms[0].a;
  ens.atoms[1].p = 0.25;
  ens.atoms[2].a = base.atoms[1].a;
  ens.atoms[2].p = 0.25;
  ens.atoms[3].a = 2.3 * base.atoms[1].a;
  ens.atoms[3].p = 0.25;
  ens.name = "e4";
  return ens;
}

MatrixEnsemble preset_lognormal(double m, double v) {
  MatrixEnsemble ens;
  ens.dim = 1;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kScalarLognormal;
  ens.params["m"] = m;
  ens.params["v"] = v;
  ens.name = "lognormal";
  return ens;
}

MatrixEnsemble preset_logexp(double rate, double shift_c) {
  MatrixEnsemble ens;
  ens.dim = 1;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kScalarLogexp;
  ens.params["rate"] = rate;
  ens.params["shift_c"] = shift_c;
  ens.name = "logexp";
  return ens;
}

MatrixEnsemble preset_arch2(double a1, double a2, bool transpose) {
  MatrixEnsemble ens;
  ens.dim = 2;
  ens.cone = Cone::kNonnegative;
  ens.norm = NormKind::kOne;
  ens.law_type = LawType::kArch2;
  ens.params["a1"] = a1;
  ens.params["a2"] = a2;
  ens.transpose_law = transpose;
  ens.has_shift = true;
  ens.shift = Vector::Zero(2);
  ens.shift(0) = 1.0;
  ens.name = transpose ? "arch2_transposed" : "arch2";
  validate_ensemble(ens);
  return ens;
}

}  // namespace ldmatrix
