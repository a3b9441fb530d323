// Python bindings for the ldmatrix core library.
//
// The C++ structs stay opaque on the Python side (Ensemble, Model); every
// result comes back as plain dicts/lists produced from the library's JSON
// serialization, so the Python surface needs no numpy dependency.  Non-finite
// numbers (NaN / inf) arrive in Python as None, mirroring the JSON encoding.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldmatrix/cli.hpp"
#include "ldmatrix/ensemble.hpp"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/grid.hpp"
#include "ldmatrix/io.hpp"
#include "ldmatrix/kesten.hpp"
#include "ldmatrix/ldp.hpp"
#include "ldmatrix/parallel.hpp"
#include "ldmatrix/spectral.hpp"
#include "ldmatrix/tilt.hpp"
#include "ldmatrix/version.hpp"

namespace py = pybind11;

namespace {

using namespace ldmatrix;

struct PyEnsemble {
  MatrixEnsemble ens;
};

struct PyModel {
  RdeModel model;
};

// Accepts either a JSON document or a bare preset name.
Json parse_spec(const std::string& text) {
  if (Json::accept(text)) {
    return Json::parse(text);
  }
  return Json(text);
}

py::object json_to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = v[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<double> from_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

ConeVector start_vector(const MatrixEnsemble& ens,
                        const std::optional<std::vector<double>>& x0) {
  Vector raw;
  if (x0.has_value()) {
    if (static_cast<int>(x0->size()) != ens.dim) {
      throw ValidationError(
          "x0 must have length equal to the ensemble dimension");
    }
    raw = to_vector(*x0);
  } else {
    raw = Vector::Ones(ens.dim);
  }
  return normalize(raw, ens.cone, ens.norm);
}

Json mean_se_json(const MeanSE& m) {
  return Json{{"mean", m.mean}, {"se", m.se}, {"n", m.n}};
}

Json ldp_json(const LdpEstimate& est) {
  return Json{{"n", est.n},
              {"q", est.q},
              {"s", est.s},
              {"tilted", est.tilted},
              {"tilted_se", est.tilted_se},
              {"tilted_prob", est.tilted_prob},
              {"tilted_prob_se", est.tilted_prob_se},
              {"log_tilted", est.log_tilted},
              {"log_tilted_prob", est.log_tilted_prob},
              {"prediction", est.prediction},
              {"log_prediction", est.log_prediction},
              {"ratio", est.ratio},
              {"hits", est.hits},
              {"paths", est.paths},
              {"ess_fraction", est.ess_fraction},
              {"ess_warning", est.ess_warning},
              {"max_step_residual", est.max_step_residual},
              {"x0", from_vector(est.x0.coords)}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Spectral methods, exponential tilting, and heavy-tail diagnostics for "
      "products of random matrices";
  m.attr("__version__") = kVersion;

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_RuntimeError);

  py::class_<PyEnsemble>(m, "Ensemble",
                         "Matrix law plus cone/norm conventions.  Construct "
                         "from a preset name ('two_point', 'e3', 'e4', "
                         "'lognormal', 'logexp', 'arch2') or a JSON document "
                         "using the same schema as the CLI configs.")
      .def(py::init([](const std::string& spec) {
             return PyEnsemble{ensemble_from_json(parse_spec(spec))};
           }),
           py::arg("spec"))
      .def_property_readonly(
          "dim", [](const PyEnsemble& self) { return self.ens.dim; })
      .def_property_readonly(
          "name", [](const PyEnsemble& self) { return self.ens.name; })
      .def("to_json",
           [](const PyEnsemble& self) {
             return ensemble_to_json(self.ens).dump(2);
           })
      .def("__repr__", [](const PyEnsemble& self) {
        return "<ldmatrix.Ensemble '" + self.ens.name +
               "' dim=" + std::to_string(self.ens.dim) + ">";
      });

  py::class_<PyModel>(m, "Model",
                      "Stochastic recurrence model R =d= M R + B; build with "
                      "arch2_model() or lognormal_model().")
      .def_property_readonly(
          "dim", [](const PyModel& self) { return self.model.ensemble.dim; })
      .def_property_readonly(
          "name", [](const PyModel& self) { return self.model.ensemble.name; })
      .def("__repr__", [](const PyModel& self) {
        return "<ldmatrix.Model '" + self.model.ensemble.name +
               "' dim=" + std::to_string(self.model.ensemble.dim) + ">";
      });

  m.def(
      "arch2_model",
      [](double a1, double a2) { return PyModel{arch2_preset(a1, a2)}; },
      py::arg("a1"), py::arg("a2"),
      "ARCH(2) squared-returns model: M = [[a1 e^2, a2], [e^2, 0]] with "
      "e ~ N(0,1), B = (1, 0); requires a1, a2 > 0 and a1 + a2 < 1.");

  m.def(
      "lognormal_model",
      [](double m_, double v) { return PyModel{ldmatrix::lognormal_model(m_, v)}; },
      py::arg("m"), py::arg("v"),
      "Scalar recurrence with log M ~ N(m, v) and B = 1.");

  m.def(
      "check_conditions",
      [](const PyEnsemble& e) {
        Json out;
        {
          py::gil_scoped_release release;
          out = condition_report_to_json(ldmatrix::check_conditions(e.ens));
        }
        return json_to_py(out);
      },
      py::arg("ensemble"),
      "Structural diagnosis: allowability, positivity, proximality hint, and "
      "the arithmeticity certificate for the additive increments.");

  m.def(
      "log_mellin",
      [](const PyEnsemble& e, double s, int resolution) {
        double out = 0.0;
        {
          py::gil_scoped_release release;
          const SphereGrid grid = build_grid(e.ens, resolution);
          out = ldmatrix::log_mellin(e.ens, s, grid);
        }
        return out;
      },
      py::arg("ensemble"), py::arg("s"), py::arg("resolution") = 512,
      "Lambda(s) = log k(s): exact Mellin transform for the closed-form "
      "scalar laws, dominant eigenvalue of the discretized transfer operator "
      "otherwise.");

  m.def(
      "cgf_profile",
      [](const PyEnsemble& e, const std::vector<double>& s_values,
         int resolution, double fd_step) {
        Json out = Json::array();
        {
          py::gil_scoped_release release;
          const SphereGrid grid = build_grid(e.ens, resolution);
          for (const SpectralProfile& p :
               ldmatrix::cgf_profile(e.ens, grid, s_values, fd_step)) {
            out.push_back(spectral_profile_to_json(p));
          }
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("s_values"), py::arg("resolution") = 512,
      py::arg("fd_step") = 1e-3,
      "Spectral profiles at each s: k, log k, eigenfunction e_s, "
      "eigen-weights nu_s, and the cumulant derivatives q = Lambda', "
      "sigma2 = Lambda'', m3 = Lambda''' by five-point finite differences.");

  m.def(
      "solve_alpha",
      [](const PyEnsemble& e, double s_lo, double s_hi, int resolution) {
        double out = 0.0;
        {
          py::gil_scoped_release release;
          const SphereGrid grid = build_grid(e.ens, resolution);
          out = ldmatrix::solve_alpha(e.ens, grid, s_lo, s_hi);
        }
        return out;
      },
      py::arg("ensemble"), py::arg("s_lo") = 0.05, py::arg("s_hi") = 10.0,
      py::arg("resolution") = 512,
      "Positive root of Lambda(alpha) = 0 by bisection on [s_lo, s_hi].");

  m.def(
      "rate_function",
      [](const PyEnsemble& e, double q, int resolution, double s_lo,
         double s_hi) {
        Json out;
        {
          py::gil_scoped_release release;
          const SphereGrid grid = build_grid(e.ens, resolution);
          const RateFunctionPoint rf =
              ldmatrix::rate_function(e.ens, grid, q, s_lo, s_hi);
          out = Json{{"q", rf.q}, {"s", rf.s}, {"lambda_star", rf.lambda_star}};
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("q"), py::arg("resolution") = 512,
      py::arg("s_lo") = 0.0, py::arg("s_hi") = 40.0,
      "Legendre point of the rate function: solves Lambda'(s) = q and "
      "returns {q, s, lambda_star = s q - Lambda(s)}.");

  m.def(
      "lyapunov",
      [](const PyEnsemble& e, int n, std::size_t paths, std::uint64_t seed) {
        Json out;
        {
          py::gil_scoped_release release;
          out = mean_se_json(ldmatrix::lyapunov(e.ens, n, paths, seed));
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("n"), py::arg("paths") = 1000,
      py::arg("seed") = 0,
      "Monte Carlo top Lyapunov exponent: mean of (1/n) log ||Pi_n|| with "
      "jackknife standard error.");

  m.def(
      "enum_moment",
      [](const PyEnsemble& e, double s, int n) {
        double out = 0.0;
        {
          py::gil_scoped_release release;
          out = ldmatrix::enum_moment(e.ens, s, n);
        }
        return out;
      },
      py::arg("ensemble"), py::arg("s"), py::arg("n"),
      "Exact E ||A_n ... A_1||^s for finite-support laws by enumeration.");

  m.def(
      "mc_moment",
      [](const PyEnsemble& e, double s, int n, std::size_t paths,
         std::uint64_t seed) {
        Json out;
        {
          py::gil_scoped_release release;
          out = mean_se_json(ldmatrix::mc_moment(e.ens, s, n, paths, seed));
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("s"), py::arg("n"),
      py::arg("paths") = 20000, py::arg("seed") = 0,
      "Monte Carlo estimate of E ||A_n ... A_1||^s.");

  m.def(
      "cumulants",
      [](const PyEnsemble& e, double s, int n, std::size_t paths,
         std::uint64_t seed, int resolution) {
        Json out;
        {
          py::gil_scoped_release release;
          const SphereGrid grid = build_grid(e.ens, resolution);
          const SpectralProfile prof =
              ldmatrix::cgf_profile(e.ens, grid, {s}).front();
          const CumulantEstimates est =
              cumulant_estimates(e.ens, prof, n, paths, seed);
          out = Json{{"s", s},
                     {"n", n},
                     {"sigma2", mean_se_json(est.sigma2)},
                     {"m3", mean_se_json(est.m3)},
                     {"q_spectral", prof.q},
                     {"sigma2_spectral", prof.sigma2},
                     {"m3_spectral", prof.m3}};
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("s"), py::arg("n") = 200,
      py::arg("paths") = 10000, py::arg("seed") = 0,
      py::arg("resolution") = 512,
      "Monte Carlo (1/n)-scaled central moments of S_n under the shifted "
      "measure, next to the spectral values they should match.");

  m.def(
      "ldp_tail",
      [](const PyEnsemble& e, int n, std::optional<double> q,
         std::optional<double> s, std::size_t paths, std::uint64_t seed,
         int resolution, const std::optional<std::vector<double>>& x0,
         std::size_t naive_paths) {
        Json out;
        {
          py::gil_scoped_release release;
          if (q.has_value() == s.has_value()) {
            throw ValidationError("pass exactly one of q= or s=");
          }
          const SphereGrid grid = build_grid(e.ens, resolution);
          const double s_star =
              q.has_value() ? ldmatrix::rate_function(e.ens, grid, *q).s : *s;
          const SpectralProfile prof =
              ldmatrix::cgf_profile(e.ens, grid, {s_star}).front();
          const double q_star = q.has_value() ? *q : prof.q;
          const ConeVector start = start_vector(e.ens, x0);
          out = ldp_json(
              tilted_tail(start, e.ens, prof, n, q_star, paths, seed));
          out["lambda_star"] = s_star * q_star - prof.log_k;
          out["sigma2"] = prof.sigma2;
          if (naive_paths > 0) {
            const NaiveTail nv =
                naive_tail(start, e.ens, n, q_star, naive_paths, seed);
            out["naive"] = nv.estimate;
            out["naive_se"] = nv.se;
            out["naive_hits"] = nv.hits;
            out["naive_paths"] = nv.paths;
            if (nv.hits == 0) {
              out["naive_zero_hit_upper"] = nv.zero_hit_upper;
            }
          }
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("n"), py::kw_only(),
      py::arg("q") = py::none(), py::arg("s") = py::none(),
      py::arg("paths") = 100000, py::arg("seed") = 0,
      py::arg("resolution") = 512, py::arg("x0") = py::none(),
      py::arg("naive_paths") = 0,
      "Tail probability P_x(S_n >= n q) by exact exponential tilting, with "
      "the Bahadur-Rao prediction and (optionally) a naive Monte Carlo "
      "baseline.  Pass the threshold q or the tilt parameter s (then "
      "q = Lambda'(s)).");

  m.def(
      "edgeworth",
      [](const PyEnsemble& e, int n, std::optional<double> q,
         std::optional<double> s, std::size_t paths, std::uint64_t seed,
         int resolution, const std::optional<std::vector<double>>& x0) {
        Json out;
        {
          py::gil_scoped_release release;
          if (q.has_value() == s.has_value()) {
            throw ValidationError("pass exactly one of q= or s=");
          }
          const SphereGrid grid = build_grid(e.ens, resolution);
          const double s_star =
              q.has_value() ? ldmatrix::rate_function(e.ens, grid, *q).s : *s;
          const SpectralProfile prof =
              ldmatrix::cgf_profile(e.ens, grid, {s_star}).front();
          const BiasFunction bias = bias_function(prof, e.ens, grid);
          const ConeVector start = start_vector(e.ens, x0);
          const EdgeworthReport rep = edgeworth_curve(
              start, e.ens, prof, bias, n, paths, default_u_grid(), seed);
          out = Json{{"n", rep.n},
                     {"paths", rep.paths},
                     {"u", rep.u},
                     {"f_hat", rep.f_hat},
                     {"g_n", rep.g_n},
                     {"sup_gap", rep.sup_gap},
                     {"scaled_gap", rep.scaled_gap},
                     {"s", s_star},
                     {"q", prof.q},
                     {"sigma2", prof.sigma2},
                     {"m3", prof.m3},
                     {"bias_recursion_residual", bias.recursion_residual},
                     {"bias_truncation_residual", bias.truncation_residual},
                     {"drift_discrete", bias.drift_discrete}};
        }
        return json_to_py(out);
      },
      py::arg("ensemble"), py::arg("n"), py::kw_only(),
      py::arg("q") = py::none(), py::arg("s") = py::none(),
      py::arg("paths") = 100000, py::arg("seed") = 0,
      py::arg("resolution") = 512, py::arg("x0") = py::none(),
      "Empirical CDF of (S_n - n q)/(sigma sqrt n) under the shifted measure "
      "against the one-term Edgeworth expansion with the bias correction.");

  m.def(
      "kesten_condition",
      [](const PyModel& mo, const std::vector<double>& s_grid) {
        Json out;
        {
          py::gil_scoped_release release;
          const KestenCondition c = ldmatrix::kesten_condition(mo.model, s_grid);
          out = Json{{"satisfied", c.satisfied},
                     {"s0", c.s0},
                     {"s_grid", c.s_grid},
                     {"lhs", c.lhs},
                     {"rhs", c.rhs}};
        }
        return json_to_py(out);
      },
      py::arg("model"), py::arg("s_grid"),
      "Checks E[(min row sum of M)^s] >= d^(s/2) over the grid; a satisfied "
      "point forces k(alpha) = 1 to have a solution.");

  m.def(
      "moment_bound_scan",
      [](const PyModel& mo, const std::vector<double>& s_grid,
         std::size_t samples, std::uint64_t seed, int depth, double tol) {
        Json out = Json::array();
        {
          py::gil_scoped_release release;
          for (const MomentBoundRow& r : ldmatrix::moment_bound_scan(
                   mo.model, s_grid, samples, seed, depth, tol)) {
            out.push_back(Json{{"s", r.s},
                               {"k_s", r.k_s},
                               {"finite", r.finite},
                               {"bound", r.bound},
                               {"bound_applicable", r.bound_applicable},
                               {"empirical", r.empirical},
                               {"empirical_half", r.empirical_half},
                               {"stable", r.stable}});
          }
        }
        return json_to_py(out);
      },
      py::arg("model"), py::arg("s_grid"), py::arg("samples") = 20000,
      py::arg("seed") = 0, py::arg("depth") = 400, py::arg("tol") = 1e-12,
      "Series bound on (E|R|^s)^(1/s) where k(s) < 1 (s >= 1), next to "
      "empirical moments with a doubling-stability flag.  Infinite bounds "
      "arrive as None.");

  m.def(
      "tail_report",
      [](const PyModel& mo, const std::optional<std::vector<double>>& x,
         std::size_t samples, std::uint64_t seed, int depth, double tol) {
        Json out;
        {
          py::gil_scoped_release release;
          Vector xv;
          if (x.has_value()) {
            xv = to_vector(*x);
          } else {
            xv = Vector::Zero(mo.model.ensemble.dim);
            xv[0] = 1.0;
          }
          const TailReport rep =
              ldmatrix::tail_report(mo.model, xv, samples, seed, depth, tol);
          out = Json{{"x", from_vector(rep.x)},
                     {"samples", rep.samples},
                     {"positives", rep.positives},
                     {"t_grid", rep.t_grid},
                     {"ccdf", rep.ccdf},
                     {"t_alpha_ccdf", rep.t_alpha_ccdf},
                     {"hill_k", rep.hill_k},
                     {"hill_alpha", rep.hill_alpha},
                     {"alpha_hat", rep.alpha_hat},
                     {"ci_lo", rep.ci_lo},
                     {"ci_hi", rep.ci_hi},
                     {"alpha_theory", rep.alpha_theory},
                     {"e_alpha_at_x", rep.e_alpha_at_x},
                     {"window_lo", rep.window_lo},
                     {"window_hi", rep.window_hi},
                     {"mean_depth", rep.mean_depth},
                     {"max_depth", rep.max_depth}};
        }
        return json_to_py(out);
      },
      py::arg("model"), py::kw_only(), py::arg("x") = py::none(),
      py::arg("samples") = 1000000, py::arg("seed") = 0,
      py::arg("depth") = 400, py::arg("tol") = 1e-12,
      "Kesten tail diagnostics for <R, x>: Hill plateau estimate of the tail "
      "index with a bootstrap interval, against alpha from k(alpha) = 1 on "
      "the transposed law.  x defaults to the first basis direction.");

  m.def(
      "rde_sample",
      [](const PyModel& mo, int depth, double tol, std::uint64_t seed,
         std::uint64_t path) {
        Json out;
        {
          py::gil_scoped_release release;
          RngStream stream(seed, RngStream::op_label("ldmatrix.rde"), path);
          const RdeDraw d = ldmatrix::rde_sample(mo.model, depth, tol, stream);
          out = Json{{"r", from_vector(d.r)},
                     {"depth_used", d.depth_used},
                     {"converged", d.converged},
                     {"final_norm", d.final_norm}};
        }
        return json_to_py(out);
      },
      py::arg("model"), py::kw_only(), py::arg("depth") = 400,
      py::arg("tol") = 1e-12, py::arg("seed") = 0, py::arg("path") = 0,
      "One stationary draw via the truncated backward series.");

  m.def(
      "run",
      [](const std::string& command, const std::string& config,
         std::uint64_t seed, const std::string& out_dir, int threads,
         const std::string& format) {
        RunConfig rc;
        rc.command = command;
        if (!Json::accept(config)) {
          throw ValidationError("config must be a JSON document");
        }
        rc.config = Json::parse(config);
        rc.seed = seed;
        rc.seed_set = true;
        rc.output_dir = out_dir;
        rc.threads = threads;
        rc.format = format;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = ldmatrix::run(rc);
        }
        return code;
      },
      py::arg("command"), py::arg("config"), py::kw_only(), py::arg("seed"),
      py::arg("out_dir"), py::arg("threads") = 1, py::arg("format") = "csv",
      "Runs a CLI command (spectral, ldp, edgeworth, tails, diagnose) with a "
      "JSON config string; writes artifacts plus manifest.json to out_dir "
      "and returns the CLI exit code (0 ok, 2 validation, 3 numerical).");

  m.def("set_worker_threads", &set_worker_threads, py::arg("n"),
        "Sets the process-wide worker thread count (results are identical "
        "for any value).");
  m.def("worker_threads", &worker_threads,
        "Current process-wide worker thread count.");
}
