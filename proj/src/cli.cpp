#include "ldmatrix/cli.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "ldmatrix/errors.hpp"
#include "ldmatrix/grid.hpp"
#include "ldmatrix/kesten.hpp"
#include "ldmatrix/ldp.hpp"
#include "ldmatrix/log.hpp"
#include "ldmatrix/parallel.hpp"
#include "ldmatrix/spectral.hpp"
#include "ldmatrix/stats.hpp"
#include "ldmatrix/tilt.hpp"
#include "ldmatrix/version.hpp"

namespace ldmatrix {

namespace {

struct RunContext {
  const RunConfig& cfg;
  std::vector<std::string> artifacts;  // data files written so far
  Json summaries = Json::object();

  std::string table(const std::string& base,
                    const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
    const std::string name =
        write_table(cfg.output_dir, base, header, rows, cfg.format);
    artifacts.push_back(name);
    return name;
  }
  void json_artifact(const std::string& name, const Json& j) {
    write_json_file(cfg.output_dir / name, j);
    artifacts.push_back(name);
  }
};

double get_num(const Json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

std::int64_t get_int(const Json& j, const char* key, std::int64_t dflt) {
  return j.contains(key) ? j.at(key).get<std::int64_t>() : dflt;
}

MatrixEnsemble ensemble_from_config(const Json& config) {
  if (!config.contains("ensemble"))
    throw ValidationError("config: missing 'ensemble'");
  return ensemble_from_json(config.at("ensemble"));
}

Vector vector_param(const Json& j, const char* key, int dim) {
  const Json& vj = j.at(key);
  if (!vj.is_array() || static_cast<int>(vj.size()) != dim)
    throw ValidationError(std::string("config: '") + key +
                          "' must be an array of length dim");
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = vj.at(i).get<double>();
  return v;
}

// Resolves the target tilt parameter: either "s" directly or "q" through
// the Legendre relation, then evaluates the spectral profile there.
SpectralProfile profile_for_target(const MatrixEnsemble& ens,
                                   const SphereGrid& grid, const Json& config,
                                   double* q_request) {
  const bool has_s = config.contains("s");
  const bool has_q = config.contains("q");
  if (has_s == has_q)
    throw ValidationError("config: exactly one of 's' or 'q' is required");
  double s;
  if (has_s) {
    s = config.at("s").get<double>();
    *q_request = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double q = config.at("q").get<double>();
    const RateFunctionPoint pt = rate_function(ens, grid, q);
    s = pt.s;
    *q_request = q;
  }
  std::vector<SpectralProfile> prof = cgf_profile(ens, grid, {s});
  return prof.front();
}

void run_spectral(RunContext& ctx) {
  const Json& config = ctx.cfg.config;
  const MatrixEnsemble ens = ensemble_from_config(config);
  if (!config.contains("s_grid"))
    throw ValidationError("config: spectral requires 's_grid'");
  std::vector<double> s_grid;
  for (const Json& v : config.at("s_grid")) s_grid.push_back(v.get<double>());
  const int resolution = static_cast<int>(get_int(config, "resolution", 512));
  const double fd_step = get_num(config, "fd_step", 1e-3);
  const SphereGrid grid = build_grid(ens, resolution);
  const std::vector<SpectralProfile> profiles =
      cgf_profile(ens, grid, s_grid, fd_step);

  std::vector<std::vector<double>> rows;
  double max_residual = 0.0;
  Json profile_json = Json::array();
  for (const auto& prof : profiles) {
    rows.push_back({prof.s, prof.log_k, prof.q, prof.sigma2, prof.m3,
                    prof.eigen_residual});
    max_residual = std::max(max_residual, prof.eigen_residual);
    profile_json.push_back(spectral_profile_to_json(prof));
  }
  ctx.table("k_profile",
            {"s", "log_k", "q", "sigma2", "m3", "eigen_residual"}, rows);
  ctx.json_artifact("profiles.json", profile_json);
  ctx.summaries["max_eigen_residual"] = max_residual;
  ctx.summaries["points"] = profiles.size();
}

void run_ldp(RunContext& ctx) {
  const Json& config = ctx.cfg.config;
  const MatrixEnsemble ens = ensemble_from_config(config);
  if (!config.contains("n"))
    throw ValidationError("config: ldp requires 'n' (list of horizons)");
  std::vector<int> n_list;
  for (const Json& v : config.at("n")) n_list.push_back(v.get<int>());
  const std::size_t paths =
      static_cast<std::size_t>(get_int(config, "paths", 100000));
  const std::size_t naive_paths =
      static_cast<std::size_t>(get_int(config, "naive_paths", 0));
  const int resolution = static_cast<int>(get_int(config, "resolution", 512));
  const SphereGrid grid = build_grid(ens, resolution);
  double q_request;
  const SpectralProfile prof =
      profile_for_target(ens, grid, config, &q_request);
  const double q_target =
      std::isnan(q_request) ? prof.q : q_request;
  Vector x0_raw = Vector::Ones(ens.dim);
  if (config.contains("x0")) x0_raw = vector_param(config, "x0", ens.dim);
  const ConeVector x0 = normalize(x0_raw, ens.cone, ens.norm);

  std::vector<std::vector<double>> rows;
  Json detail = Json::array();
  for (int n : n_list) {
    LdpEstimate est =
        tilted_tail(x0, ens, prof, n, q_target, paths, ctx.cfg.seed);
    if (naive_paths > 0) {
      const NaiveTail nv =
          naive_tail(x0, ens, n, q_target, naive_paths, ctx.cfg.seed);
      est.has_naive = true;
      est.naive = nv.estimate;
      est.naive_se = nv.se;
    }
    rows.push_back({static_cast<double>(n), q_target, prof.s,
                    est.has_naive ? est.naive : std::nan(""),
                    est.has_naive ? est.naive_se : std::nan(""), est.tilted,
                    est.tilted_se, est.prediction, est.ratio});
    Json d;
    d["n"] = n;
    d["hits"] = est.hits;
    d["paths"] = est.paths;
    d["ess_fraction"] = est.ess_fraction;
    d["ess_warning"] = est.ess_warning;
    d["max_step_residual"] = est.max_step_residual;
    d["log_tilted"] = est.log_tilted;
    d["log_prediction"] = est.log_prediction;
    d["tilted_prob"] = est.tilted_prob;
    d["tilted_prob_se"] = est.tilted_prob_se;
    detail.push_back(d);
  }
  ctx.table("ldp",
            {"n", "q", "s", "naive", "naive_SE", "tilted", "tilted_SE",
             "prediction", "ratio"},
            rows);
  ctx.json_artifact("ldp_detail.json", detail);
  ctx.summaries["s"] = prof.s;
  ctx.summaries["q"] = q_target;
  ctx.summaries["sigma2"] = prof.sigma2;
  ctx.summaries["eigen_residual"] = prof.eigen_residual;
  ctx.summaries["detail"] = detail;
}

void run_edgeworth(RunContext& ctx) {
  const Json& config = ctx.cfg.config;
  const MatrixEnsemble ens = ensemble_from_config(config);
  if (!config.contains("n"))
    throw ValidationError("config: edgeworth requires 'n' (list of horizons)");
  std::vector<int> n_list;
  for (const Json& v : config.at("n")) n_list.push_back(v.get<int>());
  const std::size_t paths =
      static_cast<std::size_t>(get_int(config, "paths", 100000));
  const int resolution = static_cast<int>(get_int(config, "resolution", 512));
  const SphereGrid grid = build_grid(ens, resolution);
  double q_request;
  const SpectralProfile prof =
      profile_for_target(ens, grid, config, &q_request);
  const BiasFunction bias = bias_function(prof, ens, grid);
  Vector x0_raw = Vector::Ones(ens.dim);
  if (config.contains("x0")) x0_raw = vector_param(config, "x0", ens.dim);
  const ConeVector x0 = normalize(x0_raw, ens.cone, ens.norm);

  std::vector<double> u_grid = default_u_grid();
  if (config.contains("u_grid")) {
    u_grid.clear();
    for (const Json& v : config.at("u_grid")) u_grid.push_back(v.get<double>());
  }

  Json bias_json;
  bias_json["values"] = bias.values;
  bias_json["series_depth"] = bias.series_depth;
  bias_json["truncation_residual"] = bias.truncation_residual;
  bias_json["recursion_residual"] = bias.recursion_residual;
  bias_json["pi_b"] = bias.pi_b;
  bias_json["drift_discrete"] = bias.drift_discrete;
  Json nodes = Json::array();
  for (const auto& node : bias.grid.nodes) {
    Json coords = Json::array();
    for (int i = 0; i < node.size(); ++i) coords.push_back(node[i]);
    nodes.push_back(coords);
  }
  bias_json["grid_nodes"] = nodes;
  ctx.json_artifact("bias.json", bias_json);

  Json summary = Json::array();
  for (int n : n_list) {
    const EdgeworthReport rep =
        edgeworth_curve(x0, ens, prof, bias, n, paths, u_grid, ctx.cfg.seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.u.size(); ++i)
      rows.push_back({rep.u[i], rep.f_hat[i], rep.g_n[i]});
    ctx.table("edgeworth_n" + std::to_string(n), {"u", "F_hat", "G_n"}, rows);
    Json s;
    s["n"] = n;
    s["sup_gap"] = rep.sup_gap;
    s["scaled_gap"] = rep.scaled_gap;
    s["dkw_epsilon"] = dkw_epsilon(paths, 0.01);
    summary.push_back(s);
  }
  ctx.summaries["curves"] = summary;
  ctx.summaries["recursion_residual"] = bias.recursion_residual;
  ctx.summaries["pi_b"] = bias.pi_b;
}

RdeModel model_from_config(const Json& config) {
  if (config.contains("model")) {
    const Json& mj = config.at("model");
    const std::string name =
        mj.is_string() ? mj.get<std::string>()
                       : mj.at("name").get<std::string>();
    auto param = [&](const char* key, double dflt) {
      return mj.is_object() && mj.contains(key) ? mj.at(key).get<double>()
                                                : dflt;
    };
    RdeModel model;
    if (name == "arch2") {
      model = arch2_preset(param("a1", 0.3), param("a2", 0.25));
    } else if (name == "lognormal") {
      model = lognormal_model(param("m", -0.5), param("v", 1.0));
    } else {
      throw ValidationError("config: unknown model preset '" + name + "'");
    }
    if (mj.is_object()) {
      if (mj.contains("alpha_lo")) model.alpha_lo = mj.at("alpha_lo").get<double>();
      if (mj.contains("alpha_hi")) model.alpha_hi = mj.at("alpha_hi").get<double>();
      if (mj.contains("resolution"))
        model.grid_resolution = mj.at("resolution").get<int>();
    }
    return model;
  }
  RdeModel model;
  model.ensemble = ensemble_from_config(config);
  model.alpha_lo = get_num(config, "alpha_lo", 0.05);
  model.alpha_hi = get_num(config, "alpha_hi", 10.0);
  model.grid_resolution =
      static_cast<int>(get_int(config, "resolution", 512));
  return model;
}

void run_tails(RunContext& ctx) {
  const Json& config = ctx.cfg.config;
  const RdeModel model = model_from_config(config);
  const int dim = model.ensemble.dim;
  Vector x = Vector::Zero(dim);
  x[0] = 1.0;
  if (config.contains("x")) x = vector_param(config, "x", dim);
  const std::size_t samples =
      static_cast<std::size_t>(get_int(config, "samples", 100000));
  const int depth = static_cast<int>(get_int(config, "depth", 400));
  const double tol = get_num(config, "tol", 1e-12);

  const TailReport rep =
      tail_report(model, x, samples, ctx.cfg.seed, depth, tol);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.t_grid.size(); ++i)
    rows.push_back({rep.t_grid[i], rep.ccdf[i], rep.t_alpha_ccdf[i]});
  ctx.table("tails", {"t", "CCDF", "t_alpha_CCDF"}, rows);

  Json tj;
  tj["samples"] = rep.samples;
  tj["positives"] = rep.positives;
  tj["alpha_hat"] = rep.alpha_hat;
  tj["ci_lo"] = rep.ci_lo;
  tj["ci_hi"] = rep.ci_hi;
  tj["alpha_theory"] = rep.alpha_theory;
  tj["e_alpha_at_x"] = rep.e_alpha_at_x;
  tj["hill_k"] = rep.hill_k;
  tj["hill_alpha"] = rep.hill_alpha;
  tj["window_lo"] = rep.window_lo;
  tj["window_hi"] = rep.window_hi;
  tj["mean_depth"] = rep.mean_depth;
  tj["max_depth"] = rep.max_depth;
  ctx.json_artifact("tails.json", tj);

  if (config.contains("s_grid")) {
    std::vector<double> s_grid;
    for (const Json& v : config.at("s_grid"))
      s_grid.push_back(v.get<double>());
    const KestenCondition cond = kesten_condition(model, s_grid);
    std::vector<std::vector<double>> crows;
    for (std::size_t i = 0; i < s_grid.size(); ++i)
      crows.push_back({cond.s_grid[i], cond.lhs[i], cond.rhs[i],
                       cond.lhs[i] >= cond.rhs[i] ? 1.0 : 0.0});
    ctx.table("kesten_condition", {"s", "lhs", "rhs", "satisfied"}, crows);
    ctx.summaries["condition_satisfied"] = cond.satisfied;
    if (cond.satisfied) ctx.summaries["condition_s0"] = cond.s0;

    const std::size_t moment_samples =
        static_cast<std::size_t>(get_int(config, "moment_samples", 20000));
    const std::vector<MomentBoundRow> scan = moment_bound_scan(
        model, s_grid, moment_samples, ctx.cfg.seed, depth, tol);
    std::vector<std::vector<double>> mrows;
    for (const auto& row : scan)
      mrows.push_back({row.s, row.k_s, row.finite ? 1.0 : 0.0,
                       row.bound_applicable ? 1.0 : 0.0, row.bound,
                       row.empirical, row.empirical_half,
                       row.stable ? 1.0 : 0.0});
    ctx.table("moment_bound",
              {"s", "k_s", "finite", "bound_applicable", "bound", "empirical",
               "empirical_half", "stable"},
              mrows);
  }
  ctx.summaries["alpha_hat"] = rep.alpha_hat;
  ctx.summaries["alpha_ci"] = Json::array({rep.ci_lo, rep.ci_hi});
  ctx.summaries["alpha_theory"] = rep.alpha_theory;
  ctx.summaries["positives"] = rep.positives;
  ctx.summaries["mean_depth"] = rep.mean_depth;
  ctx.summaries["max_depth"] = rep.max_depth;
}

void run_diagnose(RunContext& ctx) {
  const Json& config = ctx.cfg.config;
  const MatrixEnsemble ens = ensemble_from_config(config);
  const ConditionReport rep = check_conditions(ens);
  ctx.json_artifact("condition_report.json", condition_report_to_json(rep));
  ctx.summaries["allowable_all"] = rep.allowable_all;
  ctx.summaries["positive_exists"] = rep.positive_exists;
  ctx.summaries["arithmetic_diagnostic"] =
      rep.arithmetic == ArithmeticStatus::kNonArithmeticCertified
          ? "NonArithmeticCertified"
          : "Inconclusive";
}

}  // namespace

int run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Json manifest;
  manifest["tool"] = "ldmatrix";
  manifest["version"] = kVersion;
  manifest["command"] = cfg.command;
  manifest["seed"] = cfg.seed;
  manifest["threads"] = cfg.threads;
  manifest["format"] = cfg.format;
  manifest["output_dir"] = cfg.output_dir.string();
  manifest["config"] = cfg.config;

  RunContext ctx{cfg, {}, Json::object()};
  int exit_code = 0;
  std::string error;
  try {
    if (!cfg.seed_set)
      throw ValidationError("seed is required (no implicit entropy)");
    if (cfg.threads < 1)
      throw ValidationError("threads must be >= 1");
    if (cfg.format != "csv" && cfg.format != "json")
      throw ValidationError("format must be csv or json");
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec)
      throw ValidationError("cannot create output dir " +
                            cfg.output_dir.string());
    set_worker_threads(cfg.threads);

    if (cfg.command == "spectral")
      run_spectral(ctx);
    else if (cfg.command == "ldp")
      run_ldp(ctx);
    else if (cfg.command == "edgeworth")
      run_edgeworth(ctx);
    else if (cfg.command == "tails")
      run_tails(ctx);
    else if (cfg.command == "diagnose")
      run_diagnose(ctx);
    else
      throw ValidationError("unknown command '" + cfg.command + "'");
  } catch (const ValidationError& e) {
    exit_code = 2;
    error = e.what();
  } catch (const NumericalError& e) {
    exit_code = 3;
    error = e.what();
  } catch (const Json::exception& e) {
    exit_code = 2;
    error = std::string("config error: ") + e.what();
  } catch (const std::exception& e) {
    exit_code = 3;
    error = std::string("unexpected: ") + e.what();
  }

  if (exit_code != 0) {
    log_error(cfg.command + ": " + error);
    // Remove partial data files; the manifest below records the failure.
    for (const auto& name : ctx.artifacts) {
      std::error_code ec;
      std::filesystem::remove(cfg.output_dir / name, ec);
    }
    ctx.artifacts.clear();
  }

  const auto t1 = std::chrono::steady_clock::now();
  manifest["status"] = exit_code == 0
                           ? "ok"
                           : (exit_code == 2 ? "validation_error"
                                             : "numerical_error");
  if (!error.empty()) manifest["error"] = error;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  manifest["artifacts"] = ctx.artifacts;
  manifest["summaries"] = ctx.summaries;
  try {
    std::filesystem::create_directories(cfg.output_dir);
    write_json_file(cfg.output_dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    log_error(std::string("manifest write failed: ") + e.what());
    if (exit_code == 0) exit_code = 3;
  }
  return exit_code;
}

}  // namespace ldmatrix
