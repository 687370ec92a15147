#include "stab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stab/acceptance.hpp"
#include "stab/dynamics.hpp"
#include "stab/ensemble.hpp"
#include "stab/errors.hpp"
#include "stab/moment_operator.hpp"
#include "stab/oscillation.hpp"
#include "stab/presets.hpp"
#include "stab/version.hpp"

namespace stab {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ----------------------------------------------------------------------------
// Strict config access.  Every object is checked against an allow-list, so a
// misspelled or stale field fails loudly instead of being ignored.
// ----------------------------------------------------------------------------

[[noreturn]] void fail_config(const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, "config: " + msg);
}

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail_config(ctx + " must be a JSON object");
}

void check_allowed(const json& j, const std::vector<std::string>& allowed,
                   const std::string& ctx) {
  expect_object(j, ctx);
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail_config("unknown field \"" + item.key() + "\" in " + ctx);
    }
  }
}

const json& need(const json& j, const std::string& key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) fail_config("missing field \"" + key + "\" in " + ctx);
  return *it;
}

double need_number(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) fail_config("field \"" + key + "\" in " + ctx + " must be a number");
  return v.get<double>();
}

double opt_number(const json& j, const std::string& key, double fallback,
                  const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) fail_config("field \"" + key + "\" in " + ctx + " must be a number");
  return it->get<double>();
}

long need_integer(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_integer()) {
    fail_config("field \"" + key + "\" in " + ctx + " must be an integer");
  }
  return v.get<long>();
}

long opt_integer(const json& j, const std::string& key, long fallback,
                 const std::string& ctx) {
  if (j.find(key) == j.end()) return fallback;
  return need_integer(j, key, ctx);
}

bool opt_bool(const json& j, const std::string& key, bool fallback, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) fail_config("field \"" + key + "\" in " + ctx + " must be a boolean");
  return it->get<bool>();
}

std::uint64_t opt_seed(const json& j, const std::string& ctx) {
  auto it = j.find("seed");
  if (it == j.end()) return 0;
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    fail_config("field \"seed\" in " + ctx + " must be a non-negative integer");
  }
  if (it->is_number_integer() && it->get<long long>() < 0) {
    fail_config("field \"seed\" in " + ctx + " must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

Eigen::VectorXd parse_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) fail_config(ctx + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  int i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) fail_config(ctx + " must contain only numbers");
    v[i++] = e.get<double>();
  }
  return v;
}

// ----------------------------------------------------------------------------
// Loss / ensemble specs.  A loss is either {"preset": name [, param]} with the
// published preset names, or an inline polynomial {"dim", "terms", ...}.
// ----------------------------------------------------------------------------

Loss parse_loss(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  if (j.contains("preset")) {
    const json& p = need(j, "preset", ctx);
    if (!p.is_string()) fail_config("\"preset\" in " + ctx + " must be a string");
    const std::string name = p.get<std::string>();
    if (name == "f_plus") {
      check_allowed(j, {"preset"}, ctx);
      return Loss(preset_f_plus());
    }
    if (name == "f_minus") {
      check_allowed(j, {"preset"}, ctx);
      return Loss(preset_f_minus());
    }
    if (name == "f_a") {
      check_allowed(j, {"preset", "a"}, ctx);
      return Loss(preset_f_a(need_number(j, "a", ctx)));
    }
    if (name == "L_beta") {
      check_allowed(j, {"preset", "beta"}, ctx);
      return Loss(preset_l_beta(need_number(j, "beta", ctx)));
    }
    fail_config("unknown loss preset \"" + name + "\" in " + ctx);
  }
  check_allowed(j, {"dim", "terms", "max_degree"}, ctx);
  const int dim = static_cast<int>(need_integer(j, "dim", ctx));
  const int max_degree =
      static_cast<int>(opt_integer(j, "max_degree", PolyLoss::kDefaultMaxDegree, ctx));
  const json& terms = need(j, "terms", ctx);
  if (!terms.is_array()) fail_config("\"terms\" in " + ctx + " must be an array");
  std::vector<PolyTerm> parsed;
  for (const auto& t : terms) {
    check_allowed(t, {"exponents", "coeff"}, ctx + ".terms[]");
    const json& ex = need(t, "exponents", ctx + ".terms[]");
    if (!ex.is_array()) fail_config("\"exponents\" must be an array in " + ctx);
    PolyTerm term;
    for (const auto& e : ex) {
      if (!e.is_number_integer() || e.get<long>() < 0) {
        fail_config("\"exponents\" must be non-negative integers in " + ctx);
      }
      term.exponents.push_back(static_cast<int>(e.get<long>()));
    }
    term.coeff = need_number(t, "coeff", ctx + ".terms[]");
    parsed.push_back(std::move(term));
  }
  return Loss(PolyLoss(dim, parsed, max_degree));
}

LossEnsemble parse_ensemble(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  if (j.contains("preset")) {
    const json& p = need(j, "preset", ctx);
    if (!p.is_string()) fail_config("\"preset\" in " + ctx + " must be a string");
    const std::string name = p.get<std::string>();
    if (name == "two-point") {
      check_allowed(j, {"preset", "a"}, ctx);
      return make_ensemble_two_point(need_number(j, "a", ctx));
    }
    fail_config("unknown ensemble preset \"" + name + "\" in " + ctx);
  }
  check_allowed(j, {"members", "batch_size", "x_star"}, ctx);
  const json& members = need(j, "members", ctx);
  if (!members.is_array() || members.empty()) {
    fail_config("\"members\" in " + ctx + " must be a non-empty array");
  }
  std::vector<Loss> losses;
  for (const auto& m : members) losses.push_back(parse_loss(m, ctx + ".members[]"));
  const int batch_size = static_cast<int>(need_integer(j, "batch_size", ctx));
  Eigen::VectorXd x_star = parse_vector(need(j, "x_star", ctx), ctx + ".x_star");
  return LossEnsemble(std::move(losses), batch_size, std::move(x_star));
}

// ----------------------------------------------------------------------------
// Serialization helpers.  JSON objects use sorted keys (nlohmann default), so
// dumps are canonical; CSV numbers use %.17g for exact round-trips.
// ----------------------------------------------------------------------------

json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "NaN";
  return x > 0 ? "Infinity" : "-Infinity";
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

std::string csv_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CommandOutput {
  json results;
  std::string csv;
  bool acceptance_failed = false;
};

// ----------------------------------------------------------------------------
// analyze-minimum
// ----------------------------------------------------------------------------

CommandOutput run_analyze_minimum(const json& cfg) {
  check_allowed(cfg, {"kind", "loss", "x_star", "eta", "grad_tol", "gap_tol", "seed"},
                "analyze-minimum config");
  Loss loss = parse_loss(need(cfg, "loss", "config"), "loss");
  Eigen::VectorXd x_star = Eigen::VectorXd::Zero(loss.dim());
  if (cfg.contains("x_star")) x_star = parse_vector(cfg["x_star"], "x_star");
  const double grad_tol = opt_number(cfg, "grad_tol", 1e-8, "config");
  const double gap_tol = opt_number(cfg, "gap_tol", 1e-6, "config");

  MinimumProfile profile = profile_minimum(loss, x_star, grad_tol, gap_tol);
  OscillationReport osc = stable_oscillation_criterion(profile);
  const double eta = opt_number(cfg, "eta", profile.eta_lin, "config");
  const double c0_at_eta = lyapunov_coefficient(profile, eta);

  json res;
  res["profile"] = {
      {"dim", profile.tensors.dim()},
      {"x_star", vec_json(profile.x_star)},
      {"eigenvalues", vec_json(profile.eigen.eigenvalues)},
      {"lambda_max", json_number(profile.lambda_max)},
      {"v_max", vec_json(profile.v_max)},
      {"spectral_gap", json_number(profile.spectral_gap)},
      {"multiplicity_ok", profile.multiplicity_ok},
      {"eta_lin", json_number(profile.eta_lin)},
      {"derivative_source", to_string(profile.tensors.source)},
  };
  res["oscillation"] = {
      {"eta", json_number(osc.eta)},
      {"lhs", json_number(osc.lhs)},
      {"rhs", json_number(osc.rhs)},
      {"lhs_alt", json_number(osc.lhs_alt)},
      {"c0", json_number(osc.c0)},
      {"verdict", to_string(osc.verdict)},
      {"degeneracy_tol", json_number(osc.degeneracy_tol)},
      {"hypothesized_sufficient", osc.hypothesized_sufficient},
      {"q", vec_json(osc.q)},
  };
  res["eta"] = json_number(eta);
  res["c0_at_eta"] = json_number(c0_at_eta);

  std::ostringstream csv;
  csv << "index,eigenvalue,v_max,q\n";
  for (int i = 0; i < profile.eigen.eigenvalues.size(); ++i) {
    csv << i << ',' << csv_num(profile.eigen.eigenvalues[i]) << ','
        << csv_num(profile.v_max[i]) << ',' << csv_num(osc.q[i]) << '\n';
  }
  return {std::move(res), csv.str(), false};
}

// ----------------------------------------------------------------------------
// bifurcation
// ----------------------------------------------------------------------------

CommandOutput run_bifurcation(const json& cfg, std::uint64_t seed, int threads) {
  check_allowed(cfg,
                {"kind", "loss", "eta_grid", "etas", "burn_in", "record", "cluster_eps",
                 "x0_low", "x0_high", "divergence_radius", "seed"},
                "bifurcation config");
  Loss loss = parse_loss(need(cfg, "loss", "config"), "loss");
  std::vector<double> grid;
  if (cfg.contains("eta_grid") == cfg.contains("etas")) {
    fail_config("bifurcation config needs exactly one of \"eta_grid\" or \"etas\"");
  }
  if (cfg.contains("eta_grid")) {
    const json& g = cfg["eta_grid"];
    check_allowed(g, {"lo", "hi", "step"}, "eta_grid");
    grid = uniform_grid(need_number(g, "lo", "eta_grid"), need_number(g, "hi", "eta_grid"),
                        need_number(g, "step", "eta_grid"));
  } else {
    const json& e = cfg["etas"];
    if (!e.is_array() || e.empty()) fail_config("\"etas\" must be a non-empty array");
    for (const auto& x : e) {
      if (!x.is_number()) fail_config("\"etas\" must contain only numbers");
      grid.push_back(x.get<double>());
    }
  }
  ScanOptions opt;
  opt.burn_in = opt_integer(cfg, "burn_in", opt.burn_in, "config");
  opt.record = opt_integer(cfg, "record", opt.record, "config");
  opt.cluster_eps = opt_number(cfg, "cluster_eps", opt.cluster_eps, "config");
  opt.x0_low = opt_number(cfg, "x0_low", opt.x0_low, "config");
  opt.x0_high = opt_number(cfg, "x0_high", opt.x0_high, "config");
  opt.divergence_radius = opt_number(cfg, "divergence_radius", opt.divergence_radius, "config");
  opt.threads = threads;

  BifurcationScan scan = bifurcation_scan(loss, grid, seed, opt);

  json cells = json::array();
  std::ostringstream csv;
  csv << "eta,point_index";
  for (int c = 0; c < loss.dim(); ++c) csv << ",coord" << c;
  csv << ",outcome\n";
  for (const ScanCell& cell : scan.cells) {
    json pts = json::array();
    for (const Eigen::VectorXd& p : cell.accumulation_points) pts.push_back(vec_json(p));
    cells.push_back({{"eta", json_number(cell.eta)},
                     {"outcome", to_string(cell.outcome)},
                     {"x0", vec_json(cell.x0)},
                     {"points", pts}});
    if (cell.accumulation_points.empty()) {
      csv << csv_num(cell.eta) << ",-1";
      for (int c = 0; c < loss.dim(); ++c) csv << ',';
      csv << to_string(cell.outcome) << '\n';
      continue;
    }
    for (std::size_t i = 0; i < cell.accumulation_points.size(); ++i) {
      csv << csv_num(cell.eta) << ',' << i;
      for (int c = 0; c < loss.dim(); ++c) {
        csv << ',' << csv_num(cell.accumulation_points[i][c]);
      }
      csv << ',' << to_string(cell.outcome) << '\n';
    }
  }
  json res;
  res["cells"] = std::move(cells);
  res["root_seed"] = scan.root_seed;
  return {std::move(res), csv.str(), false};
}

// ----------------------------------------------------------------------------
// simulate-gd / simulate-sgd
// ----------------------------------------------------------------------------

RunOptions parse_run_options(const json& cfg, int dim) {
  RunOptions opt;
  opt.max_iters = opt_integer(cfg, "max_iters", opt.max_iters, "config");
  opt.grad_tol = opt_number(cfg, "grad_tol", opt.grad_tol, "config");
  opt.divergence_radius = opt_number(cfg, "divergence_radius", opt.divergence_radius, "config");
  opt.cycle_tol = opt_number(cfg, "cycle_tol", opt.cycle_tol, "config");
  opt.detect_cycles = opt_bool(cfg, "detect_cycles", opt.detect_cycles, "config");
  if (cfg.contains("x_star")) {
    opt.x_star = parse_vector(cfg["x_star"], "x_star");
    if (opt.x_star.size() != dim) fail_config("\"x_star\" dimension mismatch");
  }
  return opt;
}

json trajectory_json(const Trajectory& traj) {
  json res;
  res["eta"] = json_number(traj.eta);
  res["stop"] = to_string(traj.stop);
  res["steps"] = traj.iterates.size() - 1;
  res["final"] = vec_json(traj.iterates.back());
  res["saturated"] = traj.saturated;
  if (traj.stop == StopReason::Cycle2 && traj.iterates.size() >= 2) {
    res["cycle"] = json::array({vec_json(traj.iterates[traj.iterates.size() - 2]),
                                vec_json(traj.iterates.back())});
  }
  return res;
}

std::string trajectory_csv(const Trajectory& traj, bool with_batches) {
  std::ostringstream csv;
  csv << "t";
  const int dim = static_cast<int>(traj.iterates.front().size());
  for (int c = 0; c < dim; ++c) csv << ",coord" << c;
  if (with_batches) csv << ",batch_next";
  csv << '\n';
  for (std::size_t t = 0; t < traj.iterates.size(); ++t) {
    csv << t;
    for (int c = 0; c < dim; ++c) csv << ',' << csv_num(traj.iterates[t][c]);
    if (with_batches) {
      if (t < traj.batch_log.size()) {
        csv << ',' << traj.batch_log[t];
      } else {
        csv << ",-1";
      }
    }
    csv << '\n';
  }
  return csv.str();
}

CommandOutput run_simulate_gd(const json& cfg) {
  check_allowed(cfg,
                {"kind", "loss", "x0", "eta", "max_iters", "x_star", "grad_tol",
                 "divergence_radius", "cycle_tol", "detect_cycles", "seed"},
                "simulate-gd config");
  Loss loss = parse_loss(need(cfg, "loss", "config"), "loss");
  Eigen::VectorXd x0 = parse_vector(need(cfg, "x0", "config"), "x0");
  if (x0.size() != loss.dim()) fail_config("\"x0\" dimension mismatch");
  const double eta = need_number(cfg, "eta", "config");
  RunOptions opt = parse_run_options(cfg, loss.dim());
  Trajectory traj = run_gd(loss, x0, eta, opt);
  return {trajectory_json(traj), trajectory_csv(traj, false), false};
}

CommandOutput run_simulate_sgd(const json& cfg, std::uint64_t seed) {
  check_allowed(cfg,
                {"kind", "ensemble", "x0", "eta", "max_iters", "grad_tol",
                 "divergence_radius", "cycle_tol", "detect_cycles", "seed"},
                "simulate-sgd config");
  LossEnsemble ensemble = parse_ensemble(need(cfg, "ensemble", "config"), "ensemble");
  Eigen::VectorXd x0 = parse_vector(need(cfg, "x0", "config"), "x0");
  if (x0.size() != ensemble.dim()) fail_config("\"x0\" dimension mismatch");
  const double eta = need_number(cfg, "eta", "config");
  const long max_iters = opt_integer(cfg, "max_iters", 1000, "config");
  RunOptions opt = parse_run_options(cfg, ensemble.dim());
  Trajectory traj = run_sgd(ensemble, x0, eta, max_iters, seed, opt);
  json res = trajectory_json(traj);
  res["seed"] = traj.seed;
  res["num_batches"] = ensemble.num_batches();
  return {std::move(res), trajectory_csv(traj, true), false};
}

// ----------------------------------------------------------------------------
// sgd-thresholds
// ----------------------------------------------------------------------------

CommandOutput run_sgd_thresholds(const json& cfg) {
  check_allowed(cfg, {"kind", "ensemble", "worst_case_eta", "worst_case_x0", "horizon", "seed"},
                "sgd-thresholds config");
  LossEnsemble ensemble = parse_ensemble(need(cfg, "ensemble", "config"), "ensemble");
  ThresholdReport report = threshold_report(ensemble);
  const double wc_eta = opt_number(cfg, "worst_case_eta", 1.05 * report.eta_sufficient, "config");
  Eigen::VectorXd x0 =
      ensemble.x_star() + Eigen::VectorXd::Constant(ensemble.dim(), 0.5);
  if (cfg.contains("worst_case_x0")) {
    x0 = parse_vector(cfg["worst_case_x0"], "worst_case_x0");
    if (x0.size() != ensemble.dim()) fail_config("\"worst_case_x0\" dimension mismatch");
  }
  const long horizon = opt_integer(cfg, "horizon", 60, "config");
  WorstCaseBatchReport wc = worst_case_batch_report(ensemble, wc_eta, x0, horizon);

  InterpolationCheck interp = check_interpolating(ensemble);

  json res;
  res["eta_sufficient"] = json_number(report.eta_sufficient);
  res["eta_meansquare"] = json_number(report.eta_meansquare);
  res["strict_gap"] = report.strict_gap;
  json lam = json::array();
  for (double l : report.batch_lambda_max) lam.push_back(json_number(l));
  res["batch_lambda_max"] = std::move(lam);
  res["interpolating"] = interp.interpolating;
  json verdicts = json::array();
  for (DivergenceVerdict v : wc.verdicts) verdicts.push_back(to_string(v));
  res["worst_case"] = {{"eta", json_number(wc_eta)},
                       {"x0", vec_json(x0)},
                       {"horizon", horizon},
                       {"verdicts", std::move(verdicts)},
                       {"any_superlinear", wc.any_superlinear}};

  std::ostringstream csv;
  csv << "batch_index,lambda_max,verdict\n";
  for (std::size_t b = 0; b < report.batch_lambda_max.size(); ++b) {
    csv << b << ',' << csv_num(report.batch_lambda_max[b]) << ','
        << to_string(wc.verdicts[b]) << '\n';
  }
  return {std::move(res), csv.str(), false};
}

// ----------------------------------------------------------------------------
// moment-operator
// ----------------------------------------------------------------------------

CommandOutput run_moment_operator(const json& cfg) {
  check_allowed(cfg, {"kind", "ensemble", "eta", "K", "rho", "x0", "t_max", "seed"},
                "moment-operator config");
  LossEnsemble ensemble = parse_ensemble(need(cfg, "ensemble", "config"), "ensemble");
  const double eta = need_number(cfg, "eta", "config");
  const int K = static_cast<int>(opt_integer(cfg, "K", 6, "config"));

  json res;
  res["eta"] = json_number(eta);
  res["K"] = K;

  double rho = opt_number(cfg, "rho", -1.0, "config");
  bool certified = false;
  try {
    RhoCertificate cert = rho_certificate(ensemble, eta, rho);
    rho = cert.rho;
    certified = true;
    res["certificate"] = {{"epsilon", json_number(cert.epsilon)},
                          {"C", json_number(cert.C)},
                          {"rho_star", json_number(cert.rho_star)},
                          {"rho", json_number(cert.rho)},
                          {"gamma", json_number(cert.gamma)}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EpsilonNonPositive) throw;
    if (rho <= 0.0) rho = 0.1;  // uncertified reporting radius
    res["certificate"] = {
        {"error", to_string(e.code())},
        {"note",
         "some batch map expands at this step size, so no moment-contraction "
         "radius exists and the SGD expectation cannot stay bounded"}};
  }

  BatchMapDerivatives derivs = batch_map_derivatives(ensemble, eta);
  MomentOperatorTruncation trunc = assemble_truncation(derivs, K, rho);
  const double bound = schur_norm_bound(trunc);

  res["rho"] = json_number(rho);
  res["certified"] = certified && derivs.certified;
  json diag = json::array();
  for (double n : trunc.diag_norms) diag.push_back(json_number(n));
  res["diag_norms"] = std::move(diag);
  res["diag_norms_bounded"] = trunc.diag_norms_bounded;
  res["spectral_radius"] = json_number(trunc.spectral_radius);
  res["alpha"] = json_number(trunc.alpha);
  res["beta"] = json_number(trunc.beta);
  res["schur_norm_bound"] = json_number(bound);

  std::ostringstream csv;
  if (cfg.contains("x0")) {
    Eigen::VectorXd x0 = parse_vector(cfg["x0"], "x0");
    if (x0.size() != ensemble.dim()) fail_config("\"x0\" dimension mismatch");
    const long t_max = opt_integer(cfg, "t_max", 10, "config");
    MomentDecayTable table = moment_decay_check(ensemble, eta, x0, K, rho, t_max);
    json errs = json::array();
    csv << "t,k,abs_error,exact_max_abs,predicted_max_abs\n";
    for (long t = 0; t <= table.t_max; ++t) {
      json row = json::array();
      for (int k = 1; k <= K; ++k) {
        row.push_back(json_number(table.abs_error[t][k - 1]));
        csv << t << ',' << k << ',' << csv_num(table.abs_error[t][k - 1]) << ','
            << csv_num(table.exact[t][k - 1].cwiseAbs().maxCoeff()) << ','
            << csv_num(table.predicted[t][k - 1].cwiseAbs().maxCoeff()) << '\n';
      }
      errs.push_back(std::move(row));
    }
    json scale = json::array();
    for (double s : table.trunc_scale) scale.push_back(json_number(s));
    res["decay"] = {{"t_max", table.t_max},
                    {"abs_error", std::move(errs)},
                    {"trunc_scale", std::move(scale)}};
  } else {
    csv << "k,p,scaled_block_norm\n";
    for (int k = 1; k <= K; ++k) {
      for (int p = k; p <= K; ++p) {
        csv << k << ',' << p << ','
            << csv_num(operator_norm(trunc.blocks[k - 1][p - 1])) << '\n';
      }
    }
  }
  return {std::move(res), csv.str(), false};
}

// ----------------------------------------------------------------------------
// verify-all
// ----------------------------------------------------------------------------

CommandOutput run_verify_all(const json& cfg, std::uint64_t seed) {
  check_allowed(cfg, {"kind", "seed", "criteria", "tolerance_scale"}, "verify-all config");
  AcceptanceOptions opt;
  opt.seed = seed;
  if (cfg.contains("criteria")) {
    const json& c = cfg["criteria"];
    if (!c.is_array()) fail_config("\"criteria\" must be an array of integers");
    for (const auto& e : c) {
      if (!e.is_number_integer()) fail_config("\"criteria\" must be an array of integers");
      opt.criteria.push_back(static_cast<int>(e.get<long>()));
    }
  }
  if (cfg.contains("tolerance_scale")) {
    const json& t = cfg["tolerance_scale"];
    expect_object(t, "tolerance_scale");
    for (const auto& item : t.items()) {
      int id = 0;
      try {
        id = std::stoi(item.key());
      } catch (const std::exception&) {
        fail_config("tolerance_scale keys must be criterion ids");
      }
      if (!item.value().is_number()) fail_config("tolerance_scale values must be numbers");
      opt.tolerance_scale[id] = item.value().get<double>();
    }
  }

  std::vector<CriterionResult> results = run_acceptance(opt);
  bool all_passed = true;
  json arr = json::array();
  std::ostringstream csv;
  csv << "id,name,passed\n";
  for (const CriterionResult& r : results) {
    all_passed = all_passed && r.passed;
    arr.push_back(
        {{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    csv << r.id << ',' << r.name << ',' << (r.passed ? "true" : "false") << '\n';
  }
  json res;
  res["criteria"] = std::move(arr);
  res["all_passed"] = all_passed;
  return {std::move(res), csv.str(), !all_passed};
}

// ----------------------------------------------------------------------------

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

std::string config_hash(const std::string& config_text) {
  json cfg;
  try {
    cfg = json::parse(config_text);
  } catch (const json::exception& e) {
    fail_config(std::string("not valid JSON: ") + e.what());
  }
  const std::string canonical = cfg.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64-bit offset basis
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResultRecord run_experiment(const std::string& command, const std::string& config_text,
                            std::optional<std::uint64_t> seed_override, int threads) {
  json cfg;
  try {
    cfg = json::parse(config_text);
  } catch (const json::exception& e) {
    fail_config(std::string("not valid JSON: ") + e.what());
  }
  expect_object(cfg, "config");
  const json& kind = need(cfg, "kind", "config");
  if (!kind.is_string()) fail_config("\"kind\" must be a string");
  if (kind.get<std::string>() != command) {
    fail_config("config kind \"" + kind.get<std::string>() + "\" does not match command \"" +
                command + "\"");
  }
  if (threads < 1) fail_config("threads must be >= 1");
  std::uint64_t seed = opt_seed(cfg, "config");
  if (seed_override) seed = *seed_override;

  CommandOutput out;
  if (command == "analyze-minimum") {
    out = run_analyze_minimum(cfg);
  } else if (command == "bifurcation") {
    out = run_bifurcation(cfg, seed, threads);
  } else if (command == "simulate-gd") {
    out = run_simulate_gd(cfg);
  } else if (command == "simulate-sgd") {
    out = run_simulate_sgd(cfg, seed);
  } else if (command == "sgd-thresholds") {
    out = run_sgd_thresholds(cfg);
  } else if (command == "moment-operator") {
    out = run_moment_operator(cfg);
  } else if (command == "verify-all") {
    out = run_verify_all(cfg, seed);
  } else {
    fail_config("unknown command \"" + command + "\"");
  }

  ResultRecord rec;
  rec.config_hash = config_hash(config_text);
  rec.results_json = out.results.dump(2);
  rec.series_csv = out.csv;
  rec.acceptance_failed = out.acceptance_failed;

  json report;
  report["config"] = cfg;
  report["results"] = out.results;
  report["meta"] = {{"tool_version", kVersion},
                    {"command", command},
                    {"config_hash", rec.config_hash},
                    {"root_seed", seed},
                    {"threads", threads},
                    {"timestamp_utc", timestamp_utc()}};
  rec.report_json = report.dump(2);
  return rec;
}

std::string acceptance_listing() {
  std::ostringstream out;
  for (const auto& [id, name] : list_criteria()) {
    out << "  " << id << "  " << name << '\n';
  }
  return out.str();
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                int threads, std::string* error, std::string* stdout_text) {
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::IoError, "cannot read config file: " + config_path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    ResultRecord rec = run_experiment(command, buf.str(), seed_override, threads);

    const fs::path dir = fs::path(out_dir.empty() ? "out" : out_dir) / rec.config_hash;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output dir: " + dir.string());
    {
      std::ofstream report(dir / "report.json", std::ios::binary);
      report << rec.report_json << '\n';
      if (!report) throw Error(ErrorCode::IoError, "cannot write report.json");
    }
    {
      std::ofstream series(dir / "series.csv", std::ios::binary);
      series << rec.series_csv;
      if (!series) throw Error(ErrorCode::IoError, "cannot write series.csv");
    }

    std::ostringstream out;
    if (command == "verify-all") {
      const json res = json::parse(rec.results_json);
      for (const auto& c : res["criteria"]) {
        out << (c["passed"].get<bool>() ? "[PASS]" : "[FAIL]") << " criterion "
            << c["id"].get<int>() << ": " << c["name"].get<std::string>() << '\n';
      }
    }
    out << "report: " << (dir / "report.json").string() << '\n';
    if (stdout_text) *stdout_text = out.str();
    return rec.acceptance_failed ? kExitAcceptanceFailure : kExitSuccess;
  } catch (const Error& e) {
    if (error) *error = e.what();
    return (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::IoError)
               ? kExitConfigError
               : kExitNumericError;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return kExitNumericError;
  }
}

}  // namespace stab
