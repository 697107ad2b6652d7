#include <CLI11.hpp>
#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "igeo/boltzmann.hpp"
#include "igeo/cevian.hpp"
#include "igeo/errors.hpp"
#include "igeo/exp_family.hpp"
#include "igeo/expr.hpp"
#include "igeo/monge_ampere.hpp"
#include "igeo/webs.hpp"
#include "igeo/wdvv.hpp"

namespace {

using nlohmann::json;

/* Output is assembled fully before anything touches the filesystem, so a
 * failing run leaves no partial files behind. */
struct RunOutput {
  json report;
  std::vector<std::pair<std::string, std::string>> files;  // path, content
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw igeo::ValidationError("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

json parse_json_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw igeo::ValidationError(std::string("malformed JSON for ") + what);
  return j;
}

Eigen::VectorXd to_vector(const json& j, const char* what) {
  if (!j.is_array()) throw igeo::ValidationError(std::string(what) + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw igeo::ValidationError(std::string(what) + " must be an array of rows");
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw igeo::ValidationError(std::string(what) + " rows have unequal length");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

/* Per-command section of the optional configuration file; flags win. */
class ConfigSection {
 public:
  ConfigSection(const json& config, const std::string& command) {
    if (config.is_object() && config.contains(command)) section_ = config.at(command);
  }

  template <typename T>
  void fill(const CLI::Option* opt, const char* key, T& var) const {
    if (opt->count() == 0 && section_.is_object() && section_.contains(key))
      var = section_.at(key).get<T>();
  }

 private:
  json section_;
};

// ---------------------------------------------------------------------------
// manifold-report
// ---------------------------------------------------------------------------

struct ManifoldArgs {
  int n = 2;
  std::string basis = "pairwise";
  std::string theta = "0";
};

RunOutput run_manifold_report(const ManifoldArgs& a, std::uint64_t seed) {
  const igeo::expfam::StateSpace space = a.basis == "full"
                                             ? igeo::expfam::StateSpace::full(a.n)
                                             : igeo::expfam::StateSpace::pairwise(a.n);
  const json tj = parse_json_text(a.theta, "--theta");
  igeo::expfam::ThetaPoint theta;
  if (tj.is_number())
    theta.coords = Eigen::VectorXd::Constant(space.dim(), tj.get<double>());
  else
    theta.coords = to_vector(tj, "--theta");
  if (static_cast<std::size_t>(theta.coords.size()) != space.dim())
    throw igeo::ValidationError("theta has dimension " +
                                std::to_string(theta.coords.size()) + ", basis needs " +
                                std::to_string(space.dim()));

  const double psi = igeo::expfam::log_partition(space, theta);
  const igeo::expfam::EtaPoint eta = igeo::expfam::to_eta(space, theta);
  const igeo::expfam::FisherMetric g = igeo::expfam::fisher_metric(space, theta);
  const igeo::ma::MAReport ma = igeo::ma::ma_report(space, theta);
  const Eigen::VectorXd back = igeo::expfam::to_theta(space, eta).coords;
  const double roundtrip = (back - theta.coords).cwiseAbs().maxCoeff();

  RunOutput out;
  out.report = {{"command", "manifold-report"},
                {"config", {{"n", a.n}, {"basis", a.basis}, {"seed", seed}}},
                {"psi", psi},
                {"theta", to_std(theta.coords)},
                {"eta", to_std(eta.coords)},
                {"fisher", matrix_json(g.matrix())},
                {"det_fisher", g.determinant()},
                {"min_eigenvalue", g.min_eigenvalue()},
                {"ma_report", ma.to_json()},
                {"legendre_roundtrip_residual", roundtrip}};
  return out;
}

// ---------------------------------------------------------------------------
// boltzmann-train
// ---------------------------------------------------------------------------

struct BoltzmannArgs {
  std::string target_path;
  std::string w0_path;
  std::string trace_path;
  double c = 0.5;
  int iters = 1000;
  double tol = 1e-8;
  bool natural = false;
};

RunOutput run_boltzmann_train(const BoltzmannArgs& a, std::uint64_t seed) {
  if (!(a.c > 0.0)) throw igeo::ValidationError("learning rate c must be positive");
  const auto q = igeo::boltzmann::TargetDistribution::from_json(
      load_json_file(a.target_path));
  igeo::boltzmann::WeightMatrix w0;
  if (a.w0_path.empty())
    w0.w = Eigen::MatrixXd::Zero(q.num_vars(), q.num_vars());
  else
    w0 = igeo::boltzmann::WeightMatrix::from_json(load_json_file(a.w0_path));

  igeo::boltzmann::TrainOptions opts;
  opts.c = a.c;
  opts.max_iters = a.iters;
  opts.tol = a.tol;
  opts.natural_gradient = a.natural;
  const igeo::boltzmann::LearningTrace trace = igeo::boltzmann::train(w0, q, opts);
  const auto& last = trace.records.back();

  RunOutput out;
  out.report = {{"command", "boltzmann-train"},
                {"config",
                 {{"target", a.target_path},
                  {"c", a.c},
                  {"iters", a.iters},
                  {"tol", a.tol},
                  {"natural", a.natural},
                  {"seed", seed}}},
                {"final_w", matrix_json(last.w)},
                {"final_kl", last.kl},
                {"final_moment_gap", last.moment_gap},
                {"iterations", trace.iterations},
                {"converged", trace.converged}};
  if (!a.trace_path.empty()) out.files.emplace_back(a.trace_path, trace.to_csv());
  return out;
}

// ---------------------------------------------------------------------------
// web-check
// ---------------------------------------------------------------------------

struct WebArgs {
  std::string u = "x", v = "y", w = "x+y";
  std::vector<double> domain{0.0, 1.0, 0.0, 1.0};
  int grid = 3;
  double step = 0.02;
  std::string csv_path;
};

RunOutput run_web_check(const WebArgs& a, std::uint64_t seed) {
  if (a.domain.size() != 4)
    throw igeo::ValidationError("--domain needs xmin xmax ymin ymax");
  if (a.grid < 1) throw igeo::ValidationError("--grid must be at least 1");
  igeo::webs::RectDomain dom{a.domain[0], a.domain[1], a.domain[2], a.domain[3]};
  const auto web = igeo::webs::PlanarThreeWeb::from_strings(a.u, a.v, a.w, dom);

  std::vector<Eigen::Vector2d> grid;
  for (int i = 0; i < a.grid; ++i)
    for (int j = 0; j < a.grid; ++j)
      grid.push_back({dom.xmin + (dom.xmax - dom.xmin) * (i + 1.0) / (a.grid + 1.0),
                      dom.ymin + (dom.ymax - dom.ymin) * (j + 1.0) / (a.grid + 1.0)});
  const auto cert = igeo::webs::hexagonality_certificate(web, grid, a.step);

  RunOutput out;
  out.report = {{"command", "web-check"},
                {"config",
                 {{"u", a.u},
                  {"v", a.v},
                  {"w", a.w},
                  {"domain", a.domain},
                  {"grid", a.grid},
                  {"step", a.step},
                  {"seed", seed}}},
                {"certificate", cert.to_json()}};
  if (!a.csv_path.empty()) {
    std::vector<Eigen::Vector2d> corners;
    igeo::webs::hexagon_closure(web, grid[grid.size() / 2], a.step, &corners);
    out.files.emplace_back(a.csv_path, igeo::webs::polyline_csv(corners));
  }
  return out;
}

// ---------------------------------------------------------------------------
// wdvv-check
// ---------------------------------------------------------------------------

struct WdvvArgs {
  std::string phi;
  std::string metric_path;
  std::string points;  // inline JSON, empty = random sample
  int num_random = 5;
};

RunOutput run_wdvv_check(const WdvvArgs& a, std::uint64_t seed) {
  igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse(a.phi),
                                     to_matrix(load_json_file(a.metric_path),
                                               "metric")};
  pot.validate();

  std::vector<Eigen::VectorXd> points;
  if (!a.points.empty()) {
    const json pj = parse_json_text(a.points, "--points");
    if (!pj.is_array()) throw igeo::ValidationError("--points must be an array");
    for (const auto& p : pj) points.push_back(to_vector(p, "--points entry"));
  } else {
    std::mt19937_64 rng(seed);
    for (int k = 0; k < a.num_random; ++k) {
      Eigen::VectorXd p(pot.n());
      for (int i = 0; i < pot.n(); ++i)
        p[i] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
      points.push_back(p);
    }
  }

  json residuals = json::array();
  double max_residual = 0.0;
  for (const auto& p : points) {
    const double r = igeo::wdvv::wdvv_residual(pot, p);
    residuals.push_back(r);
    max_residual = std::max(max_residual, r);
  }

  RunOutput out;
  out.report = {{"command", "wdvv-check"},
                {"config",
                 {{"phi", a.phi},
                  {"metric", a.metric_path},
                  {"points", a.points},
                  {"seed", seed}}},
                {"condition_number", pot.condition_number()},
                {"residuals", residuals},
                {"max_residual", max_residual},
                {"pass", max_residual < 1e-9}};
  return out;
}

// ---------------------------------------------------------------------------
// transport-1d
// ---------------------------------------------------------------------------

struct TransportArgs {
  std::string source = "1";
  std::string target = "1/2";
  std::vector<double> source_interval{0.0, 1.0};
  std::vector<double> target_interval{0.0, 2.0};
  int grid = 1024;
  std::string csv_path;
};

RunOutput run_transport_1d(const TransportArgs& a, std::uint64_t seed) {
  if (a.source_interval.size() != 2 || a.target_interval.size() != 2)
    throw igeo::ValidationError("intervals need exactly two endpoints");
  igeo::ma::TransportOptions opts;
  opts.grid_size = a.grid;
  const auto sd = igeo::expr::parse(a.source);
  const auto td = igeo::expr::parse(a.target);
  const auto plan = igeo::ma::brenier_1d(
      *sd, *td, {a.source_interval[0], a.source_interval[1]},
      {a.target_interval[0], a.target_interval[1]}, opts);

  double max_err = 0.0;
  for (double e : plan.identity_errors) max_err = std::max(max_err, e);

  RunOutput out;
  out.report = {{"command", "transport-1d"},
                {"config",
                 {{"source", a.source},
                  {"target", a.target},
                  {"source_interval", a.source_interval},
                  {"target_interval", a.target_interval},
                  {"grid", a.grid},
                  {"seed", seed}}},
                {"hessian_residual", plan.hessian_residual},
                {"identity_errors", plan.identity_errors},
                {"max_identity_error", max_err}};
  if (!a.csv_path.empty()) out.files.emplace_back(a.csv_path, plan.to_csv());
  return out;
}

// ---------------------------------------------------------------------------
// ceva-check
// ---------------------------------------------------------------------------

struct CevaArgs {
  std::string triangle = "[[0,0],[1,0],[0,1]]";
  std::string point = "[0.25,0.25]";
  std::string simplex;  // optional barycentric point for the frame check
};

RunOutput run_ceva_check(const CevaArgs& a, std::uint64_t seed) {
  const json tj = parse_json_text(a.triangle, "--triangle");
  if (!tj.is_array() || tj.size() != 3)
    throw igeo::ValidationError("--triangle needs three vertices");
  std::array<Eigen::Vector2d, 3> tri;
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd v = to_vector(tj[k], "--triangle vertex");
    if (v.size() != 2) throw igeo::ValidationError("vertices are planar points");
    tri[k] = v.head<2>();
  }
  const Eigen::VectorXd pv = to_vector(parse_json_text(a.point, "--point"), "--point");
  if (pv.size() != 2) throw igeo::ValidationError("--point is a planar point");

  const auto feet = igeo::webs::cevian_feet(tri, pv.head<2>());
  const double product = igeo::webs::ceva_product(tri, feet);

  json feet_json = json::array();
  for (const auto& f : feet) feet_json.push_back({f.x(), f.y()});
  RunOutput out;
  out.report = {{"command", "ceva-check"},
                {"config",
                 {{"triangle", a.triangle},
                  {"point", a.point},
                  {"simplex", a.simplex},
                  {"seed", seed}}},
                {"feet", feet_json},
                {"product", product},
                {"deviation_from_minus_one", std::abs(product + 1.0)}};

  if (!a.simplex.empty()) {
    igeo::webs::SimplexPoint sp{
        to_vector(parse_json_text(a.simplex, "--simplex"), "--simplex")};
    const auto frame = igeo::webs::cevian_frame(sp);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(sp.p.size());
    for (const auto& x : frame.x) sum += x;
    out.report["frame_sum_x_norm"] = sum.cwiseAbs().maxCoeff();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dually flat manifolds: exact exponential families, "
               "Monge-Ampere diagnostics, Boltzmann learning, web geometry"};
  app.require_subcommand(1);

  std::string out_path, config_path;
  std::uint64_t seed = 0;
  app.add_option("--out", out_path, "Write the JSON report here (default stdout)");
  app.add_option("--seed", seed, "Seed for randomized sweeps");
  app.add_option("--config", config_path, "JSON file with per-command sections");

  ManifoldArgs ma;
  auto* cmd_manifold = app.add_subcommand("manifold-report",
                                          "Potentials, metric and duality residuals");
  auto* om_n = cmd_manifold->add_option("--n", ma.n, "Number of binary variables");
  auto* om_basis = cmd_manifold->add_option("--basis", ma.basis, "pairwise or full")
                       ->check(CLI::IsMember({"pairwise", "full"}));
  auto* om_theta = cmd_manifold->add_option("--theta", ma.theta,
                                            "JSON array, or a scalar for a constant");

  BoltzmannArgs ba;
  auto* cmd_boltzmann = app.add_subcommand("boltzmann-train",
                                           "Moment-matching gradient learning");
  auto* ob_target = cmd_boltzmann->add_option("--target", ba.target_path,
                                              "JSON file: 2^N probabilities");
  auto* ob_w0 = cmd_boltzmann->add_option("--w0", ba.w0_path, "Initial weights JSON");
  auto* ob_c = cmd_boltzmann->add_option("--c", ba.c, "Learning rate");
  auto* ob_iters = cmd_boltzmann->add_option("--iters", ba.iters, "Iteration cap");
  auto* ob_tol = cmd_boltzmann->add_option("--tol", ba.tol, "Moment-gap stop");
  auto* ob_nat = cmd_boltzmann->add_flag("--natural", ba.natural,
                                         "Precondition with the inverse metric");
  auto* ob_trace = cmd_boltzmann->add_option("--trace", ba.trace_path,
                                             "Write the iteration CSV here");

  WebArgs wa;
  auto* cmd_web = app.add_subcommand("web-check", "Hexagonality certificate");
  auto* ow_u = cmd_web->add_option("--u", wa.u, "First foliation function");
  auto* ow_v = cmd_web->add_option("--v", wa.v, "Second foliation function");
  auto* ow_w = cmd_web->add_option("--w", wa.w, "Third foliation function");
  auto* ow_domain = cmd_web->add_option("--domain", wa.domain,
                                        "xmin xmax ymin ymax")->expected(4);
  auto* ow_grid = cmd_web->add_option("--grid", wa.grid, "Sample grid per side");
  auto* ow_step = cmd_web->add_option("--step", wa.step, "Closure step");
  auto* ow_csv = cmd_web->add_option("--csv", wa.csv_path,
                                     "Write the central closure polyline here");

  WdvvArgs da;
  auto* cmd_wdvv = app.add_subcommand("wdvv-check", "Associativity residuals");
  auto* od_phi = cmd_wdvv->add_option("--phi", da.phi, "Potential in x1..xn")
                     ->required();
  auto* od_metric = cmd_wdvv->add_option("--metric", da.metric_path,
                                         "JSON file with the constant metric")
                        ->required();
  auto* od_points = cmd_wdvv->add_option("--points", da.points,
                                         "JSON array of evaluation points");
  auto* od_num = cmd_wdvv->add_option("--num-random", da.num_random,
                                      "Random points when --points is absent");

  TransportArgs ta;
  auto* cmd_transport = app.add_subcommand("transport-1d",
                                           "Monotone rearrangement certificate");
  auto* ot_source = cmd_transport->add_option("--source", ta.source, "Source density");
  auto* ot_target = cmd_transport->add_option("--target", ta.target, "Target density");
  auto* ot_si = cmd_transport->add_option("--source-interval", ta.source_interval,
                                          "Source endpoints")->expected(2);
  auto* ot_ti = cmd_transport->add_option("--target-interval", ta.target_interval,
                                          "Target endpoints")->expected(2);
  auto* ot_grid = cmd_transport->add_option("--grid", ta.grid, "Nodes per interval");
  auto* ot_csv = cmd_transport->add_option("--csv", ta.csv_path,
                                           "Write the transport table here");

  CevaArgs ca;
  auto* cmd_ceva = app.add_subcommand("ceva-check", "Signed-ratio concurrency test");
  auto* oc_triangle = cmd_ceva->add_option("--triangle", ca.triangle,
                                           "JSON: three vertices");
  auto* oc_point = cmd_ceva->add_option("--point", ca.point, "JSON: interior point");
  auto* oc_simplex = cmd_ceva->add_option("--simplex", ca.simplex,
                                          "JSON: barycentric point for the frame sum");

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json config;
    if (!config_path.empty()) config = load_json_file(config_path);

    RunOutput out;
    if (cmd_manifold->parsed()) {
      ConfigSection sec(config, "manifold-report");
      sec.fill(om_n, "n", ma.n);
      sec.fill(om_basis, "basis", ma.basis);
      sec.fill(om_theta, "theta", ma.theta);
      out = run_manifold_report(ma, seed);
    } else if (cmd_boltzmann->parsed()) {
      ConfigSection sec(config, "boltzmann-train");
      sec.fill(ob_target, "target", ba.target_path);
      sec.fill(ob_w0, "w0", ba.w0_path);
      sec.fill(ob_c, "c", ba.c);
      sec.fill(ob_iters, "iters", ba.iters);
      sec.fill(ob_tol, "tol", ba.tol);
      sec.fill(ob_nat, "natural", ba.natural);
      sec.fill(ob_trace, "trace", ba.trace_path);
      if (ba.target_path.empty())
        throw igeo::ValidationError("boltzmann-train needs --target");
      out = run_boltzmann_train(ba, seed);
    } else if (cmd_web->parsed()) {
      ConfigSection sec(config, "web-check");
      sec.fill(ow_u, "u", wa.u);
      sec.fill(ow_v, "v", wa.v);
      sec.fill(ow_w, "w", wa.w);
      sec.fill(ow_domain, "domain", wa.domain);
      sec.fill(ow_grid, "grid", wa.grid);
      sec.fill(ow_step, "step", wa.step);
      sec.fill(ow_csv, "csv", wa.csv_path);
      out = run_web_check(wa, seed);
    } else if (cmd_wdvv->parsed()) {
      ConfigSection sec(config, "wdvv-check");
      sec.fill(od_phi, "phi", da.phi);
      sec.fill(od_metric, "metric", da.metric_path);
      sec.fill(od_points, "points", da.points);
      sec.fill(od_num, "num_random", da.num_random);
      out = run_wdvv_check(da, seed);
    } else if (cmd_transport->parsed()) {
      ConfigSection sec(config, "transport-1d");
      sec.fill(ot_source, "source", ta.source);
      sec.fill(ot_target, "target", ta.target);
      sec.fill(ot_si, "source_interval", ta.source_interval);
      sec.fill(ot_ti, "target_interval", ta.target_interval);
      sec.fill(ot_grid, "grid", ta.grid);
      sec.fill(ot_csv, "csv", ta.csv_path);
      out = run_transport_1d(ta, seed);
    } else {
      ConfigSection sec(config, "ceva-check");
      sec.fill(oc_triangle, "triangle", ca.triangle);
      sec.fill(oc_point, "point", ca.point);
      sec.fill(oc_simplex, "simplex", ca.simplex);
      out = run_ceva_check(ca, seed);
    }

    for (const auto& [path, content] : out.files) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw igeo::ValidationError("cannot write file: " + path);
      f << content;
    }
    const std::string text = out.report.dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw igeo::ValidationError("cannot write file: " + out_path);
      f << text;
    }
    return 0;
  } catch (const igeo::ParseError& e) {
    std::cerr << "parse error at offset " << e.offset() << ": " << e.what() << "\n";
    return 2;
  } catch (const igeo::ConvergenceError& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return 3;
  } catch (const igeo::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const igeo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
