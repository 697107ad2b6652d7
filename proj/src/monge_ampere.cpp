#include "igeo/monge_ampere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "igeo/errors.hpp"
#include "igeo/rootfind.hpp"

namespace igeo::ma {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double kahan_total(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hessian pairing report
// ---------------------------------------------------------------------------

nlohmann::json MAReport::to_json() const {
  return {{"det_primal", det_primal},
          {"det_dual", det_dual},
          {"product_residual", product_residual},
          {"identity_residual", identity_residual}};
}

MAReport ma_report(const expfam::StateSpace& space, const expfam::ThetaPoint& theta,
                   const MAReportOptions& opts) {
  const auto dim = static_cast<Eigen::Index>(space.dim());
  const Eigen::MatrixXd g = expfam::fisher_metric(space, theta).matrix();
  const double det_primal = g.determinant();
  if (!(det_primal > 0.0)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    throw SingularError("primal Hessian is not positive definite (eigenvalues " +
                        std::to_string(es.eigenvalues().minCoeff()) + " .. " +
                        std::to_string(es.eigenvalues().maxCoeff()) + ")");
  }

  const expfam::EtaPoint eta = expfam::to_eta(space, theta);
  expfam::NewtonOptions warm;
  warm.start = theta.coords;

  const double h = opts.fd_step;
  Eigen::MatrixXd dual(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    expfam::EtaPoint ep{eta.coords}, em{eta.coords};
    ep.coords[j] += h;
    em.coords[j] -= h;
    const Eigen::VectorXd tp = expfam::to_theta(space, ep, warm).coords;
    const Eigen::VectorXd tm = expfam::to_theta(space, em, warm).coords;
    dual.col(j) = (tp - tm) / (2.0 * h);
  }
  dual = ((dual + dual.transpose()) / 2.0).eval();

  MAReport r;
  r.det_primal = det_primal;
  r.det_dual = dual.determinant();
  r.product_residual = std::abs(r.det_primal * r.det_dual - 1.0);
  r.identity_residual =
      (g * dual - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  return r;
}

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

void DiscreteMeasure::validate() const {
  require(support.size() == mass.size(), "measure support and mass sizes differ");
  std::set<std::string> seen;
  for (const auto& s : support)
    require(seen.insert(s).second, "measure support labels must be distinct");
  for (double m : mass)
    require(std::isfinite(m) && m >= 0.0, "measure masses must be nonnegative");
}

double DiscreteMeasure::total() const { return kahan_total(mass); }

DiscreteMeasure pushforward(const DiscreteMeasure& mu,
                            const std::function<std::string(const std::string&)>& map) {
  mu.validate();
  DiscreteMeasure out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> groups;
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    const std::string label = map(mu.support[i]);
    auto [it, fresh] = index.try_emplace(label, groups.size());
    if (fresh) {
      out.support.push_back(label);
      groups.emplace_back();
    }
    groups[it->second].push_back(mu.mass[i]);
  }
  out.mass.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.size() == 1) {
      out.mass.push_back(g.front());  // moved, not merged: bit-exact
    } else {
      double s = 0.0, c = 0.0;
      for (double x : g) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
      }
      out.mass.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1-D Brenier transport
// ---------------------------------------------------------------------------

namespace {

struct DensitySamples {
  std::vector<double> x;    // nodes
  std::vector<double> rho;  // density values
  std::vector<double> cdf;  // normalized to [0, 1]
  double mass = 0.0;        // raw trapezoid mass
  double h = 0.0;
};

double eval_density(const expr::Expression& e, double t) {
  auto vars = expr::variables(e);
  expr::Bindings b;
  if (vars.size() > 1)
    throw ValidationError("density expression must use a single variable");
  if (!vars.empty()) b[*vars.begin()] = t;
  return expr::evaluate(e, b);
}

DensitySamples sample_density(const expr::Expression& e, std::array<double, 2> iv,
                              int m) {
  require(iv[1] > iv[0], "interval must have positive length");
  DensitySamples s;
  s.h = (iv[1] - iv[0]) / (m - 1);
  s.x.resize(m);
  s.rho.resize(m);
  for (int i = 0; i < m; ++i) {
    s.x[i] = iv[0] + s.h * i;
    const double v = eval_density(e, s.x[i]);
    require(std::isfinite(v) && v >= 0.0, "densities must be nonnegative and finite");
    s.rho[i] = v;
  }
  s.cdf.resize(m);
  s.cdf[0] = 0.0;
  double acc = 0.0, comp = 0.0;
  for (int i = 1; i < m; ++i) {
    const double y = 0.5 * (s.rho[i - 1] + s.rho[i]) * s.h - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
    s.cdf[i] = acc;
  }
  s.mass = acc;
  require(s.mass > 0.0, "density must carry positive mass");
  for (int i = 0; i < m - 2; ++i)
    if (s.cdf[i + 1] == s.cdf[i] && s.cdf[i + 2] == s.cdf[i + 1])
      throw ValidationError(
          "zero-density plateau wider than one cell makes the CDF non-invertible");
  for (int i = 0; i < m; ++i) s.cdf[i] = std::min(1.0, s.cdf[i] / s.mass);
  s.cdf[m - 1] = 1.0;
  return s;
}

/* Piecewise-linear CDF value at an arbitrary point of the interval. */
double cdf_interp(const DensitySamples& s, double x) {
  if (x <= s.x.front()) return 0.0;
  if (x >= s.x.back()) return 1.0;
  const auto m = static_cast<int>(s.x.size());
  int cell = std::min(m - 2, static_cast<int>((x - s.x.front()) / s.h));
  while (cell > 0 && x < s.x[cell]) --cell;
  while (cell < m - 2 && x > s.x[cell + 1]) ++cell;
  const double w = (x - s.x[cell]) / (s.x[cell + 1] - s.x[cell]);
  return s.cdf[cell] + w * (s.cdf[cell + 1] - s.cdf[cell]);
}

/* Inverse CDF by bracketed bisection/secant on the interpolant. */
double cdf_invert(const DensitySamples& s, double level, double tol) {
  if (level <= 0.0) return s.x.front();
  if (level >= 1.0) return s.x.back();
  auto f = [&](double x) { return cdf_interp(s, x) - level; };
  return find_root(f, s.x.front(), s.x.back(), -level, 1.0 - level, tol);
}

double trapezoid(const std::vector<double>& f, double h) {
  double sum = 0.0, comp = 0.0;
  auto add = [&](double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  add(0.5 * f.front());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) add(f[i]);
  add(0.5 * f.back());
  return sum * h;
}

}  // namespace

Transport1D brenier_1d(const expr::Expression& source_density,
                       const expr::Expression& target_density,
                       std::array<double, 2> source_interval,
                       std::array<double, 2> target_interval,
                       const TransportOptions& opts) {
  require(opts.grid_size >= 8, "grid size must be at least 8");
  const int m = opts.grid_size;
  DensitySamples src = sample_density(source_density, source_interval, m);
  DensitySamples tgt = sample_density(target_density, target_interval, m);

  if (std::abs(src.mass - tgt.mass) > opts.mass_tol * std::max(1.0, src.mass))
    throw ValidationError("source and target carry unequal total mass");

  Transport1D out;
  out.grid = src.x;
  out.map_values.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = cdf_invert(tgt, src.cdf[i], opts.invert_tol);
    if (i > 0) t = std::max(t, out.map_values[i - 1]);  // monotone rearrangement
    out.map_values[i] = t;
  }

  out.target_grid = tgt.x;
  std::vector<double> tinv(m);
  for (int j = 0; j < m; ++j)
    tinv[j] = cdf_invert(src, tgt.cdf[j], opts.invert_tol);
  for (int j = 1; j < m; ++j) tinv[j] = std::max(tinv[j], tinv[j - 1]);

  out.potential_values.resize(m);
  out.potential_values[0] = 0.0;
  {
    double acc = 0.0, comp = 0.0;
    for (int j = 1; j < m; ++j) {
      const double y = 0.5 * (tinv[j - 1] + tinv[j]) * tgt.h - comp;
      const double t = acc + y;
      comp = (t - acc) - y;
      acc = t;
      out.potential_values[j] = acc;
    }
  }

  out.density_ratio.resize(m);
  for (int j = 0; j < m; ++j) {
    const double num = tgt.rho[j] / tgt.mass;
    const double den = eval_density(source_density, tinv[j]) / src.mass;
    out.density_ratio[j] = (den == 0.0 && num == 0.0) ? 0.0 : num / den;
  }

  out.hessian_residual = 0.0;
  for (int j = 1; j + 1 < m; ++j) {
    const double v2 = (out.potential_values[j + 1] - 2.0 * out.potential_values[j] +
                       out.potential_values[j - 1]) /
                      (tgt.h * tgt.h);
    out.hessian_residual =
        std::max(out.hessian_residual, std::abs(v2 - out.density_ratio[j]));
  }

  for (int k = 0; k < 3; ++k) {
    std::vector<double> lhs(m), rhs(m);
    auto f = [&](double y) { return k == 0 ? 1.0 : (k == 1 ? y : y * y); };
    for (int i = 0; i < m; ++i) lhs[i] = f(out.map_values[i]);
    for (int j = 0; j < m; ++j) rhs[j] = f(tgt.x[j]) * out.density_ratio[j];
    out.identity_errors[k] =
        std::abs(trapezoid(lhs, src.h) - trapezoid(rhs, tgt.h));
  }
  return out;
}

nlohmann::json Transport1D::to_json() const {
  return {{"grid", grid},
          {"map_values", map_values},
          {"target_grid", target_grid},
          {"potential_values", potential_values},
          {"density_ratio", density_ratio},
          {"hessian_residual", hessian_residual},
          {"identity_errors", identity_errors}};
}

std::string Transport1D::to_csv() const {
  std::string out = "x,T,y,V,detD2V,r\n";
  char buf[160];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v2 =
        (i > 0 && i + 1 < grid.size())
            ? (potential_values[i + 1] - 2.0 * potential_values[i] +
               potential_values[i - 1]) /
                  ((target_grid[1] - target_grid[0]) * (target_grid[1] - target_grid[0]))
            : density_ratio[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", grid[i],
                  map_values[i], target_grid[i], potential_values[i], v2,
                  density_ratio[i]);
    out += buf;
  }
  return out;
}

}  // namespace igeo::ma
