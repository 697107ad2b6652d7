#include "igeo/webs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "igeo/errors.hpp"
#include "igeo/rootfind.hpp"

namespace igeo::webs {

namespace {

constexpr double kInnerTol = 1e-14;  // coordinate tolerance of the leaf solve
constexpr double kOuterTol = 1e-13;  // parameter tolerance of the crossing

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double ev(const expr::ExprPtr& e, double x, double y) {
  return expr::evaluate(*e, {{"x", x}, {"y", y}});
}

struct Partials {
  std::array<expr::ExprPtr, 3> fx, fy;
};

Partials partials_of(const PlanarThreeWeb& web) {
  Partials p;
  for (int a = 0; a < 3; ++a) {
    p.fx[a] = expr::derivative(web.f[a], "x");
    p.fy[a] = expr::derivative(web.f[a], "y");
  }
  return p;
}

/* Solve f(., .) = level for one coordinate (y when solve_y, x otherwise),
 * the other held at `fixed`; the search expands a bracket around `hint` and
 * never leaves [lo_bound, hi_bound]. */
double solve_coordinate(const expr::ExprPtr& f, bool solve_y, double fixed,
                        double hint, double level, double lo_bound, double hi_bound) {
  auto g = [&](double t) {
    return (solve_y ? ev(f, fixed, t) : ev(f, t, fixed)) - level;
  };
  hint = std::clamp(hint, lo_bound, hi_bound);
  const double g0 = g(hint);
  if (g0 == 0.0) return hint;

  double delta = std::max(1e-9 * (hi_bound - lo_bound), 1e-14);
  double lo = hint, hi = hint, glo = g0, ghi = g0;
  for (int k = 0; k < 80; ++k) {
    bool moved = false;
    if (lo > lo_bound) {
      const double nlo = std::max(lo_bound, hint - delta);
      if (nlo < lo) {
        const double gn = g(nlo);
        if (gn == 0.0) return nlo;
        if ((gn < 0.0) != (glo < 0.0))
          return find_root(g, nlo, lo, gn, glo, kInnerTol);
        lo = nlo;
        glo = gn;
        moved = true;
      }
    }
    if (hi < hi_bound) {
      const double nhi = std::min(hi_bound, hint + delta);
      if (nhi > hi) {
        const double gn = g(nhi);
        if (gn == 0.0) return nhi;
        if ((gn < 0.0) != (ghi < 0.0))
          return find_root(g, hi, nhi, ghi, gn, kInnerTol);
        hi = nhi;
        ghi = gn;
        moved = true;
      }
    }
    if (!moved) break;
    delta *= 2.0;
  }
  throw TraversalError("leaf solve found no crossing inside the domain");
}

/* One leaf of family `a` through `from`, parameterized as a graph over the
 * coordinate along which the leaf varies more slowly. */
struct LeafWalker {
  const PlanarThreeWeb& web;
  int family;
  bool graph_over_x;  // dependent coordinate is y
  double level;

  Eigen::Vector2d at(double param, double& dep_hint) const {
    const auto& f = web.f[family];
    if (graph_over_x) {
      const double y = solve_coordinate(f, true, param, dep_hint, level,
                                        web.domain.ymin, web.domain.ymax);
      dep_hint = y;
      return {param, y};
    }
    const double x = solve_coordinate(f, false, param, dep_hint, level,
                                      web.domain.xmin, web.domain.xmax);
    dep_hint = x;
    return {x, param};
  }
};

/* Walk the leaf of family `a` through `from` until the transversal function
 * f_target equals `target`; the nearer of the two directional crossings
 * wins.  `scale` sets the initial probe length. */
Eigen::Vector2d follow_leaf(const PlanarThreeWeb& web, const Partials& d, int a,
                            int target_family, const Eigen::Vector2d& from,
                            double target, double scale) {
  const double gx = ev(d.fx[a], from.x(), from.y());
  const double gy = ev(d.fy[a], from.x(), from.y());
  if (gx == 0.0 && gy == 0.0)
    throw ValidationError("zero gradient along the followed family");
  LeafWalker walk{web, a, std::abs(gy) >= std::abs(gx),
                  ev(web.f[a], from.x(), from.y())};

  const double p0 = walk.graph_over_x ? from.x() : from.y();
  const double dep0 = walk.graph_over_x ? from.y() : from.x();
  const double p_min = walk.graph_over_x ? web.domain.xmin : web.domain.ymin;
  const double p_max = walk.graph_over_x ? web.domain.xmax : web.domain.ymax;

  auto phi = [&](double param, double& dep_hint) {
    const Eigen::Vector2d q = walk.at(param, dep_hint);
    return ev(web.f[target_family], q.x(), q.y()) - target;
  };

  double dep_start = dep0;
  const double phi0 = phi(p0, dep_start);
  if (phi0 == 0.0) return from;

  Eigen::Vector2d best;
  double best_dist = std::numeric_limits<double>::infinity();
  bool found = false;

  for (const int dir : {+1, -1}) {
    double prev = p0, prev_dep = dep0, prev_phi = phi0;
    double delta = std::max(scale / 16.0, 1e-7 * (p_max - p_min));
    for (int k = 0; k < 80; ++k) {
      double param = prev + dir * delta;
      const bool clipped = param < p_min || param > p_max;
      param = std::clamp(param, p_min, p_max);
      if (param == prev) break;
      double dep = prev_dep;
      double value;
      try {
        value = phi(param, dep);
      } catch (const TraversalError&) {
        break;  // leaf left the domain crosswise before any crossing
      }
      if (value == 0.0 || (value < 0.0) != (prev_phi < 0.0)) {
        double dep_hint = prev_dep;
        auto f1 = [&](double s) { return phi(s, dep_hint); };
        const double lo = std::min(prev, param), hi = std::max(prev, param);
        const double flo = lo == prev ? prev_phi : value;
        const double fhi = lo == prev ? value : prev_phi;
        const double root = find_root(f1, lo, hi, flo, fhi, kOuterTol);
        double dep_final = dep_hint;
        const Eigen::Vector2d q = walk.at(root, dep_final);
        if (std::abs(root - p0) < best_dist) {
          best_dist = std::abs(root - p0);
          best = q;
          found = true;
        }
        break;
      }
      if (clipped) break;
      prev = param;
      prev_dep = dep;
      prev_phi = value;
      delta *= 2.0;
    }
  }
  if (!found)
    throw TraversalError(
        "no crossing of the target leaf before the domain boundary");
  return best;
}

bool is_variable(const expr::Expression& e, const char* name) {
  return e.kind() == expr::NodeKind::variable && e.name() == name;
}

/* Finite-difference curvature in the (u, v) chart for webs not presented in
 * normal form: log(F_u/F_v) is evaluated through the implicit-function
 * ratio, preimages via a 2-D Newton on (u, v). */
double chart_curvature(const PlanarThreeWeb& web, const Partials& d,
                       const Eigen::Vector2d& base) {
  using E = expr::Expression;
  const auto& ux = d.fx[0];
  const auto& uy = d.fy[0];
  const auto& vx = d.fx[1];
  const auto& vy = d.fy[1];
  const auto num = E::binary(expr::BinaryOp::sub,
                             E::binary(expr::BinaryOp::mul, d.fx[2], vy),
                             E::binary(expr::BinaryOp::mul, d.fy[2], vx));
  const auto den = E::binary(expr::BinaryOp::sub,
                             E::binary(expr::BinaryOp::mul, d.fy[2], ux),
                             E::binary(expr::BinaryOp::mul, d.fx[2], uy));

  auto log_ratio = [&](const Eigen::Vector2d& q) {
    const double n = ev(num, q.x(), q.y());
    const double dd = ev(den, q.x(), q.y());
    if (n == 0.0 || dd == 0.0)
      throw SingularError("degenerate direction ratio in the web chart");
    return std::log(std::abs(n / dd));
  };

  const double u0 = ev(web.f[0], base.x(), base.y());
  const double v0 = ev(web.f[1], base.x(), base.y());
  const double h = 2e-3 * std::max({1.0, std::abs(u0), std::abs(v0)});

  auto preimage = [&](double tu, double tv) {
    Eigen::Vector2d q = base;
    const double tol = 1e-14 * std::max(1.0, std::abs(tu) + std::abs(tv));
    double residual = 0.0;
    for (int it = 0; it < 60; ++it) {
      const double ru = ev(web.f[0], q.x(), q.y()) - tu;
      const double rv = ev(web.f[1], q.x(), q.y()) - tv;
      residual = std::abs(ru) + std::abs(rv);
      if (residual <= tol) return q;
      Eigen::Matrix2d J;
      J << ev(ux, q.x(), q.y()), ev(uy, q.x(), q.y()), ev(vx, q.x(), q.y()),
          ev(vy, q.x(), q.y());
      const double det = J.determinant();
      if (std::abs(det) <= 1e-12 * J.cwiseAbs().maxCoeff() * J.cwiseAbs().maxCoeff())
        throw SingularError("degenerate Jacobian of the chart pair");
      q -= J.inverse() * Eigen::Vector2d(ru, rv);
    }
    throw ConvergenceError("chart preimage iteration stalled", residual);
  };

  const double lpp = log_ratio(preimage(u0 + h, v0 + h));
  const double lpm = log_ratio(preimage(u0 + h, v0 - h));
  const double lmp = log_ratio(preimage(u0 - h, v0 + h));
  const double lmm = log_ratio(preimage(u0 - h, v0 - h));
  return (lpp - lpm - lmp + lmm) / (4.0 * h * h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

void RectDomain::validate() const {
  require(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) &&
              std::isfinite(ymax),
          "domain bounds must be finite");
  require(xmax > xmin && ymax > ymin, "domain must have positive extent");
}

bool RectDomain::contains(double x, double y, double margin) const {
  return x >= xmin + margin && x <= xmax - margin && y >= ymin + margin &&
         y <= ymax - margin;
}

nlohmann::json RectDomain::to_json() const {
  return {{"xmin", xmin}, {"xmax", xmax}, {"ymin", ymin}, {"ymax", ymax}};
}

RectDomain RectDomain::from_json(const nlohmann::json& j) {
  RectDomain d{j.at("xmin").get<double>(), j.at("xmax").get<double>(),
               j.at("ymin").get<double>(), j.at("ymax").get<double>()};
  d.validate();
  return d;
}

PlanarThreeWeb PlanarThreeWeb::from_strings(const std::string& u, const std::string& v,
                                            const std::string& w, RectDomain d) {
  PlanarThreeWeb web{{expr::parse(u), expr::parse(v), expr::parse(w)}, d};
  web.validate();
  return web;
}

void PlanarThreeWeb::validate() const {
  domain.validate();
  for (const auto& e : f) {
    require(e != nullptr, "web needs three foliation functions");
    for (const auto& name : expr::variables(*e))
      require(name == "x" || name == "y",
              "foliation functions may only use the variables x and y");
  }
}

void check_general_position(const PlanarThreeWeb& web, double x, double y) {
  const Partials d = partials_of(web);
  std::array<Eigen::Vector2d, 3> g;
  for (int a = 0; a < 3; ++a) {
    g[a] = {ev(d.fx[a], x, y), ev(d.fy[a], x, y)};
    require(g[a].norm() > 1e-12, "vanishing foliation gradient (family " +
                                     std::to_string(a + 1) + ")");
  }
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const double cross = g[a].x() * g[b].y() - g[a].y() * g[b].x();
    require(std::abs(cross) > 1e-10 * g[a].norm() * g[b].norm(),
            "foliation gradients are not in general position (families " +
                std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")");
  }
}

// ---------------------------------------------------------------------------
// Hexagon closure
// ---------------------------------------------------------------------------

double hexagon_closure(const PlanarThreeWeb& web, const Eigen::Vector2d& start,
                       double step, std::vector<Eigen::Vector2d>* corners) {
  web.validate();
  require(std::isfinite(step) && step > 0.0, "step must be positive");
  require(web.domain.contains(start.x(), start.y(), 6.0 * step),
          "start must keep a margin of six steps inside the domain");
  check_general_position(web, start.x(), start.y());

  const Partials d = partials_of(web);
  std::array<double, 3> center;
  for (int a = 0; a < 3; ++a) center[a] = ev(web.f[a], start.x(), start.y());

  const Eigen::Vector2d first =
      follow_leaf(web, d, 1, 0, start, center[0] + step, step);
  std::vector<Eigen::Vector2d> path{first};
  Eigen::Vector2d p = first;
  for (int s = 0; s < 6; ++s) {
    const int a = s % 3;
    const int t = (a + 2) % 3;
    p = follow_leaf(web, d, a, t, p, center[t], step);
    if (!web.domain.contains(p.x(), p.y()))
      throw TraversalError("hexagon corner left the domain");
    path.push_back(p);
  }
  if (corners) *corners = std::move(path);
  return (p - first).norm();
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------

double web_curvature(const PlanarThreeWeb& web, const Eigen::Vector2d& point) {
  web.validate();
  require(web.domain.contains(point.x(), point.y()),
          "curvature point outside the domain");
  check_general_position(web, point.x(), point.y());
  const Partials d = partials_of(web);

  if (is_variable(*web.f[0], "x") && is_variable(*web.f[1], "y")) {
    // Normal form: K = T(w_x) - T(w_y) with T(g) = (g_xy g - g_x g_y)/g^2,
    // the mixed partial of log|g|; signs never enter.
    auto term = [&](const expr::ExprPtr& g) {
      const auto gx = expr::derivative(g, "x");
      const auto gy = expr::derivative(g, "y");
      const auto gxy = expr::derivative(gx, "y");
      const double vg = ev(g, point.x(), point.y());
      if (vg == 0.0)
        throw SingularError("vanishing transversal derivative in normal form");
      return (ev(gxy, point.x(), point.y()) * vg -
              ev(gx, point.x(), point.y()) * ev(gy, point.x(), point.y())) /
             (vg * vg);
    };
    return term(d.fx[2]) - term(d.fy[2]);
  }
  return chart_curvature(web, d, point);
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

WebCertificate hexagonality_certificate(const PlanarThreeWeb& web,
                                        const std::vector<Eigen::Vector2d>& grid,
                                        double step) {
  web.validate();
  require(!grid.empty(), "certificate needs a nonempty sample grid");
  require(std::isfinite(step) && step > 0.0, "step must be positive");

  WebCertificate cert;
  cert.step = step;
  cert.defect_tol = 0.01 * step * step * step;
  cert.sampled_points = grid;
  for (const auto& g : grid) {
    cert.max_abs_curvature =
        std::max(cert.max_abs_curvature, std::abs(web_curvature(web, g)));
    cert.max_defect = std::max(cert.max_defect, hexagon_closure(web, g, step));
  }
  const bool flat = cert.max_abs_curvature < 1e-7;
  const bool closed = cert.max_defect < cert.defect_tol;
  cert.verdict = flat == closed ? (flat ? "hexagonal" : "not-hexagonal") : "conflict";
  return cert;
}

nlohmann::json WebCertificate::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : sampled_points) pts.push_back({p.x(), p.y()});
  return {{"max_abs_curvature", max_abs_curvature},
          {"max_defect", max_defect},
          {"step", step},
          {"defect_tol", defect_tol},
          {"verdict", verdict},
          {"sampled_points", pts}};
}

std::string polyline_csv(const std::vector<Eigen::Vector2d>& points) {
  std::string out = "x,y\n";
  char buf[80];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x(), p.y());
    out += buf;
  }
  return out;
}

}  // namespace igeo::webs
