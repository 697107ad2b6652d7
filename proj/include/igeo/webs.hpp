#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "igeo/expr.hpp"

namespace igeo::webs {

struct RectDomain {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

  void validate() const;
  bool contains(double x, double y, double margin = 0.0) const;

  nlohmann::json to_json() const;
  static RectDomain from_json(const nlohmann::json& j);
};

/* Three foliation functions of the plane coordinates x, y over a
 * rectangular domain; the web's leaves are their level sets.  The
 * operations below assume general position (nonzero, pairwise independent
 * gradients) where they touch the web and throw where that fails. */
struct PlanarThreeWeb {
  std::array<expr::ExprPtr, 3> f;
  RectDomain domain;

  static PlanarThreeWeb from_strings(const std::string& u, const std::string& v,
                                     const std::string& w, RectDomain d);
  void validate() const;
};

/* Throws ValidationError unless all three gradients at (x, y) are nonzero
 * and pairwise linearly independent. */
void check_general_position(const PlanarThreeWeb& web, double x, double y);

/* Closure defect of the Thomsen figure centered at `start`: the first
 * corner sits on the second family's center leaf, offset by `step` in the
 * first function's value; six leaf segments then follow families 1,2,3,
 * 1,2,3, each ending on the center leaf two families ahead (cyclically).
 * Leaf following is nested bracketed 1-D root finding, so corners sit on
 * their leaves to ~1e-13; a hexagonal web closes the figure to that floor.
 * Returns |P7 - P1|; `corners`, when given, receives P1..P7. */
double hexagon_closure(const PlanarThreeWeb& web, const Eigen::Vector2d& start,
                       double step, std::vector<Eigen::Vector2d>* corners = nullptr);

/* Blaschke curvature K = d2/dudv log(F_u/F_v) of the web in normal form
 * (first two functions as coordinates, third as F).  Symbolic when the
 * first two functions are literally x and y; otherwise finite differences
 * in the (u, v) chart with Newton-refined preimages (noise ~1e-8). */
double web_curvature(const PlanarThreeWeb& web, const Eigen::Vector2d& point);

struct WebCertificate {
  double max_abs_curvature = 0.0;
  double max_defect = 0.0;
  double step = 0.0;
  double defect_tol = 0.0;
  std::string verdict;  // "hexagonal" | "not-hexagonal" | "conflict"
  std::vector<Eigen::Vector2d> sampled_points;

  nlohmann::json to_json() const;
};

/* Certify hexagonality over a sample grid by both routes: curvature below
 * 1e-7 at every grid point and closure defect below 0.01 * step^3.  The two
 * criteria must agree; a split yields the diagnostic verdict "conflict". */
WebCertificate hexagonality_certificate(const PlanarThreeWeb& web,
                                        const std::vector<Eigen::Vector2d>& grid,
                                        double step);

/* CSV polyline (header x,y; 17 significant digits). */
std::string polyline_csv(const std::vector<Eigen::Vector2d>& points);

}  // namespace igeo::webs
