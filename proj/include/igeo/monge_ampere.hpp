#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "igeo/exp_family.hpp"
#include "igeo/expr.hpp"

namespace igeo::ma {

/*
 * Monge-Ampere diagnostics for the dually flat structure: the primal Hessian
 * det, the dual Hessian det obtained by differencing the inverse coordinate
 * map, and the residuals of det g * det g* = 1 and g * g* = I.
 */
struct MAReport {
  double det_primal = 0.0;
  double det_dual = 0.0;
  double product_residual = 0.0;   // |det_primal * det_dual - 1|
  double identity_residual = 0.0;  // max-norm of g * g* - I

  nlohmann::json to_json() const;
};

struct MAReportOptions {
  double fd_step = 1e-5;  // central-difference step in eta coordinates
};

MAReport ma_report(const expfam::StateSpace& space, const expfam::ThetaPoint& theta,
                   const MAReportOptions& opts = {});

/*
 * Finitely supported measure with labelled atoms.  total() sums masses in a
 * canonical (sorted) order, so it is invariant under relabelling: a
 * pushforward that only moves atoms preserves the total to the last bit.
 */
struct DiscreteMeasure {
  std::vector<std::string> support;
  std::vector<double> mass;

  void validate() const;  // distinct labels, nonnegative masses
  double total() const;
};

DiscreteMeasure pushforward(const DiscreteMeasure& mu,
                            const std::function<std::string(const std::string&)>& map);

/*
 * One-dimensional Brenier transport between absolutely continuous measures
 * given by density expressions on intervals, via monotone rearrangement
 * (CDF inversion).  V is the convex potential with V' = T^{-1} on the target
 * interval; density_ratio r(y) certifies det D^2 V = r.
 */
struct Transport1D {
  std::vector<double> grid;              // source sample points
  std::vector<double> map_values;        // T at the source points
  std::vector<double> target_grid;       // target sample points
  std::vector<double> potential_values;  // V at the target points
  std::vector<double> density_ratio;     // r at the target points

  /* max over interior target nodes of |second difference of V - r| */
  double hessian_residual = 0.0;
  /* change-of-variables residuals for f = 1, y, y^2 */
  std::array<double, 3> identity_errors{};

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct TransportOptions {
  int grid_size = 1024;       // number of nodes per interval
  double mass_tol = 1e-6;     // |source mass - target mass| bound
  double invert_tol = 1e-12;  // CDF inversion bracket tolerance
};

Transport1D brenier_1d(const expr::Expression& source_density,
                       const expr::Expression& target_density,
                       std::array<double, 2> source_interval,
                       std::array<double, 2> target_interval,
                       const TransportOptions& opts = {});

}  // namespace igeo::ma
