#pragma once

#include <Eigen/Dense>

#include "igeo/expr.hpp"

namespace igeo::wdvv {

/* Candidate potential of a Frobenius structure: an expression in the flat
 * coordinates x1..xn together with a constant symmetric invertible metric
 * pairing those coordinates. */
struct FrobeniusPotential {
  expr::ExprPtr phi;
  Eigen::MatrixXd metric;

  int n() const { return static_cast<int>(metric.rows()); }

  /* Square symmetric invertible metric, phi only in x1..xn.  Singularity
   * raises SingularError, the rest ValidationError. */
  void validate() const;

  /* Ratio of extreme singular values of the metric. */
  double condition_number() const;
};

/* Associativity residual at a point: the maximum over all index tuples
 * (a,b,c,d) of |sum_ef Phi_abe g^ef Phi_fcd - sum_ef Phi_bce g^ef Phi_fad|,
 * with Phi_abc exact symbolic third derivatives evaluated there.  Values
 * below 1e-9 certify the associativity equations at the point; adding any
 * quadratic polynomial to phi cannot change the result. */
double wdvv_residual(const FrobeniusPotential& pot, const Eigen::VectorXd& point);

}  // namespace igeo::wdvv
