#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

namespace igeo::expfam {

/*
 * Exponential families over the 2^n states of n binary variables.  The basis
 * is a list of distinct nonempty subsets S of {1..n}; the sufficient
 * statistic x_S is the product of the bits in S and the density is
 *
 *   p_theta(x) = exp( sum_S theta_S x_S(x) - psi(theta) ).
 *
 * States are indexed 0..2^n-1 with bit i-1 of the index holding variable i.
 * All state sums are exact enumerations; the heavy loops go through the
 * kernels module (subset-sum transforms, shifted exponentials, compensated
 * reductions), so results are deterministic and bit-stable per backend.
 */

class StateSpace {
public:
  StateSpace(int n, const std::vector<std::vector<int>>& subsets);

  static StateSpace pairwise(int n);  // all {i,j}, i<j
  static StateSpace full(int n);      // every nonempty subset

  int n() const { return n_; }
  std::size_t dim() const { return masks_.size(); }
  std::size_t num_states() const { return std::size_t{1} << n_; }
  const std::vector<std::uint32_t>& masks() const { return masks_; }
  std::vector<std::vector<int>> subsets() const;  // 1-based, sorted

  bool operator==(const StateSpace& other) const {
    return n_ == other.n_ && masks_ == other.masks_;
  }

  nlohmann::json to_json() const;
  static StateSpace from_json(const nlohmann::json& j);

private:
  int n_;
  std::vector<std::uint32_t> masks_;
};

/* Natural coordinates; length must match the state space dimension. */
struct ThetaPoint {
  Eigen::VectorXd coords;

  nlohmann::json to_json(const StateSpace& space) const;
  static ThetaPoint from_json(const nlohmann::json& j, const StateSpace& space);
};

/* Expectation coordinates, entries strictly inside (0, 1). */
struct EtaPoint {
  Eigen::VectorXd coords;

  void validate(const StateSpace& space) const;
  nlohmann::json to_json(const StateSpace& space) const;
  static EtaPoint from_json(const nlohmann::json& j, const StateSpace& space);
};

/* Fisher information matrix g_ST = Cov(x_S, x_T); symmetric positive
 * definite at interior points. */
class FisherMetric {
public:
  explicit FisherMetric(Eigen::MatrixXd m);
  const Eigen::MatrixXd& matrix() const { return m_; }
  double determinant() const { return m_.determinant(); }
  double min_eigenvalue() const;

private:
  Eigen::MatrixXd m_;
};

struct NewtonOptions {
  int max_iters = 200;
  double grad_tol = 1e-10;   // max-norm of the moment residual
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int polish_iters = 2;      // extra full steps after reaching grad_tol
  std::optional<Eigen::VectorXd> start;  // defaults to theta = 0
};

/* psi(theta) = log sum_x exp(sum_S theta_S x_S); max-shifted, no overflow. */
double log_partition(const StateSpace& space, const ThetaPoint& theta);

/* p_theta(state) for one state index. */
double density(const StateSpace& space, const ThetaPoint& theta, std::uint32_t state);

/* All 2^n densities in state order (sums to 1 within 1e-12). */
std::vector<double> densities(const StateSpace& space, const ThetaPoint& theta);

/* eta = grad psi: eta_S = E[x_S]. */
EtaPoint to_eta(const StateSpace& space, const ThetaPoint& theta);

/* Inverse map by damped Newton on psi(theta) - <theta, eta>. */
ThetaPoint to_theta(const StateSpace& space, const EtaPoint& eta,
                    const NewtonOptions& opts = {});

FisherMetric fisher_metric(const StateSpace& space, const ThetaPoint& theta);

/* psi*(eta) = <theta(eta), eta> - psi(theta(eta)). */
double dual_potential(const StateSpace& space, const EtaPoint& eta);

/* (2 sqrt p_i): embeds a positive probability vector on the radius-2 sphere. */
std::vector<double> sphere_embedding(const std::vector<double>& p);

}  // namespace igeo::expfam
