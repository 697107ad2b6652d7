#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace igeo::boltzmann {

/* Fully visible binary network with symmetric pairwise couplings.
 *
 * The stationary law is p(x) ~ exp(sum_{i>j} w_ij x_i x_j + sum_i h_i x_i)
 * over x in {0,1}^N.  Biases h are optional and default to absent, in which
 * case only the couplings act.  State index encodes the configuration in
 * binary with bit i (0-based) carrying x_{i+1}.
 */
struct WeightMatrix {
  Eigen::MatrixXd w;                       // symmetric, zero diagonal
  std::optional<Eigen::VectorXd> bias;     // length N when present

  int n() const { return static_cast<int>(w.rows()); }

  /* Throws ValidationError unless w is square with W = W^T and W_ii = 0
   * bit-for-bit, 1 <= N <= 20, and any bias has matching length. */
  void validate() const;

  nlohmann::json to_json() const;
  static WeightMatrix from_json(const nlohmann::json& j);
};

/* Probability table over all 2^N states, indexed by binary encoding. */
struct TargetDistribution {
  std::vector<double> probabilities;

  int num_vars() const;  // N with 2^N == probabilities.size()

  /* Entries nonnegative and finite, size a power of two, total within
   * 1e-12 of one. */
  void validate() const;

  nlohmann::json to_json() const;
  static TargetDistribution from_json(const nlohmann::json& j);
};

/* Per-iteration snapshot of the learning loop. */
struct TraceRecord {
  int iter = 0;
  double kl = 0.0;          // I(q, p) at this iterate
  double moment_gap = 0.0;  // max |q_ij - p_ij| (and bias gaps if enabled)
  Eigen::MatrixXd w;
};

struct LearningTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  int iterations = 0;  // updates actually applied

  /* Header: iter,kl,moment_gap,w_1_2,...,w_{N-1}_N (upper triangle,
   * row-major); floats with 17 significant digits. */
  std::string to_csv() const;
};

struct TrainOptions {
  double c = 0.5;       // learning rate, must be positive
  int max_iters = 1000;
  double tol = 1e-8;    // stop when the moment gap falls below this
  bool natural_gradient = false;  // premultiply the gap by g^{-1}
};

/* Zero-trace witnesses with [X, Y] = X Y - Y X equal to the source W. */
struct CommutatorPair {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};

/* Exact stationary law by direct state enumeration (max-shifted,
 * compensated normalization).  Matches the exponential-family density on
 * the pairwise basis to ~1e-15 per state; the two routes share no code. */
TargetDistribution stationary_distribution(const WeightMatrix& weights);

/* Second moments E[x_i x_j] off the diagonal, first moments E[x_i] on it. */
Eigen::MatrixXd pair_expectations(const TargetDistribution& dist);

/* Ackley-Hinton-Sejnowski step c * (q_ij - p_ij) with p the stationary law
 * of `weights`.  Symmetric, zero diagonal. */
Eigen::MatrixXd ahs_update(const WeightMatrix& weights, const TargetDistribution& q,
                           double c);

/* I(q, p) = sum_x q(x) log(q(x) / p(x)); terms with q(x) = 0 contribute
 * nothing.  Throws EvalError where q > 0 meets p = 0. */
double kullback(const TargetDistribution& q, const TargetDistribution& p);

/* dI(q, p_W)/dw_ij = p_ij - q_ij, so ahs_update == -c * kl_gradient holds
 * exactly (the entries are IEEE negations of each other). */
Eigen::MatrixXd kl_gradient(const WeightMatrix& weights, const TargetDistribution& q);

/* Iterate W <- W + c (q_ij - p_ij) until the moment gap drops below
 * opts.tol or opts.max_iters updates have been applied.  Record 0 always
 * holds the initial state, so an already-matched target converges in zero
 * iterations.  Throws DivergenceError once ||W||_inf exceeds 1e3. */
LearningTrace train(const WeightMatrix& start, const TargetDistribution& q,
                    const TrainOptions& opts);

/* Shoda witnesses for a zero-trace (indeed zero-diagonal) W:
 * X = diag(0..N-1), Y_ij = W_ij / (i - j), so [X, Y]_ij = (i-j) Y_ij. */
CommutatorPair commutator_decomposition(const WeightMatrix& weights);

}  // namespace igeo::boltzmann
