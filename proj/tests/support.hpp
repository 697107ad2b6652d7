#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "igeo/exp_family.hpp"

/* Test-side reference implementations.  They share no code with the library
 * paths they check: sums run over long double accumulators in plain loops,
 * derivatives come from central differences. */
namespace testsupport {

/* Uniform double in [lo, hi] built from the raw 64-bit stream, so results
 * do not depend on the standard library's distribution internals. */
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int dim, double lo,
                                     double hi) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

/* log sum_x exp(theta . x) by direct enumeration. */
inline double naive_log_partition(const igeo::expfam::StateSpace& space,
                                  const Eigen::VectorXd& theta) {
  const auto& masks = space.masks();
  long double best = -1e4900L;
  std::vector<long double> energy(space.num_states());
  for (std::uint32_t s = 0; s < space.num_states(); ++s) {
    long double e = 0.0L;
    for (std::size_t k = 0; k < masks.size(); ++k)
      if ((s & masks[k]) == masks[k]) e += static_cast<long double>(theta[k]);
    energy[s] = e;
    best = std::max(best, e);
  }
  long double sum = 0.0L;
  for (std::uint32_t s = 0; s < space.num_states(); ++s)
    sum += expl(energy[s] - best);
  return static_cast<double>(best + logl(sum));
}

/* E[x_S] for every basis subset, direct enumeration. */
inline Eigen::VectorXd naive_moments(const igeo::expfam::StateSpace& space,
                                     const Eigen::VectorXd& theta) {
  const auto& masks = space.masks();
  const long double psi = naive_log_partition(space, theta);
  std::vector<long double> p(space.num_states());
  for (std::uint32_t s = 0; s < space.num_states(); ++s) {
    long double e = 0.0L;
    for (std::size_t k = 0; k < masks.size(); ++k)
      if ((s & masks[k]) == masks[k]) e += static_cast<long double>(theta[k]);
    p[s] = expl(e - psi);
  }
  Eigen::VectorXd eta(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    long double m = 0.0L;
    for (std::uint32_t s = 0; s < space.num_states(); ++s)
      if ((s & masks[k]) == masks[k]) m += p[s];
    eta[k] = static_cast<double>(m);
  }
  return eta;
}

/* Central-difference Hessian of the log partition. */
inline Eigen::MatrixXd fd_hessian_psi(const igeo::expfam::StateSpace& space,
                                      const Eigen::VectorXd& theta, double h) {
  const int dim = static_cast<int>(theta.size());
  auto psi = [&](const Eigen::VectorXd& t) {
    return igeo::expfam::log_partition(space, igeo::expfam::ThetaPoint{t});
  };
  Eigen::MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      Eigen::VectorXd t = theta;
      auto at = [&](double di, double dj) {
        t = theta;
        t[i] += di;
        t[j] += dj;
        return psi(t);
      };
      const double v =
          (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
      out(i, j) = out(j, i) = v;
    }
  return out;
}

}  // namespace testsupport
