#include "igeo/exp_family.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "igeo/errors.hpp"
#include "igeo/kernels.hpp"

namespace igeo::expfam {

namespace {

constexpr std::size_t kDenseDimCap = 4096;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSpace
// ---------------------------------------------------------------------------

StateSpace::StateSpace(int n, const std::vector<std::vector<int>>& subsets) : n_(n) {
  require(n >= 1 && n <= 20, "state space requires 1 <= n <= 20");
  require(!subsets.empty(), "statistic basis must be nonempty");
  masks_.reserve(subsets.size());
  for (const auto& s : subsets) {
    require(!s.empty(), "basis subsets must be nonempty");
    std::uint32_t mask = 0;
    for (int i : s) {
      require(i >= 1 && i <= n, "basis subset index out of range");
      const std::uint32_t bit = 1u << (i - 1);
      require((mask & bit) == 0, "basis subset has a repeated index");
      mask |= bit;
    }
    masks_.push_back(mask);
  }
  auto sorted = masks_;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "basis subsets must be distinct");
}

StateSpace StateSpace::pairwise(int n) {
  require(n >= 2, "pairwise basis requires n >= 2");
  std::vector<std::vector<int>> subsets;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) subsets.push_back({i, j});
  return StateSpace(n, subsets);
}

StateSpace StateSpace::full(int n) {
  require(n >= 1 && n <= 20, "state space requires 1 <= n <= 20");
  std::vector<std::vector<int>> subsets;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i + 1);
    subsets.push_back(std::move(s));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return StateSpace(n, subsets);
}

std::vector<std::vector<int>> StateSpace::subsets() const {
  std::vector<std::vector<int>> out;
  out.reserve(masks_.size());
  for (std::uint32_t mask : masks_) {
    std::vector<int> s;
    for (int i = 0; i < n_; ++i)
      if (mask & (1u << i)) s.push_back(i + 1);
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json StateSpace::to_json() const {
  return {{"n", n_}, {"basis", subsets()}};
}

StateSpace StateSpace::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("n") && j.contains("basis"),
          "state space JSON needs fields n and basis");
  return StateSpace(j.at("n").get<int>(),
                    j.at("basis").get<std::vector<std::vector<int>>>());
}

// ---------------------------------------------------------------------------
// Coordinate points
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd coords_from_json(const nlohmann::json& j, const StateSpace& space,
                                 const char* what) {
  require(j.is_object() && j.contains("basis") && j.contains("coords"),
          std::string(what) + " JSON needs fields basis and coords");
  StateSpace declared(space.n(), j.at("basis").get<std::vector<std::vector<int>>>());
  require(declared == space, std::string(what) + " basis does not match the state space");
  const auto& c = j.at("coords");
  require(c.is_array() && c.size() == space.dim(),
          std::string(what) + " coords length does not match basis");
  Eigen::VectorXd v(space.dim());
  for (std::size_t i = 0; i < c.size(); ++i) {
    require(c[i].is_number(), std::string(what) + " coords must be numbers");
    v[static_cast<Eigen::Index>(i)] = c[i].get<double>();
    require(std::isfinite(v[static_cast<Eigen::Index>(i)]),
            std::string(what) + " coords must be finite");
  }
  return v;
}

nlohmann::json coords_to_json(const Eigen::VectorXd& v, const StateSpace& space) {
  std::vector<double> c(v.data(), v.data() + v.size());
  return {{"basis", space.subsets()}, {"coords", c}};
}

}  // namespace

nlohmann::json ThetaPoint::to_json(const StateSpace& space) const {
  return coords_to_json(coords, space);
}

ThetaPoint ThetaPoint::from_json(const nlohmann::json& j, const StateSpace& space) {
  return {coords_from_json(j, space, "theta point")};
}

void EtaPoint::validate(const StateSpace& space) const {
  require(static_cast<std::size_t>(coords.size()) == space.dim(),
          "eta point dimension does not match the state space");
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < coords.size(); ++i)
    require(coords[i] > eps && coords[i] < 1.0 - eps,
            "eta coordinates must lie strictly inside (0, 1)");
}

nlohmann::json EtaPoint::to_json(const StateSpace& space) const {
  return coords_to_json(coords, space);
}

EtaPoint EtaPoint::from_json(const nlohmann::json& j, const StateSpace& space) {
  EtaPoint e{coords_from_json(j, space, "eta point")};
  e.validate(space);
  return e;
}

FisherMetric::FisherMetric(Eigen::MatrixXd m) : m_(std::move(m)) {
  require(m_.rows() == m_.cols(), "metric must be square");
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12, "metric must be symmetric");
}

double FisherMetric::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Potentials and coordinate maps
// ---------------------------------------------------------------------------

namespace {

void check_theta(const StateSpace& space, const ThetaPoint& theta) {
  require(static_cast<std::size_t>(theta.coords.size()) == space.dim(),
          "theta point dimension does not match the state space");
  for (Eigen::Index i = 0; i < theta.coords.size(); ++i)
    require(std::isfinite(theta.coords[i]), "theta coordinates must be finite");
}

std::vector<double> state_energies(const StateSpace& space, const Eigen::VectorXd& theta) {
  std::vector<double> e(space.num_states(), 0.0);
  const auto& masks = space.masks();
  for (std::size_t k = 0; k < masks.size(); ++k)
    e[masks[k]] += theta[static_cast<Eigen::Index>(k)];
  kernels::subset_sum_inplace(e, space.n());
  return e;
}

struct PointData {
  double psi = 0.0;
  std::vector<double> p;        // densities in state order
  std::vector<double> moments;  // moments[m] = sum over states containing mask m
};

PointData compute_point(const StateSpace& space, const Eigen::VectorXd& theta) {
  PointData d;
  std::vector<double> e = state_energies(space, theta);
  const double mu = kernels::reduce_max(e);
  d.p.resize(e.size());
  const double total = kernels::exp_shifted_sum(e, mu, d.p);
  d.psi = mu + std::log(total);
  kernels::scale(d.p, 1.0 / total);
  d.moments = d.p;
  kernels::superset_sum_inplace(d.moments, space.n());
  return d;
}

Eigen::VectorXd moment_vector(const StateSpace& space, const PointData& d) {
  Eigen::VectorXd eta(space.dim());
  const auto& masks = space.masks();
  for (std::size_t k = 0; k < masks.size(); ++k)
    eta[static_cast<Eigen::Index>(k)] = d.moments[masks[k]];
  return eta;
}

Eigen::MatrixXd covariance_matrix(const StateSpace& space, const PointData& d) {
  const auto& masks = space.masks();
  const auto dim = static_cast<Eigen::Index>(space.dim());
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = a; b < dim; ++b) {
      const std::uint32_t ma = masks[a], mb = masks[b];
      const double v = d.moments[ma | mb] - d.moments[ma] * d.moments[mb];
      g(a, b) = v;
      g(b, a) = v;
    }
  return g;
}

}  // namespace

double log_partition(const StateSpace& space, const ThetaPoint& theta) {
  check_theta(space, theta);
  std::vector<double> e = state_energies(space, theta.coords);
  const double mu = kernels::reduce_max(e);
  const double total = kernels::exp_shifted_sum(e, mu, {});
  return mu + std::log(total);
}

double density(const StateSpace& space, const ThetaPoint& theta, std::uint32_t state) {
  check_theta(space, theta);
  require(state < space.num_states(), "state index out of range");
  const auto& masks = space.masks();
  double energy = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if ((masks[k] & state) != masks[k]) continue;
    const double y = theta.coords[static_cast<Eigen::Index>(k)] - comp;
    const double t = energy + y;
    comp = (t - energy) - y;
    energy = t;
  }
  return std::exp(energy - log_partition(space, theta));
}

std::vector<double> densities(const StateSpace& space, const ThetaPoint& theta) {
  check_theta(space, theta);
  return compute_point(space, theta.coords).p;
}

EtaPoint to_eta(const StateSpace& space, const ThetaPoint& theta) {
  check_theta(space, theta);
  PointData d = compute_point(space, theta.coords);
  return {moment_vector(space, d)};
}

FisherMetric fisher_metric(const StateSpace& space, const ThetaPoint& theta) {
  check_theta(space, theta);
  require(space.dim() <= kDenseDimCap, "basis too large for dense metric operations");
  PointData d = compute_point(space, theta.coords);
  return FisherMetric(covariance_matrix(space, d));
}

ThetaPoint to_theta(const StateSpace& space, const EtaPoint& eta,
                    const NewtonOptions& opts) {
  eta.validate(space);
  require(space.dim() <= kDenseDimCap, "basis too large for dense metric operations");
  const auto dim = static_cast<Eigen::Index>(space.dim());
  const Eigen::VectorXd& target = eta.coords;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  if (opts.start) {
    require(opts.start->size() == dim, "newton start has the wrong dimension");
    theta = *opts.start;
  }

  auto objective = [&](const PointData& d, const Eigen::VectorXd& th) {
    return d.psi - th.dot(target);
  };

  PointData d = compute_point(space, theta);
  double gmax = 0.0;
  auto newton_step = [&](const PointData& at) -> Eigen::VectorXd {
    Eigen::MatrixXd g = covariance_matrix(space, at);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
      throw SingularError(
          "singular Fisher metric in Newton solve (eigenvalue range " +
          std::to_string(es.eigenvalues().minCoeff()) + " .. " +
          std::to_string(es.eigenvalues().maxCoeff()) + ")");
    }
    Eigen::VectorXd grad = moment_vector(space, at) - target;
    return llt.solve(-grad);
  };

  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::VectorXd grad = moment_vector(space, d) - target;
    gmax = grad.lpNorm<Eigen::Infinity>();
    if (gmax < opts.grad_tol) {
      /* A couple of undamped polish steps: near the optimum Newton is
       * quadratic, so this drives the residual to rounding level, which the
       * dual-Hessian differencing downstream depends on. */
      for (int p = 0; p < opts.polish_iters; ++p) {
        Eigen::VectorXd cand = theta + newton_step(d);
        PointData cd = compute_point(space, cand);
        const double cmax =
            (moment_vector(space, cd) - target).lpNorm<Eigen::Infinity>();
        if (cmax >= gmax) break;
        theta = cand;
        d = std::move(cd);
        gmax = cmax;
      }
      return {theta};
    }

    Eigen::VectorXd step = newton_step(d);

    /* Near the optimum the predicted decrease sinks below the rounding
     * resolution of psi and a sufficient-decrease test starts rejecting
     * every trial, stalling the iteration on no-op steps.  With a tiny
     * gradient and a bounded step we are inside the quadratic basin, where
     * the raw Newton step is the right move. */
    if (gmax < 1e-6 && step.lpNorm<Eigen::Infinity>() <= 1.0) {
      theta += step;
      d = compute_point(space, theta);
      continue;
    }

    const double descent = grad.dot(step);
    const double f0 = objective(d, theta);
    const double slack = 1e-15 * (1.0 + std::abs(f0));
    double t = 1.0;
    while (true) {
      Eigen::VectorXd cand = theta + t * step;
      PointData cd = compute_point(space, cand);
      if (objective(cd, cand) <= f0 + opts.armijo_c * t * descent + slack) {
        theta = std::move(cand);
        d = std::move(cd);
        break;
      }
      t *= opts.shrink;
      if (t < 1e-18)
        throw ConvergenceError("line search failed in to_theta", gmax);
    }
  }
  throw ConvergenceError("to_theta did not converge within the iteration cap", gmax);
}

double dual_potential(const StateSpace& space, const EtaPoint& eta) {
  ThetaPoint theta = to_theta(space, eta);
  return theta.coords.dot(eta.coords) - log_partition(space, theta);
}

std::vector<double> sphere_embedding(const std::vector<double>& p) {
  require(!p.empty(), "probability vector must be nonempty");
  double sum = 0.0, comp = 0.0;
  for (double v : p) {
    require(v > 0.0, "probabilities must be strictly positive");
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "probabilities must sum to 1");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = 2.0 * std::sqrt(p[i]);
  return out;
}

}  // namespace igeo::expfam
