#include "igeo/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "igeo/errors.hpp"
#include "igeo/exp_family.hpp"

namespace igeo::boltzmann {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

/* Pair couplings in upper-triangle row-major order, the same enumeration
 * the pairwise state-space basis uses. */
template <typename F>
void for_each_pair(int n, F&& f) {
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f(i, j);
}

Eigen::VectorXd pack_pairs(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(n * (n - 1) / 2);
  int k = 0;
  for_each_pair(n, [&](int i, int j) { v[k++] = m(i, j); });
  return v;
}

Eigen::MatrixXd unpack_pairs(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  int k = 0;
  for_each_pair(n, [&](int i, int j) { m(i, j) = m(j, i) = v[k++]; });
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

void WeightMatrix::validate() const {
  require(w.rows() == w.cols(), "weight matrix must be square");
  const int size = n();
  require(size >= 1 && size <= 20, "weight matrix needs 1 <= N <= 20");
  for (int i = 0; i < size; ++i) {
    require(w(i, i) == 0.0, "weight matrix diagonal must be exactly zero");
    for (int j = 0; j < i; ++j) {
      require(std::isfinite(w(i, j)), "weight entries must be finite");
      require(w(i, j) == w(j, i), "weight matrix must be exactly symmetric");
    }
  }
  if (bias) {
    require(bias->size() == size, "bias length must match the matrix size");
    for (int i = 0; i < size; ++i)
      require(std::isfinite((*bias)[i]), "bias entries must be finite");
  }
}

nlohmann::json WeightMatrix::to_json() const {
  nlohmann::json j;
  std::vector<std::vector<double>> rows(n());
  for (int i = 0; i < n(); ++i)
    for (int k = 0; k < n(); ++k) rows[i].push_back(w(i, k));
  j["w"] = rows;
  if (bias) {
    std::vector<double> h(bias->begin(), bias->end());
    j["bias"] = h;
  }
  return j;
}

WeightMatrix WeightMatrix::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("w"), "weight JSON must hold a \"w\" matrix");
  const auto rows = j.at("w").get<std::vector<std::vector<double>>>();
  const int n = static_cast<int>(rows.size());
  WeightMatrix out;
  out.w.resize(n, n);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(rows[i].size()) == n, "weight matrix must be square");
    for (int k = 0; k < n; ++k) out.w(i, k) = rows[i][k];
  }
  if (j.contains("bias")) {
    const auto h = j.at("bias").get<std::vector<double>>();
    out.bias = Eigen::Map<const Eigen::VectorXd>(h.data(), h.size());
  }
  out.validate();
  return out;
}

int TargetDistribution::num_vars() const {
  const std::size_t m = probabilities.size();
  require(m >= 2 && (m & (m - 1)) == 0, "distribution size must be a power of two");
  int n = 0;
  while ((std::size_t{1} << n) < m) ++n;
  return n;
}

void TargetDistribution::validate() const {
  num_vars();
  Kahan total;
  for (double p : probabilities) {
    require(std::isfinite(p) && p >= 0.0, "probabilities must be nonnegative");
    total.add(p);
  }
  require(std::abs(total.sum - 1.0) <= 1e-12,
          "probabilities must sum to one within 1e-12");
}

nlohmann::json TargetDistribution::to_json() const { return probabilities; }

TargetDistribution TargetDistribution::from_json(const nlohmann::json& j) {
  require(j.is_array(), "distribution JSON must be an array");
  TargetDistribution q{j.get<std::vector<double>>()};
  q.validate();
  return q;
}

// ---------------------------------------------------------------------------
// Stationary law and moments
// ---------------------------------------------------------------------------

TargetDistribution stationary_distribution(const WeightMatrix& weights) {
  weights.validate();
  const int n = weights.n();
  const std::size_t count = std::size_t{1} << n;

  std::vector<double> energy(count);
  for (std::size_t s = 0; s < count; ++s) {
    Kahan e;
    for (int i = 0; i < n; ++i) {
      if (!(s >> i & 1u)) continue;
      if (weights.bias) e.add((*weights.bias)[i]);
      for (int j = 0; j < i; ++j)
        if (s >> j & 1u) e.add(weights.w(i, j));
    }
    energy[s] = e.sum;
  }

  const double shift = *std::max_element(energy.begin(), energy.end());
  Kahan total;
  TargetDistribution p;
  p.probabilities.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    p.probabilities[s] = std::exp(energy[s] - shift);
    total.add(p.probabilities[s]);
  }
  for (double& v : p.probabilities) v /= total.sum;
  return p;
}

Eigen::MatrixXd pair_expectations(const TargetDistribution& dist) {
  dist.validate();
  const int n = dist.num_vars();
  const std::size_t count = dist.probabilities.size();
  std::vector<Kahan> first(n);
  std::vector<Kahan> second(static_cast<std::size_t>(n) * n);
  for (std::size_t s = 0; s < count; ++s) {
    const double q = dist.probabilities[s];
    if (q == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      if (!(s >> i & 1u)) continue;
      first[i].add(q);
      for (int j = 0; j < i; ++j)
        if (s >> j & 1u) second[static_cast<std::size_t>(i) * n + j].add(q);
    }
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = first[i].sum;
    for (int j = 0; j < i; ++j)
      m(i, j) = m(j, i) = second[static_cast<std::size_t>(i) * n + j].sum;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Learning rule and divergence
// ---------------------------------------------------------------------------

Eigen::MatrixXd ahs_update(const WeightMatrix& weights, const TargetDistribution& q,
                           double c) {
  require(c > 0.0, "learning rate must be positive");
  require(q.num_vars() == weights.n(), "target size must match the network");
  const Eigen::MatrixXd qm = pair_expectations(q);
  const Eigen::MatrixXd pm = pair_expectations(stationary_distribution(weights));
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(weights.n(), weights.n());
  for_each_pair(weights.n(), [&](int i, int j) {
    delta(i, j) = delta(j, i) = c * (qm(i, j) - pm(i, j));
  });
  return delta;
}

double kullback(const TargetDistribution& q, const TargetDistribution& p) {
  q.validate();
  p.validate();
  require(q.probabilities.size() == p.probabilities.size(),
          "distributions must share a state space");
  Kahan sum;
  for (std::size_t s = 0; s < q.probabilities.size(); ++s) {
    const double qs = q.probabilities[s];
    if (qs == 0.0) continue;
    const double ps = p.probabilities[s];
    if (ps == 0.0)
      throw EvalError("support violation: q positive where p vanishes (state " +
                      std::to_string(s) + ")");
    sum.add(qs * std::log(qs / ps));
  }
  return std::max(0.0, sum.sum);
}

Eigen::MatrixXd kl_gradient(const WeightMatrix& weights, const TargetDistribution& q) {
  require(q.num_vars() == weights.n(), "target size must match the network");
  const Eigen::MatrixXd qm = pair_expectations(q);
  const Eigen::MatrixXd pm = pair_expectations(stationary_distribution(weights));
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(weights.n(), weights.n());
  for_each_pair(weights.n(), [&](int i, int j) {
    grad(i, j) = grad(j, i) = pm(i, j) - qm(i, j);
  });
  return grad;
}

LearningTrace train(const WeightMatrix& start, const TargetDistribution& q,
                    const TrainOptions& opts) {
  start.validate();
  require(opts.c > 0.0, "learning rate must be positive");
  require(opts.tol > 0.0, "tolerance must be positive");
  require(opts.max_iters >= 0, "iteration cap must be nonnegative");
  require(q.num_vars() == start.n(), "target size must match the network");
  const int n = start.n();
  const Eigen::MatrixXd qm = pair_expectations(q);

  WeightMatrix current = start;
  LearningTrace trace;
  for (int iter = 0;; ++iter) {
    const TargetDistribution p = stationary_distribution(current);
    const Eigen::MatrixXd pm = pair_expectations(p);

    double gap = 0.0;
    for_each_pair(n, [&](int i, int j) {
      gap = std::max(gap, std::abs(qm(i, j) - pm(i, j)));
    });
    if (current.bias)
      for (int i = 0; i < n; ++i)
        gap = std::max(gap, std::abs(qm(i, i) - pm(i, i)));

    trace.records.push_back({iter, kullback(q, p), gap, current.w});
    trace.iterations = iter;
    if (gap < opts.tol) {
      trace.converged = true;
      return trace;
    }
    if (iter >= opts.max_iters) return trace;

    if (opts.natural_gradient && n >= 2) {
      const auto space = expfam::StateSpace::pairwise(n);
      const Eigen::MatrixXd g =
          expfam::fisher_metric(space, {pack_pairs(current.w)}).matrix();
      Eigen::LLT<Eigen::MatrixXd> llt(g);
      if (llt.info() != Eigen::Success)
        throw SingularError("Fisher metric not positive definite along the trace");
      const Eigen::VectorXd step = llt.solve(pack_pairs(qm - pm));
      current.w += opts.c * unpack_pairs(step, n);
    } else {
      for_each_pair(n, [&](int i, int j) {
        const double d = opts.c * (qm(i, j) - pm(i, j));
        current.w(i, j) += d;
        current.w(j, i) = current.w(i, j);
      });
    }
    if (current.bias)
      for (int i = 0; i < n; ++i)
        (*current.bias)[i] += opts.c * (qm(i, i) - pm(i, i));

    const double norm = current.w.cwiseAbs().maxCoeff();
    if (norm > 1e3)
      throw DivergenceError("training diverged: ||W||_inf = " + std::to_string(norm) +
                            " after " + std::to_string(iter + 1) + " updates");
  }
}

std::string LearningTrace::to_csv() const {
  std::string out = "iter,kl,moment_gap";
  const int n = records.empty() ? 0 : static_cast<int>(records.front().w.rows());
  for_each_pair(n, [&](int i, int j) {
    out += ",w_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  });
  out += "\n";
  char buf[64];
  for (const auto& r : records) {
    out += std::to_string(r.iter);
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.kl, r.moment_gap);
    out += buf;
    for_each_pair(n, [&](int i, int j) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.w(i, j));
      out += buf;
    });
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shoda decomposition
// ---------------------------------------------------------------------------

CommutatorPair commutator_decomposition(const WeightMatrix& weights) {
  weights.validate();
  const int n = weights.n();
  CommutatorPair pair;
  pair.x = Eigen::MatrixXd::Zero(n, n);
  pair.y = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) pair.x(i, i) = i;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) pair.y(i, j) = weights.w(i, j) / (i - j);
  return pair;
}

}  // namespace igeo::boltzmann
