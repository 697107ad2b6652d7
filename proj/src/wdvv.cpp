#include "igeo/wdvv.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "igeo/errors.hpp"

namespace igeo::wdvv {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

std::string coord_name(int i) { return "x" + std::to_string(i + 1); }

}  // namespace

void FrobeniusPotential::validate() const {
  require(phi != nullptr, "potential expression is missing");
  require(metric.rows() == metric.cols(), "metric must be square");
  const int dim = n();
  require(dim >= 1 && dim <= 16, "metric needs 1 <= n <= 16");
  const double scale = std::max(1.0, metric.cwiseAbs().maxCoeff());
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j)
      require(std::abs(metric(i, j) - metric(j, i)) <= 1e-12 * scale,
              "metric must be symmetric");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(metric);
  if (!lu.isInvertible())
    throw SingularError("metric is singular (rank " + std::to_string(lu.rank()) +
                        " of " + std::to_string(dim) + ")");
  for (const auto& name : expr::variables(*phi)) {
    bool known = false;
    for (int i = 0; i < dim; ++i) known = known || name == coord_name(i);
    require(known, "potential variable '" + name + "' is not one of x1..x" +
                       std::to_string(dim));
  }
}

double FrobeniusPotential::condition_number() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(metric);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

double wdvv_residual(const FrobeniusPotential& pot, const Eigen::VectorXd& point) {
  pot.validate();
  const int n = pot.n();
  require(point.size() == n, "evaluation point has the wrong dimension");

  expr::Bindings bind;
  for (int i = 0; i < n; ++i) bind[coord_name(i)] = point[i];

  // Third derivatives, computed once per sorted triple and shared across
  // the symmetric tensor.
  std::vector<double> t(static_cast<std::size_t>(n) * n * n);
  auto at = [&](int a, int b, int c) -> double& {
    return t[(static_cast<std::size_t>(a) * n + b) * n + c];
  };
  for (int a = 0; a < n; ++a) {
    const auto da = expr::derivative(pot.phi, coord_name(a));
    for (int b = a; b < n; ++b) {
      const auto dab = expr::derivative(da, coord_name(b));
      for (int c = b; c < n; ++c) {
        const double v =
            expr::evaluate(*expr::derivative(dab, coord_name(c)), bind);
        at(a, b, c) = at(a, c, b) = at(b, a, c) = v;
        at(b, c, a) = at(c, a, b) = at(c, b, a) = v;
      }
    }
  }

  const Eigen::MatrixXd inv = pot.metric.fullPivLu().inverse();

  // m(a,b,f) = sum_e Phi_abe g^ef
  std::vector<double> m(static_cast<std::size_t>(n) * n * n, 0.0);
  auto mixed = [&](int a, int b, int f) -> double& {
    return m[(static_cast<std::size_t>(a) * n + b) * n + f];
  };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int f = 0; f < n; ++f) {
        double s = 0.0;
        for (int e = 0; e < n; ++e) s += at(a, b, e) * inv(e, f);
        mixed(a, b, f) = s;
      }

  double residual = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int dd = 0; dd < n; ++dd) {
          double lhs = 0.0, rhs = 0.0;
          for (int f = 0; f < n; ++f) {
            lhs += mixed(a, b, f) * at(f, c, dd);
            rhs += mixed(b, c, f) * at(f, a, dd);
          }
          residual = std::max(residual, std::abs(lhs - rhs));
        }
  return residual;
}

}  // namespace igeo::wdvv
