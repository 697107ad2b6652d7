#include "igeo/cevian.hpp"

#include <algorithm>
#include <cmath>

#include "igeo/errors.hpp"

namespace igeo::webs {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double triangle_diameter(const std::array<Eigen::Vector2d, 3>& t) {
  return std::max({(t[1] - t[0]).norm(), (t[2] - t[1]).norm(), (t[0] - t[2]).norm()});
}

/* Barycentric coordinates of `pt` with respect to the triangle. */
Eigen::Vector3d barycentric(const std::array<Eigen::Vector2d, 3>& t,
                            const Eigen::Vector2d& pt) {
  const double area = cross2(t[1] - t[0], t[2] - t[0]);
  require(std::abs(area) > 1e-14 * triangle_diameter(t) * triangle_diameter(t),
          "triangle is degenerate");
  const double l1 = cross2(t[2] - t[1], pt - t[1]) / area;
  const double l2 = cross2(t[0] - t[2], pt - t[2]) / area;
  return {l1, l2, 1.0 - l1 - l2};
}

void require_interior(const std::array<Eigen::Vector2d, 3>& t,
                      const Eigen::Vector2d& pt, const char* what) {
  const Eigen::Vector3d l = barycentric(t, pt);
  require(l.minCoeff() > 1e-12, std::string(what) + " must be strictly interior");
}

}  // namespace

// ---------------------------------------------------------------------------
// Simplex frames
// ---------------------------------------------------------------------------

void SimplexPoint::validate() const {
  require(p.size() >= 2, "simplex point needs at least two coordinates");
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]) && p[i] > 0.0 && p[i] < 1.0,
            "barycentric coordinates must lie strictly inside (0, 1)");
    const double y = p[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "barycentric coordinates must sum to one");
}

CevianFrame cevian_frame(const SimplexPoint& point) {
  point.validate();
  const int m = point.vertices();
  CevianFrame f;
  f.y.reserve(m), f.z.reserve(m), f.q.reserve(m), f.x.reserve(m);
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd y = -point.p;
    y[k] += 1.0;  // e_k - p
    const double rest = 1.0 - point.p[k];
    Eigen::VectorXd q = point.p / rest;
    q[k] = 0.0;  // foot lives on the face opposite k, exactly
    f.y.push_back(y);
    f.z.push_back(y / rest);
    f.q.push_back(std::move(q));
    f.x.push_back(point.p[k] * y);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Planar Ceva
// ---------------------------------------------------------------------------

std::array<Eigen::Vector2d, 3> cevian_feet(
    const std::array<Eigen::Vector2d, 3>& triangle, const Eigen::Vector2d& through) {
  require_interior(triangle, through, "cevian pencil point");
  std::array<Eigen::Vector2d, 3> feet;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d a = triangle[k];
    const Eigen::Vector2d u = triangle[(k + 1) % 3];
    const Eigen::Vector2d v = triangle[(k + 2) % 3];
    // a + t (through - a) meets u + s (v - u)
    const Eigen::Vector2d d = through - a, e = v - u;
    const double det = cross2(d, e);
    require(std::abs(det) > 1e-14 * d.norm() * e.norm(),
            "cevian is parallel to the opposite side");
    const double t = cross2(u - a, e) / det;
    feet[k] = a + t * d;
  }
  return feet;
}

double ceva_product(const std::array<Eigen::Vector2d, 3>& triangle,
                    const std::array<Eigen::Vector2d, 3>& feet) {
  const double diam = triangle_diameter(triangle);
  require(diam > 0.0, "triangle is degenerate");
  double product = 1.0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d u = triangle[(k + 1) % 3];
    const Eigen::Vector2d v = triangle[(k + 2) % 3];
    const Eigen::Vector2d d = v - u;
    const Eigen::Vector2d f = feet[k];
    const double off_line = std::abs(cross2(f - u, d)) / d.norm();
    require(off_line <= 1e-10 * std::max(1.0, diam),
            "foot must lie on the line of its opposite side");
    const double num = (u - f).dot(d);
    const double den = (v - f).dot(d);
    require(std::abs(num) > 1e-12 * d.squaredNorm() &&
                std::abs(den) > 1e-12 * d.squaredNorm(),
            "foot at a vertex leaves the signed ratio undefined");
    product *= num / den;
  }
  return product;
}

// ---------------------------------------------------------------------------
// Sending a pencil to infinity
// ---------------------------------------------------------------------------

Eigen::Vector2d apply_homogeneous(const Eigen::Matrix3d& h, const Eigen::Vector2d& pt) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(pt.x(), pt.y(), 1.0);
  if (std::abs(q.z()) <= 1e-14 * q.norm())
    throw EvalError("image point lands at infinity");
  return {q.x() / q.z(), q.y() / q.z()};
}

Eigen::Matrix3d concurrent_to_parallel(const std::array<Eigen::Vector2d, 3>& triangle,
                                       const Eigen::Vector2d& pencil_point) {
  require_interior(triangle, pencil_point, "pencil point");

  // Pick the line through the pencil point that is sent to infinity: stay
  // angularly clear of the three vertex directions (their pencil lines must
  // keep finite images) and of image verticality.
  std::array<double, 3> vertex_angle;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d d = triangle[k] - pencil_point;
    vertex_angle[k] = std::atan2(d.y(), d.x());
  }
  auto angular_gap = [](double a, double b) {
    double d = std::fmod(std::abs(a - b), M_PI);
    return std::min(d, M_PI - d);
  };

  Eigen::Matrix3d best = Eigen::Matrix3d::Identity();
  double best_score = -1.0;
  for (int i = 0; i < 36; ++i) {
    const double phi = (i + 0.5) * M_PI / 36.0;
    double score = M_PI;
    for (int k = 0; k < 3; ++k)
      score = std::min(score, angular_gap(phi, vertex_angle[k]));
    if (score <= best_score) continue;

    // Line through the pencil point with direction angle phi.
    const double nx = -std::sin(phi), ny = std::cos(phi);
    const double c = -(nx * pencil_point.x() + ny * pencil_point.y());
    Eigen::Vector3d u(nx, ny, c);
    u.normalize();
    if (u.z() < 0.0) u = -u;

    Eigen::Matrix3d h;
    Eigen::Vector3d v = u - Eigen::Vector3d::UnitZ();
    if (v.norm() < 1e-12) {
      h = Eigen::Matrix3d::Identity();
    } else {
      h = Eigen::Matrix3d::Identity() - 2.0 * (v * v.transpose()) / v.squaredNorm();
    }
    // The image direction of the pencil: reject near-vertical slopes so the
    // spread check below stays well conditioned.
    const Eigen::Vector3d img =
        h * Eigen::Vector3d(pencil_point.x(), pencil_point.y(), 1.0);
    const double dir_norm = std::hypot(img.x(), img.y());
    if (dir_norm <= 0.0 || std::abs(img.x()) < 0.05 * dir_norm) continue;

    best = h;
    best_score = score;
  }
  if (best_score <= 1e-3)
    throw EvalError("no line through the pencil point clears the vertices");

  const double spread = parallel_slope_spread(best, triangle, pencil_point);
  if (!(spread < 1e-8))
    throw EvalError("transformed Cevians failed the parallelism check (spread " +
                    std::to_string(spread) + ")");
  return best;
}

Eigen::Matrix3d concurrent_to_parallel(const std::array<Eigen::Vector2d, 3>& triangle,
                                       const Eigen::Vector3d& pencil_point) {
  if (std::abs(pencil_point.z()) <= 1e-14 * pencil_point.norm())
    return Eigen::Matrix3d::Identity();  // already a direction: nothing to move
  return concurrent_to_parallel(
      triangle, Eigen::Vector2d(pencil_point.x() / pencil_point.z(),
                                pencil_point.y() / pencil_point.z()));
}

double parallel_slope_spread(const Eigen::Matrix3d& h,
                             const std::array<Eigen::Vector2d, 3>& triangle,
                             const Eigen::Vector2d& pencil_point, int samples) {
  require(samples >= 2, "need at least two samples per Cevian");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector2d prev;
    for (int s = 0; s < samples; ++s) {
      // Stay on the vertex side of the pencil point: its image is infinite.
      const double tau = 0.1 + 0.6 * s / (samples - 1);
      const Eigen::Vector2d img = apply_homogeneous(
          h, triangle[k] + tau * (pencil_point - triangle[k]));
      if (s > 0) {
        const Eigen::Vector2d d = img - prev;
        if (d.norm() == 0.0) throw EvalError("repeated image sample point");
        const double slope = d.y() / d.x();
        lo = std::min(lo, slope);
        hi = std::max(hi, slope);
      }
      prev = img;
    }
  }
  return hi - lo;
}

}  // namespace igeo::webs
