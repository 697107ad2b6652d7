#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace igeo::webs {

/* Interior point of the open probability simplex, full barycentric
 * coordinates (no chart), so vertex permutations stay exact symmetries. */
struct SimplexPoint {
  Eigen::VectorXd p;  // strictly positive, sums to one

  int vertices() const { return static_cast<int>(p.size()); }
  void validate() const;
};

/* Cevian data of an interior point, one entry per vertex k:
 *   y_k = e_k - p          vector from the point to the vertex,
 *   q_k                    foot on the face opposite k -- the conditional
 *                          distribution p^i / (1 - p^k), zero at slot k,
 *   z_k = y_k / (1 - p^k)  normalized Cevian vector, equal to e_k - q_k,
 *   x_k = p^k y_k          weighted generators, summing to zero. */
struct CevianFrame {
  std::vector<Eigen::VectorXd> y, z, q, x;
};

CevianFrame cevian_frame(const SimplexPoint& point);

/* Feet of the three Cevians of a planar triangle through an interior
 * point, found by intersecting each vertex-point line with the opposite
 * side; feet[k] lies opposite triangle[k]. */
std::array<Eigen::Vector2d, 3> cevian_feet(
    const std::array<Eigen::Vector2d, 3>& triangle, const Eigen::Vector2d& through);

/* Signed-ratio product (A'B/A'C)(B'C/B'A)(C'A/C'B) over directed lengths
 * along each side line; equals -1 exactly when the three Cevians are
 * concurrent or mutually parallel.  Each foot must sit on its side line
 * (within 1e-10 of the span) and away from the vertices. */
double ceva_product(const std::array<Eigen::Vector2d, 3>& triangle,
                    const std::array<Eigen::Vector2d, 3>& feet);

/* Projective transform (homogeneous 3x3) sending `pencil_point` to
 * infinity, so all lines through it -- the Cevian triple in particular --
 * become mutually parallel while the vertices stay finite.  The matrix is
 * an orthogonal involution, hence acts on line coefficients by itself. */
Eigen::Matrix3d concurrent_to_parallel(const std::array<Eigen::Vector2d, 3>& triangle,
                                       const Eigen::Vector2d& pencil_point);

/* Homogeneous variant; a pencil point already at infinity (z = 0) needs no
 * motion and yields the identity. */
Eigen::Matrix3d concurrent_to_parallel(const std::array<Eigen::Vector2d, 3>& triangle,
                                       const Eigen::Vector3d& pencil_point);

/* Image of an affine point under a homogeneous map; throws EvalError when
 * the image lands at infinity. */
Eigen::Vector2d apply_homogeneous(const Eigen::Matrix3d& h, const Eigen::Vector2d& pt);

/* Slope disagreement (max minus min) across image segments of the three
 * Cevians through `pencil_point`, each sampled at `samples` points between
 * its vertex and the pencil point.  Rounding-level for a valid transform. */
double parallel_slope_spread(const Eigen::Matrix3d& h,
                             const std::array<Eigen::Vector2d, 3>& triangle,
                             const Eigen::Vector2d& pencil_point, int samples = 10);

}  // namespace igeo::webs
