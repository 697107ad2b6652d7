#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "igeo/cevian.hpp"
#include "igeo/errors.hpp"
#include "igeo/webs.hpp"
#include "igeo/wdvv.hpp"
#include "support.hpp"

using namespace igeo::webs;
using igeo::ValidationError;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

SimplexPoint simplex(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return SimplexPoint{v};
}

SimplexPoint random_interior(std::mt19937_64& rng, int dim) {
  Eigen::VectorXd v(dim);
  double sum = 0.0;
  for (int i = 0; i < dim; ++i) sum += (v[i] = testsupport::uniform(rng, 0.05, 1.0));
  v /= sum;
  return SimplexPoint{v};
}

PlanarThreeWeb make_web(const std::string& u, const std::string& v,
                        const std::string& w, double xmin, double xmax,
                        double ymin, double ymax) {
  return PlanarThreeWeb::from_strings(u, v, w, RectDomain{xmin, xmax, ymin, ymax});
}

const std::array<Vector2d, 3> kRightTriangle{Vector2d(0.0, 0.0),
                                             Vector2d(1.0, 0.0),
                                             Vector2d(0.0, 1.0)};

}  // namespace

// ---------------------------------------------------------------------------
// Simplex points and Cevian frames
// ---------------------------------------------------------------------------

TEST_CASE("simplex points validate positivity and normalization") {
  CHECK_NOTHROW(simplex({0.5, 0.25, 0.25}).validate());
  CHECK_THROWS_AS(simplex({0.5, 0.5, 0.0}).validate(), ValidationError);
  CHECK_THROWS_AS(simplex({0.7, 0.4, -0.1}).validate(), ValidationError);
  CHECK_THROWS_AS(simplex({0.5, 0.4}).validate(), ValidationError);  // sum 0.9
  CHECK_THROWS_AS(simplex({1.0}).validate(), ValidationError);       // dim 1
}

TEST_CASE("cevian frame at the barycenter") {
  const auto frame = cevian_frame(simplex({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd ek = Eigen::VectorXd::Zero(3);
    ek[k] = 1.0;
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.0 / 3);
    CHECK((frame.y[k] - (ek - p)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((frame.x[k] - (ek - p) / 3.0).cwiseAbs().maxCoeff() <= 1e-16);
    sum += frame.x[k];
  }
  CHECK(sum.cwiseAbs().maxCoeff() <= 1e-16);
}

TEST_CASE("cevian frame at the documented asymmetric point") {
  const auto frame = cevian_frame(simplex({0.5, 0.25, 0.25}));
  CHECK(frame.q[0][0] == 0.0);
  CHECK(frame.q[0][1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(frame.q[0][2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(frame.z[0][0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(frame.z[0][1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(frame.z[0][2] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("cevian frame invariants across dimensions") {
  std::mt19937_64 rng(71);
  int tested = 0;
  for (int dim = 3; dim <= 7; ++dim) {  // simplices with 3..7 vertices
    for (int rep = 0; rep < 200; ++rep) {
      const auto p = random_interior(rng, dim);
      const auto frame = cevian_frame(p);
      Eigen::VectorXd xsum = Eigen::VectorXd::Zero(dim);
      for (int k = 0; k < dim; ++k) {
        CHECK(frame.q[k][k] == 0.0);  // exactly on the opposite face
        double qsum = 0.0;
        for (int i = 0; i < dim; ++i) {
          qsum += frame.q[k][i];
          if (i != k)
            CHECK(frame.q[k][i] ==
                  doctest::Approx(p.p[i] / (1.0 - p.p[k])).epsilon(1e-14));
        }
        CHECK(std::abs(qsum - 1.0) <= 1e-12);
        CHECK((frame.z[k] - frame.y[k] / (1.0 - p.p[k])).cwiseAbs().maxCoeff() <=
              1e-15);
        xsum += frame.x[k];
      }
      CHECK(xsum.cwiseAbs().maxCoeff() <= 1e-14);
      ++tested;
    }
  }
  CHECK(tested == 1000);
}

TEST_CASE("cevian frame validates its input") {
  Eigen::VectorXd boundary(3);
  boundary << 0.5, 0.5, 0.0;
  CHECK_THROWS_AS(cevian_frame(SimplexPoint{boundary}), ValidationError);
  Eigen::VectorXd unnormalized(3);
  unnormalized << 0.4, 0.3, 0.2;
  CHECK_THROWS_AS(cevian_frame(SimplexPoint{unnormalized}), ValidationError);
}

// ---------------------------------------------------------------------------
// Planar Ceva
// ---------------------------------------------------------------------------

TEST_CASE("medians give ceva product minus one") {
  const std::array<Vector2d, 3> feet{Vector2d(0.5, 0.5), Vector2d(0.0, 0.5),
                                     Vector2d(0.5, 0.0)};
  CHECK(ceva_product(kRightTriangle, feet) == -1.0);
}

TEST_CASE("cevians through an interior point are concurrent") {
  const auto feet = cevian_feet(kRightTriangle, Vector2d(0.25, 0.25));
  CHECK(std::abs(ceva_product(kRightTriangle, feet) + 1.0) <= 1e-10);

  std::mt19937_64 rng(72);
  for (int rep = 0; rep < 100; ++rep) {
    // random triangle with decent area, random interior point
    std::array<Vector2d, 3> tri;
    double area = 0.0;
    do {
      for (auto& v : tri)
        v = Vector2d(testsupport::uniform(rng, -3.0, 3.0),
                     testsupport::uniform(rng, -3.0, 3.0));
      area = std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                      (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
    } while (area < 0.5);
    double a = testsupport::uniform(rng, 0.1, 0.8);
    double b = testsupport::uniform(rng, 0.1, 0.9 - a);
    const Vector2d p = tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]);
    const auto f = cevian_feet(tri, p);
    CHECK(std::abs(ceva_product(tri, f) + 1.0) <= 1e-10);
  }
}

TEST_CASE("perturbed feet break concurrency detectably") {
  std::mt19937_64 rng(73);
  for (int rep = 0; rep < 25; ++rep) {
    double a = testsupport::uniform(rng, 0.15, 0.7);
    double b = testsupport::uniform(rng, 0.15, 0.85 - a);
    const Vector2d p(a, b);  // barycentric-ish interior of the right triangle
    auto feet = cevian_feet(kRightTriangle, p);
    // slide one foot 0.05 along its side line
    const int k = static_cast<int>(rng() % 3);
    const Vector2d side = kRightTriangle[(k + 2) % 3] - kRightTriangle[(k + 1) % 3];
    feet[k] += 0.05 * side / side.norm();
    const double prod = ceva_product(kRightTriangle, feet);
    CHECK(std::abs(prod + 1.0) > 1e-3);
  }
}

TEST_CASE("ceva product is affine invariant") {
  std::mt19937_64 rng(74);
  const Vector2d p(0.3, 0.4);
  const auto feet = cevian_feet(kRightTriangle, p);
  const double base = ceva_product(kRightTriangle, feet);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Matrix2d a;
    do {
      a << testsupport::uniform(rng, -2.0, 2.0), testsupport::uniform(rng, -2.0, 2.0),
          testsupport::uniform(rng, -2.0, 2.0), testsupport::uniform(rng, -2.0, 2.0);
    } while (std::abs(a.determinant()) < 0.3);
    const Vector2d shift(testsupport::uniform(rng, -5.0, 5.0),
                         testsupport::uniform(rng, -5.0, 5.0));
    std::array<Vector2d, 3> tri2;
    std::array<Vector2d, 3> feet2;
    for (int k = 0; k < 3; ++k) {
      tri2[k] = a * kRightTriangle[k] + shift;
      feet2[k] = a * feet[k] + shift;
    }
    CHECK(ceva_product(tri2, feet2) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("ceva product rejects malformed feet") {
  // foot at a vertex
  std::array<Vector2d, 3> at_vertex{Vector2d(1.0, 0.0), Vector2d(0.0, 0.5),
                                    Vector2d(0.5, 0.0)};
  CHECK_THROWS_AS(ceva_product(kRightTriangle, at_vertex), ValidationError);
  // foot off its side line (x + y = 1.2 instead of 1)
  std::array<Vector2d, 3> off_line{Vector2d(0.6, 0.6), Vector2d(0.0, 0.5),
                                   Vector2d(0.5, 0.0)};
  CHECK_THROWS_AS(ceva_product(kRightTriangle, off_line), ValidationError);
}

TEST_CASE("cevian feet land on the opposite side lines") {
  std::mt19937_64 rng(75);
  for (int rep = 0; rep < 50; ++rep) {
    double a = testsupport::uniform(rng, 0.1, 0.8);
    double b = testsupport::uniform(rng, 0.1, 0.9 - a);
    const auto feet = cevian_feet(kRightTriangle, Vector2d(a, b));
    // feet[0] on segment BC: x + y = 1; feet[1] on x = 0; feet[2] on y = 0
    CHECK(std::abs(feet[0].x() + feet[0].y() - 1.0) <= 1e-12);
    CHECK(std::abs(feet[1].x()) <= 1e-12);
    CHECK(std::abs(feet[2].y()) <= 1e-12);
  }
  CHECK_THROWS_AS(cevian_feet(kRightTriangle, Vector2d(0.6, 0.6)),
                  ValidationError);  // outside
  CHECK_THROWS_AS(cevian_feet(kRightTriangle, Vector2d(0.0, 0.5)),
                  ValidationError);  // on a side
}

// ---------------------------------------------------------------------------
// Concurrent-to-parallel projective normalization
// ---------------------------------------------------------------------------

TEST_CASE("projective normalization parallelizes the cevian pencil") {
  const std::array<Vector2d, 3> tri{Vector2d(0.0, 0.0), Vector2d(4.0, 0.0),
                                    Vector2d(0.0, 4.0)};
  const Vector2d centroid(4.0 / 3.0, 4.0 / 3.0);
  const auto h = concurrent_to_parallel(tri, centroid);
  CHECK(std::abs(h.determinant()) > 1e-12);
  CHECK(parallel_slope_spread(h, tri, centroid) < 1e-10);
  // involution: applying twice restores the plane
  CHECK((h * h - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  // vertices stay finite
  for (const auto& v : tri) CHECK_NOTHROW(apply_homogeneous(h, v));
}

TEST_CASE("projective normalization works from random interior points") {
  std::mt19937_64 rng(76);
  const std::array<Vector2d, 3> tri{Vector2d(-1.0, 0.0), Vector2d(3.0, 0.5),
                                    Vector2d(0.5, 2.5)};
  for (int rep = 0; rep < 50; ++rep) {
    double a = testsupport::uniform(rng, 0.1, 0.8);
    double b = testsupport::uniform(rng, 0.1, 0.9 - a);
    const Vector2d p = tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]);
    const auto h = concurrent_to_parallel(tri, p);
    CHECK(std::abs(h.determinant()) > 1e-12);
    CHECK(parallel_slope_spread(h, tri, p) < 1e-8);
  }
}

TEST_CASE("pencil point already at infinity needs no motion") {
  const std::array<Vector2d, 3> tri{Vector2d(0.0, 0.0), Vector2d(1.0, 0.0),
                                    Vector2d(0.0, 1.0)};
  const auto h = concurrent_to_parallel(tri, Vector3d(1.0, 1.0, 0.0));
  CHECK((h - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate pencil points are rejected") {
  CHECK_THROWS_AS(concurrent_to_parallel(kRightTriangle, Vector2d(0.5, 0.0)),
                  ValidationError);  // on a side
  CHECK_THROWS_AS(concurrent_to_parallel(kRightTriangle, Vector2d(2.0, 2.0)),
                  ValidationError);  // outside
}

// ---------------------------------------------------------------------------
// Hexagon closure
// ---------------------------------------------------------------------------

TEST_CASE("parallel web closes exactly") {
  const auto web = make_web("x", "y", "x+y", -0.5, 1.5, -0.5, 1.5);
  std::vector<Vector2d> corners;
  const double defect = hexagon_closure(web, Vector2d(0.5, 0.5), 0.1, &corners);
  CHECK(defect < 1e-12);
  REQUIRE(corners.size() == 7);
  // first corner shifts the first coordinate by one step along the
  // second family's center leaf
  CHECK(corners[0].x() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(corners[0].y() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK((corners.back() - corners.front()).norm() == defect);
}

TEST_CASE("multiplicative web closes to rounding") {
  const auto web = make_web("x", "y", "x*y", 0.0, 2.0, 0.0, 2.0);
  CHECK(hexagon_closure(web, Vector2d(1.0, 1.0), 0.1) < 1e-8);
}

TEST_CASE("curved web leaves a visible defect that scales cubically") {
  const auto web = make_web("x", "y", "x*exp(y)+y", 0.2, 1.8, -0.3, 1.3);
  const double d1 = hexagon_closure(web, Vector2d(1.0, 0.5), 0.1);
  CHECK(d1 > 1e-4);
  const double d2 = hexagon_closure(web, Vector2d(1.0, 0.5), 0.05);
  CHECK(d2 <= d1 / 4.0);  // cubic closure order
  // exact-closure webs stay at the floor instead
  const auto flat = make_web("x", "y", "x*y", 0.0, 2.0, 0.0, 2.0);
  CHECK(hexagon_closure(flat, Vector2d(1.0, 1.0), 0.05) < 1e-12);
}

TEST_CASE("closure rejects bad starts and degenerate webs") {
  const auto web = make_web("x", "y", "x+y", 0.0, 1.0, 0.0, 1.0);
  // margin: six steps of clearance required
  CHECK_THROWS_AS(hexagon_closure(web, Vector2d(0.1, 0.5), 0.1), ValidationError);
  CHECK_THROWS_AS(hexagon_closure(web, Vector2d(0.5, 0.5), -0.1), ValidationError);
  // two equal foliations violate general position
  const auto degenerate = make_web("x", "x+0*y", "x+y", -1.0, 2.0, -1.0, 2.0);
  CHECK_THROWS_AS(hexagon_closure(degenerate, Vector2d(0.5, 0.5), 0.05),
                  ValidationError);
}

TEST_CASE("hexagon corners sit on their defining leaves") {
  const auto web = make_web("x", "y", "x*y", 0.0, 2.0, 0.0, 2.0);
  std::vector<Vector2d> c;
  hexagon_closure(web, Vector2d(1.1, 0.9), 0.08, &c);
  REQUIRE(c.size() == 7);
  auto at = [&](int fam, const Vector2d& pt) {
    igeo::expr::Bindings b{{"x", pt.x()}, {"y", pt.y()}};
    return igeo::expr::evaluate(*web.f[static_cast<std::size_t>(fam)], b);
  };
  const Vector2d center(1.1, 0.9);
  // corner 0 shares family-1 value with the center and has f0 = f0(center)+step
  CHECK(at(1, c[0]) == doctest::Approx(at(1, center)).epsilon(1e-10));
  CHECK(at(0, c[0]) == doctest::Approx(at(0, center) + 0.08).epsilon(1e-10));
  // each segment s follows family s % 3: its value is constant along it
  for (int s = 0; s < 6; ++s)
    CHECK(at(s % 3, c[static_cast<std::size_t>(s)]) ==
          doctest::Approx(at(s % 3, c[static_cast<std::size_t>(s) + 1]))
              .epsilon(1e-9));
}

// ---------------------------------------------------------------------------
// Web curvature
// ---------------------------------------------------------------------------

TEST_CASE("curvature vanishes for the documented flat webs") {
  const auto add = make_web("x", "y", "x+y", -0.5, 1.5, -0.5, 1.5);
  CHECK(std::abs(web_curvature(add, Vector2d(0.5, 0.5))) <= 1e-14);
  const auto mul = make_web("x", "y", "x*y", 0.0, 2.0, 0.0, 2.0);
  CHECK(std::abs(web_curvature(mul, Vector2d(1.0, 1.0))) <= 1e-12);
}

TEST_CASE("curvature of the curved web matches the hand value") {
  // K = -e^y / (x e^y + 1)^2, so K(1, 0) = -1/4
  const auto web = make_web("x", "y", "x*exp(y)+y", 0.2, 1.8, -0.5, 1.0);
  const double k = web_curvature(web, Vector2d(1.0, 0.0));
  CHECK(k == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(std::abs(k) > 1e-2);
}

TEST_CASE("curvature via the chart path matches the symbolic route") {
  // exp(log(x)) equals x but is not literally the variable, forcing the
  // finite-difference chart route through the same (x, y) chart
  const auto chart = make_web("exp(log(x))", "y", "x*exp(y)+y", 0.2, 1.8, -0.5, 1.0);
  const double k = web_curvature(chart, Vector2d(1.0, 0.0));
  CHECK(k == doctest::Approx(-0.25).epsilon(1e-5));
}

TEST_CASE("relabelling a coordinate family rescales the curvature scalar") {
  // K is the density of the curvature form against du dv; with u = 2x the
  // form is unchanged while du dv doubles, so the scalar halves.
  const auto chart = make_web("2*x", "y", "x*exp(y)+y", 0.2, 1.8, -0.5, 1.0);
  const double k = web_curvature(chart, Vector2d(1.0, 0.0));
  CHECK(k == doctest::Approx(-0.125).epsilon(1e-5));
}

TEST_CASE("curvature is invariant under leaf reparametrization") {
  const auto plain = make_web("x", "y", "x+y", -0.5, 1.5, -0.5, 1.5);
  const auto warped = make_web("x", "y", "exp(x+y)", -0.5, 1.5, -0.5, 1.5);
  const double a = web_curvature(plain, Vector2d(0.3, 0.2));
  const double b = web_curvature(warped, Vector2d(0.3, 0.2));
  CHECK(std::abs(a - b) <= 1e-6);

  const auto mul = make_web("x", "y", "x*y", 0.5, 2.0, 0.5, 2.0);
  const auto logmul = make_web("x", "y", "log(x*y)", 0.5, 2.0, 0.5, 2.0);
  CHECK(std::abs(web_curvature(mul, Vector2d(1.2, 1.1)) -
                 web_curvature(logmul, Vector2d(1.2, 1.1))) <= 1e-6);
}

TEST_CASE("curvature rejects points outside the domain") {
  const auto web = make_web("x", "y", "x+y", 0.0, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(web_curvature(web, Vector2d(2.0, 0.5)), ValidationError);
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

TEST_CASE("certificates classify the documented webs") {
  const std::vector<Vector2d> grid{Vector2d(0.5, 0.5), Vector2d(0.7, 0.4)};
  const auto flat = make_web("x", "y", "x+y", -0.5, 1.5, -0.5, 1.5);
  const auto cf = hexagonality_certificate(flat, grid, 0.05);
  CHECK(cf.verdict == "hexagonal");
  CHECK(cf.max_abs_curvature < 1e-7);
  CHECK(cf.max_defect < 1e-8);
  CHECK(cf.defect_tol == doctest::Approx(0.01 * 0.05 * 0.05 * 0.05));

  const auto curved = make_web("x", "y", "x*exp(y)+y", 0.2, 1.8, -0.3, 1.3);
  const auto cc = hexagonality_certificate(
      curved, {Vector2d(1.0, 0.5), Vector2d(0.9, 0.6)}, 0.1);
  CHECK(cc.verdict == "not-hexagonal");
  CHECK(cc.max_abs_curvature > 1e-2);
  CHECK(cc.max_defect > 1e-4);

  const auto j = cc.to_json();
  CHECK(j.at("verdict") == "not-hexagonal");
  CHECK(j.at("max_abs_curvature").get<double>() == cc.max_abs_curvature);
  CHECK(j.at("max_defect").get<double>() == cc.max_defect);
  CHECK(j.at("sampled_points").size() == 2);
}

TEST_CASE("certificate on the image of a cevian pencil is hexagonal") {
  // Send the Cevian pencil through p to infinity; the image web of the three
  // vertex pencils is a classical hexagonal (algebraic) web.
  const std::array<Vector2d, 3> tri{Vector2d(0.0, 0.0), Vector2d(4.0, 0.0),
                                    Vector2d(0.0, 4.0)};
  const Vector2d p(1.2, 1.1);
  const auto h = concurrent_to_parallel(tri, p);
  std::array<Vector2d, 3> img;
  for (int k = 0; k < 3; ++k) img[k] = apply_homogeneous(h, tri[k]);

  // build the pencil web of the three image vertices around their centroid
  const Vector2d c = (img[0] + img[1] + img[2]) / 3.0;
  double clearance = 1e30;
  for (const auto& v : img) clearance = std::min(clearance, (v - c).norm());
  const double half = 0.2 * clearance;
  auto slope_expr = [&](const Vector2d& v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "(y-(%.17g))/(x-(%.17g))", v.y(), v.x());
    return std::string(buf);
  };
  const auto web = make_web(slope_expr(img[0]), slope_expr(img[1]),
                            slope_expr(img[2]), c.x() - half, c.x() + half,
                            c.y() - half, c.y() + half);
  const double step = half / 8.0;
  const auto cert = hexagonality_certificate(web, {c}, step);
  CHECK(cert.verdict == "hexagonal");
}

TEST_CASE("polyline csv has a header and one row per point") {
  const auto csv =
      polyline_csv({Vector2d(0.0, 1.0), Vector2d(0.5, 0.25), Vector2d(1.0, 0.0)});
  CHECK(csv.rfind("x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("0.5,0.25") != std::string::npos);
}

TEST_CASE("rect domains validate and round trip") {
  RectDomain d{0.0, 2.0, -1.0, 1.0};
  CHECK_NOTHROW(d.validate());
  CHECK(d.contains(1.0, 0.0));
  CHECK(!d.contains(2.5, 0.0));
  CHECK(d.contains(0.5, 0.0, 0.25));
  CHECK(!d.contains(0.1, 0.0, 0.25));  // margin violated
  const auto back = RectDomain::from_json(d.to_json());
  CHECK(back.xmin == d.xmin);
  CHECK(back.xmax == d.xmax);
  CHECK(back.ymin == d.ymin);
  CHECK(back.ymax == d.ymax);
  CHECK_THROWS_AS((RectDomain{1.0, 0.0, 0.0, 1.0}).validate(), ValidationError);
}

TEST_CASE("webs reject unknown variables and bad expressions") {
  CHECK_THROWS_AS(make_web("x", "y", "x+z", 0.0, 1.0, 0.0, 1.0).validate(),
                  ValidationError);
  CHECK_THROWS_AS(make_web("x", "y", "x +* y", 0.0, 1.0, 0.0, 1.0),
                  igeo::ParseError);
}

// ---------------------------------------------------------------------------
// WDVV residuals
// ---------------------------------------------------------------------------

TEST_CASE("one-variable potentials are automatically associative") {
  std::mt19937_64 rng(77);
  for (const char* phi : {"x1^3/6", "exp(x1)", "x1^4 - 2*x1^2"}) {
    Eigen::MatrixXd g(1, 1);
    do {
      g(0, 0) = testsupport::uniform(rng, -2.0, 2.0);
    } while (std::abs(g(0, 0)) < 0.2);
    igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse(phi), g};
    for (int rep = 0; rep < 5; ++rep) {
      const auto pt = testsupport::random_vector(rng, 1, -1.0, 1.0);
      CHECK(igeo::wdvv::wdvv_residual(pot, pt) < 1e-12);
    }
  }
}

TEST_CASE("two-variable unital potentials are automatically associative") {
  // With the metric adapted to the potential, g_ab = Phi_1ab, the first
  // flat field is a unit and the two-dimensional tangent algebra is spanned
  // by powers of a single element, hence associative.
  std::mt19937_64 rng(85);
  for (int rep = 0; rep < 50; ++rep) {
    double a, b, c;
    do {
      a = testsupport::uniform(rng, -1.0, 1.0);
      b = testsupport::uniform(rng, -1.0, 1.0);
      c = testsupport::uniform(rng, -1.0, 1.0);
    } while (std::abs(12.0 * a * c - 4.0 * b * b) < 1.0);
    const double d = testsupport::uniform(rng, -0.25, 0.25);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "(%.17g)*x1^3 + (%.17g)*x1^2*x2 + (%.17g)*x1*x2^2 + "
                  "(%.17g)*x2^4",
                  a, b, c, d);
    Eigen::MatrixXd g(2, 2);
    g << 6.0 * a, 2.0 * b, 2.0 * b, 2.0 * c;
    igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse(buf), g};
    const auto pt = testsupport::random_vector(rng, 2, -1.0, 1.0);
    CHECK(igeo::wdvv::wdvv_residual(pot, pt) < 1e-12);
  }
}

TEST_CASE("a metric not adapted to the potential can break associativity") {
  // Without a unit the two-dimensional case is not automatic: here
  // d1 o d1 = 2 d2 and d1 o d2 = 2 d1, so (d1 o d1) o d2 = 0 while
  // d1 o (d1 o d2) = 4 d2, and the residual is exactly 4.
  igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse("x1^2*x2"),
                                     Eigen::MatrixXd::Identity(2, 2)};
  std::mt19937_64 rng(86);
  for (int rep = 0; rep < 5; ++rep) {
    const auto pt = testsupport::random_vector(rng, 2, -1.0, 1.0);
    CHECK(igeo::wdvv::wdvv_residual(pot, pt) ==
          doctest::Approx(4.0).epsilon(1e-14));
  }
}

TEST_CASE("the documented cubic potential satisfies associativity") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 2) = g(1, 1) = g(2, 0) = 1.0;
  igeo::wdvv::FrobeniusPotential pot{
      igeo::expr::parse("(x1^2*x3 + x1*x2^2)/2"), g};
  CHECK(pot.condition_number() == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(78);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pt = testsupport::random_vector(rng, 3, -2.0, 2.0);
    CHECK(igeo::wdvv::wdvv_residual(pot, pt) < 1e-12);
  }
}

TEST_CASE("the cubic perturbation breaks associativity with residual one") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 2) = g(1, 1) = g(2, 0) = 1.0;
  igeo::wdvv::FrobeniusPotential pot{
      igeo::expr::parse("(x1^2*x3 + x1*x2^2)/2 + x3^3/6"), g};
  std::mt19937_64 rng(79);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pt = testsupport::random_vector(rng, 3, -2.0, 2.0);
    CHECK(std::abs(igeo::wdvv::wdvv_residual(pot, pt) - 1.0) <= 1e-9);
  }
}

TEST_CASE("quadratic additions never change the residual") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 2) = g(1, 1) = g(2, 0) = 1.0;
  const char* base = "(x1^2*x3 + x1*x2^2)/2 + x3^3/6";
  igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse(base), g};
  igeo::wdvv::FrobeniusPotential shifted{
      igeo::expr::parse(std::string(base) +
                        " + 3*x1^2 - 2*x1*x2 + x3^2 + 5*x2 - 7"),
      g};
  std::mt19937_64 rng(80);
  for (int rep = 0; rep < 5; ++rep) {
    const auto pt = testsupport::random_vector(rng, 3, -1.5, 1.5);
    CHECK(std::abs(igeo::wdvv::wdvv_residual(pot, pt) -
                   igeo::wdvv::wdvv_residual(shifted, pt)) <= 1e-12);
  }
}

TEST_CASE("potential validation catches structural faults") {
  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(2, 2);
  CHECK_NOTHROW(
      (igeo::wdvv::FrobeniusPotential{igeo::expr::parse("x1*x2"), ok}.validate()));

  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(
      (igeo::wdvv::FrobeniusPotential{igeo::expr::parse("x1"), asym}.validate()),
      ValidationError);

  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS((igeo::wdvv::FrobeniusPotential{igeo::expr::parse("x1"),
                                                  singular}
                       .validate()),
                  igeo::SingularError);

  CHECK_THROWS_AS(
      (igeo::wdvv::FrobeniusPotential{igeo::expr::parse("x1+y"), ok}.validate()),
      ValidationError);

  igeo::wdvv::FrobeniusPotential pot{igeo::expr::parse("x1*x2"), ok};
  CHECK_THROWS_AS(igeo::wdvv::wdvv_residual(pot, Eigen::VectorXd::Zero(3)),
                  ValidationError);
}
