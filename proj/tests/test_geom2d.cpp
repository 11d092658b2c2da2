#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "speclab/error.hpp"
#include "speclab/geom2d.hpp"

using namespace speclab;

namespace {
constexpr double kPi = std::numbers::pi;

Expr xy(const char* text) { return Expr::parse(text, cartesian_variables()); }
}  // namespace

TEST_CASE("polar Christoffel symbols") {
  const MetricField m = MetricField::warped("t", 1.0);
  const Christoffel g = m.christoffels(0.7, 1.0);
  CHECK(g[0][1][1] == doctest::Approx(-0.7));
  CHECK(g[1][0][1] == doctest::Approx(1 / 0.7));
  CHECK(g[1][1][0] == doctest::Approx(1 / 0.7));
  CHECK(g[0][0][0] == 0.0);
  CHECK(g[0][0][1] == 0.0);
  CHECK(g[1][0][0] == 0.0);
  CHECK(g[1][1][1] == 0.0);

  const MetricField disc = MetricField::pullback("1");
  const Christoffel h = disc.christoffels(0.7, 1.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) CHECK(h[a][b][c] == doctest::Approx(g[a][b][c]));

  const MetricField sphere = MetricField::warped("sin(t)", 1.0);
  CHECK(sphere.christoffels(kPi / 4, 0.0)[0][1][1] ==
        doctest::Approx(-std::sin(kPi / 4) * std::cos(kPi / 4)));
}

TEST_CASE("pullback Christoffels match a finite-difference oracle") {
  const MetricField m = MetricField::pullback("1 + 0.2*cos(2*theta) + 0.1*sin(theta)");
  // metric from the embedding by central differences of the position map
  auto metric = [&](double t, double th) {
    const double h = 1e-6;
    const auto px = m.position(t + h, th), mx = m.position(t - h, th);
    const auto py = m.position(t, th + h), my = m.position(t, th - h);
    const double a0 = (px[0] - mx[0]) / (2 * h), a1 = (px[1] - mx[1]) / (2 * h);
    const double b0 = (py[0] - my[0]) / (2 * h), b1 = (py[1] - my[1]) / (2 * h);
    return std::array<double, 3>{a0 * a0 + a1 * a1, a0 * b0 + a1 * b1, b0 * b0 + b1 * b1};
  };
  const double t = 0.6, th = 0.9;
  const MetricPoint p = m.at(t, th);
  const auto ref = metric(t, th);
  CHECK(p.g[0][0] == doctest::Approx(ref[0]).epsilon(1e-8));
  CHECK(p.g[0][1] == doctest::Approx(ref[1]).epsilon(1e-8));
  CHECK(p.g[1][1] == doctest::Approx(ref[2]).epsilon(1e-8));
  // derivatives of the exact metric by differences
  const double h = 1e-5;
  const MetricPoint pt = m.at(t + h, th), mt = m.at(t - h, th);
  const MetricPoint pth = m.at(t, th + h), mth = m.at(t, th - h);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      CHECK(p.dg[0][a][b] == doctest::Approx((pt.g[a][b] - mt.g[a][b]) / (2 * h)).epsilon(1e-7));
      CHECK(p.dg[1][a][b] == doctest::Approx((pth.g[a][b] - mth.g[a][b]) / (2 * h)).epsilon(1e-7));
    }
  }
  CHECK(p.sqrt_det == doctest::Approx(t * std::pow(m.shape()({th}), 2)));
}

TEST_CASE("Gauss curvature of the round cap is 1") {
  const MetricField m = MetricField::warped("sin(t)", 2.0);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> t(0.05, 2.0), th(0.0, 2 * kPi);
  for (int k = 0; k < 100; ++k) CHECK(std::fabs(m.gauss_curvature(t(rng), th(rng)) - 1.0) < 1e-10);
}

TEST_CASE("boundary geometry of discs and caps") {
  const BoundaryData unit = boundary_geometry(MetricField::warped("t", 1.0), Expr(), 32);
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(unit.kappa_g[j] == doctest::Approx(1.0));
    CHECK(unit.h_phi[j] == doctest::Approx(1.0));
    CHECK(unit.arclength[j] == doctest::Approx(1.0));
  }

  const BoundaryData two = boundary_geometry(MetricField::pullback("2"), xy("x"), 32);
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(two.kappa_g[j] == doctest::Approx(0.5));
    CHECK(two.phi_eta[j] == doctest::Approx(std::cos(two.theta[j])));
    CHECK(two.h_phi[j] == doctest::Approx(0.5 - std::cos(two.theta[j])));
  }

  const BoundaryData cap =
      boundary_geometry(MetricField::warped("sin(t)", kPi / 3), Expr(), 16);
  for (double k : cap.kappa_g) CHECK(k == doctest::Approx(1.0 / std::tan(kPi / 3)));

  // pullback chart of the unit disc agrees with the warped chart
  const BoundaryData pull = boundary_geometry(MetricField::pullback("1"), xy("x^2 + y"), 24);
  const BoundaryData warp = boundary_geometry(MetricField::warped("t", 1.0), xy("x^2 + y"), 24);
  for (std::size_t j = 0; j < 24; ++j) {
    CHECK(std::fabs(pull.kappa_g[j] - warp.kappa_g[j]) < 1e-10);
    CHECK(std::fabs(pull.h_phi[j] - warp.h_phi[j]) < 1e-10);
    CHECK(std::fabs(pull.weight[j] - warp.weight[j]) < 1e-10);
  }
}

TEST_CASE("ellipse rim curvature matches the closed form") {
  // R(theta) of the ellipse with semi-axes a, b
  const double a = 1.0, b = 1.2;
  const MetricField m =
      MetricField::pullback("1/sqrt(cos(theta)^2/1 + sin(theta)^2/1.44)");
  const BoundaryData bd = boundary_geometry(m, Expr(), 64);
  for (std::size_t j = 0; j < 64; ++j) {
    const auto p = m.position(1.0, bd.theta[j]);
    // curvature of x^2/a^2 + y^2/b^2 = 1 at (x, y)
    const double q = p[0] * p[0] / std::pow(a, 4) + p[1] * p[1] / std::pow(b, 4);
    const double kappa = 1.0 / (a * a * b * b * std::pow(q, 1.5));
    CHECK(bd.kappa_g[j] == doctest::Approx(kappa).epsilon(1e-10));
  }
}

TEST_CASE("radial curvature check") {
  const CurvatureReport sphere =
      radial_curvature_check(MetricField::warped("sin(t)", 1.0), CurvatureProfile::constant(1.0));
  CHECK(sphere.passed);
  CHECK(sphere.max_violation < 1e-12);
  CHECK(radial_curvature_check(MetricField::warped("t", 1.0), CurvatureProfile::constant(0.0))
            .passed);

  const CurvatureReport bad = radial_curvature_check(MetricField::warped("t*(1 - 0.05*t^2)", 1.0),
                                                     CurvatureProfile::constant(0.0));
  CHECK_FALSE(bad.passed);
  CHECK(bad.max_violation == doctest::Approx(0.3 / 0.95));

  // angular perturbation: compare each node's sign against finite differences
  const MetricField m = MetricField::warped("t*(1 + 0.05*t^2*cos(theta))", 1.0);
  const CurvatureProfile k = CurvatureProfile::constant(0.1);
  const CurvatureReport rep = radial_curvature_check(m, k, 0.0, 16, 16);
  std::size_t fd_violations = 0;
  const double h = 1e-4;
  for (int i = 1; i <= 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const double t = i / 16.0, th = 2 * kPi * j / 16.0;
      auto J = [&](double s) { return s * (1 + 0.05 * s * s * std::cos(th)); };
      const double jtt = (J(t + h) - 2 * J(t) + J(t - h)) / (h * h);
      if (jtt + 0.1 * J(t) < -1e-6) ++fd_violations;
    }
  }
  CHECK(rep.violating_nodes.size() == fd_violations);
  CHECK(fd_violations > 0);
}

TEST_CASE("warped metrics must close smoothly at the pole") {
  CHECK_THROWS_AS(MetricField::warped("2*t", 1.0), DomainError);
  CHECK_THROWS_AS(MetricField::warped("t + 1", 1.0), DomainError);
  CHECK_THROWS_AS(MetricField::warped("sin(t)", 3.5), DomainError);  // J < 0 past pi
  CHECK_THROWS_AS(MetricField::warped("t*x", 1.0), ParseError);
  CHECK_THROWS_AS(MetricField::pullback("cos(theta)"), DomainError);
}

TEST_CASE("convexity check") {
  const MetricField disc = MetricField::pullback("1");
  const auto pts = sample_points(disc, 8, 16);
  const ConvexityReport lin = convexity_check(xy("x + 2*y"), pts);
  CHECK(lin.passed);
  CHECK(lin.min_eigenvalue == doctest::Approx(0.0));
  CHECK(convexity_check(xy("x^2 + y^2"), pts).passed);
  const ConvexityReport saddle = convexity_check(xy("x^2 - y^2"), pts);
  CHECK_FALSE(saddle.passed);
  CHECK(saddle.min_eigenvalue == doctest::Approx(-2.0));
}

TEST_CASE("area of the unit disc from the density") {
  const MetricField m = MetricField::warped("t", 1.0);
  // midpoint rule in theta is exact here; Simpson in t
  double area = 0.0;
  const int n = 200;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    area += w / (3.0 * n) * 2 * kPi * (i == 0 ? 0.0 : m.at(t, 0.3).sqrt_det);
  }
  CHECK(area == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("Cartesian fields pull back through the chart") {
  const MetricField m = MetricField::pullback("2 + 0.1*cos(3*theta)");
  const Expr f = m.to_chart(xy("x*y"));
  const auto p = m.position(0.4, 0.8);
  CHECK(f({0.4, 0.8}) == doctest::Approx(p[0] * p[1]));
  CHECK_THROWS_AS(m.to_chart(Expr::parse("x*t", {"x", "t"})), DomainError);
}
