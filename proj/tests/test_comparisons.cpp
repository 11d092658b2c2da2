#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "speclab/comparisons.hpp"
#include "speclab/error.hpp"

using namespace speclab;

namespace {

Expr xy(const std::string& s) { return Expr::parse(s, cartesian_variables()); }

MetricField ellipse(double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g*%.17g/((%.17g*cos(theta))^2 + (%.17g*sin(theta))^2)^(1/2)",
                a, b, b, a);
  return MetricField::pullback(Expr::parse(buf, {"theta"}));
}

const MetricField& unit_disc() {
  static const MetricField m = MetricField::pullback(Expr::parse("1", {"theta"}));
  return m;
}

}  // namespace

TEST_CASE("fact 1 on the disc is an equality") {
  const MetricField disc = MetricField::warped("t", 1.0);
  const ComparisonVerdict v = fact1_check(disc, 1.0, Grid2D::polar(disc, 64, 64));
  CHECK(v.pass);
  CHECK(std::fabs(v.slack) < 2e-3);
  CHECK(v.lhs == doctest::Approx(2.0).epsilon(2e-3));
}

TEST_CASE("fact 1 on a perturbed metric") {
  const MetricField m = MetricField::warped("t*(1 + 0.1*t^2*cos(2*theta))", 1.0);
  const Grid2D g = Grid2D::polar(m, 64, 64);
  const ComparisonVerdict v = fact1_check(m, 0.5, g);
  CHECK(v.pass);
  CHECK(v.slack >= -1e-6);
  // beta = 0: the Wentzell pencil is the Steklov pencil
  const ComparisonVerdict z = fact1_check(m, 0.0, g);
  CHECK(z.slack == 0.0);
  CHECK_THROWS_AS(fact1_check(m, -1.0, g), DomainError);
}

TEST_CASE("Wentzell comparison: cap against its own model") {
  const MetricField cap = MetricField::warped("sin(t)", std::numbers::pi / 3);
  const ComparisonVerdict v =
      wentzell_comparison(cap, CurvatureProfile::constant(1.0), 1.0, Grid2D::polar(cap, 64, 64));
  CHECK(v.pass);
  CHECK(std::fabs(v.slack) < 1e-4);
}

TEST_CASE("Wentzell comparison aborts when the curvature bound fails") {
  const MetricField m = MetricField::warped("t*(1 - 0.05*t^2)", 1.0);
  CHECK_THROWS_AS(
      wentzell_comparison(m, CurvatureProfile::constant(0.0), 0.5, Grid2D::polar(m, 64, 64)),
      PreconditionError);
}

TEST_CASE("Wentzell comparison with a positive curvature bound") {
  const MetricField m = MetricField::warped("t + 0.05*t^3*(1 + 0.5*cos(2*theta))", 1.0);
  const ComparisonVerdict v =
      wentzell_comparison(m, CurvatureProfile::constant(0.35), 1.0, Grid2D::polar(m, 64, 64));
  CHECK(v.pass);
  CHECK(v.slack > 0.1);
}

TEST_CASE("trial-function chain on the model disc") {
  const MetricField disc = MetricField::warped("t", 1.0);
  const TestFunctionChain c =
      test_function_rq(disc, CurvatureProfile::constant(0.0), 1.0, Grid2D::polar(disc, 64, 64));
  CHECK(c.is_model);
  CHECK(c.pass);
  CHECK(std::fabs(c.total_slack) < 2e-3);
  CHECK(c.bundle.rq == doctest::Approx(2.0).epsilon(2e-3));
  // the literal min clamp leaves nothing
  CHECK(c.bundle.min_clamp_degenerate);
  // on the model a is a multiple of psi, so a(t) / t is constant
  const auto& b = c.bundle;
  const double ratio = b.a.back() / b.t.back();
  for (std::size_t i = b.t.size() / 4; i < b.t.size(); i += 17) {
    CHECK(b.a[i] / b.t[i] == doctest::Approx(ratio).epsilon(1e-6));
  }
}

TEST_CASE("trial-function chain on a perturbed metric") {
  const MetricField m = MetricField::warped("t + 0.05*t^3*(1 + 0.5*cos(2*theta))", 1.0);
  const TestFunctionChain c =
      test_function_rq(m, CurvatureProfile::constant(0.0), 1.0, Grid2D::polar(m, 64, 64));
  CHECK_FALSE(c.is_model);
  CHECK(c.pass);
  REQUIRE(c.links.size() == 4);
  for (const ChainLink& l : c.links) CHECK(l.pass);
  CHECK(c.tau_B <= c.rq);
  CHECK(c.rq <= c.bound);
  CHECK(c.bound <= c.tau_model);

  const TestFunctionBundle& b = c.bundle;
  const WarpingSolution flat = solve_warping(CurvatureProfile::constant(0.0), 2.0);
  double worst_slope = 0.0;
  for (std::size_t i = 0; i < b.t.size(); ++i) {
    const double f = warp_at(flat, b.t[i]).first;
    CHECK(b.h[i] >= b.d_sharp[i]);
    CHECK(b.h[i] >= f * f * b.d_star[i] * (1 - 1e-14));
    CHECK(b.a_plus[i] >= 0.0);
    if (i > 0 && b.t[i] > 0.05) {
      worst_slope = std::max(worst_slope, std::fabs(b.h[i] - b.h[i - 1]) / (b.t[i] - b.t[i - 1]));
    }
  }
  // Lipschitz on compact subintervals
  CHECK(worst_slope < 10.0);
}

TEST_CASE("trial function rejects a rim function with nonzero mean") {
  const MetricField disc = MetricField::warped("t", 1.0);
  const Grid2D g = Grid2D::polar(disc, 32, 32);
  const WarpingSolution flat = solve_warping(CurvatureProfile::constant(0.0), 2.0);
  CHECK_THROWS_AS(build_test_function(disc, flat, 1.0, g, Eigen::VectorXd::Ones(32)),
                  PreconditionError);
}

TEST_CASE("weighted Steklov lower bound: disc equality case") {
  const ComparisonVerdict v =
      steklov_lower_bound_check(unit_disc(), Expr(), 1.0, Grid2D::polar(unit_disc(), 128, 128),
                                2e-3);
  CHECK(v.pass);
  CHECK(std::fabs(v.lhs - 1.0) < 2e-3);
}

TEST_CASE("weighted Steklov lower bound: ellipse with convex weight") {
  const MetricField m = ellipse(1.0, 1.2);
  const BoundaryData bd = boundary_geometry(m, Expr(), 128);
  const double c = *std::min_element(bd.kappa_g.begin(), bd.kappa_g.end());
  // curvature of the ellipse at the end of the long axis: a / b^2
  CHECK(c == doctest::Approx(1.0 / 1.44).epsilon(1e-6));
  const ComparisonVerdict v =
      steklov_lower_bound_check(m, xy("x^2/8 + y^2/8"), c, Grid2D::polar(m, 128, 128));
  CHECK(v.pass);
  CHECK(v.slack > -1e-3);
}

TEST_CASE("weighted Steklov lower bound: linear weight") {
  const ComparisonVerdict v = steklov_lower_bound_check(unit_disc(), xy("x - y"), 1.0,
                                                        Grid2D::polar(unit_disc(), 128, 128), 2e-3);
  CHECK(v.pass);
  CHECK(v.lhs >= 1.0 - 2e-3);
}

TEST_CASE("weighted Steklov lower bound preconditions") {
  const Grid2D g = Grid2D::polar(unit_disc(), 32, 32);
  CHECK_THROWS_AS(steklov_lower_bound_check(unit_disc(), xy("x^2 - y^2"), 1.0, g),
                  PreconditionError);
  CHECK_THROWS_AS(steklov_lower_bound_check(unit_disc(), Expr(), 1.5, g), PreconditionError);
  const MetricField cap = MetricField::warped("sin(t)", 1.0);
  CHECK_THROWS_AS(steklov_lower_bound_check(cap, Expr(), 0.5, Grid2D::polar(cap, 32, 32)),
                  PreconditionError);
}

TEST_CASE("half bound on the weighted disc battery") {
  const Grid2D g = Grid2D::polar(unit_disc(), 128, 128);
  const ComparisonVerdict a = escobar_half_bound_check(unit_disc(), xy("0.1*(x^2 + y^2)"), 0.75, g);
  CHECK(a.pass);
  CHECK(a.lhs > 0.375);
  const ComparisonVerdict b = escobar_half_bound_check(unit_disc(), xy("0.3*x"), 0.65, g);
  CHECK(b.pass);
  const ComparisonVerdict c = escobar_half_bound_check(unit_disc(), Expr(), 1.0 - 1e-6, g);
  CHECK(c.pass);
  CHECK(c.lhs == doctest::Approx(1.0).epsilon(2e-3));
  // H^phi = 1 - d phi / d eta = 0 on the rim
  CHECK_THROWS_AS(escobar_half_bound_check(unit_disc(), xy("(x^2 + y^2)/2"), 0.9, g),
                  PreconditionError);
  CHECK_THROWS_AS(escobar_half_bound_check(unit_disc(), Expr(), 1.0, g), PreconditionError);
}

TEST_CASE("verdict CSV") {
  ComparisonVerdict v;
  v.case_id = "x";
  v.lhs = 1.0 / 3.0;
  v.rhs = 0.25;
  v.slack = v.lhs - v.rhs;
  v.tol = 1e-6;
  v.grid = "64x64";
  v.seed = 42;
  v.decide();
  std::ostringstream out;
  write_verdict_csv(out, {v});
  CHECK(out.str() ==
        "case_id,lhs,rhs,slack,tol,pass,grid,seed\n"
        "x,0.33333333333333331,0.25,0.083333333333333315,9.9999999999999995e-07,1,64x64,42\n");
}
