#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "speclab/error.hpp"
#include "speclab/identities.hpp"

using namespace speclab;

namespace {

const std::vector<std::string> kXY = cartesian_variables();

Expr xy(const std::string& s) { return Expr::parse(s, kXY); }
Expr chart(const std::string& s) { return Expr::parse(s, chart_variables()); }

std::string random_poly(std::mt19937_64& gen, int degree) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::string s = "0";
  char buf[96];
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; i + j <= degree; ++j) {
      std::snprintf(buf, sizeof buf, " + (%.17g)*x^%d*y^%d", coef(gen), i, j);
      s += buf;
    }
  }
  return s;
}

// positive definite quadratic plus a linear part
std::string random_convex_quadratic(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = 0.1 + 0.4 * (u(gen) + 1.0), c = 0.1 + 0.4 * (u(gen) + 1.0);
  const double b = 0.9 * std::sqrt(a * c) * u(gen);
  char buf[256];
  std::snprintf(buf, sizeof buf, "(%.17g)*x^2 + (%.17g)*x*y + (%.17g)*y^2 + (%.17g)*x + (%.17g)*y",
                a, 2.0 * b, c, 0.3 * u(gen), 0.3 * u(gen));
  return buf;
}

double sum_side(const ReillyReport& r, const std::string& side) {
  double s = 0.0;
  for (const IdentityTerm& t : r.terms)
    if (t.side == side) s += t.value;
  return s;
}

}  // namespace

TEST_CASE("harmonic quadratic on the unit disc: both sides are -8 pi") {
  FieldBundle b;
  b.f = xy("x^2 - y^2");
  const ReillyReport r = reilly_general_residual(b);
  CHECK(std::fabs(r.lhs + 8.0 * std::numbers::pi) < 1e-10);
  CHECK(std::fabs(r.rhs + 8.0 * std::numbers::pi) < 1e-10);
  CHECK(r.residual < 1e-10);
  const ReillyReport c = reilly_classical_residual(b);
  CHECK(std::fabs(c.lhs + 8.0 * std::numbers::pi) < 1e-10);
  CHECK(c.residual < 1e-10);
  // -|Hess f|^2 integrates to -8 pi on its own
  CHECK(c.term("-|Hess f|^2") == doctest::Approx(-8.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("ledger sums recompose both sides") {
  FieldBundle b;
  b.f = xy("x^3 - x*y + y");
  b.V = xy("2 + x*y");
  b.phi = xy("0.2*x^2 + 0.1*y^2");
  b.K = 0.3;
  const ReillyReport r = reilly_general_residual(b);
  CHECK(r.terms.size() == 11);
  CHECK(sum_side(r, "lhs") == doctest::Approx(r.lhs).epsilon(1e-14));
  CHECK(sum_side(r, "rhs") == doctest::Approx(r.rhs).epsilon(1e-14));
  CHECK(r.interior_nodes == 8u * 4u * 64u);
  CHECK(r.boundary_nodes == 64u);
  CHECK_THROWS_AS(r.term("no such term"), DomainError);
}

TEST_CASE("constant f gives zero on both sides") {
  FieldBundle b;
  b.f = Expr::constant(1.0);
  b.V = xy("1 + x^2 + y");
  const ReillyReport r = reilly_general_residual(b);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.residual == 0.0);
}

TEST_CASE("linear f on the disc: classical sides vanish") {
  FieldBundle b;
  b.f = xy("x");
  const ReillyReport r = reilly_classical_residual(b);
  CHECK(std::fabs(r.lhs) < 1e-13);
  CHECK(std::fabs(r.rhs) < 1e-13);
  // H u^2 and II|grad z|^2 each give pi; 2 u Delta z gives -2 pi
  CHECK(r.term("(n-1)Hu^2") == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK(r.term("2uDeltabar z") == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("25 seeded polynomial bundles satisfy the general identity") {
  std::mt19937_64 gen(20240611);
  double worst = 0.0;
  for (int draw = 0; draw < 25; ++draw) {
    FieldBundle b;
    b.f = xy(random_poly(gen, 3));
    b.V = xy(random_poly(gen, 3));
    b.phi = xy(random_convex_quadratic(gen));
    b.K = 0.3;
    const ReillyReport r = reilly_general_residual(b);
    worst = std::max(worst, r.residual);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("residual falls by at least 100x when the Gauss order doubles") {
  std::mt19937_64 gen(7);
  for (int draw = 0; draw < 5; ++draw) {
    FieldBundle b;
    b.f = xy(random_poly(gen, 3));
    b.V = xy(random_poly(gen, 3));
    b.phi = xy(random_convex_quadratic(gen));
    b.K = 0.3;
    QuadratureSpec coarse, fine;
    coarse.order = 2;
    fine.order = 4;
    coarse.segments = fine.segments = 1;
    const double rc = reilly_general_residual(b, coarse).residual;
    const double rf = reilly_general_residual(b, fine).residual;
    CHECK(rf * 100.0 <= rc);
  }
}

TEST_CASE("negating a boundary term is detected") {
  FieldBundle b;
  b.f = xy("x^2 - y^2");
  const ReillyReport r = reilly_classical_residual(b);
  CHECK(r.with_flipped("II(grad z,grad z)").residual > 1e-2);
  const ReillyReport g = reilly_general_residual(b);
  CHECK(g.with_flipped("V II(grad z,grad z)").residual > 1e-2);
  CHECK_THROWS_AS(r.with_flipped("missing"), DomainError);
}

TEST_CASE("degenerations agree with the general path on shared nodes") {
  FieldBundle plain;
  plain.f = xy("x^3 - 2*x*y^2 + y");
  const ReillyReport general = reilly_general_residual(plain);
  CHECK(degeneration_gap(reilly_classical_residual(plain), general) <= 1e-14);
  CHECK(degeneration_gap(qiu_xia_residual(plain), general) <= 1e-14);
  CHECK(degeneration_gap(ma_du_residual(plain), general) <= 1e-14);

  FieldBundle weighted = plain;
  weighted.phi = xy("x");
  CHECK(degeneration_gap(ma_du_residual(weighted), reilly_general_residual(weighted)) <= 1e-14);

  FieldBundle potential = plain;
  potential.V = xy("1 - (x^2 + y^2)/2");
  potential.K = 0.5;
  CHECK(degeneration_gap(qiu_xia_residual(potential), reilly_general_residual(potential)) <=
        1e-14);

  // phi = 0 weighted form is the classical one
  const ReillyReport md = ma_du_residual(plain), cl = reilly_classical_residual(plain);
  CHECK(md.lhs == cl.lhs);
  CHECK(md.rhs == cl.rhs);
}

TEST_CASE("potential-weighted form with V = 1 - |x|^2/2 and K = 1/2") {
  std::mt19937_64 gen(3);
  for (int draw = 0; draw < 3; ++draw) {
    FieldBundle b;
    b.f = xy(random_poly(gen, 3));
    b.V = xy("1 - (x^2 + y^2)/2");
    b.K = 0.5;
    CHECK(qiu_xia_residual(b).residual < 1e-8);
  }
}

TEST_CASE("drift-weighted form with phi = x") {
  FieldBundle b;
  b.f = xy("x^2 - y^2");
  b.phi = xy("x");
  CHECK(ma_du_residual(b).residual < 1e-8);
}

TEST_CASE("special forms reject bundles outside their hypotheses") {
  FieldBundle b;
  b.f = xy("x");
  b.K = 0.1;
  CHECK_THROWS_AS(reilly_classical_residual(b), PreconditionError);
  CHECK_THROWS_AS(ma_du_residual(b), PreconditionError);
  b.K = 0.0;
  b.phi = xy("x");
  CHECK_THROWS_AS(qiu_xia_residual(b), PreconditionError);
  CHECK_THROWS_AS(reilly_classical_residual(b), PreconditionError);
}

TEST_CASE("chart and Cartesian routes agree on the disc") {
  FieldBundle ball;
  ball.f = xy("x^2*y + x - y^3");
  ball.V = xy("1.5 + 0.3*x*y");
  ball.phi = xy("0.2*(x^2 + y^2) + 0.1*y");
  ball.K = 0.3;
  FieldBundle patch = ball;
  patch.domain = MetricField::warped("t", 1.0);
  const ReillyReport a = reilly_general_residual(ball), c = reilly_general_residual(patch);
  CHECK(c.residual < 1e-12);
  CHECK(a.lhs == doctest::Approx(c.lhs).epsilon(1e-12));
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    CHECK(a.terms[i].value == doctest::Approx(c.terms[i].value).epsilon(1e-11));
  }
  FieldBundle pulled = ball;
  pulled.domain = MetricField::pullback(Expr::parse("1 + 0.2*cos(2*theta)", {"theta"}));
  CHECK(reilly_general_residual(pulled).residual < 1e-10);
}

TEST_CASE("spherical cap with a radial polynomial") {
  FieldBundle b;
  b.domain = MetricField::warped("sin(t)", std::numbers::pi / 4);
  b.f = chart("t^2 + t^3");
  CHECK(reilly_classical_residual(b).residual < 1e-7);

  b.f = chart("t^2*cos(theta) + t^3*sin(2*theta)");
  b.V = chart("1 + t^2*cos(theta)");
  b.phi = chart("t^2");
  b.K = 0.3;
  CHECK(reilly_general_residual(b).residual < 1e-7);
}

TEST_CASE("three-dimensional ball") {
  const std::vector<std::string> xyz{"x", "y", "z"};
  FieldBundle b;
  b.domain = EuclideanBall{3, 1.0};
  b.f = Expr::parse("x^2*y + z^3 - x*z", xyz);
  b.V = Expr::parse("1 + 0.2*x - 0.1*y*z", xyz);
  b.phi = Expr::parse("0.2*(x^2 + y^2 + z^2)", xyz);
  b.K = 0.3;
  CHECK(reilly_general_residual(b).residual < 1e-10);

  // harmonic quadratic in 3-D: Delta f = 0, |Hess f|^2 = 8, volume 4 pi / 3
  FieldBundle h;
  h.domain = EuclideanBall{3, 1.0};
  h.f = Expr::parse("x^2 - y^2", xyz);
  const ReillyReport r = reilly_classical_residual(h);
  CHECK(r.lhs == doctest::Approx(-32.0 * std::numbers::pi / 3.0).epsilon(1e-12));
  CHECK(r.residual < 1e-12);
}

TEST_CASE("distance-type potential with a quadrature hole") {
  FieldBundle b;
  b.f = xy("x^2*y - x*y + 0.3*x");
  b.V = xy("(1 - (x^2 + y^2)^(1/2)) - 0.375*(1 - (x^2 + y^2)^(1/2))^2");
  b.phi = xy("0.1*(x^2 + y^2)");
  b.K = 0.3;
  QuadratureSpec q;
  q.hole = 1e-3;
  const double r3 = reilly_general_residual(b, q).residual;
  q.hole = 1e-4;
  const double r4 = reilly_general_residual(b, q).residual;
  // the bias comes from the excised disc and shrinks with it
  CHECK(r3 < 1e-4);
  CHECK(r4 < 0.2 * r3);
}

TEST_CASE("expression domain violations surface") {
  FieldBundle b;
  b.f = xy("log(x)");
  CHECK_THROWS_AS(reilly_general_residual(b), DomainError);
  FieldBundle bad;
  bad.f = chart("t");
  CHECK_THROWS_AS(reilly_general_residual(bad), DomainError);
}

TEST_CASE("term ledger CSV") {
  FieldBundle b;
  b.f = xy("x^2 - y^2");
  std::ostringstream out;
  write_term_csv(out, {reilly_classical_residual(b)});
  const std::string s = out.str();
  CHECK(s.rfind("formula,side,term,value,abs_value\n", 0) == 0);
  CHECK(s.find("classical,lhs,\"-|Hess f|^2\",") != std::string::npos);
  int lines = 0;
  for (char c : s) lines += c == '\n';
  CHECK(lines == 7);
}

TEST_CASE("Pohozaev: linear harmonic with analytic fields") {
  const MetricField disc = MetricField::warped("t", 1.0);
  const PohozaevReport pos =
      pohozaev_residual(disc, Expr(), xy("x"), VectorFieldSpec{xy("x"), xy("y"), true});
  CHECK(std::fabs(pos.boundary) < 1e-12);
  CHECK(std::fabs(pos.interior) < 1e-12);
  CHECK(pos.residual < 1e-10);

  // F = (x, 0): both sides are pi / 2
  const PohozaevReport half =
      pohozaev_residual(disc, Expr(), xy("x"), VectorFieldSpec{xy("x"), Expr(), true});
  CHECK(half.boundary == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(half.interior == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));

  const PohozaevReport constant =
      pohozaev_residual(disc, Expr(), Expr::constant(2.0), VectorFieldSpec{xy("x*y"), xy("y^2"), true});
  CHECK(constant.boundary == 0.0);
  CHECK(constant.interior == 0.0);

  // harmonic cubic with a nonlinear field, chart-frame field on a cap
  CHECK(pohozaev_residual(disc, Expr(), xy("x^3 - 3*x*y^2"),
                          VectorFieldSpec{xy("x + y^2"), xy("x*y"), true})
            .residual < 1e-10);
  const MetricField cap = MetricField::warped("sin(t)", 1.0);
  // tan(t/2)^2 cos(2 theta) is harmonic on the round sphere
  CHECK(pohozaev_residual(cap, Expr(), chart("(sin(t)/(1 + cos(t)))^2*cos(2*theta)"),
                          VectorFieldSpec{chart("sin(t)"), chart("0.3"), false})
            .residual < 1e-10);
}

TEST_CASE("Pohozaev rejects non-harmonic u and curved Cartesian fields") {
  const MetricField disc = MetricField::warped("t", 1.0);
  CHECK_THROWS_AS(pohozaev_residual(disc, Expr(), xy("x^2"), VectorFieldSpec{xy("x"), xy("y"), true}),
                  PreconditionError);
  // x is not harmonic for the drifting Laplacian with phi = x
  CHECK_THROWS_AS(pohozaev_residual(disc, xy("x"), xy("x"), VectorFieldSpec{xy("x"), xy("y"), true}),
                  PreconditionError);
  const MetricField cap = MetricField::warped("sin(t)", 1.0);
  CHECK_THROWS_AS(pohozaev_residual(cap, Expr(), chart("1"), VectorFieldSpec{xy("x"), xy("y"), true}),
                  DomainError);
}

TEST_CASE("Pohozaev with a discrete harmonic extension converges") {
  const MetricField disc = MetricField::pullback(Expr::parse("1", {"theta"}));
  const Expr phi = xy("x");
  const VectorFieldSpec F{xy("x"), xy("y"), true};
  auto run = [&](std::size_t n) {
    const Grid2D grid = Grid2D::polar(disc, n, n);
    Eigen::VectorXd rim(grid.n_theta);
    for (std::size_t j = 0; j < grid.n_theta; ++j) rim(j) = std::sin(grid.theta(j));
    const Eigen::VectorXd u = harmonic_extension(disc, phi, grid, rim);
    return pohozaev_residual(disc, phi, grid, u, F);
  };
  const PohozaevReport coarse = run(256), fine = run(512);
  CHECK(coarse.residual < 5e-3);
  CHECK(fine.residual <= 0.5 * coarse.residual);
  CHECK(coarse.harmonic_defect < 1e-12);
  CHECK(coarse.source == "fem 256x256");

  const Grid2D grid = Grid2D::polar(disc, 16, 16);
  Eigen::VectorXd bumpy = Eigen::VectorXd::Random(static_cast<Eigen::Index>(grid.num_nodes()));
  CHECK_THROWS_AS(pohozaev_residual(disc, phi, grid, bumpy, F), PreconditionError);
}
