#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "speclab/error.hpp"
#include "speclab/fem.hpp"

using namespace speclab;

namespace {
constexpr double kPi = std::numbers::pi;

Expr xy(const char* text) { return Expr::parse(text, cartesian_variables()); }

Eigen::VectorXd nodal(const MetricField& m, const Grid2D& g, const Expr& f_xy) {
  const Expr f = m.to_chart(f_xy);
  Eigen::VectorXd u(static_cast<Eigen::Index>(g.num_nodes()));
  for (std::size_t i = 0; i <= g.n_t; ++i)
    for (std::size_t j = 0; j < g.n_theta; ++j)
      u(static_cast<Eigen::Index>(g.node(i, j))) = f({g.t(i), g.theta(j)});
  return u;
}

Eigen::VectorXd rim(const Grid2D& g, double (*fn)(double)) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.n_theta));
  for (std::size_t j = 0; j < g.n_theta; ++j) v(static_cast<Eigen::Index>(j)) = fn(g.theta(j));
  return v;
}

const MetricField& unit_disc() {
  static const MetricField m = MetricField::warped("t", 1.0);
  return m;
}

const BoundaryOperators& disc_ops_128() {
  static const BoundaryOperators ops =
      boundary_operators(unit_disc(), Expr(), Grid2D::polar(unit_disc(), 128, 128));
  return ops;
}

}  // namespace

TEST_CASE("stiffness form of a linear field is the disc area") {
  const Grid2D g = Grid2D::polar(unit_disc(), 64, 64);
  const SymSparse K = assemble_stiffness(unit_disc(), Expr(), g);
  const Eigen::VectorXd u = nodal(unit_disc(), g, xy("x"));
  CHECK(u.dot(K * u) == doctest::Approx(kPi).epsilon(1e-3));
  // constants are in the kernel, K is symmetric
  CHECK((K * Eigen::VectorXd::Ones(K.rows())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Eigen::MatrixXd(K) - Eigen::MatrixXd(K).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stiffness is positive semidefinite on random vectors") {
  const Grid2D g = Grid2D::polar(unit_disc(), 16, 24);
  const SymSparse K = assemble_stiffness(unit_disc(), xy("x^2 + y"), g);
  std::mt19937 rng(42);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd v(K.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
    CHECK(v.dot(K * v) > 0.0);
  }
}

TEST_CASE("a constant weight factors out") {
  const Grid2D g = Grid2D::polar(unit_disc(), 8, 12);
  const SymSparse K0 = assemble_stiffness(unit_disc(), Expr(), g);
  const SymSparse K1 = assemble_stiffness(unit_disc(), xy("0.7 + 0*x"), g);
  const double scale = std::exp(-0.7);
  CHECK((Eigen::MatrixXd(K1) - scale * Eigen::MatrixXd(K0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("quadratic form converges at second order") {
  // int |grad(x^2 y)|^2 over the unit disc = int (4 x^2 y^2 + x^4)
  const double exact = 4 * kPi / 24 + kPi / 8;  // int x^2 y^2 = pi/24, int x^4 = pi/8
  std::vector<double> err;
  for (std::size_t n : {16, 32, 64}) {
    const Grid2D g = Grid2D::polar(unit_disc(), n, n);
    const SymSparse K = assemble_stiffness(unit_disc(), Expr(), g);
    const Eigen::VectorXd u = nodal(unit_disc(), g, xy("x^2*y"));
    err.push_back(std::fabs(u.dot(K * u) - exact));
  }
  CHECK(std::log2(err[0] / err[1]) > 1.8);
  CHECK(std::log2(err[1] / err[2]) > 1.8);
}

TEST_CASE("rim forms") {
  const Grid2D g = Grid2D::polar(unit_disc(), 4, 128);
  const SymSparse M = assemble_boundary_mass(unit_disc(), Expr(), g);
  CHECK(Eigen::MatrixXd(M).sum() == doctest::Approx(2 * kPi).epsilon(1e-12));

  const MetricField two = MetricField::pullback("2");
  const Grid2D g2 = Grid2D::polar(two, 4, 256);
  const SymSparse S = assemble_boundary_stiffness(two, Expr(), g2);
  const Eigen::VectorXd s = rim(g2, [](double t) { return std::sin(t); });
  CHECK(s.dot(S * s) == doctest::Approx(kPi / 2).epsilon(1e-4));
  CHECK((S * Eigen::VectorXd::Ones(S.rows())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Dirichlet-to-Neumann matrix") {
  const Grid2D g = Grid2D::polar(unit_disc(), 64, 64);
  const SymSparse K = assemble_stiffness(unit_disc(), Expr(), g);
  const auto boundary = g.boundary_nodes();
  double asym = -1.0;
  const Eigen::MatrixXd D = dtn_matrix(K, boundary, &asym);
  CHECK(asym < 1e-12);
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((D * Eigen::VectorXd::Ones(D.rows())).cwiseAbs().maxCoeff() < 1e-10);

  // x is harmonic with dx/deta = x on the rim: D x ~ M x
  const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_boundary_mass(unit_disc(), Expr(), g));
  const Eigen::VectorXd x = rim(g, [](double t) { return std::cos(t); });
  CHECK((D * x - M * x).norm() / (M * x).norm() < 2e-3);

  // energy of the discrete harmonic extension
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  Eigen::VectorXd b(64);
  for (Eigen::Index i = 0; i < 64; ++i) b(i) = nd(rng);
  const Eigen::VectorXd u = harmonic_extension(K, g, b);
  const double direct = u.dot(K * u);
  CHECK(std::fabs(b.dot(D * b) - direct) <= 1e-10 * std::fabs(direct));
}

TEST_CASE("harmonic extension") {
  const Grid2D g = Grid2D::polar(unit_disc(), 64, 64);
  const SymSparse K = assemble_stiffness(unit_disc(), Expr(), g);
  const Eigen::VectorXd ux = harmonic_extension(K, g, rim(g, [](double t) { return std::cos(t); }));
  CHECK((ux - nodal(unit_disc(), g, xy("x"))).cwiseAbs().maxCoeff() < 1e-3);

  const Eigen::VectorXd uc = harmonic_extension(K, g, Eigen::VectorXd::Constant(64, 2.5));
  CHECK((uc.array() - 2.5).abs().maxCoeff() < 1e-12);

  const Eigen::VectorXd u2 =
      harmonic_extension(K, g, rim(g, [](double t) { return std::sin(2 * t); }));
  CHECK((u2 - nodal(unit_disc(), g, xy("2*x*y"))).cwiseAbs().maxCoeff() < 2e-3);
}

TEST_CASE("Steklov spectrum of discs") {
  const EigResult r = steklov_spectrum(disc_ops_128(), 6);
  const double expected[6] = {0, 1, 1, 2, 2, 3};
  for (int k = 0; k < 6; ++k) CHECK(std::fabs(r.values(k) - expected[k]) < 3e-3);
  // constant eigenvector
  const Eigen::VectorXd v0 = r.vectors.col(0) / r.vectors(0, 0);
  CHECK((v0.array() - 1.0).abs().maxCoeff() < 1e-8);
  for (double res : r.residuals) CHECK(res < 1e-10);

  const MetricField two = MetricField::pullback("2");
  const EigResult r2 = steklov_spectrum(two, Expr(), Grid2D::polar(two, 64, 64), 3);
  CHECK(std::fabs(r2.values(1) - 0.5) < 1e-3);
}

TEST_CASE("monotone second-order convergence of p1 on the disc") {
  std::vector<double> err;
  for (std::size_t n : {16, 32, 64}) {
    const EigResult r = steklov_spectrum(unit_disc(), Expr(), Grid2D::polar(unit_disc(), n, n), 2);
    err.push_back(r.values(1) - 1.0);
  }
  CHECK(err[0] > err[1]);
  CHECK(err[1] > err[2]);
  CHECK(err[2] > 0.0);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("weighted Steklov eigenvalue is stable under refinement") {
  const Expr phi = xy("(x^2 + y^2)/4");
  const double s64 =
      steklov_spectrum(unit_disc(), phi, Grid2D::polar(unit_disc(), 64, 64), 2).values(1);
  const double s128 =
      steklov_spectrum(unit_disc(), phi, Grid2D::polar(unit_disc(), 128, 128), 2).values(1);
  CHECK(std::fabs(s64 - s128) < 5e-4);
}

TEST_CASE("Wentzell spectrum of the unit disc") {
  const BoundaryOperators& ops = disc_ops_128();
  CHECK(std::fabs(wentzell_spectrum(ops, 1.0, 2).values(1) - 2.0) < 2e-3);
  CHECK(std::fabs(wentzell_spectrum(ops, 0.5, 2).values(1) - 1.5) < 2e-3);
  const EigResult w0 = wentzell_spectrum(ops, 0.0, 4);
  const EigResult s = steklov_spectrum(ops, 4);
  for (int k = 0; k < 4; ++k) CHECK(w0.values(k) == s.values(k));
  CHECK(w0.vectors == s.vectors);
  CHECK(std::fabs(wentzell_spectrum(ops, 1.0, 1).values(0)) < 1e-10);
  CHECK_THROWS_AS(wentzell_spectrum(ops, -1.0, 2), DomainError);
}

TEST_CASE("closed circle spectrum") {
  const Grid2D g = Grid2D::polar(unit_disc(), 1, 256);
  const EigResult c = closed_circle_spectrum(unit_disc(), g, 3);
  CHECK(std::fabs(c.values(0)) < 1e-10);
  CHECK(c.values(1) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(c.values(2) == doctest::Approx(c.values(1)).epsilon(1e-10));
  // e1 lies in span{cos, sin}: project out and check what remains
  const Eigen::VectorXd co = rim(g, [](double t) { return std::cos(t); });
  const Eigen::VectorXd si = rim(g, [](double t) { return std::sin(t); });
  Eigen::MatrixXd basis(256, 2);
  basis << co, si;
  const Eigen::VectorXd e1 = c.vectors.col(1);
  const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(e1);
  CHECK((basis * coef - e1).norm() / e1.norm() < 1e-10);
  // normalized in the rim L2 product
  const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_boundary_mass(unit_disc(), Expr(), g));
  CHECK(e1.dot(M * e1) == doctest::Approx(1.0).epsilon(1e-12));

  const MetricField two = MetricField::pullback("2");
  const EigResult c2 = closed_circle_spectrum(two, Grid2D::polar(two, 1, 256), 2);
  CHECK(c2.values(1) == doctest::Approx(0.25).epsilon(1e-4));  // (2 pi / L)^2
}

TEST_CASE("closed spectrum with varying rim density") {
  // J(1, theta) = 1 + 0.2 cos(theta): the rim has length 2 pi, so lambda1 = 1
  const MetricField m = MetricField::warped("t + 0.2*t^2*cos(theta)", 1.0);
  const double l512 = closed_circle_spectrum(m, Grid2D::polar(m, 1, 512), 2).values(1);
  const double l1024 = closed_circle_spectrum(m, Grid2D::polar(m, 1, 1024), 2).values(1);
  const double extrapolated = (4 * l1024 - l512) / 3;
  CHECK(std::fabs(extrapolated - 1.0) < 1e-6);
  CHECK(std::fabs(l1024 - 1.0) < 1e-5);
}

TEST_CASE("triplet dump") {
  const Grid2D g = Grid2D::polar(unit_disc(), 2, 4);
  const SymSparse M = assemble_boundary_mass(unit_disc(), Expr(), g);
  std::ostringstream out;
  write_triplets(out, M);
  std::istringstream in(out.str());
  std::vector<Eigen::Triplet<double>> t;
  long r, c;
  double v;
  while (in >> r >> c >> v) t.emplace_back(r, c, v);
  SymSparse back(4, 4);
  back.setFromTriplets(t.begin(), t.end());
  CHECK(Eigen::MatrixXd(back) == Eigen::MatrixXd(M));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid2D::polar(unit_disc(), 0, 8), DomainError);
  CHECK_THROWS_AS(Grid2D::polar(unit_disc(), 8, 8, 0.0), DomainError);
  const MetricField half = MetricField::warped("t", 0.5);
  CHECK_THROWS_AS(assemble_stiffness(unit_disc(), Expr(), Grid2D::polar(half, 4, 4)), DomainError);
}
