#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "speclab/error.hpp"
#include "speclab/radial.hpp"

using namespace speclab;

namespace {

// Linear finite elements for the radial Steklov quotient
//   p = min int_0^r (psi'^2 f^{n-1} + mu psi^2 f^{n-3}) dt / (f(r)^{n-1} psi(r)^2)
// with psi(0) = 0: fix psi(r) = 1, minimize the energy, and p = E / f(r)^{n-1}.
double radial_fem_oracle(const std::function<double(double)>& f, int n, int ell, double r,
                         int elements) {
  const double mu = static_cast<double>(ell) * (ell + n - 2);
  const double h = r / elements;
  const double g = 1.0 / std::sqrt(3.0);
  std::vector<double> diag(elements + 1, 0.0), off(elements + 1, 0.0);
  for (int e = 0; e < elements; ++e) {
    const double a = e * h;
    for (double xi : {-g, g}) {
      const double t = a + 0.5 * h * (1 + xi);
      const double w = 0.5 * h;
      const double ft = f(t);
      const double stiff = std::pow(ft, n - 1) / (h * h);
      const double mass = mu * std::pow(ft, n - 3);
      const double n0 = 1 - (t - a) / h, n1 = (t - a) / h;
      diag[e] += w * (stiff + mass * n0 * n0);
      diag[e + 1] += w * (stiff + mass * n1 * n1);
      off[e] += w * (-stiff + mass * n0 * n1);  // couples e and e+1
    }
  }
  // unknowns 1..elements-1, psi_0 = 0, psi_N = 1
  const int m = elements - 1;
  std::vector<double> a(m), b(m), c(m), d(m, 0.0);
  for (int i = 0; i < m; ++i) {
    b[i] = diag[i + 1];
    a[i] = off[i];
    c[i] = off[i + 1];
  }
  d[m - 1] = -off[elements - 1];
  for (int i = 1; i < m; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> psi(elements + 1, 0.0);
  psi[elements] = 1.0;
  psi[m] = d[m - 1] / b[m - 1];
  for (int i = m - 2; i >= 0; --i) psi[i + 1] = (d[i] - c[i] * psi[i + 2]) / b[i];
  // element-wise so the 1/h stiffness never cancels globally
  double energy = 0.0;
  for (int e = 0; e < elements; ++e) {
    const double a = e * h;
    const double slope = (psi[e + 1] - psi[e]) / h;
    for (double xi : {-g, g}) {
      const double s = 0.5 * (1 + xi);
      const double t = a + s * h;
      const double ft = f(t);
      const double v = (1 - s) * psi[e] + s * psi[e + 1];
      energy += 0.5 * h * (slope * slope * std::pow(ft, n - 1) + mu * v * v * std::pow(ft, n - 3));
    }
  }
  return energy / std::pow(f(r), n - 1);
}

const WarpingSolution& flat() {
  static const WarpingSolution s = solve_warping(CurvatureProfile::constant(0.0), 10.0);
  return s;
}
const WarpingSolution& sphere() {
  static const WarpingSolution s = solve_warping(CurvatureProfile::constant(1.0), 4.0);
  return s;
}
const WarpingSolution& hyperbolic() {
  static const WarpingSolution s = solve_warping(CurvatureProfile::constant(-1.0), 4.0);
  return s;
}

}  // namespace

TEST_CASE("Euclidean modes: p = l / r") {
  CHECK(steklov_mode(flat(), 2, 1, 1.0).p == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(steklov_mode(flat(), 3, 2, 0.5).p == doctest::Approx(4.0).epsilon(1e-10));
  for (int ell = 1; ell <= 6; ++ell) {
    for (double r : {0.3, 1.0, 2.7}) {
      for (int n : {2, 3, 5}) {
        CHECK(steklov_mode(flat(), n, ell, r).p == doctest::Approx(ell / r).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("spherical cap mode matches a dense 1-D finite element oracle") {
  const double r = std::numbers::pi / 3;
  const double oracle =
      radial_fem_oracle([](double t) { return std::sin(t); }, 2, 1, r, 100000);
  const double p = steklov_mode(sphere(), 2, 1, r).p;
  CHECK(std::fabs(p - oracle) / oracle < 1e-6);
}

TEST_CASE("two-dimensional caps are conformal to the disc: p = l / f(r)") {
  for (int ell = 1; ell <= 4; ++ell) {
    CHECK(steklov_mode(sphere(), 2, ell, 1.3).p ==
          doctest::Approx(ell / std::sin(1.3)).epsilon(1e-9));
    CHECK(steklov_mode(hyperbolic(), 2, ell, 1.7).p ==
          doctest::Approx(ell / std::sinh(1.7)).epsilon(1e-9));
  }
}

TEST_CASE("shooting agrees with the 1-D oracle across presets") {
  struct Case {
    const WarpingSolution* sol;
    std::function<double(double)> f;
    int n, ell;
    double r;
  };
  const std::vector<Case> cases{
      {&hyperbolic(), [](double t) { return std::sinh(t); }, 2, 1, 1.0},
      {&hyperbolic(), [](double t) { return std::sinh(t); }, 3, 2, 0.8},
      {&sphere(), [](double t) { return std::sin(t); }, 3, 1, std::numbers::pi / 4},
      {&sphere(), [](double t) { return std::sin(t); }, 2, 3, 1.2},
  };
  for (const Case& c : cases) {
    const double oracle = radial_fem_oracle(c.f, c.n, c.ell, c.r, 100000);
    CHECK(std::fabs(steklov_mode(*c.sol, c.n, c.ell, c.r).p - oracle) / oracle < 1e-6);
  }
}

TEST_CASE("model p1 sweeps over angular degree") {
  const ModelP1 disc = model_p1(flat(), 2, 1.0);
  CHECK(disc.minimizer_is_ell1);
  CHECK(disc.mode.p == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(disc.p_by_ell.size() == 8);
  const ModelP1 cap = model_p1(sphere(), 3, std::numbers::pi / 4);
  CHECK(cap.minimizer_is_ell1);
  for (std::size_t i = 1; i < cap.p_by_ell.size(); ++i) {
    CHECK(cap.p_by_ell[i] > cap.p_by_ell[i - 1]);
  }
}

TEST_CASE("p1 decreases with the radius") {
  for (const WarpingSolution* sol : {&flat(), &hyperbolic()}) {
    double previous = INFINITY;
    for (int i = 1; i <= 20; ++i) {
      const double p = steklov_mode(*sol, 2, 1, 0.15 * i).p;
      CHECK(p < previous);
      previous = p;
    }
  }
}

TEST_CASE("closed sphere eigenvalue of the model boundary") {
  CHECK(closed_sphere_lambda1(flat(), 2, 1.0) == doctest::Approx(1.0));
  CHECK(closed_sphere_lambda1(flat(), 3, 2.0) == doctest::Approx(0.5));
  CHECK(closed_sphere_lambda1(sphere(), 2, std::numbers::pi / 2) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(closed_sphere_lambda1(sphere(), 2, 3.5), DomainError);
}

TEST_CASE("model Wentzell eigenvalue is p1 + beta lambda1") {
  const ModelBallSpectrum s = model_wentzell_tau1(flat(), 2, 1.0, {0.0, 1.0});
  CHECK(s.tau1[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.tau1[1] == doctest::Approx(2.0).epsilon(1e-10));
  const ModelBallSpectrum s3 = model_wentzell_tau1(flat(), 3, 1.0, {0.5});
  CHECK(s3.p1 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s3.lambda1_closed == doctest::Approx(2.0));
  CHECK(s3.tau1[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS_AS(model_wentzell_tau1(flat(), 2, 1.0, {-1.0}), DomainError);
}

TEST_CASE("psi sign report and integral representation") {
  const PsiSignReport euclid = psi_sign_report(steklov_mode(flat(), 2, 1, 1.0));
  CHECK(euclid.passed);
  CHECK(euclid.representation_residual < 1e-8);

  const PsiSignReport cap = psi_sign_report(steklov_mode(sphere(), 2, 1, std::numbers::pi / 3));
  CHECK(cap.passed);
  const PsiSignReport cap3 = psi_sign_report(steklov_mode(sphere(), 3, 1, 1.0));
  CHECK(cap3.passed);

  RadialMode broken = steklov_mode(flat(), 2, 1, 1.0);
  broken.psi[broken.psi.size() / 2] *= -1.0;
  const PsiSignReport bad = psi_sign_report(broken);
  CHECK_FALSE(bad.passed);
  CHECK(bad.violations.size() == 1);
}

TEST_CASE("radius outside the positivity interval is rejected") {
  CHECK_THROWS_AS(steklov_mode(sphere(), 2, 1, 3.2), DomainError);
  CHECK_THROWS_AS(steklov_mode(flat(), 2, 0, 1.0), DomainError);
}
