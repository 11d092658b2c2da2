#pragma once

// Two-dimensional Riemannian patches in polar-type coordinates (t, theta),
// t in (0, outer], theta periodic:
//
//   warped    dt^2 + J(t, theta)^2 dtheta^2         outer = r
//   pullback  the flat plane pulled back by (s, theta) -> s R(theta) (cos, sin),
//             with t playing the role of s in [0, 1]
//
// Scalar fields live either in chart variables {t, theta} or in Cartesian
// variables {x, y}; the latter are pulled back through x = t cos(theta),
// y = t sin(theta) (warped) or the star-shaped embedding (pullback).

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "speclab/expr.hpp"
#include "speclab/warp.hpp"

namespace speclab {

enum class MetricKind { kWarped, kPullback };

inline const std::vector<std::string>& chart_variables() {
  static const std::vector<std::string> v{"t", "theta"};
  return v;
}
inline const std::vector<std::string>& cartesian_variables() {
  static const std::vector<std::string> v{"x", "y"};
  return v;
}

/// Metric at a point: components, their first derivatives, inverse, density.
/// Index 0 is t, index 1 is theta.
struct MetricPoint {
  std::array<std::array<double, 2>, 2> g{};
  std::array<std::array<double, 2>, 2> g_inv{};
  std::array<std::array<std::array<double, 2>, 2>, 2> dg{};  // dg[c][a][b] = d_c g_ab
  double sqrt_det = 0.0;
};

/// Christoffel symbols of the second kind, gamma[a][b][c] = Gamma^a_{bc}.
using Christoffel = std::array<std::array<std::array<double, 2>, 2>, 2>;

class MetricField {
 public:
  /// `J` over {t, theta}. Throws DomainError unless J(0, .) = 0 and
  /// dJ/dt(0, .) = 1 (smooth pole) and J > 0 on a sample of (0, r].
  static MetricField warped(const Expr& J, double r);
  static MetricField warped(const std::string& J_text, double r);
  /// `R` over {theta} (or {t, theta} not using t); R > 0 is checked.
  static MetricField pullback(const Expr& R);
  static MetricField pullback(const std::string& R_text);

  MetricKind kind() const { return kind_; }
  double outer() const { return outer_; }
  const Expr& shape() const { return shape_; }  // J or R

  /// Throws DomainError when the metric is not positive definite.
  MetricPoint at(double t, double theta) const;
  Christoffel christoffels(double t, double theta) const;
  double gauss_curvature(double t, double theta) const;

  /// Cartesian position (x, y) of a chart point and its Jacobian
  /// jac[i][a] = d x_i / d u_a.
  std::array<double, 2> position(double t, double theta) const;
  std::array<std::array<double, 2>, 2> jacobian(double t, double theta) const;

  /// Field in chart variables. Accepts expressions over {t, theta} or over
  /// {x, y}; anything else throws DomainError.
  Expr to_chart(const Expr& field) const;
  /// x(t, theta) and y(t, theta) as expressions.
  std::array<Expr, 2> cartesian_map() const;

  std::string describe() const;

 private:
  MetricField() = default;
  MetricKind kind_ = MetricKind::kWarped;
  double outer_ = 1.0;
  Expr shape_;
};

/// Geometry of the rim t = outer sampled at theta_j = 2 pi j / n.
struct BoundaryData {
  std::vector<double> theta;
  std::vector<double> arclength;   // sqrt(g_theta_theta)
  std::vector<std::array<double, 2>> eta;  // unit outward normal, chart components
  std::vector<double> kappa_g;     // geodesic curvature (= H = II in 2-D)
  std::vector<double> phi_eta;     // normal derivative of the weight
  std::vector<double> h_phi;       // kappa_g - phi_eta
  std::vector<double> weight;      // exp(-phi)
};

/// `phi` over chart or Cartesian variables; pass Expr() for no weight.
BoundaryData boundary_geometry(const MetricField& m, const Expr& phi, std::size_t n_theta);

/// Rim quantities at a single angle; shared by BoundaryData and quadrature.
struct RimPoint {
  double arclength = 0.0;
  std::array<double, 2> eta{};
  double kappa_g = 0.0;
};
RimPoint rim_point(const MetricField& m, double theta);

struct CurvatureReport {
  double max_violation = 0.0;  // max(0, K_rad - k(t)) over the grid
  std::vector<std::array<double, 2>> violating_nodes;  // (t, theta)
  bool passed = true;
  double tol = 0.0;
};

/// Radial curvature -J_tt / J against the bound k(t) on an n_t x n_theta
/// tensor grid of (0, r] x S^1.
CurvatureReport radial_curvature_check(const MetricField& m, const CurvatureProfile& k,
                                       double tol = 1e-12, std::size_t n_t = 64,
                                       std::size_t n_theta = 64);

struct ConvexityReport {
  double min_eigenvalue = 0.0;
  std::array<double, 2> worst_point{};
  bool passed = true;
};

/// Hessian of phi (over {x, y}) positive semidefinite up to `tol` at every
/// point.
ConvexityReport convexity_check(const Expr& phi_xy, std::span<const std::array<double, 2>> points,
                                double tol = 1e-12);

/// Cartesian sample points of the patch: a polar tensor grid including the
/// rim.
std::vector<std::array<double, 2>> sample_points(const MetricField& m, std::size_t n_t = 32,
                                                 std::size_t n_theta = 64);

}  // namespace speclab
