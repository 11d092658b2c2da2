#pragma once

// Warping function of a spherically symmetric model space: the solution of
// f'' + k(t) f = 0, f(0) = 0, f'(0) = 1, together with the first zero l of f.

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "speclab/expr.hpp"

namespace speclab {

/// Natural cubic spline through strictly increasing nodes, continued linearly
/// outside the node range.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  NaturalSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  double derivative(double x) const;
  const std::vector<double>& nodes() const { return x_; }

 private:
  std::size_t segment(double x) const;
  std::vector<double> x_, y_, m_;  // m_ = second derivatives at nodes
};

/// Radial curvature bound k(t): a constant, an expression in `t`, or a table
/// interpolated by a natural cubic spline.
class CurvatureProfile {
 public:
  static CurvatureProfile constant(double kappa);
  static CurvatureProfile expression(const Expr& k_of_t);
  static CurvatureProfile expression(const std::string& text);
  static CurvatureProfile table(std::vector<double> t, std::vector<double> k);

  double operator()(double t) const;
  /// Some constant-valued profiles admit closed forms; tests use this.
  bool is_constant() const { return std::holds_alternative<double>(data_); }
  std::string describe() const;

 private:
  std::variant<double, Expr, NaturalSpline> data_;
};

inline constexpr double kNoZero = std::numeric_limits<double>::infinity();

struct WarpingSolution {
  std::vector<double> t;        // t[0] = 0 < ... < t[N]
  std::vector<double> f;        // f(t_i)
  std::vector<double> f_prime;  // f'(t_i)
  double l_pos = kNoZero;       // first zero of f in (0, t_max], or +inf
  double t_max = 0.0;
  double tol = 0.0;
  std::shared_ptr<const CurvatureProfile> k;

  /// Right end of the usable interval, min(t_max, l_pos).
  double reach() const { return std::min(t_max, l_pos); }
};

inline constexpr double kDefaultWarpTMax = 10.0;

/// Integrates the warping ODE with an adaptive Dormand-Prince 5(4) scheme and
/// locates the first zero of f by bisection on the dense output.
WarpingSolution solve_warping(const CurvatureProfile& k, double t_max = kDefaultWarpTMax,
                              double tol = 1e-10);

/// (f(t), f'(t)) by cubic Hermite interpolation between grid nodes.
std::pair<double, double> warp_at(const WarpingSolution& sol, double t);

}  // namespace speclab
