#pragma once

// Term-by-term quadrature of the weighted Reilly-type identity
//
//   int V ((Lf + K n f)^2 - |Hess f + K f g|^2 + 2 K f <grad f, grad phi>) dv_phi
//     = int_bd V (2 u Lbar z + (n-1) H^phi u^2 + II(grad z, grad z) + (2n-2) K u z) dA_phi
//     + int_bd V_eta (|grad z|^2 - (n-1) K z^2) dA_phi
//     + int (n-1) (K L V + n K^2 V) f^2 dv_phi
//     + int (Hess V - L V g - (2n-2) K V g + V Ric^phi)(grad f, grad f) dv_phi
//
// with L = Delta - <grad phi, grad .>, u = df/deta, z = f on the boundary,
// Ric^phi = Ric + Hess phi and (n-1) H^phi = tr II - d phi/deta; of its
// classical, V-weighted and phi-weighted special cases; and of the weighted
// Pohozaev identity for L-harmonic u,
//
//   int_bd (u_eta g(F, grad u) - 1/2 |grad u|^2 g(F, eta)) dA_phi
//     = int (g(grad_{grad u} F, grad u) - 1/2 |grad u|^2 div_phi F) dv_phi.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "speclab/expr.hpp"
#include "speclab/fem.hpp"
#include "speclab/geom2d.hpp"

namespace speclab {

/// Ball of the given radius about the origin of R^n, n = 2 or 3, in
/// Cartesian coordinates {x, y} or {x, y, z}.
struct EuclideanBall {
  int n = 2;
  double radius = 1.0;
};

using ReillyDomain = std::variant<MetricField, EuclideanBall>;

/// Fields of the identity. Expressions are over the chart variables
/// {t, theta} or Cartesian variables of the domain; Expr() is zero.
struct FieldBundle {
  ReillyDomain domain = EuclideanBall{};
  Expr f;
  Expr V = Expr::constant(1.0);
  Expr phi;
  double K = 0.0;

  int dimension() const;
};

/// Composite Gauss rule in the radial variable, trapezoid rule in each
/// periodic angle, optional hole [0, hole) removed from the radial range.
struct QuadratureSpec {
  int order = 8;
  int segments = 4;
  int n_angle = 64;
  double hole = 0.0;
};

struct IdentityTerm {
  std::string name;
  std::string side;  // "lhs" or "rhs"
  double value = 0.0;
};

struct ReillyReport {
  std::string formula;  // "general", "classical", "qiu-xia", "ma-du"
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs| / (1 + |lhs| + |rhs|)
  std::vector<IdentityTerm> terms;
  QuadratureSpec quadrature;
  std::size_t interior_nodes = 0;
  std::size_t boundary_nodes = 0;

  /// Value of the named term; throws DomainError when absent.
  double term(const std::string& name) const;
  /// Copy with the named term negated and both sides recomposed.
  ReillyReport with_flipped(const std::string& name) const;
};

ReillyReport reilly_general_residual(const FieldBundle& b, const QuadratureSpec& q = {});
/// V = 1, K = 0, phi = 0 required.
ReillyReport reilly_classical_residual(const FieldBundle& b, const QuadratureSpec& q = {});
/// phi = 0 required.
ReillyReport qiu_xia_residual(const FieldBundle& b, const QuadratureSpec& q = {});
/// V = 1, K = 0 required.
ReillyReport ma_du_residual(const FieldBundle& b, const QuadratureSpec& q = {});

/// Max over both sides of |special - general| / (1 + |general|), after moving
/// the curvature term of the general formula across where the special form
/// keeps it on the left.
double degeneration_gap(const ReillyReport& special, const ReillyReport& general);

/// One row per term: formula,side,term,value,abs_value.
void write_term_csv(std::ostream& out, const std::vector<ReillyReport>& reports);

struct PohozaevReport {
  double boundary = 0.0;  // left-hand side
  double interior = 0.0;  // right-hand side
  double residual = 0.0;  // |boundary - interior| / (1 + |boundary| + |interior|)
  double harmonic_defect = 0.0;  // max |L u| (analytic) or relative interior residual (FEM)
  std::string source;  // "analytic" or "fem <grid>"
};

/// Vector field given by its components in the chart frame (d/dt, d/dtheta)
/// or in the Cartesian frame (flat patches only).
struct VectorFieldSpec {
  Expr a, b;
  bool cartesian = true;
};

/// Analytic L-harmonic u on a patch. Throws PreconditionError when L u does
/// not vanish at the quadrature nodes.
PohozaevReport pohozaev_residual(const MetricField& m, const Expr& phi, const Expr& u,
                                 const VectorFieldSpec& F, const QuadratureSpec& q = {});

/// Discrete u from fem::harmonic_extension on `grid` (nodal values).
PohozaevReport pohozaev_residual(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                 const Eigen::VectorXd& u, const VectorFieldSpec& F,
                                 int quad_order = kDefaultFemQuadrature);

}  // namespace speclab
