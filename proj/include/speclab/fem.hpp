#pragma once

// Bilinear finite elements on polar tensor grids over a MetricField patch,
// Dirichlet-to-Neumann Schur complements on the rim, and the boundary
// eigenproblems built from them:
//
//   closed      K_rim u = lambda M_rim u
//   Steklov     DtN u = sigma M_rim u          (weighted when phi != 0)
//   Wentzell    (DtN + beta K_rim) u = tau M_rim u
//
// The patch is truncated at t0 > 0 and the inner ring carries the natural
// (no-flux) condition.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "speclab/geom2d.hpp"

namespace speclab {

/// Nodes (t_i, theta_j), i = 0..n_t, j = 0..n_theta-1, t uniform on
/// [t0, outer], theta uniform and periodic. Node index i * n_theta + j, so the
/// rim (i = n_t) occupies the last n_theta indices.
struct Grid2D {
  std::size_t n_t = 0;
  std::size_t n_theta = 0;
  double t0 = 0.0;
  double outer = 1.0;

  static Grid2D polar(const MetricField& m, std::size_t n_t, std::size_t n_theta,
                      double t0_fraction = 1e-3);

  std::size_t num_nodes() const { return (n_t + 1) * n_theta; }
  std::size_t node(std::size_t i, std::size_t j) const { return i * n_theta + j % n_theta; }
  double dt() const { return (outer - t0) / static_cast<double>(n_t); }
  double dtheta() const;
  double t(std::size_t i) const { return t0 + dt() * static_cast<double>(i); }
  double theta(std::size_t j) const { return dtheta() * static_cast<double>(j); }
  std::vector<std::size_t> boundary_nodes() const;
  std::string describe() const;
};

/// Symmetric sparse matrix; column-compressed storage of a symmetric matrix
/// doubles as its row-compressed layout.
using SymSparse = Eigen::SparseMatrix<double>;

inline constexpr int kDefaultFemQuadrature = 3;

/// Galerkin matrix of int g(grad u, grad v) e^{-phi} dv.
SymSparse assemble_stiffness(const MetricField& m, const Expr& phi, const Grid2D& grid,
                             int quad_order = kDefaultFemQuadrature);

/// Rim forms in rim-local numbering (node j <-> theta_j):
///   mass       int u v e^{-phi} dA
///   stiffness  int (du/ds)(dv/ds) e^{-phi} dA
SymSparse assemble_boundary_mass(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                 int quad_order = kDefaultFemQuadrature);
SymSparse assemble_boundary_stiffness(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                      int quad_order = kDefaultFemQuadrature);

/// K_GG - K_GI K_II^{-1} K_IG for the boundary index set G, in the order
/// given. The result is symmetrized; `asymmetry` (optional) receives
/// max |D - D^T| before that.
Eigen::MatrixXd dtn_matrix(const SymSparse& K, std::span<const std::size_t> boundary,
                           double* asymmetry = nullptr);

/// Interior solve with the given rim values; returns all nodal values.
Eigen::VectorXd harmonic_extension(const SymSparse& K, const Grid2D& grid,
                                   const Eigen::VectorXd& rim_values);
Eigen::VectorXd harmonic_extension(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                   const Eigen::VectorXd& rim_values,
                                   int quad_order = kDefaultFemQuadrature);

/// The three rim operators assembled once and shared by every boundary
/// eigenproblem on a grid, so the problems are compared on identical forms.
struct BoundaryOperators {
  Grid2D grid;
  Eigen::MatrixXd dtn;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  double dtn_asymmetry = 0.0;
  bool weighted = false;
};

BoundaryOperators boundary_operators(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                     int quad_order = kDefaultFemQuadrature);

struct EigResult {
  std::string problem;  // "closed", "steklov", "wentzell", "weighted-steklov"
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXd vectors;   // columns, rim-local numbering, M-normalized
  std::vector<double> residuals;  // |A x - l B x| / |x|
  Grid2D grid;
  double beta = 0.0;
};

EigResult closed_circle_spectrum(const BoundaryOperators& ops, std::size_t count);
EigResult steklov_spectrum(const BoundaryOperators& ops, std::size_t count);
EigResult wentzell_spectrum(const BoundaryOperators& ops, double beta, std::size_t count);

EigResult closed_circle_spectrum(const MetricField& m, const Grid2D& grid, std::size_t count);
EigResult steklov_spectrum(const MetricField& m, const Expr& phi, const Grid2D& grid,
                           std::size_t count);
EigResult wentzell_spectrum(const MetricField& m, const Grid2D& grid, double beta,
                            std::size_t count);

/// One "row col value" line per stored entry, 0-based, 17 significant digits.
void write_triplets(std::ostream& out, const SymSparse& A);
void write_triplets(std::ostream& out, const Eigen::MatrixXd& A);

}  // namespace speclab
