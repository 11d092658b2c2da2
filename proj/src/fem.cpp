#include "speclab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "speclab/error.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kSolveBlock = 32;

using Triplet = Eigen::Triplet<double>;

struct WeightField {
  Expr chart;
  bool active = false;
  double operator()(double t, double theta) const {
    return active ? std::exp(-chart({t, theta})) : 1.0;
  }
};

WeightField weight_of(const MetricField& m, const Expr& phi) {
  WeightField w;
  w.chart = m.to_chart(phi);
  w.active = !(w.chart.is_constant() && w.chart({0.0, 0.0}) == 0.0);
  return w;
}

void check_grid(const MetricField& m, const Grid2D& grid) {
  if (grid.n_t < 1 || grid.n_theta < 3) throw DomainError("grid too small");
  if (grid.outer != m.outer()) throw DomainError("grid does not match the metric's outer radius");
}

Eigen::MatrixXd dense_rim(const SymSparse& A) { return Eigen::MatrixXd(A); }

EigResult solve_pencil(std::string problem, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       std::size_t count, const Grid2D& grid, double beta) {
  const auto n = static_cast<std::size_t>(A.rows());
  if (count < 1 || count > n) throw DomainError("eigenvalue count out of range");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      A, B, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw NumericalError(problem + " eigensolve failed");
  EigResult out;
  out.problem = std::move(problem);
  out.grid = grid;
  out.beta = beta;
  const auto c = static_cast<Eigen::Index>(count);
  out.values = es.eigenvalues().head(c);
  out.vectors = es.eigenvectors().leftCols(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const Eigen::VectorXd x = out.vectors.col(k);
    const double res = (A * x - out.values(k) * (B * x)).norm() / x.norm();
    out.residuals.push_back(res);
  }
  return out;
}

}  // namespace

Grid2D Grid2D::polar(const MetricField& m, std::size_t n_t, std::size_t n_theta,
                     double t0_fraction) {
  if (n_t < 1 || n_theta < 3) throw DomainError("grid needs n_t >= 1 and n_theta >= 3");
  if (!(t0_fraction > 0.0) || !(t0_fraction < 1.0)) {
    throw DomainError("inner truncation fraction must lie in (0, 1)");
  }
  Grid2D g;
  g.n_t = n_t;
  g.n_theta = n_theta;
  g.outer = m.outer();
  g.t0 = t0_fraction * m.outer();
  return g;
}

double Grid2D::dtheta() const { return kTwoPi / static_cast<double>(n_theta); }

std::vector<std::size_t> Grid2D::boundary_nodes() const {
  std::vector<std::size_t> out(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j) out[j] = node(n_t, j);
  return out;
}

std::string Grid2D::describe() const {
  std::ostringstream out;
  out << n_t << "x" << n_theta;
  return out.str();
}

SymSparse assemble_stiffness(const MetricField& m, const Expr& phi, const Grid2D& grid,
                             int quad_order) {
  check_grid(m, grid);
  const WeightField w = weight_of(m, phi);
  const GaussRule rule = gauss_legendre(quad_order);
  const double ht = grid.dt(), hth = grid.dtheta();
  const std::size_t nq = rule.x.size();

  // shape function gradients in (t, theta) at each quadrature point, shared
  // by all elements
  struct QPoint {
    double xi, zeta, weight;
    std::array<std::array<double, 2>, 4> grad;
  };
  std::vector<QPoint> qps;
  for (std::size_t a = 0; a < nq; ++a) {
    for (std::size_t b = 0; b < nq; ++b) {
      QPoint q;
      q.xi = 0.5 * (rule.x[a] + 1.0);
      q.zeta = 0.5 * (rule.x[b] + 1.0);
      q.weight = 0.25 * rule.w[a] * rule.w[b] * ht * hth;
      const double xi = q.xi, ze = q.zeta;
      q.grad[0] = {-(1 - ze) / ht, -(1 - xi) / hth};
      q.grad[1] = {(1 - ze) / ht, -xi / hth};
      q.grad[2] = {ze / ht, xi / hth};
      q.grad[3] = {-ze / ht, (1 - xi) / hth};
      qps.push_back(q);
    }
  }

  std::vector<Triplet> trips;
  trips.reserve(grid.n_t * grid.n_theta * 16);
  for (std::size_t i = 0; i < grid.n_t; ++i) {
    for (std::size_t j = 0; j < grid.n_theta; ++j) {
      const std::array<std::size_t, 4> nodes{grid.node(i, j), grid.node(i + 1, j),
                                             grid.node(i + 1, j + 1), grid.node(i, j + 1)};
      double local[4][4] = {};
      for (const QPoint& q : qps) {
        const double t = grid.t(i) + q.xi * ht;
        const double th = grid.theta(j) + q.zeta * hth;
        const MetricPoint p = m.at(t, th);
        const double scale = q.weight * p.sqrt_det * w(t, th);
        for (int r = 0; r < 4; ++r) {
          const auto& gr = q.grad[r];
          const double v0 = p.g_inv[0][0] * gr[0] + p.g_inv[0][1] * gr[1];
          const double v1 = p.g_inv[1][0] * gr[0] + p.g_inv[1][1] * gr[1];
          for (int c = r; c < 4; ++c) {
            local[r][c] += scale * (v0 * q.grad[c][0] + v1 * q.grad[c][1]);
          }
        }
      }
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          const double v = r <= c ? local[r][c] : local[c][r];
          trips.emplace_back(static_cast<int>(nodes[r]), static_cast<int>(nodes[c]), v);
        }
      }
    }
  }
  SymSparse K(static_cast<Eigen::Index>(grid.num_nodes()),
              static_cast<Eigen::Index>(grid.num_nodes()));
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

namespace {

// mode 0: mass, mode 1: stiffness
SymSparse assemble_rim(const MetricField& m, const Expr& phi, const Grid2D& grid, int quad_order,
                       int mode) {
  check_grid(m, grid);
  const WeightField w = weight_of(m, phi);
  const GaussRule rule = gauss_legendre(quad_order);
  const double h = grid.dtheta();
  const std::size_t n = grid.n_theta;
  std::vector<Triplet> trips;
  for (std::size_t j = 0; j < n; ++j) {
    double local[2][2] = {};
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double s = 0.5 * (rule.x[q] + 1.0);
      const double th = grid.theta(j) + s * h;
      const double rho = std::sqrt(m.at(grid.outer, th).g[1][1]);
      const double wq = 0.5 * rule.w[q] * h * w(grid.outer, th);
      if (mode == 0) {
        const double N[2] = {1 - s, s};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) local[a][b] += wq * rho * N[a] * N[b];
      } else {
        const double dN[2] = {-1.0 / h, 1.0 / h};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) local[a][b] += wq / rho * dN[a] * dN[b];
      }
    }
    const std::size_t idx[2] = {j, (j + 1) % n};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        trips.emplace_back(static_cast<int>(idx[a]), static_cast<int>(idx[b]), local[a][b]);
  }
  SymSparse A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

// Splits K into interior/boundary blocks for the boundary index list.
struct Partition {
  std::vector<Eigen::Index> local;  // global -> position in its block
  std::vector<bool> on_boundary;
  SymSparse KII, KIG, KGG;
};

Partition partition(const SymSparse& K, std::span<const std::size_t> boundary) {
  const auto n = static_cast<std::size_t>(K.rows());
  Partition p;
  p.on_boundary.assign(n, false);
  p.local.assign(n, -1);
  for (std::size_t k = 0; k < boundary.size(); ++k) {
    if (boundary[k] >= n || p.on_boundary[boundary[k]]) {
      throw DomainError("invalid boundary index set");
    }
    p.on_boundary[boundary[k]] = true;
    p.local[boundary[k]] = static_cast<Eigen::Index>(k);
  }
  Eigen::Index ni = 0;
  for (std::size_t g = 0; g < n; ++g) {
    if (!p.on_boundary[g]) p.local[g] = ni++;
  }
  const auto nb = static_cast<Eigen::Index>(boundary.size());
  std::vector<Triplet> tii, tig, tgg;
  for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
    for (SymSparse::InnerIterator it(K, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
      const Eigen::Index lr = p.local[r], lc = p.local[c];
      if (!p.on_boundary[r] && !p.on_boundary[c]) {
        tii.emplace_back(lr, lc, it.value());
      } else if (!p.on_boundary[r] && p.on_boundary[c]) {
        tig.emplace_back(lr, lc, it.value());
      } else if (p.on_boundary[r] && p.on_boundary[c]) {
        tgg.emplace_back(lr, lc, it.value());
      }
    }
  }
  p.KII.resize(ni, ni);
  p.KIG.resize(ni, nb);
  p.KGG.resize(nb, nb);
  p.KII.setFromTriplets(tii.begin(), tii.end());
  p.KIG.setFromTriplets(tig.begin(), tig.end());
  p.KGG.setFromTriplets(tgg.begin(), tgg.end());
  return p;
}

using Factor = Eigen::SimplicialLLT<SymSparse, Eigen::Lower, Eigen::AMDOrdering<int>>;

}  // namespace

SymSparse assemble_boundary_mass(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                 int quad_order) {
  return assemble_rim(m, phi, grid, quad_order, 0);
}

SymSparse assemble_boundary_stiffness(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                      int quad_order) {
  return assemble_rim(m, phi, grid, quad_order, 1);
}

Eigen::MatrixXd dtn_matrix(const SymSparse& K, std::span<const std::size_t> boundary,
                           double* asymmetry) {
  if (K.rows() != K.cols()) throw DomainError("stiffness matrix must be square");
  const Partition p = partition(K, boundary);
  Factor llt(p.KII);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("interior block is singular or not positive definite");
  }
  const Eigen::Index nb = p.KGG.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd(p.KGG);
  const SymSparse KGI = p.KIG.transpose();
  for (Eigen::Index c0 = 0; c0 < nb; c0 += kSolveBlock) {
    const Eigen::Index w = std::min<Eigen::Index>(kSolveBlock, nb - c0);
    const Eigen::MatrixXd rhs = Eigen::MatrixXd(p.KIG.middleCols(c0, w));
    const Eigen::MatrixXd X = llt.solve(rhs);
    D.middleCols(c0, w) -= KGI * X;
  }
  if (asymmetry) *asymmetry = (D - D.transpose()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd sym = 0.5 * (D + D.transpose());
  return sym;
}

Eigen::VectorXd harmonic_extension(const SymSparse& K, const Grid2D& grid,
                                   const Eigen::VectorXd& rim_values) {
  if (rim_values.size() != static_cast<Eigen::Index>(grid.n_theta)) {
    throw DomainError("rim data size does not match the grid");
  }
  const std::vector<std::size_t> boundary = grid.boundary_nodes();
  const Partition p = partition(K, boundary);
  Factor llt(p.KII);
  if (llt.info() != Eigen::Success) throw NumericalError("interior block is singular");
  const Eigen::VectorXd inner = llt.solve(-(p.KIG * rim_values));
  Eigen::VectorXd u(static_cast<Eigen::Index>(grid.num_nodes()));
  for (std::size_t g = 0; g < grid.num_nodes(); ++g) {
    u(static_cast<Eigen::Index>(g)) = p.on_boundary[g] ? rim_values(p.local[g]) : inner(p.local[g]);
  }
  return u;
}

Eigen::VectorXd harmonic_extension(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                   const Eigen::VectorXd& rim_values, int quad_order) {
  return harmonic_extension(assemble_stiffness(m, phi, grid, quad_order), grid, rim_values);
}

BoundaryOperators boundary_operators(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                     int quad_order) {
  BoundaryOperators ops;
  ops.grid = grid;
  ops.weighted = weight_of(m, phi).active;
  const SymSparse K = assemble_stiffness(m, phi, grid, quad_order);
  const std::vector<std::size_t> boundary = grid.boundary_nodes();
  ops.dtn = dtn_matrix(K, boundary, &ops.dtn_asymmetry);
  ops.mass = dense_rim(assemble_boundary_mass(m, phi, grid, quad_order));
  ops.stiffness = dense_rim(assemble_boundary_stiffness(m, phi, grid, quad_order));
  return ops;
}

EigResult closed_circle_spectrum(const BoundaryOperators& ops, std::size_t count) {
  return solve_pencil("closed", ops.stiffness, ops.mass, count, ops.grid, 0.0);
}

EigResult steklov_spectrum(const BoundaryOperators& ops, std::size_t count) {
  return solve_pencil(ops.weighted ? "weighted-steklov" : "steklov", ops.dtn, ops.mass, count,
                      ops.grid, 0.0);
}

EigResult wentzell_spectrum(const BoundaryOperators& ops, double beta, std::size_t count) {
  if (!(beta >= 0.0)) throw DomainError("beta must be non-negative");
  // beta = 0 must reproduce the Steklov pencil bit for bit
  if (beta == 0.0) return solve_pencil("wentzell", ops.dtn, ops.mass, count, ops.grid, 0.0);
  const Eigen::MatrixXd A = ops.dtn + beta * ops.stiffness;
  return solve_pencil("wentzell", A, ops.mass, count, ops.grid, beta);
}

EigResult closed_circle_spectrum(const MetricField& m, const Grid2D& grid, std::size_t count) {
  const Expr none;
  return solve_pencil("closed", dense_rim(assemble_boundary_stiffness(m, none, grid)),
                      dense_rim(assemble_boundary_mass(m, none, grid)), count, grid, 0.0);
}

EigResult steklov_spectrum(const MetricField& m, const Expr& phi, const Grid2D& grid,
                           std::size_t count) {
  return steklov_spectrum(boundary_operators(m, phi, grid), count);
}

EigResult wentzell_spectrum(const MetricField& m, const Grid2D& grid, double beta,
                            std::size_t count) {
  return wentzell_spectrum(boundary_operators(m, Expr(), grid), beta, count);
}

void write_triplets(std::ostream& out, const SymSparse& A) {
  char buf[96];
  for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
    for (SymSparse::InnerIterator it(A, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                    static_cast<long>(it.col()), it.value());
      out << buf;
    }
  }
}

void write_triplets(std::ostream& out, const Eigen::MatrixXd& A) {
  char buf[96];
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      if (A(r, c) == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(r),
                    static_cast<long>(c), A(r, c));
      out << buf;
    }
  }
}

}  // namespace speclab
