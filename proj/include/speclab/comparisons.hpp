#pragma once

// Eigenvalue comparison harnesses on 2-D patches:
//
//   fact1_check               tau_1 >= beta lambda_1^c(rim) + p_1 on one grid
//   wentzell_comparison       tau_1(B) <= tau_1(model ball) under K_rad <= k
//   test_function_rq          the trial-function chain
//                               tau_1(B) <= RQ <= p_1(model) + beta lambda_1^c(rim)
//                                        <= tau_1(model)
//   steklov_lower_bound_check sigma_1 >= c for convex phi, flat patch, kappa_g >= c
//   escobar_half_bound_check  sigma_1 > c / 2 when in addition H^phi > c
//
// Discrete quantities carry a Richardson allowance |x_h - x_2h| / 3 estimated
// on the grid and the grid with half the resolution.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/expr.hpp"
#include "speclab/fem.hpp"
#include "speclab/geom2d.hpp"
#include "speclab/warp.hpp"

namespace speclab {

inline constexpr double kSlackTol = 1e-6;

struct ComparisonVerdict {
  std::string case_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // positive when the inequality holds
  double tol = 0.0;
  bool pass = false;   // slack >= -tol
  std::string grid;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;  // preconditions checked, observations

  void decide() { pass = slack >= -tol; }
};

/// tau_1, lambda_1^c and p_1 from one set of rim operators (phi = 0).
/// beta >= 0; beta = 0 reduces to tau_1 = p_1.
ComparisonVerdict fact1_check(const MetricField& m, double beta, const Grid2D& grid);

/// Throws PreconditionError when the radial curvature exceeds k anywhere or
/// the model warping function vanishes before the patch radius. When m is
/// the model metric itself the verdict also requires |lhs - rhs| < equality_tol.
ComparisonVerdict wentzell_comparison(const MetricField& m, const CurvatureProfile& k,
                                      double beta, const Grid2D& grid,
                                      double equality_tol = 2e-3);

/// Radial trial function phi(t, theta) = a_+(t) e_1(theta) built from the
/// model mode psi and the rim eigenfunction e_1.
struct TestFunctionBundle {
  Eigen::VectorXd e1;           // rim nodal values, M-normalized
  std::vector<double> t;        // radial nodes, kinks of h and the zero of a inserted
  std::vector<double> d_star;   // int e_1'^2 / J dtheta
  std::vector<double> d_sharp;  // int e_1^2 J dtheta
  std::vector<double> h;        // max{d_sharp, f^2 d_star}
  std::vector<double> a;
  std::vector<double> a_plus;   // max{a, 0}
  std::vector<double> kinks;    // where the two branches of h cross
  bool min_clamp_degenerate = false;  // min{a, 0} vanishes at the rim
  double rq = 0.0;              // Wentzell Rayleigh quotient of phi
  double lambda_rim = 0.0;      // d_star(r) / d_sharp(r)
};

/// Throws PreconditionError if e1 is not mean-zero on the rim or a_+ vanishes
/// identically.
TestFunctionBundle build_test_function(const MetricField& m, const WarpingSolution& model,
                                       double beta, const Grid2D& grid,
                                       const Eigen::VectorXd& e1);

struct ChainLink {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double allowance = 0.0;
  bool pass = false;
};

struct TestFunctionChain {
  TestFunctionBundle bundle;  // on the finest grid
  double tau_B = 0.0;         // Richardson-extrapolated
  double rq = 0.0;
  double bound = 0.0;         // p_1(model) + beta lambda_1^c(rim)
  double tau_model = 0.0;
  double p1_B = 0.0;
  double p1_model = 0.0;
  double total_slack = 0.0;   // tau_model - tau_B on the finest grid
  std::vector<ChainLink> links;  // the three chain links, then p_1(B) <= p_1(model)
  bool is_model = false;
  bool pass = false;
  std::string grid;
};

/// Builds the chain on `grid` and on the grid of half the resolution.
/// Preconditions as for wentzell_comparison.
TestFunctionChain test_function_rq(const MetricField& m, const CurvatureProfile& k, double beta,
                                   const Grid2D& grid, double equality_tol = 2e-3);

/// sigma_1 of the weighted Steklov problem against c on a pullback patch.
/// Throws PreconditionError when phi is not convex or kappa_g < c - tol.
ComparisonVerdict steklov_lower_bound_check(const MetricField& m, const Expr& phi, double c,
                                            const Grid2D& grid, double tol = 1e-3);

/// sigma_1 > c / 2 under convex phi, kappa_g > c and H^phi > c.
ComparisonVerdict escobar_half_bound_check(const MetricField& m, const Expr& phi, double c,
                                           const Grid2D& grid, double tol = 1e-6);

/// case_id,lhs,rhs,slack,tol,pass,grid,seed
void write_verdict_csv(std::ostream& out, const std::vector<ComparisonVerdict>& rows,
                       bool header = true);

}  // namespace speclab
