#pragma once

// Steklov modes of geodesic balls in a spherically symmetric model space,
// computed by a single forward shot of the radial ODE
//
//   psi'' + (n-1) (f'/f) psi' - l(l+n-2)/f^2 psi = 0,   psi(t) ~ t^l at 0,
//
// whose Steklov eigenvalue is read off at the rim as p = psi'(r)/psi(r).

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "speclab/warp.hpp"

namespace speclab {

struct RadialMode {
  int ell = 1;
  int n_dim = 2;
  double r = 0.0;
  double p = 0.0;  // Steklov eigenvalue of this mode
  // samples on the integrator's step grid, eps = t.front() > 0, t.back() = r
  std::vector<double> t;
  std::vector<double> psi;          // normalized so psi(r) = 1
  std::vector<double> psi_prime;
  std::vector<double> psi_second;   // from the ODE at each node
  std::vector<double> f;            // warping function at the nodes
  std::vector<double> f_prime;

  /// (psi, psi') at t in [t.front(), r] by cubic Hermite interpolation.
  std::pair<double, double> at(double t) const;
};

inline constexpr double kShootTol = 1e-11;

RadialMode steklov_mode(const WarpingSolution& sol, int n, int ell, double r,
                        double tol = kShootTol);

struct ModelP1 {
  RadialMode mode;                  // minimizing mode
  std::vector<double> p_by_ell;     // p_l for l = 1 .. ell_max
  bool minimizer_is_ell1 = true;
};

ModelP1 model_p1(const WarpingSolution& sol, int n, double r, int ell_max = 8,
                 double tol = kShootTol);

/// First nonzero eigenvalue of the round sphere of radius f(r) bounding the
/// model ball: (n-1)/f(r)^2.
double closed_sphere_lambda1(const WarpingSolution& sol, int n, double r);

struct ModelBallSpectrum {
  double p1 = 0.0;
  double lambda1_closed = 0.0;
  std::vector<double> beta;
  std::vector<double> tau1;  // tau1[i] = p1 + beta[i] * lambda1_closed
  double r = 0.0;
  int n_dim = 2;
  bool minimizer_is_ell1 = true;
};

ModelBallSpectrum model_wentzell_tau1(const WarpingSolution& sol, int n, double r,
                                      std::vector<double> betas, double tol = kShootTol);

struct PsiSignReport {
  bool passed = true;
  std::vector<std::size_t> violations;  // node indices where psi <= 0 or psi' <= 0
  /// max |psi' - (n-1) f^{1-n} int_0^t psi f^{n-3}| / max|psi'|; l = 1 only,
  /// negative when not computed
  double representation_residual = -1.0;
  std::string message;
};

PsiSignReport psi_sign_report(const RadialMode& mode, double representation_tol = 1e-8);

}  // namespace speclab
