#include "speclab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ode_util.hpp"
#include "speclab/error.hpp"

namespace speclab {

namespace {

double hermite(double y0, double d0, double y1, double d1, double h, double s) {
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
}

void require_inside(const WarpingSolution& sol, double r) {
  if (!(r > 0.0) || !(r < sol.l_pos) || r > sol.t_max) {
    std::ostringstream msg;
    msg << "radius " << r << " is outside the positivity interval (0, " << sol.reach() << ")";
    throw DomainError(msg.str());
  }
}

}  // namespace

std::pair<double, double> RadialMode::at(double s) const {
  if (s < t.front() || s > t.back()) {
    throw DomainError("radial mode evaluated outside [eps, r]");
  }
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  if (i + 1 >= t.size()) return {psi.back(), psi_prime.back()};
  const double h = t[i + 1] - t[i];
  const double u = (s - t[i]) / h;
  return {hermite(psi[i], psi_prime[i], psi[i + 1], psi_prime[i + 1], h, u),
          hermite(psi_prime[i], psi_second[i], psi_prime[i + 1], psi_second[i + 1], h, u)};
}

RadialMode steklov_mode(const WarpingSolution& sol, int n, int ell, double r, double tol) {
  if (n < 2) throw DomainError("dimension must be at least 2");
  if (ell < 1) throw DomainError("angular degree must be at least 1");
  require_inside(sol, r);

  const CurvatureProfile& k = *sol.k;
  const double mu = static_cast<double>(ell) * (ell + n - 2);
  const double nm1 = n - 1.0;

  // Frobenius start: f = t + f3 t^3, psi = t^l (1 + c t^2)
  const double eps = 1e-6 * r;
  const double k0 = k(0.0);
  const double f3 = -k0 / 6.0;
  const double c = -f3 * ell * (ell + 2.0 * n - 3.0) / (2.0 * ell + n);
  const double eps_l = std::pow(eps, ell);
  using State = detail::OdeState<4>;
  State x0{eps + f3 * eps * eps * eps, 1.0 + 3.0 * f3 * eps * eps,
           eps_l * (1.0 + c * eps * eps), eps_l / eps * (ell + (ell + 2.0) * c * eps * eps)};

  auto rhs = [&](const State& x, State& dxdt, double t) {
    const double f = x[0];
    dxdt[0] = x[1];
    dxdt[1] = -k(t) * f;
    dxdt[2] = x[3];
    dxdt[3] = -nm1 * x[1] / f * x[3] + mu / (f * f) * x[2];
  };

  RadialMode mode;
  mode.ell = ell;
  mode.n_dim = n;
  mode.r = r;
  auto record = [&](double t, const State& x) {
    State d{};
    rhs(x, d, t);
    mode.t.push_back(t);
    mode.f.push_back(x[0]);
    mode.f_prime.push_back(x[1]);
    mode.psi.push_back(x[2]);
    mode.psi_prime.push_back(x[3]);
    mode.psi_second.push_back(d[3]);
  };
  record(eps, x0);

  detail::integrate_dense<4>(
      rhs, x0, eps, r, eps * 0.1, 1e-300, tol, r / 200.0,
      [&](auto& stepper, double, double t_now) {
        State x{};
        const double t_end = std::min(t_now, r);
        if (t_end < t_now) {
          stepper.calc_state(t_end, x);
        } else {
          x = stepper.current_state();
        }
        if (!(x[0] > 0.0)) throw DomainError("warping function vanished inside the ball");
        if (!(x[2] > 0.0)) {
          std::ostringstream msg;
          msg << "radial mode lost positivity at t = " << t_end << " (l = " << ell << ")";
          throw NumericalError(msg.str());
        }
        record(t_end, x);
        return t_end < r;
      });

  const double scale = 1.0 / mode.psi.back();
  for (std::size_t i = 0; i < mode.t.size(); ++i) {
    mode.psi[i] *= scale;
    mode.psi_prime[i] *= scale;
    mode.psi_second[i] *= scale;
  }
  mode.p = mode.psi_prime.back() / mode.psi.back();
  return mode;
}

ModelP1 model_p1(const WarpingSolution& sol, int n, double r, int ell_max, double tol) {
  if (ell_max < 1) throw DomainError("ell_max must be at least 1");
  ModelP1 out;
  for (int ell = 1; ell <= ell_max; ++ell) {
    RadialMode mode = steklov_mode(sol, n, ell, r, tol);
    out.p_by_ell.push_back(mode.p);
    if (ell == 1 || mode.p < out.mode.p) out.mode = std::move(mode);
  }
  out.minimizer_is_ell1 = out.mode.ell == 1;
  return out;
}

double closed_sphere_lambda1(const WarpingSolution& sol, int n, double r) {
  if (n < 2) throw DomainError("dimension must be at least 2");
  require_inside(sol, r);
  const double f = warp_at(sol, r).first;
  return (n - 1.0) / (f * f);
}

ModelBallSpectrum model_wentzell_tau1(const WarpingSolution& sol, int n, double r,
                                      std::vector<double> betas, double tol) {
  ModelBallSpectrum out;
  const ModelP1 p1 = model_p1(sol, n, r, 8, tol);
  out.p1 = p1.mode.p;
  out.minimizer_is_ell1 = p1.minimizer_is_ell1;
  out.lambda1_closed = closed_sphere_lambda1(sol, n, r);
  out.r = r;
  out.n_dim = n;
  for (double beta : betas) {
    if (!(beta >= 0.0)) throw DomainError("beta must be non-negative");
    out.beta.push_back(beta);
    out.tau1.push_back(out.p1 + beta * out.lambda1_closed);
  }
  return out;
}

PsiSignReport psi_sign_report(const RadialMode& mode, double representation_tol) {
  PsiSignReport report;
  const std::size_t last = mode.t.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {  // interior samples of (0, r)
    if (!(mode.psi[i] > 0.0) || !(mode.psi_prime[i] > 0.0)) report.violations.push_back(i);
  }
  if (!report.violations.empty()) {
    report.passed = false;
    std::ostringstream msg;
    msg << report.violations.size() << " sign violation(s), first at t = "
        << mode.t[report.violations.front()];
    report.message = msg.str();
    return report;
  }
  if (mode.ell != 1) {
    report.message = "sign check passed";
    return report;
  }

  // psi'(t) f^{n-1}(t) = (n-1) int_0^t psi f^{n-3} ds, integrated with the
  // cubic Hermite rule on the node grid.
  const int n = mode.n_dim;
  auto g = [&](std::size_t i) { return mode.psi[i] * std::pow(mode.f[i], n - 3); };
  auto dg = [&](std::size_t i) {
    return mode.psi_prime[i] * std::pow(mode.f[i], n - 3) +
           (n - 3) * mode.psi[i] * std::pow(mode.f[i], n - 4) * mode.f_prime[i];
  };
  double integral = g(0) * mode.t[0] / (n - 1.0);  // psi f^{n-3} ~ c t^{n-2} near 0
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    if (i > 0) {
      const double h = mode.t[i] - mode.t[i - 1];
      integral += 0.5 * h * (g(i - 1) + g(i)) + h * h / 12.0 * (dg(i - 1) - dg(i));
    }
    const double rep = (n - 1.0) * std::pow(mode.f[i], 1 - n) * integral;
    worst = std::max(worst, std::fabs(rep - mode.psi_prime[i]));
    scale = std::max(scale, std::fabs(mode.psi_prime[i]));
  }
  report.representation_residual = worst / scale;
  if (report.representation_residual > representation_tol) {
    report.passed = false;
    std::ostringstream msg;
    msg << "integral representation residual " << report.representation_residual
        << " exceeds " << representation_tol;
    report.message = msg.str();
  } else {
    report.message = "sign check and integral representation passed";
  }
  return report;
}

}  // namespace speclab
