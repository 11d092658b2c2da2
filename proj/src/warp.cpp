#include "speclab/warp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ode_util.hpp"
#include "speclab/error.hpp"

namespace speclab {

// ---------------------------------------------------------------------------
// NaturalSpline

NaturalSpline::NaturalSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw DomainError("spline needs at least two (t, k) pairs");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw DomainError("spline nodes must be strictly increasing");
  }
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Thomas algorithm on the interior second derivatives, m_0 = m_{n-1} = 0.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
    c[i] = h1 / diag;
    d[i] = (rhs - h0 * d[i - 1]) / diag;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
  }
}

std::size_t NaturalSpline::segment(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double NaturalSpline::operator()(double x) const {
  if (x <= x_.front()) return y_.front() + derivative(x_.front()) * (x - x_.front());
  if (x >= x_.back()) return y_.back() + derivative(x_.back()) * (x - x_.back());
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double NaturalSpline::derivative(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h +
         (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

// ---------------------------------------------------------------------------
// CurvatureProfile

CurvatureProfile CurvatureProfile::constant(double kappa) {
  if (!std::isfinite(kappa)) throw DomainError("curvature constant must be finite");
  CurvatureProfile p;
  p.data_ = kappa;
  return p;
}

CurvatureProfile CurvatureProfile::expression(const Expr& k_of_t) {
  if (k_of_t.dimension() != 1) {
    throw DomainError("curvature expression must be declared over the single variable t");
  }
  CurvatureProfile p;
  p.data_ = k_of_t;
  return p;
}

CurvatureProfile CurvatureProfile::expression(const std::string& text) {
  return expression(Expr::parse(text, {"t"}));
}

CurvatureProfile CurvatureProfile::table(std::vector<double> t, std::vector<double> k) {
  CurvatureProfile p;
  p.data_ = NaturalSpline(std::move(t), std::move(k));
  return p;
}

double CurvatureProfile::operator()(double t) const {
  double k = 0.0;
  if (const auto* c = std::get_if<double>(&data_)) {
    k = *c;
  } else if (const auto* e = std::get_if<Expr>(&data_)) {
    k = (*e)({t});
  } else {
    k = std::get<NaturalSpline>(data_)(t);
  }
  if (!std::isfinite(k)) {
    std::ostringstream msg;
    msg << "curvature profile is not finite at t = " << t;
    throw DomainError(msg.str());
  }
  return k;
}

std::string CurvatureProfile::describe() const {
  std::ostringstream out;
  if (const auto* c = std::get_if<double>(&data_)) {
    out << "k = " << *c;
  } else if (const auto* e = std::get_if<Expr>(&data_)) {
    out << "k(t) = " << e->str();
  } else {
    out << "k(t) tabulated on " << std::get<NaturalSpline>(data_).nodes().size() << " nodes";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// warping ODE

WarpingSolution solve_warping(const CurvatureProfile& k, double t_max, double tol) {
  if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");

  // Cap the step so cubic Hermite interpolation of f stays within tol:
  // |error| <= h^4 / 384 * |f''''| with |f''''| ~ k^2 |f| + ...
  double k_scale = 1.0;
  for (int i = 0; i <= 200; ++i) {
    k_scale = std::max(k_scale, std::fabs(k(t_max * i / 200.0)));
  }
  const double max_dt = std::min(0.05, std::pow(384.0 * tol / (k_scale * k_scale), 0.25));

  WarpingSolution sol;
  sol.t_max = t_max;
  sol.tol = tol;
  sol.k = std::make_shared<const CurvatureProfile>(k);
  sol.t.push_back(0.0);
  sol.f.push_back(0.0);
  sol.f_prime.push_back(1.0);

  using State = detail::OdeState<2>;
  auto rhs = [&k](const State& x, State& dxdt, double t) {
    dxdt[0] = x[1];
    dxdt[1] = -k(t) * x[0];
  };
  const double abs_tol = tol * 1e-2;

  detail::integrate_dense<2>(
      rhs, State{0.0, 1.0}, 0.0, t_max, std::min(1e-3, max_dt), abs_tol, abs_tol, max_dt,
      [&](auto& stepper, double t_prev, double t_now) {
        State x{};
        const double t_end = std::min(t_now, t_max);
        if (t_end < t_now) {
          stepper.calc_state(t_end, x);
        } else {
          x = stepper.current_state();
        }
        if (x[0] <= 0.0 && sol.t.size() > 1) {
          // bisection for the first zero of f inside (t_prev, t_end]
          double lo = t_prev, hi = t_end;
          State mid{};
          while (hi - lo > 0.25 * tol) {
            const double tm = 0.5 * (lo + hi);
            stepper.calc_state(tm, mid);
            (mid[0] > 0.0 ? lo : hi) = tm;
          }
          const double root = 0.5 * (lo + hi);
          stepper.calc_state(root, mid);
          sol.l_pos = root;
          sol.t.push_back(root);
          sol.f.push_back(0.0);
          sol.f_prime.push_back(mid[1]);
          return false;
        }
        sol.t.push_back(t_end);
        sol.f.push_back(x[0]);
        sol.f_prime.push_back(x[1]);
        return t_end < t_max;
      });
  return sol;
}

std::pair<double, double> warp_at(const WarpingSolution& sol, double t) {
  if (!(t >= 0.0) || !(t < sol.reach() || (t == sol.t_max && sol.l_pos > sol.t_max))) {
    std::ostringstream msg;
    msg << "t = " << t << " is outside the positivity interval [0, " << sol.reach() << ")";
    throw DomainError(msg.str());
  }
  const auto it = std::upper_bound(sol.t.begin(), sol.t.end(), t);
  std::size_t i = it == sol.t.begin() ? 0 : static_cast<std::size_t>(it - sol.t.begin()) - 1;
  if (i + 1 >= sol.t.size()) {
    return {sol.f.back(), sol.f_prime.back()};
  }
  if (t == sol.t[i]) return {sol.f[i], sol.f_prime[i]};

  // cubic Hermite on (f, f') and on (f', f'' = -k f)
  const double h = sol.t[i + 1] - sol.t[i];
  const double s = (t - sol.t[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  const double f0 = sol.f[i], f1 = sol.f[i + 1];
  const double d0 = sol.f_prime[i], d1 = sol.f_prime[i + 1];
  const double dd0 = -(*sol.k)(sol.t[i]) * f0;
  const double dd1 = -(*sol.k)(sol.t[i + 1]) * f1;
  const double f = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
  const double fp = h00 * d0 + h10 * h * dd0 + h01 * d1 + h11 * h * dd1;
  return {f, fp};
}

}  // namespace speclab
