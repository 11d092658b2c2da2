#pragma once

// Thin wrapper over Boost.Odeint's dense-output Dormand-Prince stepper used by
// the warping and radial-mode integrators.

#include <array>
#include <cmath>
#include <exception>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "speclab/error.hpp"

namespace speclab::detail {

template <std::size_t N>
using OdeState = std::array<double, N>;

/// Drives `system(x, dxdt, t)` from t0 to t1. After every accepted step
/// `on_step(stepper, t_prev, t_now)` is called; it returns false to stop.
/// The stepper exposes `calc_state(t, x)` for any t in [t_prev, t_now].
template <std::size_t N, class System, class OnStep>
void integrate_dense(System&& system, OdeState<N> x0, double t0, double t1, double dt0,
                     double abs_tol, double rel_tol, double max_dt, OnStep&& on_step) {
  namespace odeint = boost::numeric::odeint;
  using Stepper = odeint::runge_kutta_dopri5<OdeState<N>>;
  auto stepper = odeint::make_dense_output(abs_tol, rel_tol, max_dt, Stepper());
  stepper.initialize(x0, t0, dt0);
  try {
    while (stepper.current_time() < t1) {
      const auto [t_prev, t_now] = stepper.do_step(system);
      if (!(t_now > t_prev) || t_now - t_prev < 1e-15 * std::max(1.0, std::fabs(t_now))) {
        throw NumericalError("step-size underflow near t = " + std::to_string(t_now));
      }
      if (!on_step(stepper, t_prev, t_now)) return;
    }
  } catch (const speclab::Error&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericalError(std::string("ODE integration failed: ") + e.what());
  }
}

}  // namespace speclab::detail
