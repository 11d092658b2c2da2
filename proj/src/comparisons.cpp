#include "speclab/comparisons.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "speclab/error.hpp"
#include "speclab/quadrature.hpp"
#include "speclab/radial.hpp"

namespace speclab {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Grid2D half_grid(const MetricField& m, const Grid2D& g) {
  if (g.n_t < 32 || g.n_theta < 32) throw DomainError("grid too coarse for a two-grid estimate");
  return Grid2D::polar(m, g.n_t / 2, g.n_theta / 2, g.t0 / g.outer);
}

struct TwoGrid {
  double fine = 0.0, coarse = 0.0;
  double extrapolated() const { return (4.0 * fine - coarse) / 3.0; }
  double allowance() const { return std::fabs(fine - coarse) / 3.0; }
};

void require_warped(const MetricField& m) {
  if (m.kind() != MetricKind::kWarped) throw DomainError("comparison needs a warped patch");
}

WarpingSolution checked_model(const MetricField& m, const CurvatureProfile& k,
                              std::vector<std::string>& notes) {
  require_warped(m);
  const CurvatureReport rep = radial_curvature_check(m, k);
  if (!rep.passed) {
    std::ostringstream msg;
    msg << "radial curvature exceeds k: max violation " << rep.max_violation << " at "
        << rep.violating_nodes.size() << " nodes";
    if (!rep.violating_nodes.empty()) {
      msg << ", first (t, theta) = (" << rep.violating_nodes.front()[0] << ", "
          << rep.violating_nodes.front()[1] << ")";
    }
    throw PreconditionError(msg.str());
  }
  notes.push_back("radial curvature <= k verified");
  const double r = m.outer();
  WarpingSolution sol = solve_warping(k, std::max(1.5 * r, r + 0.5));
  if (!(r < sol.l_pos)) {
    throw PreconditionError("model warping function vanishes before r: l_pos = " +
                            fmt("%.17g", sol.l_pos));
  }
  notes.push_back("injectivity by construction: polar chart of radius r < l_pos");
  return sol;
}

// J(t, theta) = f(t) at sample nodes
bool is_model_metric(const MetricField& m, const WarpingSolution& sol) {
  for (int i = 1; i <= 32; ++i) {
    const double t = m.outer() * i / 32.0;
    const double f = warp_at(sol, t).first;
    for (int j = 0; j < 16; ++j) {
      const double J = m.at(t, 2.0 * std::numbers::pi * j / 16.0).sqrt_det;
      if (std::fabs(J - f) > 1e-9 * (1.0 + std::fabs(f))) return false;
    }
  }
  return true;
}

// cubic Hermite through samples (x, y, dy)
double hermite(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<double>& dy, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  i = std::min(i, x.size() - 2);
  const double h = x[i + 1] - x[i], s = (t - x[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1];
}

struct RimProfile {
  const MetricField& m;
  const Grid2D& grid;
  const Eigen::VectorXd& e1;
  GaussRule rule = gauss_legendre(3);

  // d_sharp = int e1^2 J, d_star = int e1'^2 / J, e1 piecewise linear
  void eval(double t, double& d_sharp, double& d_star) const {
    const std::size_t n = grid.n_theta;
    const double h = grid.dtheta();
    CompensatedSum sharp, star;
    for (std::size_t j = 0; j < n; ++j) {
      const double e0 = e1(static_cast<Eigen::Index>(j));
      const double e2 = e1(static_cast<Eigen::Index>((j + 1) % n));
      const double slope = (e2 - e0) / h;
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double s = 0.5 * (rule.x[q] + 1.0);
        const double w = 0.5 * rule.w[q] * h;
        const double J = m.at(t, grid.theta(j) + s * h).sqrt_det;
        const double e = (1 - s) * e0 + s * e2;
        sharp += w * e * e * J;
        star += w * slope * slope / J;
      }
    }
    d_sharp = sharp.value();
    d_star = star.value();
  }
};

}  // namespace

ComparisonVerdict fact1_check(const MetricField& m, double beta, const Grid2D& grid) {
  if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
  const BoundaryOperators ops = boundary_operators(m, Expr(), grid);
  const double tau = wentzell_spectrum(ops, beta, 2).values(1);
  const double lambda = closed_circle_spectrum(ops, 2).values(1);
  const double p1 = steklov_spectrum(ops, 2).values(1);
  ComparisonVerdict v;
  v.case_id = "fact1";
  v.lhs = tau;
  v.rhs = beta * lambda + p1;
  v.slack = v.lhs - v.rhs;
  v.tol = kSlackTol;
  v.grid = grid.describe();
  v.notes.push_back("lambda1_closed=" + fmt("%.17g", lambda));
  v.notes.push_back("p1=" + fmt("%.17g", p1));
  v.decide();
  return v;
}

ComparisonVerdict wentzell_comparison(const MetricField& m, const CurvatureProfile& k,
                                      double beta, const Grid2D& grid, double equality_tol) {
  if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
  ComparisonVerdict v;
  v.case_id = "wentzell-comparison";
  const WarpingSolution sol = checked_model(m, k, v.notes);
  const ModelBallSpectrum model = model_wentzell_tau1(sol, 2, m.outer(), {beta});
  TwoGrid tau;
  tau.fine = wentzell_spectrum(m, grid, beta, 2).values(1);
  tau.coarse = wentzell_spectrum(m, half_grid(m, grid), beta, 2).values(1);
  v.lhs = tau.extrapolated();
  v.rhs = model.tau1[0];
  v.slack = v.rhs - v.lhs;
  v.tol = kSlackTol + tau.allowance();
  v.grid = grid.describe();
  v.notes.push_back("tau1_grid=" + fmt("%.17g", tau.fine));
  v.decide();
  if (is_model_metric(m, sol)) {
    const double gap = std::fabs(tau.fine - v.rhs);
    v.notes.push_back("model metric: |tau1_grid - tau1_model| = " + fmt("%.3g", gap));
    if (gap >= equality_tol) v.pass = false;
  }
  return v;
}

TestFunctionBundle build_test_function(const MetricField& m, const WarpingSolution& model,
                                       double beta, const Grid2D& grid,
                                       const Eigen::VectorXd& e1) {
  require_warped(m);
  if (e1.size() != static_cast<Eigen::Index>(grid.n_theta)) {
    throw DomainError("rim eigenfunction size does not match the grid");
  }
  {
    const SymSparse M = assemble_boundary_mass(m, Expr(), grid);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(e1.size());
    const double mean = one.dot(M * e1);
    const double scale = std::sqrt(one.dot(M * one) * e1.dot(M * e1));
    if (!(scale > 0.0) || std::fabs(mean) > 1e-8 * scale) {
      throw PreconditionError("rim function is not mean-zero: int e1 dA = " + fmt("%.3g", mean));
    }
  }
  const double r = m.outer();
  const RadialMode mode = steklov_mode(model, 2, 1, r);
  auto psi = [&](double t) { return hermite(mode.t, mode.psi, mode.psi_prime, t); };
  auto dpsi = [&](double t) { return hermite(mode.t, mode.psi_prime, mode.psi_second, t); };
  const RimProfile rim{m, grid, e1};

  struct Sample {
    double t, d_sharp, d_star, h, w;
  };
  auto sample = [&](double t) {
    Sample s{t, 0, 0, 0, 0};
    rim.eval(t, s.d_sharp, s.d_star);
    const double f = warp_at(model, t).first;
    s.h = std::max(s.d_sharp, f * f * s.d_star);
    s.w = std::sqrt(f / s.h);
    return s;
  };
  auto branch = [&](double t) {
    double ds, dt;
    rim.eval(t, ds, dt);
    const double f = warp_at(model, t).first;
    return ds - f * f * dt;
  };

  // breakpoints: uniform panels plus the kinks of h
  constexpr int kPanels = 200;
  const double t_start = mode.t.front();
  std::vector<double> nodes;
  for (int i = 0; i <= kPanels; ++i) nodes.push_back(t_start + (r - t_start) * i / kPanels);
  TestFunctionBundle out;
  out.e1 = e1;
  {
    std::vector<double> with_kinks{nodes.front()};
    double prev = branch(nodes.front());
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const double cur = branch(nodes[i]);
      if ((prev < 0) != (cur < 0) && prev != 0.0 && cur != 0.0) {
        double lo = nodes[i - 1], hi = nodes[i], flo = prev;
        for (int it = 0; it < 80 && hi - lo > 1e-15 * r; ++it) {
          const double mid = 0.5 * (lo + hi), fm = branch(mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        const double kink = 0.5 * (lo + hi);
        out.kinks.push_back(kink);
        if (kink > with_kinks.back()) with_kinks.push_back(kink);
      }
      if (nodes[i] > with_kinks.back()) with_kinks.push_back(nodes[i]);
      prev = cur;
    }
    nodes = std::move(with_kinks);
  }

  const GaussRule g = gauss_legendre(4);
  // int_a^b psi' w by Gauss
  auto flux = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * g.x[q];
      s += 0.5 * (b - a) * g.w[q] * dpsi(t) * sample(t).w;
    }
    return s;
  };
  // a at the breakpoints, integrating inward from the rim
  const std::size_t N = nodes.size();
  std::vector<double> a(N);
  const Sample rim_sample = sample(r);
  a[N - 1] = psi(r) * rim_sample.w;
  for (std::size_t i = N - 1; i-- > 0;) a[i] = a[i + 1] - flux(nodes[i], nodes[i + 1]);

  out.min_clamp_degenerate = std::min(a[N - 1], 0.0) == 0.0;
  if (a[N - 1] <= 0.0) throw PreconditionError("trial function a_+ vanishes identically");

  // a is increasing; split the panel holding its zero
  std::size_t first = 0;
  while (first + 1 < N && a[first + 1] <= 0.0) ++first;
  double t_zero = nodes[first];
  if (a[first] < 0.0) {
    double lo = nodes[first], hi = nodes[first + 1];
    const double a_hi = a[first + 1];
    for (int it = 0; it < 80 && hi - lo > 1e-15 * r; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (a_hi - flux(mid, nodes[first + 1]) < 0.0) lo = mid; else hi = mid;
    }
    t_zero = 0.5 * (lo + hi);
  }

  CompensatedSum energy;
  for (std::size_t i = first; i + 1 < N; ++i) {
    const double lo = i == first ? t_zero : nodes[i], hi = nodes[i + 1];
    if (!(hi > lo)) continue;
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g.x[q];
      const Sample s = sample(t);
      const double at = std::max(0.0, a[i + 1] - flux(t, hi));
      const double da = at > 0.0 ? dpsi(t) * s.w : 0.0;
      energy += 0.5 * (hi - lo) * g.w[q] * (da * da * s.d_sharp + at * at * s.d_star);
    }
  }
  const double ar = a[N - 1];
  out.lambda_rim = rim_sample.d_star / rim_sample.d_sharp;
  out.rq = (energy.value() + beta * ar * ar * rim_sample.d_star) / (ar * ar * rim_sample.d_sharp);

  for (std::size_t i = 0; i < N; ++i) {
    const Sample s = sample(nodes[i]);
    out.t.push_back(nodes[i]);
    out.d_sharp.push_back(s.d_sharp);
    out.d_star.push_back(s.d_star);
    out.h.push_back(s.h);
    out.a.push_back(a[i]);
    out.a_plus.push_back(std::max(a[i], 0.0));
  }
  return out;
}

TestFunctionChain test_function_rq(const MetricField& m, const CurvatureProfile& k, double beta,
                                   const Grid2D& grid, double equality_tol) {
  if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
  std::vector<std::string> notes;
  const WarpingSolution sol = checked_model(m, k, notes);
  const ModelP1 mp = model_p1(sol, 2, m.outer());
  const double lambda_model = closed_sphere_lambda1(sol, 2, m.outer());

  TestFunctionChain chain;
  chain.grid = grid.describe();
  chain.p1_model = mp.mode.p;
  chain.tau_model = mp.mode.p + beta * lambda_model;
  chain.is_model = is_model_metric(m, sol);

  TwoGrid tau, rq, lambda, p1;
  const Grid2D coarse = half_grid(m, grid);
  for (const Grid2D* g : {&coarse, &grid}) {
    const bool fine = g == &grid;
    const BoundaryOperators ops = boundary_operators(m, Expr(), *g);
    const EigResult closed = closed_circle_spectrum(ops, 2);
    const double t1 = wentzell_spectrum(ops, beta, 2).values(1);
    const double s1 = steklov_spectrum(ops, 2).values(1);
    TestFunctionBundle b = build_test_function(m, sol, beta, *g, closed.vectors.col(1));
    (fine ? tau.fine : tau.coarse) = t1;
    (fine ? p1.fine : p1.coarse) = s1;
    (fine ? rq.fine : rq.coarse) = b.rq;
    (fine ? lambda.fine : lambda.coarse) = b.lambda_rim;
    if (fine) {
      chain.total_slack = chain.tau_model - t1;
      chain.bundle = std::move(b);
    }
  }
  chain.tau_B = tau.extrapolated();
  chain.rq = rq.extrapolated();
  chain.bound = chain.p1_model + beta * lambda.extrapolated();
  chain.p1_B = p1.extrapolated();

  auto link = [&](const std::string& name, double lower, double upper, double allowance) {
    ChainLink l{name, lower, upper, kSlackTol + allowance, false};
    l.pass = upper - lower >= -l.allowance;
    chain.links.push_back(l);
    return l.pass;
  };
  bool ok = true;
  ok &= link("tau1(B) <= RQ", chain.tau_B, chain.rq, tau.allowance() + rq.allowance());
  ok &= link("RQ <= p1(model) + beta lambda1(rim)", chain.rq, chain.bound,
             rq.allowance() + beta * lambda.allowance());
  ok &= link("p1(model) + beta lambda1(rim) <= tau1(model)", chain.bound, chain.tau_model,
             beta * lambda.allowance());
  ok &= link("p1(B) <= p1(model)", chain.p1_B, chain.p1_model, p1.allowance());
  if (chain.is_model) ok &= std::fabs(chain.total_slack) < equality_tol;
  chain.pass = ok;
  return chain;
}

namespace {

ConvexityReport checked_convexity(const MetricField& m, const Expr& phi) {
  const auto pts = sample_points(m);
  const ConvexityReport rep = convexity_check(phi, pts);
  if (!rep.passed) {
    std::ostringstream msg;
    msg << "phi is not convex: Hessian eigenvalue " << rep.min_eigenvalue << " at ("
        << rep.worst_point[0] << ", " << rep.worst_point[1] << ")";
    throw PreconditionError(msg.str());
  }
  return rep;
}

void require_flat(const MetricField& m) {
  if (m.kind() != MetricKind::kPullback && m.shape().str() != "t") {
    throw PreconditionError("lower bound needs a flat patch");
  }
}

}  // namespace

ComparisonVerdict steklov_lower_bound_check(const MetricField& m, const Expr& phi, double c,
                                            const Grid2D& grid, double tol) {
  if (!(c > 0.0)) throw DomainError("c must be positive");
  require_flat(m);
  checked_convexity(m, phi);
  const BoundaryData bd = boundary_geometry(m, phi, grid.n_theta);
  const double kmin = *std::min_element(bd.kappa_g.begin(), bd.kappa_g.end());
  if (kmin < c - tol) {
    throw PreconditionError("rim curvature below c: min kappa_g = " + fmt("%.17g", kmin));
  }
  ComparisonVerdict v;
  v.case_id = "steklov-lower-bound";
  v.lhs = steklov_spectrum(m, phi, grid, 2).values(1);
  v.rhs = c;
  v.slack = v.lhs - v.rhs;
  v.tol = tol;
  v.grid = grid.describe();
  v.notes.push_back("convex phi, flat patch, min kappa_g = " + fmt("%.17g", kmin));
  v.decide();
  return v;
}

ComparisonVerdict escobar_half_bound_check(const MetricField& m, const Expr& phi, double c,
                                           const Grid2D& grid, double tol) {
  if (!(c > 0.0)) throw DomainError("c must be positive");
  require_flat(m);
  checked_convexity(m, phi);
  const BoundaryData bd = boundary_geometry(m, phi, grid.n_theta);
  const double kmin = *std::min_element(bd.kappa_g.begin(), bd.kappa_g.end());
  const double hmin = *std::min_element(bd.h_phi.begin(), bd.h_phi.end());
  if (!(kmin > c)) {
    throw PreconditionError("rim curvature not above c: min kappa_g = " + fmt("%.17g", kmin));
  }
  if (!(hmin > c)) {
    throw PreconditionError("weighted mean curvature not above c: min H^phi = " +
                            fmt("%.17g", hmin));
  }
  ComparisonVerdict v;
  v.case_id = "escobar-half-bound";
  v.lhs = steklov_spectrum(m, phi, grid, 2).values(1);
  v.rhs = 0.5 * c;
  v.slack = v.lhs - v.rhs;
  v.tol = tol;
  v.grid = grid.describe();
  v.notes.push_back("min kappa_g = " + fmt("%.17g", kmin) + ", min H^phi = " + fmt("%.17g", hmin));
  v.decide();
  // strict inequality
  if (v.slack <= 0.0) v.pass = false;
  return v;
}

void write_verdict_csv(std::ostream& out, const std::vector<ComparisonVerdict>& rows,
                       bool header) {
  if (header) out << "case_id,lhs,rhs,slack,tol,pass,grid,seed\n";
  char buf[512];
  for (const ComparisonVerdict& v : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d,%s,%llu\n", v.case_id.c_str(),
                  v.lhs, v.rhs, v.slack, v.tol, v.pass ? 1 : 0, v.grid.c_str(),
                  static_cast<unsigned long long>(v.seed));
    out << buf;
  }
}

}  // namespace speclab
