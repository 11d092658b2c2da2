#include "speclab/geom2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "speclab/error.hpp"

namespace speclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool uses_only(const Expr& e, const std::vector<std::string>& allowed) {
  for (const std::string& v : e.used_variables()) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) return false;
  }
  return true;
}

void check_pole(const Expr& J) {
  for (int j = 0; j < 16; ++j) {
    const double th = kTwoPi * j / 16.0;
    Jet2 jet;
    try {
      jet = J.jet({0.0, th});
    } catch (const DomainError& e) {
      throw DomainError(std::string("warping factor is not smooth at the pole: ") + e.what());
    }
    if (std::fabs(jet.value) > 1e-12 || std::fabs(jet.grad[0] - 1.0) > 1e-8) {
      std::ostringstream msg;
      msg << "warping factor violates J(0) = 0, J_t(0) = 1 at theta = " << th
          << " (J = " << jet.value << ", J_t = " << jet.grad[0] << ")";
      throw DomainError(msg.str());
    }
  }
}

}  // namespace

MetricField MetricField::warped(const Expr& J, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("outer radius must be positive");
  if (!uses_only(J, chart_variables())) {
    throw DomainError("warping factor must be an expression in t and theta");
  }
  MetricField m;
  m.kind_ = MetricKind::kWarped;
  m.outer_ = r;
  m.shape_ = J.redeclare(chart_variables());
  check_pole(m.shape_);
  for (int i = 1; i <= 64; ++i) {
    for (int j = 0; j < 64; ++j) {
      const double t = r * i / 64.0, th = kTwoPi * j / 64.0;
      if (!(m.shape_({t, th}) > 0.0)) {
        std::ostringstream msg;
        msg << "warping factor is not positive at (t, theta) = (" << t << ", " << th << ")";
        throw DomainError(msg.str());
      }
    }
  }
  return m;
}

MetricField MetricField::warped(const std::string& J_text, double r) {
  return warped(Expr::parse(J_text, chart_variables()), r);
}

MetricField MetricField::pullback(const Expr& R) {
  if (!uses_only(R, {"theta"})) throw DomainError("boundary radius must depend on theta only");
  MetricField m;
  m.kind_ = MetricKind::kPullback;
  m.outer_ = 1.0;
  m.shape_ = R.redeclare({"theta"});
  for (int j = 0; j < 256; ++j) {
    const double th = kTwoPi * j / 256.0;
    if (!(m.shape_({th}) > 0.0)) throw DomainError("boundary radius must be positive");
  }
  return m;
}

MetricField MetricField::pullback(const std::string& R_text) {
  return pullback(Expr::parse(R_text, {"theta"}));
}

MetricPoint MetricField::at(double t, double theta) const {
  MetricPoint p;
  if (kind_ == MetricKind::kWarped) {
    const Jet2 J = shape_.jet({t, theta});
    p.g[0][0] = 1.0;
    p.g[1][1] = J.value * J.value;
    p.dg[0][1][1] = 2.0 * J.value * J.grad[0];
    p.dg[1][1][1] = 2.0 * J.value * J.grad[1];
  } else {
    const Jet2 R = shape_.jet({theta});
    const double r0 = R.value, r1 = R.grad[0], r2 = R.hess(0, 0);
    p.g[0][0] = r0 * r0;
    p.g[0][1] = p.g[1][0] = t * r0 * r1;
    p.g[1][1] = t * t * (r1 * r1 + r0 * r0);
    p.dg[1][0][0] = 2.0 * r0 * r1;
    p.dg[0][0][1] = p.dg[0][1][0] = r0 * r1;
    p.dg[1][0][1] = p.dg[1][1][0] = t * (r1 * r1 + r0 * r2);
    p.dg[0][1][1] = 2.0 * t * (r1 * r1 + r0 * r0);
    p.dg[1][1][1] = 2.0 * t * t * (r1 * r2 + r0 * r1);
  }
  const double det = p.g[0][0] * p.g[1][1] - p.g[0][1] * p.g[1][0];
  if (!(det > 0.0) || !(p.g[0][0] > 0.0) || !std::isfinite(det)) {
    std::ostringstream msg;
    msg << "metric is not positive definite at (t, theta) = (" << t << ", " << theta << ")";
    throw DomainError(msg.str());
  }
  p.sqrt_det = std::sqrt(det);
  p.g_inv[0][0] = p.g[1][1] / det;
  p.g_inv[1][1] = p.g[0][0] / det;
  p.g_inv[0][1] = p.g_inv[1][0] = -p.g[0][1] / det;
  return p;
}

Christoffel MetricField::christoffels(double t, double theta) const {
  const MetricPoint p = at(t, theta);
  Christoffel gamma{};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int d = 0; d < 2; ++d) {
          s += p.g_inv[a][d] * (p.dg[b][d][c] + p.dg[c][d][b] - p.dg[d][b][c]);
        }
        gamma[a][b][c] = 0.5 * s;
      }
    }
  }
  return gamma;
}

double MetricField::gauss_curvature(double t, double theta) const {
  if (kind_ == MetricKind::kPullback) return 0.0;
  const Jet2 J = shape_.jet({t, theta});
  return -J.hess(0, 0) / J.value;
}

std::array<double, 2> MetricField::position(double t, double theta) const {
  const double rho = kind_ == MetricKind::kWarped ? t : t * shape_({theta});
  return {rho * std::cos(theta), rho * std::sin(theta)};
}

std::array<std::array<double, 2>, 2> MetricField::jacobian(double t, double theta) const {
  const double c = std::cos(theta), s = std::sin(theta);
  if (kind_ == MetricKind::kWarped) return {{{c, -t * s}, {s, t * c}}};
  const Jet2 R = shape_.jet({theta});
  const double r0 = R.value, r1 = R.grad[0];
  return {{{r0 * c, t * (r1 * c - r0 * s)}, {r0 * s, t * (r1 * s + r0 * c)}}};
}

std::array<Expr, 2> MetricField::cartesian_map() const {
  const Expr t = Expr::variable("t", chart_variables());
  const Expr th = Expr::variable("theta", chart_variables());
  const Expr rho = kind_ == MetricKind::kWarped ? t : t * shape_.redeclare(chart_variables());
  return {rho * cos(th), rho * sin(th)};
}

Expr MetricField::to_chart(const Expr& field) const {
  if (uses_only(field, chart_variables())) return field.redeclare(chart_variables());
  if (uses_only(field, cartesian_variables())) {
    const auto xy = cartesian_map();
    return field.redeclare(cartesian_variables())
        .substitute({{"x", xy[0]}, {"y", xy[1]}}, chart_variables());
  }
  throw DomainError("field must be an expression in (t, theta) or in (x, y): " + field.str());
}

std::string MetricField::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (kind_ == MetricKind::kWarped) {
    out << "warped J = " << shape_.str() << ", r = " << outer_;
  } else {
    out << "pullback R(theta) = " << shape_.str();
  }
  return out.str();
}

RimPoint rim_point(const MetricField& m, double theta) {
  const MetricPoint p = m.at(m.outer(), theta);
  const Christoffel gamma = m.christoffels(m.outer(), theta);
  RimPoint rim;
  const double norm = std::sqrt(p.g_inv[0][0]);
  rim.eta = {p.g_inv[0][0] / norm, p.g_inv[1][0] / norm};
  rim.arclength = std::sqrt(p.g[1][1]);
  rim.kappa_g = -gamma[0][1][1] / (norm * p.g[1][1]);
  return rim;
}

BoundaryData boundary_geometry(const MetricField& m, const Expr& phi, std::size_t n_theta) {
  if (n_theta < 3) throw DomainError("rim needs at least three nodes");
  const Expr w = m.to_chart(phi);
  BoundaryData bd;
  for (std::size_t j = 0; j < n_theta; ++j) {
    const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta);
    const RimPoint rim = rim_point(m, th);
    if (!(rim.arclength > 0.0)) throw DomainError("degenerate rim metric");
    const Jet2 pj = w.jet({m.outer(), th});
    const double phi_eta = rim.eta[0] * pj.grad[0] + rim.eta[1] * pj.grad[1];
    bd.theta.push_back(th);
    bd.arclength.push_back(rim.arclength);
    bd.eta.push_back(rim.eta);
    bd.kappa_g.push_back(rim.kappa_g);
    bd.phi_eta.push_back(phi_eta);
    bd.h_phi.push_back(rim.kappa_g - phi_eta);
    bd.weight.push_back(std::exp(-pj.value));
  }
  return bd;
}

CurvatureReport radial_curvature_check(const MetricField& m, const CurvatureProfile& k,
                                       double tol, std::size_t n_t, std::size_t n_theta) {
  if (m.kind() != MetricKind::kWarped) {
    throw DomainError("radial curvature check needs a warped metric");
  }
  if (n_t < 1 || n_theta < 1) throw DomainError("empty curvature grid");
  CurvatureReport report;
  report.tol = tol;
  for (std::size_t i = 1; i <= n_t; ++i) {
    const double t = m.outer() * static_cast<double>(i) / static_cast<double>(n_t);
    const double bound = k(t);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta);
      const double violation = m.gauss_curvature(t, th) - bound;
      report.max_violation = std::max(report.max_violation, violation);
      if (violation > tol) report.violating_nodes.push_back({t, th});
    }
  }
  report.passed = report.max_violation <= tol;
  return report;
}

ConvexityReport convexity_check(const Expr& phi_xy, std::span<const std::array<double, 2>> points,
                                double tol) {
  if (!uses_only(phi_xy, cartesian_variables())) {
    throw DomainError("convexity check needs a weight in (x, y)");
  }
  const Expr phi = phi_xy.redeclare(cartesian_variables());
  ConvexityReport report;
  report.min_eigenvalue = INFINITY;
  for (const auto& p : points) {
    const Jet2 j = phi.jet({p[0], p[1]});
    const double a = j.hess(0, 0), b = j.hess(0, 1), c = j.hess(1, 1);
    const double lo = 0.5 * (a + c) - std::hypot(0.5 * (a - c), b);
    if (lo < report.min_eigenvalue) {
      report.min_eigenvalue = lo;
      report.worst_point = p;
    }
  }
  report.passed = report.min_eigenvalue >= -tol;
  return report;
}

std::vector<std::array<double, 2>> sample_points(const MetricField& m, std::size_t n_t,
                                                 std::size_t n_theta) {
  std::vector<std::array<double, 2>> pts{{0.0, 0.0}};
  for (std::size_t i = 1; i <= n_t; ++i) {
    const double t = m.outer() * static_cast<double>(i) / static_cast<double>(n_t);
    for (std::size_t j = 0; j < n_theta; ++j) {
      pts.push_back(m.position(t, kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta)));
    }
  }
  return pts;
}

}  // namespace speclab
