#include "speclab/identities.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "speclab/error.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Mat2 = std::array<std::array<double, 2>, 2>;

bool is_constant_value(const Expr& e, double v) {
  if (!e.is_constant()) return false;
  std::vector<double> origin(e.dimension(), 0.0);
  return e(origin) == v;
}

// Pointwise ingredients of every Reilly-type formula.
struct InteriorLocal {
  double w = 0.0;  // quadrature weight * density * e^{-phi}
  double V = 0.0, LV = 0.0, f = 0.0;
  double lap_f = 0.0, Lf = 0.0;
  double hess_sq = 0.0;     // |Hess f|^2
  double hess_K_sq = 0.0;   // |Hess f + K f g|^2
  double grad_sq = 0.0;     // |grad f|^2
  double grad_f_phi = 0.0;  // <grad f, grad phi>
  double hessV_ff = 0.0;
  double hessphi_ff = 0.0;
  double ric_ff = 0.0;
};

struct BoundaryLocal {
  double w = 0.0;  // quadrature weight * arclength density * e^{-phi}
  double V = 0.0, V_eta = 0.0, u = 0.0, z = 0.0;
  double lap_bar_z = 0.0, L_bar_z = 0.0;
  double grad_bar_sq = 0.0;
  double ii = 0.0;       // II(grad z, grad z)
  double trace_ii = 0.0; // (n-1) H
  double phi_eta = 0.0;
};

struct Sampled {
  std::vector<InteriorLocal> interior;
  std::vector<BoundaryLocal> boundary;
  int n = 2;
};

std::vector<double> radial_nodes(double hole, double outer, const QuadratureSpec& q,
                                 std::vector<double>& weights) {
  if (!(hole >= 0.0) || !(hole < outer)) throw DomainError("quadrature hole must lie in [0, r)");
  const GaussRule rule = composite_gauss(hole, outer, q.order, q.segments);
  weights = rule.w;
  return rule.x;
}

void check_quadrature(const QuadratureSpec& q) {
  if (q.order < 1 || q.segments < 1 || q.n_angle < 4) throw DomainError("invalid quadrature");
}

// ---- chart patches -------------------------------------------------------

struct ChartFields {
  Expr f, V, phi;
};

InteriorLocal chart_interior(const MetricField& m, const ChartFields& c, double K, double t,
                             double th) {
  const MetricPoint p = m.at(t, th);
  const Christoffel G = m.christoffels(t, th);
  const Jet2 f = c.f.jet({t, th}), V = c.V.jet({t, th}), ph = c.phi.jet({t, th});
  auto covariant_hessian = [&](const Jet2& j) {
    Mat2 h{};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        h[a][b] = j.hess(a, b) - G[0][a][b] * j.grad[0] - G[1][a][b] * j.grad[1];
    return h;
  };
  auto trace = [&](const Mat2& h) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) s += p.g_inv[a][b] * h[a][b];
    return s;
  };
  auto norm_sq = [&](const Mat2& h) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int d = 0; d < 2; ++d) s += p.g_inv[a][c2] * p.g_inv[b][d] * h[a][b] * h[c2][d];
    return s;
  };
  auto inner = [&](const Jet2& a, const Jet2& b) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += p.g_inv[i][j] * a.grad[i] * b.grad[j];
    return s;
  };
  std::array<double, 2> up{};  // grad f with raised index
  for (int a = 0; a < 2; ++a) up[a] = p.g_inv[a][0] * f.grad[0] + p.g_inv[a][1] * f.grad[1];
  auto on_grad = [&](const Mat2& h) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) s += h[a][b] * up[a] * up[b];
    return s;
  };

  const Mat2 Hf = covariant_hessian(f), HV = covariant_hessian(V), Hphi = covariant_hessian(ph);
  Mat2 T = Hf;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) T[a][b] += K * f.value * p.g[a][b];

  InteriorLocal L;
  L.V = V.value;
  L.f = f.value;
  L.grad_sq = inner(f, f);
  L.grad_f_phi = inner(f, ph);
  L.lap_f = trace(Hf);
  L.Lf = L.lap_f - L.grad_f_phi;
  L.LV = trace(HV) - inner(V, ph);
  L.hess_sq = norm_sq(Hf);
  L.hess_K_sq = norm_sq(T);
  L.hessV_ff = on_grad(HV);
  L.hessphi_ff = on_grad(Hphi);
  L.ric_ff = m.gauss_curvature(t, th) * L.grad_sq;
  L.w = p.sqrt_det * std::exp(-ph.value);
  return L;
}

BoundaryLocal chart_boundary(const MetricField& m, const ChartFields& c, double th) {
  const double r = m.outer();
  const MetricPoint p = m.at(r, th);
  const RimPoint rim = rim_point(m, th);
  const Jet2 f = c.f.jet({r, th}), V = c.V.jet({r, th}), ph = c.phi.jet({r, th});
  const double rho = rim.arclength;
  const double rho_th = p.dg[1][1][1] / (2.0 * rho);
  const double f_th = f.grad[1];

  BoundaryLocal B;
  B.V = V.value;
  B.V_eta = rim.eta[0] * V.grad[0] + rim.eta[1] * V.grad[1];
  B.u = rim.eta[0] * f.grad[0] + rim.eta[1] * f.grad[1];
  B.z = f.value;
  B.grad_bar_sq = f_th * f_th / (rho * rho);
  B.lap_bar_z = f.hess(1, 1) / (rho * rho) - f_th * rho_th / (rho * rho * rho);
  B.L_bar_z = B.lap_bar_z - ph.grad[1] * f_th / (rho * rho);
  B.ii = rim.kappa_g * B.grad_bar_sq;
  B.trace_ii = rim.kappa_g;
  B.phi_eta = rim.eta[0] * ph.grad[0] + rim.eta[1] * ph.grad[1];
  B.w = rho * std::exp(-ph.value);
  return B;
}

Sampled sample_chart(const MetricField& m, const FieldBundle& b, const QuadratureSpec& q) {
  ChartFields c{m.to_chart(b.f), m.to_chart(b.V), m.to_chart(b.phi)};
  Sampled s;
  s.n = 2;
  std::vector<double> wt;
  const std::vector<double> ts = radial_nodes(q.hole, m.outer(), q, wt);
  const double wth = kTwoPi / q.n_angle;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (int j = 0; j < q.n_angle; ++j) {
      InteriorLocal L = chart_interior(m, c, b.K, ts[i], wth * j);
      L.w *= wt[i] * wth;
      s.interior.push_back(L);
    }
  }
  for (int j = 0; j < q.n_angle; ++j) {
    BoundaryLocal B = chart_boundary(m, c, wth * j);
    B.w *= wth;
    s.boundary.push_back(B);
  }
  return s;
}

// ---- Euclidean balls -----------------------------------------------------

std::vector<std::string> cartesian_names(int n) {
  if (n == 2) return {"x", "y"};
  if (n == 3) return {"x", "y", "z"};
  throw DomainError("Euclidean balls are supported in dimension 2 and 3");
}

Expr on_cartesian(const Expr& e, int n) {
  try {
    return e.redeclare(cartesian_names(n));
  } catch (const DomainError&) {
    throw DomainError("field must be an expression in Cartesian coordinates: " + e.str());
  }
}

InteriorLocal ball_interior(int n, const Expr& fe, const Expr& Ve, const Expr& pe, double K,
                            std::span<const double> x) {
  const Jet2 f = fe.jet(x), V = Ve.jet(x), ph = pe.jet(x);
  auto dot = [n](const Jet2& a, const Jet2& b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a.grad[i] * b.grad[i];
    return s;
  };
  auto lap = [n](const Jet2& a) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a.hess(i, i);
    return s;
  };
  auto on_grad = [&](const Jet2& h) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += h.hess(i, j) * f.grad[i] * f.grad[j];
    return s;
  };
  InteriorLocal L;
  L.V = V.value;
  L.f = f.value;
  L.grad_sq = dot(f, f);
  L.grad_f_phi = dot(f, ph);
  L.lap_f = lap(f);
  L.Lf = L.lap_f - L.grad_f_phi;
  L.LV = lap(V) - dot(V, ph);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double h = f.hess(i, j);
      const double t = h + (i == j ? K * f.value : 0.0);
      L.hess_sq += h * h;
      L.hess_K_sq += t * t;
    }
  }
  L.hessV_ff = on_grad(V);
  L.hessphi_ff = on_grad(ph);
  L.ric_ff = 0.0;
  L.w = std::exp(-ph.value);
  return L;
}

BoundaryLocal ball_boundary(int n, double R, const Expr& fe, const Expr& Ve, const Expr& pe,
                            std::span<const double> x) {
  const Jet2 f = fe.jet(x), V = Ve.jet(x), ph = pe.jet(x);
  std::array<double, 3> eta{};
  for (int i = 0; i < n; ++i) eta[i] = x[i] / R;
  auto normal = [&](const Jet2& a) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a.grad[i] * eta[i];
    return s;
  };
  double grad_sq = 0.0, grad_f_phi = 0.0, lap = 0.0, f_nn = 0.0;
  for (int i = 0; i < n; ++i) {
    grad_sq += f.grad[i] * f.grad[i];
    grad_f_phi += f.grad[i] * ph.grad[i];
    lap += f.hess(i, i);
    for (int j = 0; j < n; ++j) f_nn += eta[i] * f.hess(i, j) * eta[j];
  }
  BoundaryLocal B;
  B.V = V.value;
  B.V_eta = normal(V);
  B.u = normal(f);
  B.z = f.value;
  B.phi_eta = normal(ph);
  B.trace_ii = (n - 1) / R;
  B.grad_bar_sq = grad_sq - B.u * B.u;
  B.lap_bar_z = lap - f_nn - B.trace_ii * B.u;
  B.L_bar_z = B.lap_bar_z - (grad_f_phi - B.phi_eta * B.u);
  B.ii = B.grad_bar_sq / R;
  B.w = std::exp(-ph.value);
  return B;
}

Sampled sample_ball(const EuclideanBall& ball, const FieldBundle& b, const QuadratureSpec& q) {
  const int n = ball.n;
  const double R = ball.radius;
  if (!(R > 0.0)) throw DomainError("ball radius must be positive");
  const Expr fe = on_cartesian(b.f, n), Ve = on_cartesian(b.V, n), pe = on_cartesian(b.phi, n);
  Sampled s;
  s.n = n;
  std::vector<double> wr;
  const std::vector<double> rs = radial_nodes(q.hole, R, q, wr);
  const double wa = kTwoPi / q.n_angle;
  if (n == 2) {
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (int j = 0; j < q.n_angle; ++j) {
        const double th = wa * j;
        const double x[2] = {rs[i] * std::cos(th), rs[i] * std::sin(th)};
        InteriorLocal L = ball_interior(2, fe, Ve, pe, b.K, x);
        L.w *= wr[i] * rs[i] * wa;
        s.interior.push_back(L);
      }
    }
    for (int j = 0; j < q.n_angle; ++j) {
      const double th = wa * j;
      const double x[2] = {R * std::cos(th), R * std::sin(th)};
      BoundaryLocal B = ball_boundary(2, R, fe, Ve, pe, x);
      B.w *= R * wa;
      s.boundary.push_back(B);
    }
    return s;
  }
  // n = 3: Gauss in cos(polar angle), trapezoid in azimuth
  const GaussRule mu = composite_gauss(-1.0, 1.0, q.order, q.segments);
  auto point = [](double rad, double c, double az) {
    const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
    return std::array<double, 3>{rad * sn * std::cos(az), rad * sn * std::sin(az), rad * c};
  };
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t k = 0; k < mu.x.size(); ++k) {
      for (int j = 0; j < q.n_angle; ++j) {
        const auto x = point(rs[i], mu.x[k], wa * j);
        InteriorLocal L = ball_interior(3, fe, Ve, pe, b.K, x);
        L.w *= wr[i] * rs[i] * rs[i] * mu.w[k] * wa;
        s.interior.push_back(L);
      }
    }
  }
  for (std::size_t k = 0; k < mu.x.size(); ++k) {
    for (int j = 0; j < q.n_angle; ++j) {
      const auto x = point(R, mu.x[k], wa * j);
      BoundaryLocal B = ball_boundary(3, R, fe, Ve, pe, x);
      B.w *= R * R * mu.w[k] * wa;
      s.boundary.push_back(B);
    }
  }
  return s;
}

Sampled sample(const FieldBundle& b, const QuadratureSpec& q) {
  check_quadrature(q);
  if (const auto* m = std::get_if<MetricField>(&b.domain)) return sample_chart(*m, b, q);
  return sample_ball(std::get<EuclideanBall>(b.domain), b, q);
}

// ---- term ledgers --------------------------------------------------------

struct Ledger {
  ReillyReport report;
  void interior(const std::string& name, const std::string& side, const Sampled& s,
                double (*fn)(const InteriorLocal&, double, int), double K) {
    CompensatedSum sum;
    for (const InteriorLocal& L : s.interior) sum += L.w * fn(L, K, s.n);
    report.terms.push_back({name, side, sum.value()});
  }
  void boundary(const std::string& name, const std::string& side, const Sampled& s,
                double (*fn)(const BoundaryLocal&, double, int), double K) {
    CompensatedSum sum;
    for (const BoundaryLocal& B : s.boundary) sum += B.w * fn(B, K, s.n);
    report.terms.push_back({name, side, sum.value()});
  }
};

void recompose(ReillyReport& r) {
  CompensatedSum lhs, rhs;
  for (const IdentityTerm& t : r.terms) (t.side == "lhs" ? lhs : rhs) += t.value;
  r.lhs = lhs.value();
  r.rhs = rhs.value();
  r.residual = std::fabs(r.lhs - r.rhs) / (1.0 + std::fabs(r.lhs) + std::fabs(r.rhs));
}

ReillyReport finish(Ledger& led, const std::string& formula, const Sampled& s,
                    const QuadratureSpec& q) {
  ReillyReport& r = led.report;
  r.formula = formula;
  r.quadrature = q;
  r.interior_nodes = s.interior.size();
  r.boundary_nodes = s.boundary.size();
  recompose(r);
  return r;
}

// Terms shared by the general and Qiu-Xia forms.
void weighted_terms(Ledger& led, const Sampled& s, double K, bool with_phi_coupling) {
  led.interior("V(Lf+Knf)^2", "lhs", s,
               [](const InteriorLocal& L, double k, int n) {
                 const double a = L.Lf + k * n * L.f;
                 return L.V * a * a;
               }, K);
  led.interior("-V|Hess f+Kfg|^2", "lhs", s,
               [](const InteriorLocal& L, double, int) { return -L.V * L.hess_K_sq; }, K);
  if (with_phi_coupling) {
    led.interior("2VKf<grad f,grad phi>", "lhs", s,
                 [](const InteriorLocal& L, double k, int) {
                   return 2.0 * L.V * k * L.f * L.grad_f_phi;
                 }, K);
  }
  led.boundary("2VuLbar z", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return 2.0 * B.V * B.u * B.L_bar_z; }, K);
  led.boundary("V(n-1)H^phi u^2", "rhs", s,
               [](const BoundaryLocal& B, double, int) {
                 return B.V * (B.trace_ii - B.phi_eta) * B.u * B.u;
               }, K);
  led.boundary("V II(grad z,grad z)", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return B.V * B.ii; }, K);
  led.boundary("V(2n-2)Kuz", "rhs", s,
               [](const BoundaryLocal& B, double k, int n) {
                 return B.V * (2.0 * n - 2.0) * k * B.u * B.z;
               }, K);
  led.boundary("V_eta(|grad z|^2-(n-1)Kz^2)", "rhs", s,
               [](const BoundaryLocal& B, double k, int n) {
                 return B.V_eta * (B.grad_bar_sq - (n - 1.0) * k * B.z * B.z);
               }, K);
  led.interior("(n-1)(KLV+nK^2V)f^2", "rhs", s,
               [](const InteriorLocal& L, double k, int n) {
                 return (n - 1.0) * (k * L.LV + n * k * k * L.V) * L.f * L.f;
               }, K);
  led.interior("(Hess V-LVg-(2n-2)KVg)(grad f,grad f)", "rhs", s,
               [](const InteriorLocal& L, double k, int n) {
                 return L.hessV_ff - L.LV * L.grad_sq - (2.0 * n - 2.0) * k * L.V * L.grad_sq;
               }, K);
  led.interior("V Ric^phi(grad f,grad f)", "rhs", s,
               [](const InteriorLocal& L, double, int) {
                 return L.V * (L.ric_ff + L.hessphi_ff);
               }, K);
}

}  // namespace

int FieldBundle::dimension() const {
  if (const auto* ball = std::get_if<EuclideanBall>(&domain)) return ball->n;
  return 2;
}

double ReillyReport::term(const std::string& name) const {
  for (const IdentityTerm& t : terms)
    if (t.name == name) return t.value;
  throw DomainError("no term named " + name + " in the " + formula + " ledger");
}

ReillyReport ReillyReport::with_flipped(const std::string& name) const {
  ReillyReport r = *this;
  bool found = false;
  for (IdentityTerm& t : r.terms) {
    if (t.name == name) {
      t.value = -t.value;
      found = true;
    }
  }
  if (!found) throw DomainError("no term named " + name + " in the " + formula + " ledger");
  recompose(r);
  return r;
}

ReillyReport reilly_general_residual(const FieldBundle& b, const QuadratureSpec& q) {
  const Sampled s = sample(b, q);
  Ledger led;
  weighted_terms(led, s, b.K, true);
  return finish(led, "general", s, q);
}

ReillyReport qiu_xia_residual(const FieldBundle& b, const QuadratureSpec& q) {
  if (!is_constant_value(b.phi, 0.0)) throw PreconditionError("Qiu-Xia form needs phi = 0");
  const Sampled s = sample(b, q);
  Ledger led;
  weighted_terms(led, s, b.K, false);
  return finish(led, "qiu-xia", s, q);
}

ReillyReport ma_du_residual(const FieldBundle& b, const QuadratureSpec& q) {
  if (!is_constant_value(b.V, 1.0) || b.K != 0.0) {
    throw PreconditionError("Ma-Du form needs V = 1 and K = 0");
  }
  const Sampled s = sample(b, q);
  Ledger led;
  led.interior("(Lf)^2", "lhs", s,
               [](const InteriorLocal& L, double, int) { return L.Lf * L.Lf; }, 0.0);
  led.interior("-|Hess f|^2", "lhs", s,
               [](const InteriorLocal& L, double, int) { return -L.hess_sq; }, 0.0);
  led.interior("-Ric^phi(grad f,grad f)", "lhs", s,
               [](const InteriorLocal& L, double, int) { return -(L.ric_ff + L.hessphi_ff); },
               0.0);
  led.boundary("(n-1)H^phi u^2", "rhs", s,
               [](const BoundaryLocal& B, double, int) {
                 return (B.trace_ii - B.phi_eta) * B.u * B.u;
               }, 0.0);
  led.boundary("2uLbar z", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return 2.0 * B.u * B.L_bar_z; }, 0.0);
  led.boundary("II(grad z,grad z)", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return B.ii; }, 0.0);
  return finish(led, "ma-du", s, q);
}

ReillyReport reilly_classical_residual(const FieldBundle& b, const QuadratureSpec& q) {
  if (!is_constant_value(b.V, 1.0) || b.K != 0.0 || !is_constant_value(b.phi, 0.0)) {
    throw PreconditionError("classical form needs V = 1, K = 0 and phi = 0");
  }
  const Sampled s = sample(b, q);
  Ledger led;
  led.interior("(Delta f)^2", "lhs", s,
               [](const InteriorLocal& L, double, int) { return L.lap_f * L.lap_f; }, 0.0);
  led.interior("-|Hess f|^2", "lhs", s,
               [](const InteriorLocal& L, double, int) { return -L.hess_sq; }, 0.0);
  led.interior("-Ric(grad f,grad f)", "lhs", s,
               [](const InteriorLocal& L, double, int) { return -L.ric_ff; }, 0.0);
  led.boundary("(n-1)Hu^2", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return B.trace_ii * B.u * B.u; }, 0.0);
  led.boundary("2uDeltabar z", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return 2.0 * B.u * B.lap_bar_z; }, 0.0);
  led.boundary("II(grad z,grad z)", "rhs", s,
               [](const BoundaryLocal& B, double, int) { return B.ii; }, 0.0);
  return finish(led, "classical", s, q);
}

double degeneration_gap(const ReillyReport& special, const ReillyReport& general) {
  double lhs = general.lhs, rhs = general.rhs;
  if (special.formula == "classical" || special.formula == "ma-du") {
    // these keep the curvature term on the left
    const double ric = general.term("V Ric^phi(grad f,grad f)");
    lhs -= ric;
    rhs -= ric;
  }
  const double a = std::fabs(special.lhs - lhs) / (1.0 + std::fabs(lhs));
  const double b = std::fabs(special.rhs - rhs) / (1.0 + std::fabs(rhs));
  return std::max(a, b);
}

void write_term_csv(std::ostream& out, const std::vector<ReillyReport>& reports) {
  out << "formula,side,term,value,abs_value\n";
  char buf[256];
  for (const ReillyReport& r : reports) {
    for (const IdentityTerm& t : r.terms) {
      std::snprintf(buf, sizeof buf, "%s,%s,\"%s\",%.17g,%.17g\n", r.formula.c_str(),
                    t.side.c_str(), t.name.c_str(), t.value, std::fabs(t.value));
      out << buf;
    }
  }
}

// ---- Pohozaev ------------------------------------------------------------

namespace {

// Chart components F^a and the mixed covariant derivative (grad F)^a_b.
struct FrameValue {
  std::array<double, 2> F{};
  Mat2 DF{};  // DF[a][b] = nabla_b F^a
};

class VectorField {
 public:
  VectorField(const MetricField& m, const VectorFieldSpec& spec) : m_(m), spec_(spec) {
    if (spec.cartesian) {
      const bool flat = m.kind() == MetricKind::kPullback || m.shape().str() == "t";
      if (!flat) throw DomainError("Cartesian vector fields need a flat patch");
      a_ = spec.a.redeclare(cartesian_variables());
      b_ = spec.b.redeclare(cartesian_variables());
    } else {
      a_ = m.to_chart(spec.a);
      b_ = m.to_chart(spec.b);
    }
  }

  FrameValue at(double t, double th) const {
    FrameValue out;
    if (!spec_.cartesian) {
      const Jet2 fa = a_.jet({t, th}), fb = b_.jet({t, th});
      const Christoffel G = m_.christoffels(t, th);
      out.F = {fa.value, fb.value};
      for (int a = 0; a < 2; ++a) {
        const Jet2& comp = a == 0 ? fa : fb;
        for (int b = 0; b < 2; ++b) {
          out.DF[a][b] = comp.grad[b] + G[a][b][0] * out.F[0] + G[a][b][1] * out.F[1];
        }
      }
      return out;
    }
    // flat: convert the Cartesian field and its Jacobian through the chart
    const auto x = m_.position(t, th);
    const auto J = m_.jacobian(t, th);
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const Mat2 Jinv{{{J[1][1] / det, -J[0][1] / det}, {-J[1][0] / det, J[0][0] / det}}};
    const Jet2 fa = a_.jet({x[0], x[1]}), fb = b_.jet({x[0], x[1]});
    const double Fc[2] = {fa.value, fb.value};
    const double D[2][2] = {{fa.grad[0], fa.grad[1]}, {fb.grad[0], fb.grad[1]}};
    for (int a = 0; a < 2; ++a) out.F[a] = Jinv[a][0] * Fc[0] + Jinv[a][1] * Fc[1];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) s += Jinv[a][i] * D[i][j] * J[j][b];
        out.DF[a][b] = s;
      }
    }
    return out;
  }

 private:
  const MetricField& m_;
  VectorFieldSpec spec_;
  Expr a_, b_;
};

// Interior integrand g(grad_{grad u} F, grad u) - 1/2 |grad u|^2 div_phi F,
// without the measure.
double pohozaev_interior(const MetricPoint& p, const std::array<double, 2>& du,
                         const std::array<double, 2>& dphi, const FrameValue& F) {
  std::array<double, 2> up{};
  for (int a = 0; a < 2; ++a) up[a] = p.g_inv[a][0] * du[0] + p.g_inv[a][1] * du[1];
  const double grad_sq = up[0] * du[0] + up[1] * du[1];
  double nabla = 0.0;  // g_ad (DF)^a_b up^b up^d = du_a (DF)^a_b up^b
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) nabla += du[a] * F.DF[a][b] * up[b];
  const double div = F.DF[0][0] + F.DF[1][1] - (dphi[0] * F.F[0] + dphi[1] * F.F[1]);
  return nabla - 0.5 * grad_sq * div;
}

// Boundary integrand u_eta g(F, grad u) - 1/2 |grad u|^2 g(F, eta).
double pohozaev_boundary(const MetricPoint& p, const RimPoint& rim,
                         const std::array<double, 2>& du, const FrameValue& F) {
  std::array<double, 2> up{};
  for (int a = 0; a < 2; ++a) up[a] = p.g_inv[a][0] * du[0] + p.g_inv[a][1] * du[1];
  const double grad_sq = up[0] * du[0] + up[1] * du[1];
  const double u_eta = rim.eta[0] * du[0] + rim.eta[1] * du[1];
  const double F_grad = F.F[0] * du[0] + F.F[1] * du[1];
  double F_eta = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) F_eta += p.g[a][b] * F.F[a] * rim.eta[b];
  return u_eta * F_grad - 0.5 * grad_sq * F_eta;
}

void finish(PohozaevReport& r) {
  r.residual = std::fabs(r.boundary - r.interior) /
               (1.0 + std::fabs(r.boundary) + std::fabs(r.interior));
}

}  // namespace

PohozaevReport pohozaev_residual(const MetricField& m, const Expr& phi, const Expr& u,
                                 const VectorFieldSpec& Fspec, const QuadratureSpec& q) {
  check_quadrature(q);
  const Expr uc = m.to_chart(u), pc = m.to_chart(phi);
  const VectorField F(m, Fspec);
  PohozaevReport rep;
  rep.source = "analytic";
  std::vector<double> wt;
  const std::vector<double> ts = radial_nodes(q.hole, m.outer(), q, wt);
  const double wth = kTwoPi / q.n_angle;
  CompensatedSum interior, boundary;
  double defect = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (int j = 0; j < q.n_angle; ++j) {
      const double t = ts[i], th = wth * j;
      const MetricPoint p = m.at(t, th);
      const Christoffel G = m.christoffels(t, th);
      const Jet2 ju = uc.jet({t, th}), jp = pc.jet({t, th});
      double Lu = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double h = ju.hess(a, b) - G[0][a][b] * ju.grad[0] - G[1][a][b] * ju.grad[1];
          Lu += p.g_inv[a][b] * (h - jp.grad[a] * ju.grad[b]);
          scale = std::max(scale, std::fabs(ju.hess(a, b)));
        }
      }
      defect = std::max(defect, std::fabs(Lu));
      const double w = wt[i] * wth * p.sqrt_det * std::exp(-jp.value);
      interior += w * pohozaev_interior(p, {ju.grad[0], ju.grad[1]}, {jp.grad[0], jp.grad[1]},
                                        F.at(t, th));
    }
  }
  rep.harmonic_defect = defect;
  if (defect > 1e-8 * (1.0 + scale)) {
    std::ostringstream msg;
    msg << "u is not L-harmonic: max |L u| = " << defect << " at the quadrature nodes";
    throw PreconditionError(msg.str());
  }
  for (int j = 0; j < q.n_angle; ++j) {
    const double th = wth * j;
    const MetricPoint p = m.at(m.outer(), th);
    const RimPoint rim = rim_point(m, th);
    const Jet2 ju = uc.jet({m.outer(), th});
    const double w = wth * rim.arclength * std::exp(-pc({m.outer(), th}));
    boundary += w * pohozaev_boundary(p, rim, {ju.grad[0], ju.grad[1]}, F.at(m.outer(), th));
  }
  rep.interior = interior.value();
  rep.boundary = boundary.value();
  finish(rep);
  return rep;
}

PohozaevReport pohozaev_residual(const MetricField& m, const Expr& phi, const Grid2D& grid,
                                 const Eigen::VectorXd& u, const VectorFieldSpec& Fspec,
                                 int quad_order) {
  if (u.size() != static_cast<Eigen::Index>(grid.num_nodes())) {
    throw DomainError("nodal field size does not match the grid");
  }
  if (grid.n_t < 2) throw DomainError("Pohozaev check needs at least two radial elements");
  const Expr pc = m.to_chart(phi);
  const VectorField F(m, Fspec);
  PohozaevReport rep;
  rep.source = "fem " + grid.describe();

  // discrete harmonicity: interior rows of K u
  {
    const SymSparse K = assemble_stiffness(m, phi, grid, quad_order);
    const Eigen::VectorXd r = K * u;
    const std::size_t interior_end = grid.n_t * grid.n_theta;
    double num = 0.0;
    for (std::size_t k = 0; k < interior_end; ++k) num = std::max(num, std::fabs(r(k)));
    double kmax = 0.0;
    for (Eigen::Index c = 0; c < K.outerSize(); ++c)
      for (SymSparse::InnerIterator it(K, c); it; ++it) kmax = std::max(kmax, std::fabs(it.value()));
    rep.harmonic_defect = num / (kmax * u.cwiseAbs().maxCoeff() + 1e-300);
    if (rep.harmonic_defect > 1e-8) {
      std::ostringstream msg;
      msg << "nodal field is not discretely L-harmonic (relative defect "
          << rep.harmonic_defect << ")";
      throw PreconditionError(msg.str());
    }
  }

  const GaussRule rule = gauss_legendre(quad_order);
  const double ht = grid.dt(), hth = grid.dtheta();
  CompensatedSum interior, boundary;
  auto U = [&](std::size_t i, std::size_t j) { return u(static_cast<Eigen::Index>(grid.node(i, j))); };
  for (std::size_t i = 0; i < grid.n_t; ++i) {
    for (std::size_t j = 0; j < grid.n_theta; ++j) {
      const double u0 = U(i, j), u1 = U(i + 1, j), u2 = U(i + 1, j + 1), u3 = U(i, j + 1);
      for (std::size_t a = 0; a < rule.x.size(); ++a) {
        for (std::size_t b = 0; b < rule.x.size(); ++b) {
          const double xi = 0.5 * (rule.x[a] + 1.0), ze = 0.5 * (rule.x[b] + 1.0);
          const double t = grid.t(i) + xi * ht, th = grid.theta(j) + ze * hth;
          const std::array<double, 2> du{((1 - ze) * (u1 - u0) + ze * (u2 - u3)) / ht,
                                         ((1 - xi) * (u3 - u0) + xi * (u2 - u1)) / hth};
          const MetricPoint p = m.at(t, th);
          const Jet2 jp = pc.jet({t, th});
          const double w = 0.25 * rule.w[a] * rule.w[b] * ht * hth * p.sqrt_det *
                           std::exp(-jp.value);
          interior += w * pohozaev_interior(p, du, {jp.grad[0], jp.grad[1]}, F.at(t, th));
        }
      }
    }
  }
  // rim gradients from second-order nodal differences
  const std::size_t N = grid.n_t;
  for (std::size_t j = 0; j < grid.n_theta; ++j) {
    const double th = grid.theta(j);
    const std::array<double, 2> du{
        (3.0 * U(N, j) - 4.0 * U(N - 1, j) + U(N - 2, j)) / (2.0 * ht),
        (U(N, j + 1) - U(N, j + grid.n_theta - 1)) / (2.0 * hth)};
    const MetricPoint p = m.at(grid.outer, th);
    const RimPoint rim = rim_point(m, th);
    const double w = hth * rim.arclength * std::exp(-pc({grid.outer, th}));
    boundary += w * pohozaev_boundary(p, rim, du, F.at(grid.outer, th));
  }
  rep.interior = interior.value();
  rep.boundary = boundary.value();
  finish(rep);
  return rep;
}

}  // namespace speclab
