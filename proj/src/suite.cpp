#include "speclab/suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "speclab/comparisons.hpp"
#include "speclab/error.hpp"
#include "speclab/fem.hpp"
#include "speclab/identities.hpp"
#include "speclab/radial.hpp"
#include "speclab/warp.hpp"

namespace speclab {

namespace {

constexpr double kPi = std::numbers::pi;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// |value - reference| <= tol
ReportRow close_row(std::string id, std::string quantity, double value, double reference,
                    double tol, std::string source) {
  ReportRow r{std::move(id), std::move(quantity), value, reference, true, std::move(source), tol,
              false};
  r.pass = std::fabs(value - reference) <= tol;
  return r;
}

// value <= tol
ReportRow below_row(std::string id, std::string quantity, double value, double tol,
                    std::string source) {
  ReportRow r{std::move(id), std::move(quantity), value, 0.0, false, std::move(source), tol, false};
  r.pass = value <= tol;
  return r;
}

// slack >= -tol
ReportRow slack_row(std::string id, std::string quantity, double slack, double tol,
                    std::string source) {
  ReportRow r{std::move(id), std::move(quantity), slack, 0.0, true, std::move(source), tol, false};
  r.pass = slack >= -tol;
  return r;
}

// value > threshold
ReportRow above_row(std::string id, std::string quantity, double value, double threshold,
                    std::string source) {
  ReportRow r{std::move(id), std::move(quantity), value, threshold, true, std::move(source), 0.0,
              false};
  r.pass = value > threshold;
  return r;
}

ReportRow note_row(std::string id, std::string quantity, double value) {
  return ReportRow{std::move(id), std::move(quantity), value, 0.0, false, "observation", 0.0, true};
}

bool all_pass(const std::vector<ReportRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

std::uint64_t criterion_seed(std::uint64_t seed, int id) {
  return seed * 1000003ull + static_cast<std::uint64_t>(id);
}

MetricField unit_disc_pullback() { return MetricField::pullback(Expr::parse("1", {"theta"})); }

Expr cart(const std::string& s) { return Expr::parse(s, cartesian_variables()); }

// ---- criteria --------------------------------------------------------------

void warping_closed_forms(CriterionResult& c) {
  double worst = 0.0;
  for (double k : {0.0, 1.0, -1.0}) {
    const WarpingSolution sol = solve_warping(CurvatureProfile::constant(k), 3.5);
    const double end = std::min(3.0, sol.l_pos);
    double err = 0.0;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
      const double t = sol.t[i];
      if (t >= end) break;
      const double exact = k == 0.0 ? t : (k > 0.0 ? std::sin(t) : std::sinh(t));
      err = std::max(err, std::fabs(sol.f[i] - exact));
    }
    worst = std::max(worst, err);
    const std::string id = "warp-k" + g17(k);
    c.rows.push_back(below_row(id, "max_node_error", err, 1e-8, "closed-form"));
    if (k == 1.0) c.rows.push_back(close_row(id, "l_pos", sol.l_pos, kPi, 1e-8, "closed-form"));
  }
  c.summary = "max node error " + g3(worst);
}

void disc_steklov(CriterionResult& c) {
  const MetricField disc = unit_disc_pullback();
  const Grid2D grid = Grid2D::polar(disc, 256, 256);
  const EigResult s = steklov_spectrum(disc, Expr(), grid, 6);
  const double expect[5] = {1, 1, 2, 2, 3};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double v = s.values(i + 1);
    worst = std::max(worst, std::fabs(v - expect[i]));
    c.rows.push_back(close_row("disc-steklov-" + grid.describe(), "p" + std::to_string(i + 1), v,
                               expect[i], 1e-3, "closed-form"));
  }
  c.summary = "max |p_i - (1,1,2,2,3)_i| = " + g3(worst) + " at " + grid.describe();
}

void wentzell_separation(CriterionResult& c) {
  const MetricField disc = unit_disc_pullback();
  const Grid2D grid = Grid2D::polar(disc, 128, 128);
  const BoundaryOperators ops = boundary_operators(disc, Expr(), grid);
  const std::vector<double> betas{0.0, 0.25, 0.5, 1.0};
  const WarpingSolution flat = solve_warping(CurvatureProfile::constant(0.0), 2.0);
  const ModelBallSpectrum model = model_wentzell_tau1(flat, 2, 1.0, betas);
  double worst = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double tau = wentzell_spectrum(ops, betas[i], 2).values(1);
    worst = std::max(worst, std::fabs(tau - (1.0 + betas[i])));
    const std::string id = "disc-wentzell-beta" + g17(betas[i]);
    c.rows.push_back(close_row(id, "tau1_fem", tau, 1.0 + betas[i], 2e-3, "closed-form"));
    c.rows.push_back(close_row(id, "tau1_model", model.tau1[i], 1.0 + betas[i], 1e-9,
                               "closed-form"));
  }
  c.summary = "max |tau1 - (1 + beta)| = " + g3(worst);
}

void fact1_battery(CriterionResult& c, std::uint64_t seed) {
  SeededUniform u(seed);
  double worst = INFINITY;
  for (int draw = 0; draw < 10; ++draw) {
    const std::string J = random_warp_perturbation(u);
    const MetricField m = MetricField::warped(J, 1.0);
    const BoundaryOperators ops = boundary_operators(m, Expr(), Grid2D::polar(m, 64, 64));
    const double lambda = closed_circle_spectrum(ops, 2).values(1);
    const double p1 = steklov_spectrum(ops, 2).values(1);
    for (double beta : {0.5, 1.0}) {
      const double tau = wentzell_spectrum(ops, beta, 2).values(1);
      const double slack = tau - (beta * lambda + p1);
      worst = std::min(worst, slack);
      c.rows.push_back(slack_row("fact1-draw" + std::to_string(draw) + "-beta" + g17(beta),
                                 "slack", slack, kSlackTol, "bound"));
    }
  }
  const MetricField disc = MetricField::warped("t", 1.0);
  const ComparisonVerdict eq = fact1_check(disc, 1.0, Grid2D::polar(disc, 64, 64));
  c.rows.push_back(below_row("fact1-disc-beta1", "abs_slack", std::fabs(eq.slack), 2e-3,
                             "closed-form"));
  c.summary = "min slack " + g3(worst) + " over 20 runs; disc |slack| " + g3(std::fabs(eq.slack));
}

void chain_battery(CriterionResult& c, std::uint64_t seed) {
  SeededUniform u(seed);
  auto record = [&](const std::string& id, const TestFunctionChain& ch) {
    for (std::size_t i = 0; i < ch.links.size(); ++i) {
      const ChainLink& l = ch.links[i];
      c.rows.push_back(slack_row(id, "link" + std::to_string(i + 1) + "_slack",
                                 l.upper - l.lower, l.allowance, "bound"));
    }
    c.rows.push_back(note_row(id, "rq", ch.rq));
    c.rows.push_back(note_row(id, "min_clamp_degenerate", ch.bundle.min_clamp_degenerate));
  };
  double worst = INFINITY;
  for (int draw = 0; draw < 5; ++draw) {
    const std::string J = random_admissible_warp(u);
    const double k = draw % 2 == 0 ? 0.0 : u.in(0.0, 0.4);
    const double beta = u.in(0.25, 1.0);
    const MetricField m = MetricField::warped(J, 1.0);
    const TestFunctionChain ch =
        test_function_rq(m, CurvatureProfile::constant(k), beta, Grid2D::polar(m, 64, 64));
    for (const ChainLink& l : ch.links) worst = std::min(worst, l.upper - l.lower + l.allowance);
    record("chain-draw" + std::to_string(draw), ch);
  }
  const MetricField disc = MetricField::warped("t", 1.0);
  const TestFunctionChain model =
      test_function_rq(disc, CurvatureProfile::constant(0.0), 1.0, Grid2D::polar(disc, 64, 64));
  record("chain-model", model);
  c.rows.push_back(below_row("chain-model", "abs_total_slack", std::fabs(model.total_slack), 2e-3,
                             "closed-form"));
  c.summary = "min link margin " + g3(worst) + "; model total slack " + g3(model.total_slack);
}

void reilly_battery(CriterionResult& c, std::uint64_t seed) {
  SeededUniform u(seed);
  double worst = 0.0;
  for (int draw = 0; draw < 25; ++draw) {
    FieldBundle b;
    b.f = cart(random_polynomial_xy(u, 3));
    b.V = cart(random_polynomial_xy(u, 3));
    b.phi = cart(random_convex_quadratic_xy(u));
    b.K = 0.3;
    const ReillyReport r = reilly_general_residual(b);
    worst = std::max(worst, r.residual);
    c.rows.push_back(below_row("reilly-draw" + std::to_string(draw), "residual", r.residual, 1e-8,
                               "identity"));
  }
  FieldBundle q;
  q.f = cart("x^2 - y^2");
  const ReillyReport general = reilly_general_residual(q);
  c.rows.push_back(close_row("reilly-disc-quadratic", "lhs", general.lhs, -8 * kPi, 1e-10,
                             "closed-form"));
  c.rows.push_back(close_row("reilly-disc-quadratic", "rhs", general.rhs, -8 * kPi, 1e-10,
                             "closed-form"));
  const ReillyReport classical = reilly_classical_residual(q);
  c.rows.push_back(below_row("reilly-disc-quadratic", "gap_classical",
                             degeneration_gap(classical, general), 1e-14, "identity"));
  c.rows.push_back(below_row("reilly-disc-quadratic", "gap_qiu_xia",
                             degeneration_gap(qiu_xia_residual(q), general), 1e-14, "identity"));
  c.rows.push_back(below_row("reilly-disc-quadratic", "gap_ma_du",
                             degeneration_gap(ma_du_residual(q), general), 1e-14, "identity"));

  FieldBundle pot;
  pot.f = cart("x^3 - 2*x*y + y^2");
  pot.V = cart("1 - (x^2 + y^2)/2");
  pot.K = 0.5;
  const ReillyReport qx = qiu_xia_residual(pot);
  c.rows.push_back(below_row("reilly-potential", "residual", qx.residual, 1e-8, "identity"));
  c.rows.push_back(below_row("reilly-potential", "gap_qiu_xia",
                             degeneration_gap(qx, reilly_general_residual(pot)), 1e-14,
                             "identity"));
  FieldBundle drift;
  drift.f = cart("x^2 - y^2");
  drift.phi = cart("x");
  const ReillyReport md = ma_du_residual(drift);
  c.rows.push_back(below_row("reilly-drift", "residual", md.residual, 1e-8, "identity"));
  c.rows.push_back(below_row("reilly-drift", "gap_ma_du",
                             degeneration_gap(md, reilly_general_residual(drift)), 1e-14,
                             "identity"));
  c.rows.push_back(above_row("reilly-disc-quadratic", "flipped_II_residual",
                             classical.with_flipped("II(grad z,grad z)").residual, 1e-2,
                             "identity"));
  c.summary = "max residual over 25 draws " + g3(worst) + "; -8pi case residual " +
              g3(general.residual);
}

void pohozaev_battery(CriterionResult& c) {
  const MetricField disc = unit_disc_pullback();
  const VectorFieldSpec position{cart("x"), cart("y"), true};
  const PohozaevReport a = pohozaev_residual(disc, Expr(), cart("x"), position);
  c.rows.push_back(below_row("pohozaev-analytic", "residual", a.residual, 1e-10, "identity"));
  const Expr phi = cart("x");
  double res[2] = {0, 0};
  int k = 0;
  for (std::size_t n : {256u, 512u}) {
    const Grid2D grid = Grid2D::polar(disc, n, n);
    Eigen::VectorXd rim(grid.n_theta);
    for (std::size_t j = 0; j < grid.n_theta; ++j) rim(j) = std::sin(grid.theta(j));
    const Eigen::VectorXd u = harmonic_extension(disc, phi, grid, rim);
    const PohozaevReport p = pohozaev_residual(disc, phi, grid, u, position);
    res[k++] = p.residual;
    c.rows.push_back(note_row("pohozaev-fem-" + grid.describe(), "boundary", p.boundary));
    c.rows.push_back(note_row("pohozaev-fem-" + grid.describe(), "interior", p.interior));
  }
  c.rows.push_back(below_row("pohozaev-fem-256x256", "residual", res[0], 5e-3, "refinement"));
  c.rows.push_back(below_row("pohozaev-fem-512x512", "residual_ratio", res[1] / res[0], 0.5,
                             "refinement"));
  c.summary = "analytic " + g3(a.residual) + "; fem " + g3(res[0]) + " -> " + g3(res[1]);
}

void lower_bound_battery(CriterionResult& c, std::uint64_t seed) {
  const MetricField disc = unit_disc_pullback();
  const Grid2D disc_grid = Grid2D::polar(disc, 128, 128);
  const ComparisonVerdict eq = steklov_lower_bound_check(disc, Expr(), 1.0, disc_grid, 2e-3);
  c.rows.push_back(close_row("sigma-disc", "sigma1", eq.lhs, 1.0, 2e-3, "closed-form"));

  SeededUniform u(seed);
  double worst = INFINITY;
  for (int draw = 0; draw < 5; ++draw) {
    const MetricField m = MetricField::pullback(Expr::parse(random_convex_rim(u), {"theta"}));
    const Expr phi = cart(random_convex_quadratic_xy(u));
    const Grid2D grid = Grid2D::polar(m, 128, 128);
    const BoundaryData bd = boundary_geometry(m, phi, grid.n_theta);
    const double cmin = *std::min_element(bd.kappa_g.begin(), bd.kappa_g.end());
    const ComparisonVerdict v = steklov_lower_bound_check(m, phi, cmin, grid, 1e-3);
    worst = std::min(worst, v.slack);
    c.rows.push_back(slack_row("sigma-convex-draw" + std::to_string(draw), "sigma1_minus_c",
                               v.slack, 1e-3, "bound"));
  }

  struct Half {
    const char* id;
    const char* phi;
    double c;
  };
  for (const Half& h : {Half{"half-disc-radial", "0.1*(x^2 + y^2)", 0.75},
                        Half{"half-disc-linear", "0.3*x", 0.65},
                        Half{"half-disc-unweighted", "0", 1.0 - 1e-6}}) {
    const ComparisonVerdict v = escobar_half_bound_check(disc, cart(h.phi), h.c, disc_grid);
    ReportRow r = slack_row(h.id, "sigma1_minus_half_c", v.slack, 0.0, "bound");
    r.pass = v.pass;
    c.rows.push_back(r);
  }
  const ComparisonVerdict lin = steklov_lower_bound_check(disc, cart("x - y"), 1.0, disc_grid, 2e-3);
  c.rows.push_back(slack_row("sigma-disc-linear-phi", "sigma1_minus_1", lin.slack, 2e-3, "bound"));
  c.summary = "disc sigma1 " + g17(eq.lhs).substr(0, 10) + "; min slack over convex draws " +
              g3(worst) + "; linear-weight disc sigma1 " + g17(lin.lhs).substr(0, 10);
}

struct Spec {
  int id;
  const char* title;
  double limit;
};

const Spec kSpecs[8] = {
    {1, "warping closed forms", 1.0},     {2, "disc Steklov spectrum", 60.0},
    {3, "Wentzell separation", 0.0},      {4, "tau1 >= beta lambda1 + p1", 0.0},
    {5, "trial-function chain", 0.0},     {6, "Reilly identities", 30.0},
    {7, "Pohozaev identity", 0.0},        {8, "Steklov lower bounds", 120.0},
};

CriterionResult run_one(int index, std::uint64_t seed) {
  CriterionResult c;
  c.id = kSpecs[index].id;
  c.title = kSpecs[index].title;
  c.time_limit = kSpecs[index].limit;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t s = criterion_seed(seed, c.id);
  try {
    switch (c.id) {
      case 1: warping_closed_forms(c); break;
      case 2: disc_steklov(c); break;
      case 3: wentzell_separation(c); break;
      case 4: fact1_battery(c, s); break;
      case 5: chain_battery(c, s); break;
      case 6: reilly_battery(c, s); break;
      case 7: pohozaev_battery(c); break;
      case 8: lower_bound_battery(c, s); break;
    }
    c.pass = all_pass(c.rows);
  } catch (const std::exception& e) {
    c.pass = false;
    c.summary = std::string("aborted: ") + e.what();
    c.rows.push_back(ReportRow{"criterion" + std::to_string(c.id), "aborted", 0.0, 0.0, false,
                               "error", 0.0, false});
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.time_limit > 0.0 && c.seconds > c.time_limit) {
    c.pass = false;
    c.summary += "; over the " + g3(c.time_limit) + " s budget";
  }
  if (!c.pass) {
    int failed = 0;
    for (const ReportRow& r : c.rows) failed += !r.pass;
    if (failed > 0) c.summary += "; " + std::to_string(failed) + " row(s) failed";
  }
  return c;
}

}  // namespace

SeededUniform::SeededUniform(std::uint64_t seed) : gen_(seed) {}

double SeededUniform::next() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

int SeededUniform::pick(int lo, int hi) {
  return lo + static_cast<int>(next() * (hi - lo + 1));
}

std::string random_polynomial_xy(SeededUniform& u, int degree) {
  std::string s = "0";
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; i + j <= degree; ++j) {
      s += " + (" + g17(u.in(-1.0, 1.0)) + ")*x^" + std::to_string(i) + "*y^" + std::to_string(j);
    }
  }
  return s;
}

std::string random_convex_quadratic_xy(SeededUniform& u) {
  const double a = u.in(0.1, 0.5), c = u.in(0.1, 0.5);
  const double b = 0.9 * std::sqrt(a * c) * u.in(-1.0, 1.0);
  return "(" + g17(a) + ")*x^2 + (" + g17(2.0 * b) + ")*x*y + (" + g17(c) + ")*y^2 + (" +
         g17(u.in(-0.3, 0.3)) + ")*x + (" + g17(u.in(-0.3, 0.3)) + ")*y";
}

std::string random_warp_perturbation(SeededUniform& u) {
  const double eps = u.in(-0.15, 0.15);
  const int m = u.pick(1, 3);
  const double s = u.in(0.0, 2.0 * kPi);
  return "t*(1 + (" + g17(eps) + ")*t^2*cos(" + std::to_string(m) + "*theta + " + g17(s) + "))";
}

std::string random_admissible_warp(SeededUniform& u) {
  const double eps = u.in(0.02, 0.1);
  const double a = u.in(-0.45, 0.45), b = u.in(-0.45, 0.45);
  const int m = u.pick(1, 3);
  const std::string mt = std::to_string(m) + "*theta";
  return "t + (" + g17(eps) + ")*t^3*(1 + (" + g17(a) + ")*cos(" + mt + ") + (" + g17(b) +
         ")*sin(" + mt + "))";
}

std::string random_convex_rim(SeededUniform& u) {
  const double d = u.in(0.02, 0.06);
  const int m = u.pick(2, 3);
  const double s = u.in(0.0, 2.0 * kPi);
  return "1 + (" + g17(d) + ")*cos(" + std::to_string(m) + "*theta + " + g17(s) + ")";
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, bool header) {
  if (header) out << "case_id,quantity,value,reference,reference_source,tol,pass\n";
  char num[3][40];
  for (const ReportRow& r : rows) {
    std::snprintf(num[0], sizeof num[0], "%.17g", r.value);
    if (r.has_reference) {
      std::snprintf(num[1], sizeof num[1], "%.17g", r.reference);
    } else {
      num[1][0] = '\0';
    }
    std::snprintf(num[2], sizeof num[2], "%.17g", r.tol);
    out << r.case_id << ',' << r.quantity << ',' << num[0] << ',' << num[1] << ','
        << r.reference_source << ',' << num[2] << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

std::vector<CriterionResult> run_criteria(const SuiteOptions& opt,
                                          const std::function<void(const CriterionResult&)>&
                                              on_done) {
  std::vector<CriterionResult> out(8);
  const int workers = std::clamp(opt.threads, 1, 8);
  if (workers == 1) {
    for (int i = 0; i < 8; ++i) {
      out[i] = run_one(i, opt.seed);
      if (on_done) on_done(out[i]);
    }
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < 8; i = next++) out[i] = run_one(i, opt.seed);
    });
  }
  for (std::thread& t : pool) t.join();
  if (on_done) {
    for (const CriterionResult& c : out) on_done(c);
  }
  return out;
}

std::string suite_csv(const std::vector<CriterionResult>& results) {
  std::ostringstream out;
  out << "criterion,case_id,quantity,value,reference,reference_source,tol,pass\n";
  for (const CriterionResult& c : results) {
    std::ostringstream rows;
    write_report_csv(rows, c.rows, false);
    std::istringstream lines(rows.str());
    for (std::string line; std::getline(lines, line);) out << c.id << ',' << line << '\n';
  }
  return out.str();
}

std::vector<CriterionResult> run_acceptance(const SuiteOptions& opt, std::string* csv,
                                            const std::function<void(const CriterionResult&)>&
                                                on_done) {
  std::vector<CriterionResult> first = run_criteria(opt, on_done);
  const std::string a = suite_csv(first);
  const auto start = std::chrono::steady_clock::now();
  const std::string b = suite_csv(run_criteria(opt));
  CriterionResult det;
  det.id = 9;
  det.title = "determinism";
  det.pass = a == b;
  det.summary = det.pass ? "two runs, " + std::to_string(a.size()) + " identical CSV bytes"
                         : "CSV output differs between runs";
  det.rows.push_back(ReportRow{"suite-rerun", "csv_bytes_equal", det.pass ? 1.0 : 0.0, 1.0, true,
                               "identity", 0.0, det.pass});
  det.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (on_done) on_done(det);
  first.push_back(det);
  if (csv) *csv = a;
  return first;
}

std::string format_line(const CriterionResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "[%s] %d  %s: %s (%.2f s)", r.pass ? "PASS" : "FAIL", r.id,
                r.title.c_str(), r.summary.c_str(), r.seconds);
  return buf;
}

}  // namespace speclab
