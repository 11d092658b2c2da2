#include "speclab/runner.hpp"

#include <algorithm>
#include <atomic>
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

const std::vector<std::string> kCommands{"warp",    "model-spectrum", "compare",      "fact1",
                                         "reilly",  "pohozaev",       "steklov-bound"};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ReportRow row(const std::string& id, const std::string& q, double v) {
  return ReportRow{id, q, v, 0.0, false, "", 0.0, true};
}

ReportRow ref_row(const std::string& id, const std::string& q, double v, double ref, double tol,
                  const std::string& source) {
  ReportRow r{id, q, v, ref, true, source, tol, false};
  r.pass = std::fabs(v - ref) <= tol;
  return r;
}

ReportRow max_row(const std::string& id, const std::string& q, double v, double tol,
                  const std::string& source) {
  ReportRow r{id, q, v, 0.0, false, source, tol, false};
  r.pass = v <= tol;
  return r;
}

ReportRow slack_row(const std::string& id, const std::string& q, double slack, double tol,
                    bool pass) {
  return ReportRow{id, q, slack, 0.0, true, "bound", tol, pass};
}

// ---- config resolution -----------------------------------------------------

struct Prepared {
  const RunConfig* cfg = nullptr;
  std::string command;
  std::string preset;
  std::uint64_t seed = 42;
  std::optional<double> tol;

  // geometry
  std::optional<MetricField> metric;
  std::optional<EuclideanBall> ball;
  std::optional<CurvatureProfile> k;
  double k_constant = NAN;  // when k is a number
  double r = 1.0;
  bool disc = false;        // flat disc of radius r, for closed-form references

  // fields
  Expr f, V = Expr::constant(1.0), phi, u, Fx, Fy;
  std::optional<Expr> rim;

  std::size_t n_t = 64, n_theta = 64;
  double t0 = 1e-3;
};

Expr parse_on(const RunConfig& cfg, const std::string& key, const std::vector<std::string>& vars) {
  try {
    return Expr::parse(cfg.text(key), vars);
  } catch (const ParseError& e) {
    throw ConfigError("key '" + key + "': " + e.what(), cfg.line(key));
  }
}

// Cartesian first, then chart; keep the error that got further.
Expr parse_field(const RunConfig& cfg, const std::string& key, const Prepared& p) {
  if (p.ball) {
    const std::vector<std::string> vars =
        p.ball->n == 3 ? std::vector<std::string>{"x", "y", "z"} : cartesian_variables();
    return parse_on(cfg, key, vars);
  }
  try {
    return Expr::parse(cfg.text(key), cartesian_variables());
  } catch (const ParseError& cart) {
    try {
      return Expr::parse(cfg.text(key), chart_variables());
    } catch (const ParseError& chart) {
      const ParseError& e = chart.offset() > cart.offset() ? chart : cart;
      throw ConfigError("key '" + key + "': " + e.what(), cfg.line(key));
    }
  }
}

CurvatureProfile parse_profile(const RunConfig& cfg, double& constant) {
  const std::string& s = cfg.text("k");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (!s.empty() && end == s.c_str() + s.size()) {
    constant = v;
    return CurvatureProfile::constant(v);
  }
  return CurvatureProfile::expression(parse_on(cfg, "k", {"t"}));
}

Prepared prepare(const RunConfig& cfg, const RunOptions& opt) {
  Prepared p;
  p.cfg = &cfg;
  p.command = cfg.text("command");
  if (std::find(kCommands.begin(), kCommands.end(), p.command) == kCommands.end()) {
    throw ConfigError("unknown command '" + p.command + "'", cfg.line("command"));
  }
  const double seed = cfg.number_or("seed", 42.0);
  if (seed < 0 || seed != std::floor(seed)) {
    throw ConfigError("'seed' must be a nonnegative integer", cfg.line("seed"));
  }
  p.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed);
  if (opt.tol) p.tol = *opt.tol;
  else if (cfg.has("tol")) p.tol = cfg.number("tol");

  p.preset = cfg.text_or("preset", "");
  const std::vector<std::string> presets{"", "disc", "disc-quadratic", "ball3", "cap"};
  if (std::find(presets.begin(), presets.end(), p.preset) == presets.end()) {
    throw ConfigError("unknown preset '" + p.preset + "'", cfg.line("preset"));
  }
  const int n = static_cast<int>(cfg.count_or("n", p.preset == "ball3" ? 3 : 2, 2));
  p.r = cfg.number_or("r", p.preset == "cap" ? kPi / 3 : 1.0);
  if (!(p.r > 0.0)) throw ConfigError("'r' must be positive", cfg.line("r"));

  if (cfg.has("k")) {
    p.k = parse_profile(cfg, p.k_constant);
  } else {
    p.k_constant = p.preset == "cap" ? 1.0 : 0.0;
    p.k = CurvatureProfile::constant(p.k_constant);
  }

  const int geometry_keys = cfg.has("J") + cfg.has("R") + !p.preset.empty();
  if (geometry_keys > 1) throw ConfigError("give at most one of preset, J and R");
  if (cfg.has("J")) {
    p.metric = MetricField::warped(parse_on(cfg, "J", chart_variables()), p.r);
  } else if (cfg.has("R")) {
    p.metric = MetricField::pullback(parse_on(cfg, "R", {"theta"}));
    p.r = p.metric->outer();
  } else if (p.preset == "ball3") {
    p.ball = EuclideanBall{3, p.r};
  } else if (p.preset == "cap") {
    p.metric = MetricField::warped("sin(t)", p.r);
  } else if (p.command != "warp" && p.command != "model-spectrum") {
    // flat disc, default geometry
    p.disc = true;
    p.metric = MetricField::warped("t", p.r);
    if (p.command == "reilly" && n == 3) {
      p.ball = EuclideanBall{3, p.r};
      p.metric.reset();
    } else if (p.command == "reilly") {
      p.ball = EuclideanBall{2, p.r};
    }
  }
  if (p.ball && n != p.ball->n && cfg.has("n")) {
    throw ConfigError("'n' does not match the domain dimension", cfg.line("n"));
  }

  // every expression parses before any computation
  if (p.preset == "disc-quadratic" && !cfg.has("f")) p.f = Expr::parse("x^2 - y^2", cartesian_variables());
  SeededUniform draws(p.seed);
  auto field = [&](const std::string& key, Expr& out, bool convex_random) {
    if (!cfg.has(key)) return;
    if (cfg.text(key) == "random") {
      if (!p.ball || p.ball->n != 2) {
        throw ConfigError("'random' fields need the 2-D disc", cfg.line(key));
      }
      out = Expr::parse(convex_random ? random_convex_quadratic_xy(draws)
                                      : random_polynomial_xy(draws, 3),
                        cartesian_variables());
      return;
    }
    out = parse_field(cfg, key, p);
  };
  field("f", p.f, false);
  field("V", p.V, false);
  field("phi", p.phi, true);
  field("u", p.u, false);
  field("Fx", p.Fx, false);
  field("Fy", p.Fy, false);
  if (cfg.has("rim")) p.rim = parse_on(cfg, "rim", {"theta"});

  p.n_t = cfg.count_or("n_t", 64, 16);
  p.n_theta = cfg.count_or("n_theta", p.n_t, 16);
  p.t0 = cfg.number_or("t0", 1e-3);
  if (!(p.t0 > 0.0 && p.t0 < 0.5)) throw ConfigError("'t0' must lie in (0, 0.5)", cfg.line("t0"));
  return p;
}

const MetricField& need_metric(const Prepared& p) {
  if (!p.metric) throw ConfigError("command '" + p.command + "' needs a 2-D patch (J, R or a preset)");
  return *p.metric;
}

Grid2D grid_of(const Prepared& p) {
  return Grid2D::polar(need_metric(p), p.n_t, p.n_theta, p.t0);
}

double beta_of(const Prepared& p, double fallback) {
  const double b = p.cfg->number_or("beta", fallback);
  if (b < 0.0) throw ConfigError("'beta' must be nonnegative", p.cfg->line("beta"));
  return b;
}

bool is_constant_value(const Expr& e, double c) {
  if (!e.is_constant()) return false;
  const std::vector<double> origin(e.dimension(), 0.0);
  return e(origin) == c;
}

// ---- commands --------------------------------------------------------------

void cmd_warp(const Prepared& p, RunOutcome& out) {
  const double t_max = p.cfg->number_or("t_max", 3.0);
  const WarpingSolution sol = solve_warping(*p.k, t_max);
  const double tol = p.tol.value_or(1e-8);
  if (!std::isnan(p.k_constant)) {
    const double k = p.k_constant;
    double err = 0.0;
    for (std::size_t i = 0; i < sol.t.size() && sol.t[i] < sol.reach(); ++i) {
      const double t = sol.t[i];
      const double exact = k == 0.0 ? t
                           : k > 0.0 ? std::sin(std::sqrt(k) * t) / std::sqrt(k)
                                     : std::sinh(std::sqrt(-k) * t) / std::sqrt(-k);
      err = std::max(err, std::fabs(sol.f[i] - exact));
    }
    out.rows.push_back(max_row("warp", "max_node_error", err, tol, "closed-form"));
    if (k > 0.0 && kPi / std::sqrt(k) <= t_max) {
      out.rows.push_back(ref_row("warp", "l_pos", sol.l_pos, kPi / std::sqrt(k), tol, "closed-form"));
    } else {
      out.rows.push_back(row("warp", "l_pos", sol.l_pos));
    }
  } else {
    out.rows.push_back(row("warp", "l_pos", sol.l_pos));
  }
  out.rows.push_back(row("warp", "nodes", static_cast<double>(sol.t.size())));
  std::ostringstream table;
  table << "t,f,f_prime\n";
  char buf[128];
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", sol.t[i], sol.f[i], sol.f_prime[i]);
    table << buf;
  }
  out.tables.emplace_back("profile", table.str());
}

void cmd_model_spectrum(const Prepared& p, RunOutcome& out) {
  const int n = static_cast<int>(p.cfg->count_or("n", 2, 2));
  const double beta = beta_of(p, 0.0);
  const double tol = p.tol.value_or(1e-8);
  const WarpingSolution sol = solve_warping(*p.k, std::max(2.0 * p.r, p.r + 1.0));
  const ModelBallSpectrum s = model_wentzell_tau1(sol, n, p.r, {beta});
  const ModelP1 mp = model_p1(sol, n, p.r, static_cast<int>(p.cfg->count_or("ell_max", 8, 1)));
  const std::string id = "model-n" + std::to_string(n);
  if (p.k_constant == 0.0) {
    const double p1 = 1.0 / p.r, lam = (n - 1) / (p.r * p.r);
    out.rows.push_back(ref_row(id, "p1", s.p1, p1, tol, "closed-form"));
    out.rows.push_back(ref_row(id, "lambda1_closed", s.lambda1_closed, lam, tol, "closed-form"));
    out.rows.push_back(ref_row(id, "tau1", s.tau1[0], p1 + beta * lam, tol, "closed-form"));
  } else {
    out.rows.push_back(row(id, "p1", s.p1));
    out.rows.push_back(row(id, "lambda1_closed", s.lambda1_closed));
    out.rows.push_back(row(id, "tau1", s.tau1[0]));
  }
  for (std::size_t i = 0; i < mp.p_by_ell.size(); ++i) {
    out.rows.push_back(row(id, "p_ell" + std::to_string(i + 1), mp.p_by_ell[i]));
  }
  out.rows.push_back(row(id, "minimizer_is_ell1", mp.minimizer_is_ell1 ? 1.0 : 0.0));
}

void cmd_fact1(const Prepared& p, RunOutcome& out) {
  const MetricField& m = need_metric(p);
  const double beta = beta_of(p, 1.0);
  const Grid2D grid = grid_of(p);
  const BoundaryOperators ops = boundary_operators(m, Expr(), grid);
  const double tau = wentzell_spectrum(ops, beta, 2).values(1);
  const double lam = closed_circle_spectrum(ops, 2).values(1);
  const double p1 = steklov_spectrum(ops, 2).values(1);
  const std::string id = "fact1-" + grid.describe();
  if (p.disc) {
    const double tol = p.tol.value_or(2e-3);
    out.rows.push_back(ref_row(id, "tau1", tau, 1.0 / p.r + beta / (p.r * p.r), tol, "closed-form"));
    out.rows.push_back(ref_row(id, "lambda1_closed", lam, 1.0 / (p.r * p.r), tol, "closed-form"));
    out.rows.push_back(ref_row(id, "p1", p1, 1.0 / p.r, tol, "closed-form"));
  } else {
    out.rows.push_back(row(id, "tau1", tau));
    out.rows.push_back(row(id, "lambda1_closed", lam));
    out.rows.push_back(row(id, "p1", p1));
  }
  const double slack = tau - (beta * lam + p1);
  out.rows.push_back(slack_row(id, "slack", slack, kSlackTol, slack >= -kSlackTol));
}

void cmd_compare(const Prepared& p, RunOutcome& out) {
  const MetricField& m = need_metric(p);
  const double beta = beta_of(p, 1.0);
  const Grid2D grid = grid_of(p);
  const ComparisonVerdict v = wentzell_comparison(m, *p.k, beta, grid);
  const std::string id = "compare-" + grid.describe();
  out.rows.push_back(row(id, "tau1_patch", v.lhs));
  out.rows.push_back(row(id, "tau1_model", v.rhs));
  out.rows.push_back(slack_row(id, "slack", v.slack, v.tol, v.pass));
  if (p.cfg->flag_or("chain", true)) {
    const TestFunctionChain ch = test_function_rq(m, *p.k, beta, grid);
    out.rows.push_back(row(id, "rq", ch.rq));
    out.rows.push_back(row(id, "bound", ch.bound));
    for (std::size_t i = 0; i < ch.links.size(); ++i) {
      const ChainLink& l = ch.links[i];
      out.rows.push_back(slack_row(id, "link" + std::to_string(i + 1) + "_slack",
                                   l.upper - l.lower, l.allowance, l.pass));
    }
    out.rows.push_back(row(id, "min_clamp_degenerate", ch.bundle.min_clamp_degenerate));
    if (ch.is_model) {
      out.rows.push_back(max_row(id, "abs_total_slack", std::fabs(ch.total_slack), 2e-3,
                                 "closed-form"));
    }
  }
}

// The preset's closed form holds only for its own data on the unit disc.
bool quadratic_reference_applies(const Prepared& p, const FieldBundle& b) {
  if (p.preset != "disc-quadratic" || p.r != 1.0 || !p.ball || p.ball->n != 2) return false;
  if (!is_constant_value(b.V, 1.0) || b.K != 0.0 || !is_constant_value(b.phi, 0.0)) return false;
  const Expr ref = Expr::parse("x^2 - y^2", cartesian_variables());
  const Expr f = b.f.redeclare(cartesian_variables());
  for (const auto& [x, y] : {std::pair{0.3, -0.7}, {0.9, 0.1}, {-0.45, 0.2}, {0.0, 0.0}}) {
    if (std::fabs(f({x, y}) - ref({x, y})) > 1e-14) return false;
  }
  return true;
}

void cmd_reilly(const Prepared& p, RunOutcome& out) {
  FieldBundle b;
  if (p.ball) b.domain = *p.ball;
  else b.domain = need_metric(p);
  b.f = p.f;
  b.V = p.V;
  b.phi = p.phi;
  b.K = p.cfg->number_or("K", 0.0);
  QuadratureSpec q;
  q.order = static_cast<int>(p.cfg->count_or("quad_order", 8, 1));
  q.segments = static_cast<int>(p.cfg->count_or("segments", 4, 1));
  q.n_angle = static_cast<int>(p.cfg->count_or("n_angle", 64, 4));
  q.hole = p.cfg->number_or("hole", 0.0);
  const std::string formula = p.cfg->text_or("formula", "general");
  const double tol = p.tol.value_or(p.preset == "disc-quadratic" ? 1e-10 : 1e-8);

  std::vector<ReillyReport> reports;
  auto add = [&](const std::string& which) {
    if (which == "general") reports.push_back(reilly_general_residual(b, q));
    else if (which == "classical") reports.push_back(reilly_classical_residual(b, q));
    else if (which == "qiu-xia") reports.push_back(qiu_xia_residual(b, q));
    else if (which == "ma-du") reports.push_back(ma_du_residual(b, q));
    else throw ConfigError("unknown formula '" + which + "'", p.cfg->line("formula"));
  };
  if (formula == "all") {
    add("general");
    const bool plain_v = is_constant_value(b.V, 1.0);
    const bool no_phi = is_constant_value(b.phi, 0.0);
    if (plain_v && b.K == 0.0 && no_phi) add("classical");
    if (no_phi) add("qiu-xia");
    if (plain_v && b.K == 0.0) add("ma-du");
  } else {
    add(formula);
  }
  for (const ReillyReport& r : reports) {
    const std::string id = "reilly-" + r.formula;
    if (quadratic_reference_applies(p, b)) {
      out.rows.push_back(ref_row(id, "lhs", r.lhs, -8 * kPi, 1e-10, "closed-form"));
      out.rows.push_back(ref_row(id, "rhs", r.rhs, -8 * kPi, 1e-10, "closed-form"));
    } else {
      out.rows.push_back(row(id, "lhs", r.lhs));
      out.rows.push_back(row(id, "rhs", r.rhs));
    }
    out.rows.push_back(max_row(id, "residual", r.residual, tol, "identity"));
    if (r.formula != "general") {
      out.rows.push_back(max_row(id, "degeneration_gap", degeneration_gap(r, reports.front()),
                                 1e-14, "identity"));
    }
  }
  std::ostringstream terms;
  write_term_csv(terms, reports);
  out.tables.emplace_back("terms", terms.str());
}

void cmd_pohozaev(const Prepared& p, RunOutcome& out) {
  const MetricField& m = need_metric(p);
  const std::string frame = p.cfg->text_or("frame", "cartesian");
  if (frame != "cartesian" && frame != "chart") {
    throw ConfigError("'frame' must be cartesian or chart", p.cfg->line("frame"));
  }
  VectorFieldSpec F{p.Fx, p.Fy, frame == "cartesian"};
  if (!p.cfg->has("Fx") && !p.cfg->has("Fy")) {
    F = VectorFieldSpec{Expr::parse("x", cartesian_variables()),
                        Expr::parse("y", cartesian_variables()), true};
  }
  PohozaevReport rep;
  if (p.rim) {
    if (p.cfg->has("u")) throw ConfigError("give either u or rim, not both", p.cfg->line("rim"));
    const Grid2D grid = grid_of(p);
    Eigen::VectorXd rim(grid.n_theta);
    for (std::size_t j = 0; j < grid.n_theta; ++j) rim(j) = (*p.rim)({grid.theta(j)});
    const Eigen::VectorXd u = harmonic_extension(m, p.phi, grid, rim);
    rep = pohozaev_residual(m, p.phi, grid, u, F);
  } else {
    if (!p.cfg->has("u")) throw ConfigError("pohozaev needs u or rim");
    QuadratureSpec q;
    q.order = static_cast<int>(p.cfg->count_or("quad_order", 8, 1));
    q.segments = static_cast<int>(p.cfg->count_or("segments", 4, 1));
    q.n_angle = static_cast<int>(p.cfg->count_or("n_angle", 64, 4));
    rep = pohozaev_residual(m, p.phi, p.u, F, q);
  }
  const std::string id = "pohozaev-" + (p.rim ? rep.source.substr(4) : std::string("analytic"));
  const double tol = p.tol.value_or(p.rim ? 5e-3 : 1e-10);
  out.rows.push_back(row(id, "boundary", rep.boundary));
  out.rows.push_back(row(id, "interior", rep.interior));
  out.rows.push_back(row(id, "harmonic_defect", rep.harmonic_defect));
  out.rows.push_back(max_row(id, "residual", rep.residual, tol, "identity"));
}

void cmd_steklov_bound(const Prepared& p, RunOutcome& out) {
  const MetricField& m = need_metric(p);
  const Grid2D grid = grid_of(p);
  double c = 0.0;
  if (p.cfg->text_or("c", "auto") == "auto") {
    const BoundaryData bd = boundary_geometry(m, p.phi, grid.n_theta);
    c = *std::min_element(bd.kappa_g.begin(), bd.kappa_g.end());
  } else {
    c = p.cfg->number("c");
  }
  const std::string bound = p.cfg->text_or("bound", "full");
  ComparisonVerdict v;
  if (bound == "full") {
    v = steklov_lower_bound_check(m, p.phi, c, grid, p.tol.value_or(1e-3));
  } else if (bound == "half") {
    v = escobar_half_bound_check(m, p.phi, c, grid, p.tol.value_or(1e-6));
  } else {
    throw ConfigError("'bound' must be full or half", p.cfg->line("bound"));
  }
  const std::string id = v.case_id + "-" + grid.describe();
  out.rows.push_back(row(id, "sigma1", v.lhs));
  out.rows.push_back(row(id, "c", c));
  out.rows.push_back(slack_row(id, "slack", v.slack, v.tol, v.pass));
}

RunOutcome run_single(const RunConfig& cfg, const RunOptions& opt) {
  RunOutcome out;
  try {
    const Prepared p = prepare(cfg, opt);
    out.command = p.command;
    if (p.command == "warp") cmd_warp(p, out);
    else if (p.command == "model-spectrum") cmd_model_spectrum(p, out);
    else if (p.command == "fact1") cmd_fact1(p, out);
    else if (p.command == "compare") cmd_compare(p, out);
    else if (p.command == "reilly") cmd_reilly(p, out);
    else if (p.command == "pohozaev") cmd_pohozaev(p, out);
    else cmd_steklov_bound(p, out);
    const bool ok =
        std::all_of(out.rows.begin(), out.rows.end(), [](const ReportRow& r) { return r.pass; });
    out.exit_code = ok ? kExitPass : kExitCheckFailed;
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const ParseError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const PreconditionError& e) {
    out.exit_code = kExitPrecondition;
    out.message = std::string("precondition failed: ") + e.what();
  } catch (const DomainError& e) {
    out.exit_code = kExitPrecondition;
    out.message = std::string("domain error: ") + e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitCheckFailed;
    out.message = std::string("numerical failure: ") + e.what();
  }
  if (out.exit_code != kExitPass && out.exit_code != kExitCheckFailed) out.rows.clear();
  return out;
}

}  // namespace

RunOutcome run_config(const RunConfig& cfg, const RunOptions& opt) {
  if (!cfg.has("sweep")) {
    if (cfg.has("values")) {
      RunOutcome out;
      out.exit_code = kExitConfig;
      out.message = ConfigError("'values' without 'sweep'", cfg.line("values")).what();
      return out;
    }
    return run_single(cfg, opt);
  }

  RunOutcome out;
  std::vector<double> values;
  std::string param;
  try {
    param = cfg.text("sweep");
    const std::vector<std::string> allowed{"r", "beta", "c", "grid"};
    if (std::find(allowed.begin(), allowed.end(), param) == allowed.end()) {
      throw ConfigError("sweep parameter must be one of r, beta, c, grid", cfg.line("sweep"));
    }
    if (!cfg.has("values")) throw ConfigError("sweep needs 'values'", cfg.line("sweep"));
    values = cfg.list("values");
    if (values.empty()) throw ConfigError("empty sweep", cfg.line("values"));
    std::sort(values.begin(), values.end());
    // fail early on anything but the swept value
    RunConfig probe = cfg;
    probe.erase("sweep");
    probe.erase("values");
    prepare(probe, opt);
  } catch (const Error& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
    return out;
  }

  std::vector<RunOutcome> runs(values.size());
  auto job = [&](std::size_t i) {
    RunConfig one = cfg;
    one.erase("sweep");
    one.erase("values");
    const std::string v = g17(values[i]);
    if (param == "grid") {
      one.set("n_t", v);
      one.set("n_theta", v);
    } else {
      one.set(param, v);
    }
    runs[i] = run_single(one, opt);
  };
  const int workers = std::clamp(opt.threads, 1, 64);
  if (workers == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < values.size(); i = next++) job(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t i = 0; i < runs.size(); ++i) {
    RunOutcome& r = runs[i];
    if (out.command.empty()) out.command = r.command;
    const std::string tag = "@" + param + "=" + g17(values[i]);
    for (ReportRow& row : r.rows) {
      row.case_id += tag;
      out.rows.push_back(std::move(row));
    }
    for (auto& t : r.tables) out.tables.emplace_back(t.first + tag, std::move(t.second));
    out.exit_code = std::max(out.exit_code, r.exit_code);
    if (!r.message.empty()) out.message += (out.message.empty() ? "" : "; ") + tag + ": " + r.message;
  }
  return out;
}

}  // namespace speclab
