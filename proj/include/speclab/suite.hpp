#pragma once

// The acceptance battery: nine criteria, each a self-contained run that
// produces report rows and a pass flag. Rows carry no timing, so the CSV of
// a run is a pure function of the seed.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace speclab {

struct ReportRow {
  std::string case_id;
  std::string quantity;
  double value = 0.0;
  double reference = 0.0;
  bool has_reference = false;
  std::string reference_source;  // "closed-form", "oracle", "identity", "bound", ...
  double tol = 0.0;
  bool pass = true;
};

/// One row per line: case_id,quantity,value,reference,reference_source,tol,pass
/// with 17 significant digits; a missing reference is an empty field.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, bool header = true);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string summary;        // one line for the console
  double seconds = 0.0;       // wall time, console only
  double time_limit = 0.0;    // 0 = none
  std::vector<ReportRow> rows;
};

struct SuiteOptions {
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Criteria 1..8 in order. Criterion 9 needs two full runs and lives in
/// run_acceptance.
std::vector<CriterionResult> run_criteria(const SuiteOptions& opt,
                                          const std::function<void(const CriterionResult&)>&
                                              on_done = {});

/// Deterministic uniform draws in [0, 1) from a seeded 64-bit Mersenne
/// twister, independent of the standard library's distributions.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed);
  double next();
  double in(double lo, double hi) { return lo + (hi - lo) * next(); }
  int pick(int lo, int hi);  // inclusive

 private:
  std::mt19937_64 gen_;
};

/// Criteria 1..8 run twice; criterion 9 compares the two CSV byte streams.
/// `csv` receives the CSV of the first run.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& opt, std::string* csv = nullptr,
                                            const std::function<void(const CriterionResult&)>&
                                                on_done = {});

std::string suite_csv(const std::vector<CriterionResult>& results);

/// "[PASS] 3  title: summary (1.23 s)"
std::string format_line(const CriterionResult& r);

// Seeded generators shared with the tests.
std::string random_polynomial_xy(SeededUniform& u, int degree);
std::string random_convex_quadratic_xy(SeededUniform& u);
/// J(t, theta) = t (1 + eps t^2 cos(m theta + s)), |eps| <= 0.15.
std::string random_warp_perturbation(SeededUniform& u);
/// J = t + eps t^3 (1 + a cos(m theta) + b sin(m theta)), eps > 0 and
/// |a| + |b| < 1, so J_tt >= 0 and the radial curvature is nonpositive.
std::string random_admissible_warp(SeededUniform& u);
/// R(theta) = 1 + d cos(m theta + s) with small d, a convex star-shaped rim.
std::string random_convex_rim(SeededUniform& u);

}  // namespace speclab
