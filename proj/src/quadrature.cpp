#include "speclab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "speclab/error.hpp"

namespace speclab {

GaussRule gauss_legendre(int order) {
  if (order < 1 || order > 200) throw DomainError("Gauss order must be in [1, 200]");
  GaussRule rule;
  rule.x.assign(order, 0.0);
  rule.w.assign(order, 0.0);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  return rule;
}

GaussRule composite_gauss(double a, double b, int order, int segments) {
  if (segments < 1) throw DomainError("composite rule needs at least one segment");
  const GaussRule base = gauss_legendre(order);
  GaussRule out;
  const double h = (b - a) / segments;
  for (int s = 0; s < segments; ++s) {
    const double lo = a + s * h;
    for (std::size_t q = 0; q < base.x.size(); ++q) {
      out.x.push_back(lo + 0.5 * h * (base.x[q] + 1.0));
      out.w.push_back(0.5 * h * base.w[q]);
    }
  }
  return out;
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::fabs(sum_) >= std::fabs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

}  // namespace speclab
