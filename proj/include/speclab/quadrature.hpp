#pragma once

#include <vector>

namespace speclab {

/// Gauss-Legendre rule with `order` points on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

GaussRule gauss_legendre(int order);

/// Composite rule: `segments` equal pieces of [a, b], `order` points each.
GaussRule composite_gauss(double a, double b, int order, int segments);

/// Kahan-Babuska (Neumaier) compensated sum, used wherever totals must not
/// depend on the magnitude spread of their terms.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace speclab
