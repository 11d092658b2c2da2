#pragma once

// Closed-form scalar fields over a handful of named variables, with exact
// value / gradient / Hessian evaluation by second-order forward propagation.
//
// Grammar (standard precedence, `^` binds tighter than unary minus and is
// right associative):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          exponent must fold to a rational
//   primary := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt
//
// `sqrt(u)` is sugar for `u^(1/2)`.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace speclab {

inline constexpr std::size_t kMaxJetDim = 3;

/// Value, gradient and Hessian of a scalar field at a point. The Hessian is
/// stored as its upper triangle, so it is symmetric by construction.
struct Jet2 {
  std::size_t dim = 0;
  double value = 0.0;
  std::array<double, kMaxJetDim> grad{};
  std::array<double, 6> hess_upper{};

  static constexpr std::size_t index(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    // row-major upper triangle of a 3x3 matrix
    constexpr std::array<std::size_t, 3> row_start{0, 3, 5};
    return row_start[i] + (j - i);
  }
  double hess(std::size_t i, std::size_t j) const { return hess_upper[index(i, j)]; }
  double& hess(std::size_t i, std::size_t j) { return hess_upper[index(i, j)]; }
};

struct Rational {
  long num = 0;
  long den = 1;
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

namespace detail {
struct Node;
struct Program;
}  // namespace detail

/// Immutable expression tree over a declared, ordered variable list.
/// Copies share structure; evaluation is pure and thread-safe.
class Expr {
 public:
  /// Parses `text`. Identifiers must be one of `variables`, a known function
  /// or `pi`. Throws ParseError carrying the byte offset of the bad token.
  static Expr parse(std::string_view text, std::vector<std::string> variables);

  static Expr constant(double c, std::vector<std::string> variables = {});
  static Expr variable(const std::string& name, std::vector<std::string> variables);

  /// The zero field over `variables`.
  Expr() : Expr(constant(0.0)) {}

  const std::vector<std::string>& variables() const { return *variables_; }
  std::size_t dimension() const { return variables_->size(); }
  /// Index of `name` in the variable list, or -1.
  int variable_index(std::string_view name) const;

  /// True when no variable node appears in the tree.
  bool is_constant() const;
  /// Variables that actually appear in the tree.
  std::vector<std::string> used_variables() const;

  double operator()(std::span<const double> point) const;
  double operator()(std::initializer_list<double> point) const {
    return (*this)(std::span<const double>(point.begin(), point.size()));
  }
  /// Throws DomainError naming the offending sub-expression.
  Jet2 jet(std::span<const double> point) const;
  Jet2 jet(std::initializer_list<double> point) const {
    return jet(std::span<const double>(point.begin(), point.size()));
  }

  /// Canonical text; `parse(e.str(), e.variables()).str() == e.str()`.
  std::string str() const;

  /// Replaces each variable named in `replacements` by the mapped expression.
  /// All replacements must be declared over `new_variables`; variables not
  /// replaced must also appear in `new_variables`.
  Expr substitute(const std::map<std::string, Expr>& replacements,
                  const std::vector<std::string>& new_variables) const;

  /// Re-declares the expression over a different variable list containing
  /// every variable it uses.
  Expr redeclare(const std::vector<std::string>& new_variables) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr operator+(const Expr& a, double b) { return a + constant(b, a.variables()); }
  friend Expr operator+(double a, const Expr& b) { return constant(a, b.variables()) + b; }
  friend Expr operator-(const Expr& a, double b) { return a - constant(b, a.variables()); }
  friend Expr operator-(double a, const Expr& b) { return constant(a, b.variables()) - b; }
  friend Expr operator*(const Expr& a, double b) { return a * constant(b, a.variables()); }
  friend Expr operator*(double a, const Expr& b) { return constant(a, b.variables()) * b; }
  friend Expr operator/(const Expr& a, double b) { return a / constant(b, a.variables()); }
  friend Expr pow(const Expr& base, Rational exponent);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);

 private:
  Expr(std::shared_ptr<const detail::Node> root,
       std::shared_ptr<const std::vector<std::string>> variables);

  std::shared_ptr<const detail::Node> root_;
  std::shared_ptr<const std::vector<std::string>> variables_;
  std::shared_ptr<const detail::Program> program_;
};

}  // namespace speclab
