#include "speclab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <utility>

#include "speclab/error.hpp"

namespace speclab {
namespace detail {

enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kNeg, kPow, kSin, kCos, kExp, kLog };

struct Node {
  Op op = Op::kConst;
  double constant = 0.0;
  int var = -1;
  Rational exponent{};
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

struct Instr {
  Op op;
  double constant;
  int var;
  Rational exponent;
  const Node* node;  // for error messages
};

struct Program {
  std::vector<Instr> code;
  std::size_t max_depth = 0;
};

}  // namespace detail

namespace {

using detail::Instr;
using detail::Node;
using detail::NodePtr;
using detail::Op;

NodePtr make_const(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConst;
  n->constant = c;
  return n;
}

NodePtr make_var(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::kVar;
  n->var = index;
  return n;
}

NodePtr make_unary(Op op, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr base, Rational e) {
  auto n = std::make_shared<Node>();
  n->op = Op::kPow;
  n->lhs = std::move(base);
  n->exponent = e;
  return n;
}

Rational normalized(long num, long den) {
  if (den == 0) throw DomainError("rational exponent with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long g = std::gcd(num, den);
  return g ? Rational{num / g, den / g} : Rational{0, 1};
}

// ---------------------------------------------------------------------------
// printing

int precedence(const Node& n) {
  switch (n.op) {
    case Op::kAdd:
    case Op::kSub:
      return 1;
    case Op::kMul:
    case Op::kDiv:
      return 2;
    case Op::kNeg:
      return 3;
    case Op::kPow:
      return 4;
    case Op::kConst:
      return n.constant < 0 || std::signbit(n.constant) ? 3 : 5;
    default:
      return 5;
  }
}

std::string format_number(double c) {
  if (c == std::numbers::pi) return "pi";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  std::string s(buf);
  // Shortest representation that round-trips.
  for (int digits = 1; digits < 17; ++digits) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", digits, c);
    if (std::strtod(shorter, nullptr) == c) return shorter;
  }
  return s;
}

void print(const Node& n, const std::vector<std::string>& vars, std::string& out);

void print_operand(const Node& n, const std::vector<std::string>& vars, bool parens,
                   std::string& out) {
  if (parens) out += '(';
  print(n, vars, out);
  if (parens) out += ')';
}

void print(const Node& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n.op) {
    case Op::kConst:
      if (std::signbit(n.constant)) {
        out += '-';
        out += format_number(-n.constant);
      } else {
        out += format_number(n.constant);
      }
      return;
    case Op::kVar:
      out += vars[static_cast<std::size_t>(n.var)];
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const int p = precedence(n);
      print_operand(*n.lhs, vars, precedence(*n.lhs) < p, out);
      switch (n.op) {
        case Op::kAdd: out += " + "; break;
        case Op::kSub: out += " - "; break;
        case Op::kMul: out += '*'; break;
        default: out += '/'; break;
      }
      print_operand(*n.rhs, vars, precedence(*n.rhs) <= p, out);
      return;
    }
    case Op::kNeg:
      out += '-';
      print_operand(*n.lhs, vars, precedence(*n.lhs) < 3, out);
      return;
    case Op::kPow: {
      print_operand(*n.lhs, vars, precedence(*n.lhs) <= 4, out);
      out += '^';
      const Rational e = n.exponent;
      if (e.is_integer() && e.num >= 0) {
        out += std::to_string(e.num);
      } else if (e.is_integer()) {
        out += "(-" + std::to_string(-e.num) + ")";
      } else {
        out += "(" + std::to_string(e.num) + "/" + std::to_string(e.den) + ")";
      }
      return;
    }
    case Op::kSin: out += "sin("; break;
    case Op::kCos: out += "cos("; break;
    case Op::kExp: out += "exp("; break;
    case Op::kLog: out += "log("; break;
  }
  print(*n.lhs, vars, out);
  out += ')';
}

std::string node_text(const Node& n, const std::vector<std::string>& vars) {
  std::string s;
  print(n, vars, s);
  return s;
}

// ---------------------------------------------------------------------------
// parsing

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Op::kAdd, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(Op::kSub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Op::kMul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(Op::kDiv, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      NodePtr operand = unary();
      if (operand->op == Op::kConst) return make_const(-operand->constant);
      return make_unary(Op::kNeg, operand);
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '^') {
      const std::size_t at = pos_;
      ++pos_;
      NodePtr exponent = unary();
      const std::optional<Rational> r = fold_rational(*exponent);
      if (!r) throw ParseError("exponent must be a rational constant", at + 1);
      return make_pow(base, *r);
    }
    return base;
  }

  // Folds a constant sub-tree of integer literals joined by + - * / into a
  // rational; decimal literals with a finite expansion are accepted too.
  static std::optional<Rational> fold_rational(const Node& n) {
    switch (n.op) {
      case Op::kConst: {
        double c = n.constant;
        long den = 1;
        for (int k = 0; k < 6 && c != std::floor(c); ++k) {
          c *= 10.0;
          den *= 10;
        }
        if (c != std::floor(c) || std::fabs(c) > 1e12) return std::nullopt;
        return normalized(static_cast<long>(c), den);
      }
      case Op::kNeg: {
        auto a = fold_rational(*n.lhs);
        if (!a) return std::nullopt;
        return Rational{-a->num, a->den};
      }
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv: {
        auto a = fold_rational(*n.lhs);
        auto b = fold_rational(*n.rhs);
        if (!a || !b) return std::nullopt;
        switch (n.op) {
          case Op::kAdd: return normalized(a->num * b->den + b->num * a->den, a->den * b->den);
          case Op::kSub: return normalized(a->num * b->den - b->num * a->den, a->den * b->den);
          case Op::kMul: return normalized(a->num * b->num, a->den * b->den);
          default:
            if (b->num == 0) return std::nullopt;
            return normalized(a->num * b->den, a->den * b->num);
        }
      }
      default:
        return std::nullopt;
    }
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return make_const(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    const auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it != vars_.end()) return make_var(static_cast<int>(it - vars_.begin()));
    if (name == "pi") return make_const(std::numbers::pi);

    static const std::map<std::string, Op> functions{
        {"sin", Op::kSin}, {"cos", Op::kCos}, {"exp", Op::kExp}, {"log", Op::kLog}};
    const auto fn = functions.find(name);
    const bool is_sqrt = name == "sqrt";
    if (fn == functions.end() && !is_sqrt) {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after " + name);
    NodePtr arg = expr();
    if (!accept(')')) fail("expected ')'");
    if (is_sqrt) return make_pow(arg, Rational{1, 2});
    return make_unary(fn->second, arg);
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// compilation to postfix

void emit(const Node& n, std::vector<Instr>& code, std::size_t depth, std::size_t& max_depth) {
  switch (n.op) {
    case Op::kConst:
    case Op::kVar:
      break;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
      emit(*n.lhs, code, depth, max_depth);
      emit(*n.rhs, code, depth + 1, max_depth);
      break;
    default:
      emit(*n.lhs, code, depth, max_depth);
      break;
  }
  max_depth = std::max(max_depth, depth + 1);
  code.push_back(Instr{n.op, n.constant, n.var, n.exponent, &n});
}

// ---------------------------------------------------------------------------
// jet arithmetic

Jet2 jet_constant(double c, std::size_t dim) {
  Jet2 j;
  j.dim = dim;
  j.value = c;
  return j;
}

// g(u) with g' and g'' evaluated at u.value
Jet2 chain(const Jet2& u, double g, double dg, double d2g) {
  Jet2 r;
  r.dim = u.dim;
  r.value = g;
  for (std::size_t i = 0; i < u.dim; ++i) r.grad[i] = dg * u.grad[i];
  for (std::size_t i = 0; i < u.dim; ++i) {
    for (std::size_t j = i; j < u.dim; ++j) {
      r.hess(i, j) = d2g * u.grad[i] * u.grad[j] + dg * u.hess(i, j);
    }
  }
  return r;
}

Jet2 add(const Jet2& a, const Jet2& b, double sign) {
  Jet2 r = a;
  r.value += sign * b.value;
  for (std::size_t i = 0; i < a.dim; ++i) r.grad[i] += sign * b.grad[i];
  for (std::size_t k = 0; k < r.hess_upper.size(); ++k) r.hess_upper[k] += sign * b.hess_upper[k];
  return r;
}

Jet2 multiply(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.dim = a.dim;
  r.value = a.value * b.value;
  for (std::size_t i = 0; i < a.dim; ++i) r.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
  for (std::size_t i = 0; i < a.dim; ++i) {
    for (std::size_t j = i; j < a.dim; ++j) {
      r.hess(i, j) = a.value * b.hess(i, j) + b.value * a.hess(i, j) + a.grad[i] * b.grad[j] +
                     a.grad[j] * b.grad[i];
    }
  }
  return r;
}

[[noreturn]] void domain_fail(const std::string& what, const Instr& in,
                              const std::vector<std::string>& vars) {
  throw DomainError(what + " in '" + node_text(*in.node, vars) + "'");
}

double check_pow_domain(double base, Rational e, const Instr& in,
                        const std::vector<std::string>& vars) {
  if (e.is_integer()) {
    if (e.num < 0 && base == 0.0) domain_fail("negative power of zero", in, vars);
  } else if (!(base > 0.0)) {
    domain_fail("fractional power of a non-positive value", in, vars);
  }
  return base;
}

double pow_value(double base, Rational e) {
  if (e.is_integer()) {
    // repeated squaring keeps small integer powers exact
    long k = e.num < 0 ? -e.num : e.num;
    double result = 1.0;
    double b = base;
    while (k) {
      if (k & 1) result *= b;
      b *= b;
      k >>= 1;
    }
    return e.num < 0 ? 1.0 / result : result;
  }
  return std::pow(base, e.to_double());
}

Jet2 pow_jet(const Jet2& u, Rational e) {
  const double x = u.value;
  const double p = e.to_double();
  const double g = pow_value(x, e);
  double dg = 0.0;
  double d2g = 0.0;
  if (e.num != 0) {
    dg = p * pow_value(x, Rational{e.num - e.den, e.den});
    if (!(e.is_integer() && e.num == 1)) {
      d2g = p * (p - 1.0) * pow_value(x, Rational{e.num - 2 * e.den, e.den});
    }
  }
  return chain(u, g, dg, d2g);
}

NodePtr substitute_node(const NodePtr& n, const std::vector<NodePtr>& replacement) {
  switch (n->op) {
    case Op::kConst:
      return n;
    case Op::kVar:
      return replacement[static_cast<std::size_t>(n->var)];
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
      return make_binary(n->op, substitute_node(n->lhs, replacement),
                         substitute_node(n->rhs, replacement));
    case Op::kPow:
      return make_pow(substitute_node(n->lhs, replacement), n->exponent);
    default:
      return make_unary(n->op, substitute_node(n->lhs, replacement));
  }
}

void collect_vars(const Node& n, std::set<int>& out) {
  if (n.op == Op::kVar) out.insert(n.var);
  if (n.lhs) collect_vars(*n.lhs, out);
  if (n.rhs) collect_vars(*n.rhs, out);
}

}  // namespace

// ---------------------------------------------------------------------------

Expr::Expr(std::shared_ptr<const detail::Node> root,
           std::shared_ptr<const std::vector<std::string>> variables)
    : root_(std::move(root)), variables_(std::move(variables)) {
  if (variables_->size() > kMaxJetDim) {
    throw DomainError("expressions support at most " + std::to_string(kMaxJetDim) + " variables");
  }
  auto program = std::make_shared<detail::Program>();
  emit(*root_, program->code, 0, program->max_depth);
  program_ = std::move(program);
}

Expr Expr::parse(std::string_view text, std::vector<std::string> variables) {
  auto vars = std::make_shared<const std::vector<std::string>>(std::move(variables));
  Parser parser(text, *vars);
  return Expr(parser.parse(), vars);
}

Expr Expr::constant(double c, std::vector<std::string> variables) {
  return Expr(make_const(c), std::make_shared<const std::vector<std::string>>(std::move(variables)));
}

Expr Expr::variable(const std::string& name, std::vector<std::string> variables) {
  const auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) throw DomainError("variable '" + name + "' is not declared");
  const int index = static_cast<int>(it - variables.begin());
  return Expr(make_var(index), std::make_shared<const std::vector<std::string>>(std::move(variables)));
}

int Expr::variable_index(std::string_view name) const {
  const auto it = std::find(variables_->begin(), variables_->end(), name);
  return it == variables_->end() ? -1 : static_cast<int>(it - variables_->begin());
}

bool Expr::is_constant() const { return used_variables().empty(); }

std::vector<std::string> Expr::used_variables() const {
  std::set<int> used;
  collect_vars(*root_, used);
  std::vector<std::string> names;
  for (int i : used) names.push_back((*variables_)[static_cast<std::size_t>(i)]);
  return names;
}

double Expr::operator()(std::span<const double> point) const {
  if (point.size() != dimension()) throw DomainError("point dimension does not match expression");
  double small[32] = {};
  std::vector<double> big;
  double* stack = small;
  if (program_->max_depth > 32) {
    big.resize(program_->max_depth);
    stack = big.data();
  }
  std::size_t top = 0;
  for (const Instr& in : program_->code) {
    switch (in.op) {
      case Op::kConst: stack[top++] = in.constant; break;
      case Op::kVar: stack[top++] = point[static_cast<std::size_t>(in.var)]; break;
      case Op::kAdd: --top; stack[top - 1] += stack[top]; break;
      case Op::kSub: --top; stack[top - 1] -= stack[top]; break;
      case Op::kMul: --top; stack[top - 1] *= stack[top]; break;
      case Op::kDiv:
        --top;
        if (stack[top] == 0.0) domain_fail("division by zero", in, *variables_);
        stack[top - 1] /= stack[top];
        break;
      case Op::kNeg: stack[top - 1] = -stack[top - 1]; break;
      case Op::kPow:
        stack[top - 1] = pow_value(check_pow_domain(stack[top - 1], in.exponent, in, *variables_),
                                   in.exponent);
        break;
      case Op::kSin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::kCos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::kExp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::kLog:
        if (!(stack[top - 1] > 0.0)) domain_fail("log of a non-positive value", in, *variables_);
        stack[top - 1] = std::log(stack[top - 1]);
        break;
    }
  }
  return stack[0];
}

Jet2 Expr::jet(std::span<const double> point) const {
  const std::size_t dim = dimension();
  if (point.size() != dim) throw DomainError("point dimension does not match expression");
  std::vector<Jet2> stack;
  stack.reserve(program_->max_depth);
  for (const Instr& in : program_->code) {
    switch (in.op) {
      case Op::kConst:
        stack.push_back(jet_constant(in.constant, dim));
        break;
      case Op::kVar: {
        Jet2 v = jet_constant(point[static_cast<std::size_t>(in.var)], dim);
        v.grad[static_cast<std::size_t>(in.var)] = 1.0;
        stack.push_back(v);
        break;
      }
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv: {
        const Jet2 b = stack.back();
        stack.pop_back();
        Jet2& a = stack.back();
        if (in.op == Op::kAdd) {
          a = add(a, b, 1.0);
        } else if (in.op == Op::kSub) {
          a = add(a, b, -1.0);
        } else if (in.op == Op::kMul) {
          a = multiply(a, b);
        } else {
          if (b.value == 0.0) domain_fail("division by zero", in, *variables_);
          const double inv = 1.0 / b.value;
          a = multiply(a, chain(b, inv, -inv * inv, 2.0 * inv * inv * inv));
        }
        break;
      }
      case Op::kNeg: {
        Jet2& a = stack.back();
        a = chain(a, -a.value, -1.0, 0.0);
        break;
      }
      case Op::kPow: {
        Jet2& a = stack.back();
        check_pow_domain(a.value, in.exponent, in, *variables_);
        a = pow_jet(a, in.exponent);
        break;
      }
      case Op::kSin: {
        Jet2& a = stack.back();
        const double s = std::sin(a.value), c = std::cos(a.value);
        a = chain(a, s, c, -s);
        break;
      }
      case Op::kCos: {
        Jet2& a = stack.back();
        const double s = std::sin(a.value), c = std::cos(a.value);
        a = chain(a, c, -s, -c);
        break;
      }
      case Op::kExp: {
        Jet2& a = stack.back();
        const double e = std::exp(a.value);
        a = chain(a, e, e, e);
        break;
      }
      case Op::kLog: {
        Jet2& a = stack.back();
        if (!(a.value > 0.0)) domain_fail("log of a non-positive value", in, *variables_);
        const double inv = 1.0 / a.value;
        a = chain(a, std::log(a.value), inv, -inv * inv);
        break;
      }
    }
  }
  return stack.front();
}

std::string Expr::str() const { return node_text(*root_, *variables_); }

Expr Expr::substitute(const std::map<std::string, Expr>& replacements,
                      const std::vector<std::string>& new_variables) const {
  std::vector<NodePtr> map(variables_->size());
  for (std::size_t i = 0; i < variables_->size(); ++i) {
    const std::string& name = (*variables_)[i];
    const auto it = replacements.find(name);
    if (it != replacements.end()) {
      if (it->second.variables() != new_variables) {
        throw DomainError("replacement for '" + name + "' is declared over different variables");
      }
      map[i] = it->second.root_;
    } else {
      const auto pos = std::find(new_variables.begin(), new_variables.end(), name);
      if (pos != new_variables.end()) map[i] = make_var(static_cast<int>(pos - new_variables.begin()));
    }
  }
  std::set<int> used;
  collect_vars(*root_, used);
  for (int i : used) {
    if (!map[static_cast<std::size_t>(i)]) {
      throw DomainError("variable '" + (*variables_)[static_cast<std::size_t>(i)] +
                        "' has no image in the new variable list");
    }
  }
  for (auto& m : map) {
    if (!m) m = make_const(0.0);  // unused slot
  }
  return Expr(substitute_node(root_, map),
              std::make_shared<const std::vector<std::string>>(new_variables));
}

Expr Expr::redeclare(const std::vector<std::string>& new_variables) const {
  return substitute({}, new_variables);
}

namespace {
void require_same_vars(const Expr& a, const Expr& b) {
  if (a.variables() != b.variables()) {
    throw DomainError("expressions are declared over different variable lists");
  }
}
}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  require_same_vars(a, b);
  return Expr(make_binary(Op::kAdd, a.root_, b.root_), a.variables_);
}
Expr operator-(const Expr& a, const Expr& b) {
  require_same_vars(a, b);
  return Expr(make_binary(Op::kSub, a.root_, b.root_), a.variables_);
}
Expr operator*(const Expr& a, const Expr& b) {
  require_same_vars(a, b);
  return Expr(make_binary(Op::kMul, a.root_, b.root_), a.variables_);
}
Expr operator/(const Expr& a, const Expr& b) {
  require_same_vars(a, b);
  return Expr(make_binary(Op::kDiv, a.root_, b.root_), a.variables_);
}
Expr operator-(const Expr& a) { return Expr(make_unary(Op::kNeg, a.root_), a.variables_); }
Expr pow(const Expr& base, Rational exponent) {
  return Expr(make_pow(base.root_, normalized(exponent.num, exponent.den)), base.variables_);
}
Expr sin(const Expr& a) { return Expr(make_unary(Op::kSin, a.root_), a.variables_); }
Expr cos(const Expr& a) { return Expr(make_unary(Op::kCos, a.root_), a.variables_); }
Expr exp(const Expr& a) { return Expr(make_unary(Op::kExp, a.root_), a.variables_); }
Expr log(const Expr& a) { return Expr(make_unary(Op::kLog, a.root_), a.variables_); }

}  // namespace speclab
