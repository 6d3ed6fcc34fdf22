#include "pathctl/expr.hpp"

#include "pathctl/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace pathctl {

struct Expression::Node {
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Var { T_now, Horizon, Dt, U, Y, Endpoint, RunMax, Integral, SupNorm, Z };

  Kind kind = Kind::Number;
  double number = 0.0;
  Var var = Var::T_now;
  std::size_t index = 0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

[[noreturn]] void parse_error(const std::string& text, std::size_t pos, const std::string& what) {
  fail(ErrorKind::Config, "expression \"" + text + "\": " + what + " at position " + std::to_string(pos));
}

class Parser {
 public:
  Parser(const std::string& text, std::size_t dim, std::size_t noise_dim)
      : text_(text), dim_(dim), noise_dim_(noise_dim) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip();
    if (pos_ != text_.size()) parse_error(text_, pos_, "unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(Node::Kind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      if (eat('+')) {
        lhs = binary(Node::Kind::Add, lhs, product());
      } else if (eat('-')) {
        lhs = binary(Node::Kind::Sub, lhs, product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) {
        lhs = binary(Node::Kind::Mul, lhs, unary());
      } else if (eat('/')) {
        lhs = binary(Node::Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than ^, so -x^2 = -(x^2).
  NodePtr unary() {
    if (eat('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->args = {unary()};
      return n;
    }
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return binary(Node::Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) parse_error(text_, pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (eat('(')) {
      NodePtr e = sum();
      if (!eat(')')) parse_error(text_, pos_, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    parse_error(text_, pos_, "unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) parse_error(text_, pos_, "bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Node>();
    n->number = v;
    return n;
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string word = text_.substr(start, pos_ - start);
    std::size_t digits_start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string digits = text_.substr(digits_start, pos_ - digits_start);

    skip();
    if (digits.empty() && pos_ < text_.size() && text_[pos_] == '(') return call(word, start);

    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Var;
    if (digits.empty()) {
      if (word == "t") {
        n->var = Node::Var::T_now;
      } else if (word == "T") {
        n->var = Node::Var::Horizon;
      } else if (word == "dt") {
        n->var = Node::Var::Dt;
      } else if (word == "u") {
        n->var = Node::Var::U;
      } else if (word == "y") {
        n->var = Node::Var::Y;
      } else if (word == "pi") {
        n->kind = Node::Kind::Number;
        n->number = std::numbers::pi;
      } else {
        parse_error(text_, start, "unknown name '" + word + "'");
      }
      return n;
    }

    const std::size_t idx = std::stoul(digits);
    if (word == "n" && idx == 0) {
      n->var = Node::Var::SupNorm;
      return n;
    }
    std::size_t limit = dim_;
    if (word == "x") {
      n->var = Node::Var::Endpoint;
    } else if (word == "m") {
      n->var = Node::Var::RunMax;
    } else if (word == "a") {
      n->var = Node::Var::Integral;
    } else if (word == "z") {
      n->var = Node::Var::Z;
      limit = noise_dim_;
    } else {
      parse_error(text_, start, "unknown name '" + word + digits + "'");
    }
    if (idx < 1 || idx > limit) parse_error(text_, start, "index out of range in '" + word + digits + "'");
    n->index = idx - 1;
    return n;
  }

  NodePtr call(const std::string& fn, std::size_t start) {
    static const std::pair<const char*, int> known[] = {{"abs", 1}, {"sqrt", 1}, {"exp", 1}, {"log", 1}, {"sin", 1},
                                                        {"cos", 1}, {"min", 2},  {"max", 2}, {"pow", 2}};
    int arity = -1;
    for (const auto& [name, a] : known)
      if (fn == name) arity = a;
    if (arity < 0) parse_error(text_, start, "unknown function '" + fn + "'");
    eat('(');
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Call;
    n->fn = fn;
    n->args.push_back(sum());
    while (eat(',')) n->args.push_back(sum());
    if (!eat(')')) parse_error(text_, pos_, "expected ')'");
    if (static_cast<int>(n->args.size()) != arity)
      parse_error(text_, start, "'" + fn + "' takes " + std::to_string(arity) + " argument(s)");
    return n;
  }

  const std::string& text_;
  std::size_t dim_;
  std::size_t noise_dim_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, const ExprContext& ctx) {
  switch (n.kind) {
    case Node::Kind::Number:
      return n.number;
    case Node::Kind::Neg:
      return -eval(*n.args[0], ctx);
    case Node::Kind::Add:
      return eval(*n.args[0], ctx) + eval(*n.args[1], ctx);
    case Node::Kind::Sub:
      return eval(*n.args[0], ctx) - eval(*n.args[1], ctx);
    case Node::Kind::Mul:
      return eval(*n.args[0], ctx) * eval(*n.args[1], ctx);
    case Node::Kind::Div:
      return eval(*n.args[0], ctx) / eval(*n.args[1], ctx);
    case Node::Kind::Pow:
      return std::pow(eval(*n.args[0], ctx), eval(*n.args[1], ctx));
    case Node::Kind::Call: {
      const double a = eval(*n.args[0], ctx);
      if (n.fn == "abs") return std::abs(a);
      if (n.fn == "sqrt") return std::sqrt(a);
      if (n.fn == "exp") return std::exp(a);
      if (n.fn == "log") return std::log(a);
      if (n.fn == "sin") return std::sin(a);
      if (n.fn == "cos") return std::cos(a);
      const double b = eval(*n.args[1], ctx);
      if (n.fn == "min") return std::min(a, b);
      if (n.fn == "max") return std::max(a, b);
      return std::pow(a, b);
    }
    case Node::Kind::Var:
      break;
  }

  const Path& p = *ctx.path;
  const auto row = static_cast<Eigen::Index>(n.index);
  switch (n.var) {
    case Node::Var::T_now:
      return p.time();
    case Node::Var::Horizon:
      return ctx.horizon;
    case Node::Var::Dt:
      return p.dt();
    case Node::Var::U:
      return ctx.u;
    case Node::Var::Y:
      return ctx.y;
    case Node::Var::Endpoint:
      return p.values()(row, p.values().cols() - 1);
    case Node::Var::RunMax:
      return p.values().row(row).maxCoeff();
    case Node::Var::Integral:
      return p.values().row(row).head(p.values().cols() - 1).sum() * p.dt();
    case Node::Var::SupNorm:
      return sup_norm(p);
    case Node::Var::Z:
      require(ctx.z != nullptr, ErrorKind::InvalidArgument, "expression uses z outside the generator");
      return (*ctx.z)(row);
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text, std::size_t dim, std::size_t noise_dim) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(e.text_, dim, noise_dim).parse();
  return e;
}

double Expression::operator()(const ExprContext& ctx) const {
  require(root_ != nullptr, ErrorKind::InvalidArgument, "expression is empty");
  require(ctx.path != nullptr, ErrorKind::InvalidArgument, "expression evaluated without a path");
  return eval(*root_, ctx);
}

}  // namespace pathctl
