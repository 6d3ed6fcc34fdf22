#pragma once

#include "pathctl/path.hpp"

#include <memory>
#include <string>

namespace pathctl {

/// Values an expression can read. `path` is required; z may be null when the
/// expression does not use z1..zn.
struct ExprContext {
  const Path* path = nullptr;
  double horizon = 1.0;
  double u = 0.0;
  double y = 0.0;
  const Vector* z = nullptr;
};

/// Compiled arithmetic expression over
///   t T dt u y pi, x1..xd (endpoint), m1..md (running max), a1..ad (left
///   Riemann integral from 0 to t), n0 (sup norm), z1..zn,
/// with + - * / ^ (right associative), unary minus and the functions
/// abs sqrt exp log sin cos min max pow.
class Expression {
 public:
  struct Node;

  Expression() = default;
  /// Throws Config naming the offending token on parse errors or on indices
  /// beyond the given state / noise dimensions.
  static Expression parse(const std::string& text, std::size_t dim, std::size_t noise_dim);

  double operator()(const ExprContext& ctx) const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace pathctl
