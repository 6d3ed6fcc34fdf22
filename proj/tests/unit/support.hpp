#pragma once

#include "pathctl/error.hpp"
#include "pathctl/path.hpp"

#include <cmath>
#include <optional>
#include <random>

namespace testsupport {

using pathctl::Matrix;
using pathctl::Path;
using pathctl::Vector;

// Random walk started from a uniform point; scale multiplies both parts.
inline Path random_path(std::mt19937_64& rng, std::size_t d, std::size_t k, double dt, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix v(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k + 1));
  for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, 0) = scale * uniform(rng);
  for (Eigen::Index j = 1; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = v(i, j - 1) + scale * std::sqrt(dt) * normal(rng);
  return Path(std::move(v), dt);
}

inline Path scalar_path(std::initializer_list<double> xs, double dt) {
  Matrix v(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) v(0, j++) = x;
  return Path(std::move(v), dt);
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) v(j++) = x;
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Kind of the pathctl::Error thrown by fn, or nullopt if it returns.
template <class F>
std::optional<pathctl::ErrorKind> error_kind(F&& fn) {
  try {
    fn();
  } catch (const pathctl::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace testsupport
