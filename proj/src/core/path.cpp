#include "pathctl/path.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pathctl {

Path::Path(Matrix values, double dt) : values_(std::move(values)), dt_(dt) {
  require(dt_ > 0.0 && std::isfinite(dt_), ErrorKind::InvalidArgument, "path: dt must be positive");
  require(values_.rows() >= 1 && values_.cols() >= 1, ErrorKind::InvalidArgument,
          "path: need at least one dimension and one grid node");
  require(values_.allFinite(), ErrorKind::NonFinite, "path: non-finite value");
}

Path Path::constant(const Vector& value, std::size_t t_index, double dt) {
  Matrix m(value.size(), static_cast<Eigen::Index>(t_index + 1));
  m.colwise() = value;
  return Path(std::move(m), dt);
}

Path Path::zero(std::size_t dim, std::size_t t_index, double dt) {
  return Path(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(t_index + 1)), dt);
}

Path Path::append(const Vector& next) const {
  require(next.size() == values_.rows(), ErrorKind::DimensionMismatch, "path: appended column has wrong dimension");
  Matrix m(values_.rows(), values_.cols() + 1);
  m.leftCols(values_.cols()) = values_;
  m.col(values_.cols()) = next;
  return Path(std::move(m), dt_);
}

bool operator==(const Path& a, const Path& b) {
  return a.dt_ == b.dt_ && a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
         a.values_ == b.values_;
}

bool lexicographic_less(const Path& a, const Path& b) {
  if (a.t_index() != b.t_index()) return a.t_index() < b.t_index();
  if (a.dim() != b.dim()) return a.dim() < b.dim();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  const auto n = a.values().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pa[i] != pb[i]) return pa[i] < pb[i];
  }
  return false;
}

void require_comparable(const Path& a, const Path& b) {
  require(a.dim() == b.dim(), ErrorKind::DimensionMismatch,
          "paths differ in dimension (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  const double tol = 1e-12 * std::max(a.dt(), b.dt());
  require(std::abs(a.dt() - b.dt()) <= tol, ErrorKind::DimensionMismatch, "paths live on different grids");
}

double sup_norm(const Path& p) { return std::sqrt(p.values().colwise().squaredNorm().maxCoeff()); }

namespace {

// Largest squared column gap over joint nodes [0, last], holding the shorter path.
double max_sq_gap(const Path& p, const Path& q, std::size_t last_exclusive_end) {
  double best = 0.0;
  const std::size_t kp = p.t_index();
  const std::size_t kq = q.t_index();
  for (std::size_t j = 0; j < last_exclusive_end; ++j) {
    const auto cp = static_cast<Eigen::Index>(std::min(j, kp));
    const auto cq = static_cast<Eigen::Index>(std::min(j, kq));
    best = std::max(best, (p.values().col(cp) - q.values().col(cq)).squaredNorm());
  }
  return best;
}

}  // namespace

double sup_distance(const Path& p, const Path& q) {
  require_comparable(p, q);
  return std::sqrt(max_sq_gap(p, q, std::max(p.t_index(), q.t_index()) + 1));
}

double sup_distance_before_end(const Path& p, const Path& q) {
  require_comparable(p, q);
  return std::sqrt(max_sq_gap(p, q, std::max(p.t_index(), q.t_index())));
}

double d_infty(const Path& p, const Path& q) {
  const double gap = sup_distance(p, q);
  const double kp = static_cast<double>(p.t_index());
  const double kq = static_cast<double>(q.t_index());
  return std::abs(kp - kq) * p.dt() + gap;
}

Path vertical_bump(const Path& p, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == p.dim(), ErrorKind::DimensionMismatch,
          "vertical_bump: bump has wrong dimension");
  require(x.allFinite(), ErrorKind::NonFinite, "vertical_bump: non-finite bump");
  Matrix m = p.values();
  m.col(m.cols() - 1) += x;
  return Path(std::move(m), p.dt());
}

Path horizontal_extension(const Path& p, std::size_t new_t_index) {
  require(new_t_index >= p.t_index(), ErrorKind::OutOfRange, "horizontal_extension: target before current time");
  Matrix m(p.values().rows(), static_cast<Eigen::Index>(new_t_index + 1));
  m.leftCols(p.values().cols()) = p.values();
  for (auto j = p.values().cols(); j < m.cols(); ++j) m.col(j) = p.values().col(p.values().cols() - 1);
  return Path(std::move(m), p.dt());
}

Path restriction(const Path& p, std::size_t new_t_index) {
  require(new_t_index <= p.t_index(), ErrorKind::OutOfRange, "restriction: index beyond path end");
  return Path(p.values().leftCols(static_cast<Eigen::Index>(new_t_index + 1)), p.dt());
}

Path difference(const Path& p, const Path& q) {
  require_comparable(p, q);
  const std::size_t k = std::max(p.t_index(), q.t_index());
  return Path(horizontal_extension(p, k).values() - horizontal_extension(q, k).values(), p.dt());
}

void GridConfig::validate() const {
  require(steps >= 1, ErrorKind::InvalidArgument, "grid: steps must be >= 1");
  require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::InvalidArgument, "grid: horizon must be positive");
  require(dim >= 1, ErrorKind::InvalidArgument, "grid: dim must be >= 1");
  require(noise_dim >= 1, ErrorKind::InvalidArgument, "grid: noise_dim must be >= 1");
}

}  // namespace pathctl
