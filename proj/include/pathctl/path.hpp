#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace pathctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A path on the uniform grid {0, dt, ..., k*dt}. Column j holds the value at
/// time j*dt, so the current time is t_index()*dt. A vertical bump produces a
/// cadlag element; it is represented by the same type.
class Path {
 public:
  Path() = default;
  /// values: d rows, (k+1) columns. Throws on non-finite entries or dt <= 0.
  Path(Matrix values, double dt);

  static Path constant(const Vector& value, std::size_t t_index, double dt);
  static Path zero(std::size_t dim, std::size_t t_index, double dt);

  std::size_t dim() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t t_index() const { return static_cast<std::size_t>(values_.cols()) - 1; }
  std::size_t size() const { return static_cast<std::size_t>(values_.cols()); }
  double dt() const { return dt_; }
  double time() const { return static_cast<double>(t_index()) * dt_; }

  const Matrix& values() const { return values_; }
  Vector at(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }
  Vector endpoint() const { return values_.col(values_.cols() - 1); }

  /// Returns a copy with one more column equal to `next`.
  Path append(const Vector& next) const;

  friend bool operator==(const Path& a, const Path& b);

 private:
  Matrix values_;
  double dt_ = 1.0;
};

/// Strict weak order used for deterministic tie-breaking: time index first,
/// then values in column-major order.
bool lexicographic_less(const Path& a, const Path& b);

/// Throws DimensionMismatch unless the two paths share dt and d.
void require_comparable(const Path& a, const Path& b);

/// ||p||_0: largest Euclidean norm over the grid nodes.
double sup_norm(const Path& p);

/// ||p - q||_0 after holding the shorter path's last value up to the later time.
double sup_distance(const Path& p, const Path& q);

/// Same as sup_distance but over nodes strictly before the joint final time.
/// Returns 0 when the joint final index is 0 (empty supremum).
double sup_distance_before_end(const Path& p, const Path& q);

/// |t - s| + ||p - q||_0.
double d_infty(const Path& p, const Path& q);

Path vertical_bump(const Path& p, const Vector& x);
Path horizontal_extension(const Path& p, std::size_t new_t_index);
Path restriction(const Path& p, std::size_t new_t_index);

/// Column-wise difference p - q on the joint grid (shorter path held).
Path difference(const Path& p, const Path& q);

/// Grid description for a problem on [0, T].
struct GridConfig {
  std::size_t steps = 4;
  double horizon = 1.0;
  std::size_t dim = 1;
  std::size_t noise_dim = 1;

  double dt() const { return horizon / static_cast<double>(steps); }
  void validate() const;
};

}  // namespace pathctl
