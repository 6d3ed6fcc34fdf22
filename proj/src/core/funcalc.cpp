#include "pathctl/funcalc.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace pathctl {

double FDScheme::vertical_step(const Path& p) const {
  if (h_vertical) {
    require(*h_vertical > 0.0, ErrorKind::InvalidArgument, "fd: vertical step must be positive");
    return *h_vertical;
  }
  return 1e-4 * (1.0 + p.endpoint().norm());
}

namespace {

double checked(double v, const char* where) {
  require(std::isfinite(v), ErrorKind::NonFinite, std::string(where) + ": non-finite evaluation");
  return v;
}

Vector unit(std::size_t d, std::size_t i, double h) {
  Vector e = Vector::Zero(static_cast<Eigen::Index>(d));
  e(static_cast<Eigen::Index>(i)) = h;
  return e;
}

}  // namespace

Vector vertical_gradient(const PathFunctional& f, const Path& p, const FDScheme& scheme) {
  const double h = scheme.vertical_step(p);
  const std::size_t d = p.dim();
  Vector g(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const Vector e = unit(d, i, h);
    const double up = checked(f(vertical_bump(p, e)), "vertical_gradient");
    const double down = checked(f(vertical_bump(p, -e)), "vertical_gradient");
    g(static_cast<Eigen::Index>(i)) = (up - down) / (2.0 * h);
  }
  return g;
}

Matrix vertical_hessian(const PathFunctional& f, const Path& p, const FDScheme& scheme) {
  const double h = scheme.vertical_step(p);
  const std::size_t d = p.dim();
  const auto n = static_cast<Eigen::Index>(d);
  Matrix hess(n, n);
  const double center = checked(f(p), "vertical_hessian");
  for (std::size_t i = 0; i < d; ++i) {
    const Vector ei = unit(d, i, h);
    const double up = checked(f(vertical_bump(p, ei)), "vertical_hessian");
    const double down = checked(f(vertical_bump(p, -ei)), "vertical_hessian");
    hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (up - 2.0 * center + down) / (h * h);
    for (std::size_t j = i + 1; j < d; ++j) {
      const Vector ej = unit(d, j, h);
      const double pp = checked(f(vertical_bump(p, ei + ej)), "vertical_hessian");
      const double pm = checked(f(vertical_bump(p, ei - ej)), "vertical_hessian");
      const double mp = checked(f(vertical_bump(p, -ei + ej)), "vertical_hessian");
      const double mm = checked(f(vertical_bump(p, -ei - ej)), "vertical_hessian");
      const double v = (pp - pm - mp + mm) / (4.0 * h * h);
      hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return 0.5 * (hess + hess.transpose());
}

double horizontal_derivative(const PathFunctional& f, const Path& p, const FDScheme& scheme,
                             std::optional<std::size_t> last_index) {
  const std::size_t h = scheme.h_horizontal;
  require(h >= 1, ErrorKind::InvalidArgument, "fd: horizontal step must be >= 1");
  const std::size_t k = p.t_index();
  const Path* base = &p;
  Path left;
  if (last_index && k + h > *last_index) {
    require(k >= h, ErrorKind::OutOfRange, "horizontal_derivative: grid exhausted at both ends");
    left = restriction(p, k - h);
    base = &left;
  }
  const double now = checked(f(*base), "horizontal_derivative");
  const double later = checked(f(horizontal_extension(*base, base->t_index() + h)), "horizontal_derivative");
  return (later - now) / (static_cast<double>(h) * p.dt());
}

ItoReport ito_check(const PathFunctional& f, const DriftField& drift, const DiffusionField& diffusion,
                    const Path& p0, std::size_t end_index, std::size_t n_paths, std::uint64_t seed,
                    const FDScheme& scheme) {
  require(end_index >= p0.t_index(), ErrorKind::OutOfRange, "ito_check: end index before start");
  require(n_paths >= 1, ErrorKind::InvalidArgument, "ito_check: need at least one path");
  const double dt = p0.dt();
  const double sqdt = std::sqrt(dt);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ItoReport report;
  report.paths = n_paths;
  for (std::size_t path_id = 0; path_id < n_paths; ++path_id) {
    Matrix values(static_cast<Eigen::Index>(p0.dim()), static_cast<Eigen::Index>(end_index + 1));
    values.leftCols(p0.values().cols()) = p0.values();
    double integral = 0.0;
    Path current = p0;
    for (std::size_t k = p0.t_index(); k < end_index; ++k) {
      const Vector b = drift(current);
      const Matrix sigma = diffusion(current);
      require(static_cast<std::size_t>(b.size()) == p0.dim() && static_cast<std::size_t>(sigma.rows()) == p0.dim(),
              ErrorKind::DimensionMismatch, "ito_check: coefficient dimension mismatch");
      Vector dw(sigma.cols());
      for (Eigen::Index j = 0; j < dw.size(); ++j) dw(j) = sqdt * normal(rng);
      const Vector dx = b * dt + sigma * dw;

      const double ft = f.analytic_dt ? f.analytic_dt(current) : horizontal_derivative(f, current, scheme);
      const Vector fx = f.analytic_dx ? f.analytic_dx(current) : vertical_gradient(f, current, scheme);
      const Matrix fxx = f.analytic_dxx ? f.analytic_dxx(current) : vertical_hessian(f, current, scheme);
      integral += ft * dt + 0.5 * (fxx * sigma * sigma.transpose()).trace() * dt + fx.dot(dx);

      const Vector next = current.endpoint() + dx;
      require(next.allFinite(), ErrorKind::NonFinite, "ito_check: state blew up at step " + std::to_string(k));
      values.col(static_cast<Eigen::Index>(k + 1)) = next;
      current = Path(values.leftCols(static_cast<Eigen::Index>(k + 2)), dt);
    }
    const double residual = checked(f(current) - f(p0) - integral, "ito_check");
    report.mean_abs_residual += std::abs(residual);
    report.mean_sq_residual += residual * residual;
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(residual));
  }
  report.mean_abs_residual /= static_cast<double>(n_paths);
  report.mean_sq_residual /= static_cast<double>(n_paths);
  return report;
}

}  // namespace pathctl
