#pragma once

#include "pathctl/path.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace pathctl {

/// A real functional on paths, optionally carrying its horizontal derivative
/// and its vertical gradient / Hessian in closed form.
struct PathFunctional {
  std::function<double(const Path&)> eval;
  std::function<double(const Path&)> analytic_dt;
  std::function<Vector(const Path&)> analytic_dx;
  std::function<Matrix(const Path&)> analytic_dxx;

  double operator()(const Path& p) const { return eval(p); }
  bool has_all_derivatives() const { return analytic_dt && analytic_dx && analytic_dxx; }
};

/// Finite-difference steps. An unset vertical step means 1e-4 * (1 + |x(t)|).
struct FDScheme {
  std::optional<double> h_vertical;
  std::size_t h_horizontal = 1;

  double vertical_step(const Path& p) const;
};

Vector vertical_gradient(const PathFunctional& f, const Path& p, const FDScheme& scheme = {});

/// Second-order central stencil on endpoint bumps, symmetrized.
Matrix vertical_hessian(const PathFunctional& f, const Path& p, const FDScheme& scheme = {});

/// Forward quotient (f(p extended by h steps) - f(p)) / (h dt). When the
/// extension would pass `last_index`, the quotient is taken at the restriction
/// to t_index - h instead (left limit at the terminal node).
double horizontal_derivative(const PathFunctional& f, const Path& p, const FDScheme& scheme = {},
                             std::optional<std::size_t> last_index = std::nullopt);

using DriftField = std::function<Vector(const Path&)>;
using DiffusionField = std::function<Matrix(const Path&)>;

struct ItoReport {
  double mean_abs_residual = 0.0;
  double mean_sq_residual = 0.0;
  double max_abs_residual = 0.0;
  std::size_t paths = 0;
};

/// Simulates Euler paths from p0 to end_index and evaluates the functional Ito
/// residual f(X_T) - f(X_t) - sum dt f - 1/2 sum tr[dxx f sigma sigma^T] dt -
/// sum dx f . dX on each. Analytic derivatives are used when present, finite
/// differences otherwise.
ItoReport ito_check(const PathFunctional& f, const DriftField& drift, const DiffusionField& diffusion,
                    const Path& p0, std::size_t end_index, std::size_t n_paths, std::uint64_t seed,
                    const FDScheme& scheme = {});

}  // namespace pathctl
