#pragma once

#include "pathctl/control.hpp"
#include "pathctl/funcalc.hpp"

#include <cstddef>
#include <functional>
#include <utility>

namespace pathctl {

/// Control problem driven by a Brownian path omega (dimension d) with an
/// m-dimensional state x:
///   dX = b(omega, X, u) dt + sigma(omega, X, u) dW,
///   Y(s) = phi(omega_T, X(T)) + int q(omega, X, Y, Z, u) dl - int Z dW.
/// `grid.dim` and `grid.noise_dim` are both d.
struct AugmentedProblem {
  GridConfig grid;
  std::size_t state_dim = 1;
  std::vector<Control> controls;
  std::function<Vector(const Path& omega, const Vector& x, Control)> drift;
  std::function<Matrix(const Path& omega, const Vector& x, Control)> diffusion;
  std::function<double(const Path& omega, const Vector& x, double y, const Vector& z, Control)> generator;
  std::function<double(const Path& omega, const Vector& x)> terminal;

  void validate() const;
};

/// (d + m)-dimensional problem with b = (0; b), sigma = (I; sigma) and noise dimension d.
ControlProblem augment(const AugmentedProblem& ap);

/// Stacks omega (d rows) on top of xi (m rows); both must share time and grid.
Path stack(const Path& omega, const Path& xi);
std::pair<Path, Path> split(const Path& packed, std::size_t d);

struct Remark64Result {
  double residual = 0.0;  // |BSDE value - augmented value|
  double bsde_value = 0.0;
  double augmented_value = 0.0;
  double bsde_z = 0.0;  // |p(t)|, the Z of the reduced BSDE at the root
};

/// Throws Contract unless q and phi ignore x and u on a probe set.
void require_x_u_independent(const AugmentedProblem& ap, const Path& omega);

/// Solves the reduced BSDE in omega alone on the +-sqrt(dt) tree and compares
/// its root with the value of the augmented problem at (omega, x).
Remark64Result remark64_check(const AugmentedProblem& ap, const Path& omega, const Vector& x,
                              std::size_t leaf_budget = kDefaultLeafBudget);

/// v(omega, x) with optional closed-form derivatives: dt (horizontal in omega),
/// dgamma / dgammagamma (vertical in omega), dx / dxx (classical in x) and the
/// mixed m x d block dxgamma.
struct BivariateFunctional {
  std::function<double(const Path&, const Vector&)> eval;
  std::function<double(const Path&, const Vector&)> dt;
  std::function<Vector(const Path&, const Vector&)> dgamma;
  std::function<Matrix(const Path&, const Vector&)> dgammagamma;
  std::function<Vector(const Path&, const Vector&)> dx;
  std::function<Matrix(const Path&, const Vector&)> dxx;
  std::function<Matrix(const Path&, const Vector&)> dxgamma;

  double operator()(const Path& omega, const Vector& x) const { return eval(omega, x); }
};

/// dt v + max_u [<dx v, b> + 1/2 tr(dxx v sigma sigma^T) + 1/2 tr dgammagamma v
///   + tr(sigma^T dxgamma v) + q(omega, x, v, dgamma v + sigma^T dx v, u)].
/// Missing derivatives are taken by finite differences with step 1e-4 (1 + |.|).
double bshjb_residual(const AugmentedProblem& ap, const BivariateFunctional& v, const Path& omega, const Vector& x,
                      const FDScheme& scheme = {});

/// The functional (omega, xi) -> v(omega, xi(t)) on the augmented path space.
PathFunctional lift(const BivariateFunctional& v, std::size_t d);

}  // namespace pathctl
