#pragma once

#include "pathctl/funcalc.hpp"
#include "pathctl/path.hpp"

namespace pathctl {

/// (m, M) for S_m, Upsilon^{m,M} and its time-augmented version. The bound
/// ||g-e||^{2m} <= Upsilon <= M ||g-e||^{2m} and subadditivity need M >= 3.
struct GaugeParams {
  int m = 3;
  double M = 3.0;

  static constexpr int kMaxM = 6;
  void validate() const;
};

/// S_m(p, q) = (||p-q||^{2m} - |p(t)-q(s)|^{2m})^3 / ||p-q||^{4m}, 0 when ||p-q|| = 0.
double s_m(const Path& p, const Path& q, const GaugeParams& g = {});
double upsilon(const Path& p, const Path& q, const GaugeParams& g = {});
double upsilon_bar(const Path& p, const Path& q, const GaugeParams& g = {});

/// Upsilon against the zero path of the same time.
double upsilon_norm(const Path& p, const GaugeParams& g = {});

/// Which case of the vertical-derivative analysis applies to S_m(., anchor) at p.
enum class GaugeBranch {
  Singular,          // ||p - anchor||_0 below the singular threshold
  EndpointDominant,  // endpoint gap > interior sup
  Tie,               // endpoint gap == interior sup
  InteriorDominant,  // endpoint gap < interior sup
};

struct BranchInfo {
  GaugeBranch branch;
  double endpoint_gap;
  double interior_sup;
};

inline constexpr double kSingularThreshold = 1e-8;

BranchInfo classify_branch(const Path& p, const Path& anchor);

/// Closed-form vertical gradient / Hessian of S_m(., anchor); anchor time <= p time.
Vector grad_s(const Path& p, const Path& anchor, const GaugeParams& g = {});
Matrix hess_s(const Path& p, const Path& anchor, const GaugeParams& g = {});

/// Derivatives of |x(t) - a|^{2m}.
Vector grad_power(const Path& p, const Vector& a, int m);
Matrix hess_power(const Path& p, const Vector& a, int m);

Vector grad_upsilon(const Path& p, const Path& anchor, const GaugeParams& g = {});
Matrix hess_upsilon(const Path& p, const Path& anchor, const GaugeParams& g = {});

/// 2^{2m-1} (Upsilon(p) + Upsilon(q)) - Upsilon(p + q) for equal-time p, q.
double subadditivity_gap(const Path& p, const Path& q, const GaugeParams& g = {});

/// Upsilon(., anchor) with closed-form derivatives (horizontal derivative 0).
PathFunctional upsilon_functional(const Path& anchor, const GaugeParams& g = {});

/// Upsilon-bar(., anchor); the |s-t|^2 term contributes 2(s-t) to the horizontal derivative.
PathFunctional upsilon_bar_functional(const Path& anchor, const GaugeParams& g = {});

/// |x(t) - a|^{2m} with closed-form derivatives.
PathFunctional power_functional(const Vector& a, int m);

}  // namespace pathctl
