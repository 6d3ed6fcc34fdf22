#pragma once

#include "pathctl/control.hpp"
#include "pathctl/funcalc.hpp"
#include "pathctl/gauge.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pathctl {

/// Arguments (gamma_t, r, p, l) of the Hamiltonian; l must be symmetric.
struct HamiltonianInput {
  Path path;
  double r = 0.0;
  Vector p;
  Matrix l;
};

struct HamiltonianValue {
  double value = 0.0;
  std::size_t argmax = 0;  // index into U, lowest index on ties
};

/// H(gamma, r, p, l) = max_u <p, b> + 1/2 tr[l sigma sigma^T] + q(gamma, r, sigma^T p, u).
HamiltonianValue hamiltonian(const ControlProblem& cp, const HamiltonianInput& in);

/// Horizontal derivative and vertical gradient / Hessian of a functional,
/// closed form where available and finite differences otherwise.
struct Derivatives {
  double dt = 0.0;
  Vector dx;
  Matrix dxx;
};

Derivatives derivatives(const PathFunctional& f, const Path& p, const FDScheme& scheme = {},
                        std::optional<std::size_t> last_index = std::nullopt);

/// (L phi)(gamma, u) = dt phi + <dx phi, b> + 1/2 tr[dxx phi sigma sigma^T] + q(gamma, phi, sigma^T dx phi, u).
double generator(const ControlProblem& cp, const PathFunctional& phi, const Path& p, Control u,
                 const FDScheme& scheme = {});

/// dt v + H(gamma, v, dx v, dxx v) at an interior path.
double phjb_residual(const ControlProblem& cp, const PathFunctional& v, const Path& p, const FDScheme& scheme = {});

/// Seeded cloud of paths at times in [t, T] used in place of the global
/// extremum over the path space. Half of the cloud extends p with a random
/// continuation, half also perturbs its history; radii are log-uniform.
struct CloudSpec {
  std::size_t size = 1000;
  std::uint64_t seed = 0;
  double max_radius = 1.0;
  double min_radius = 1e-3;
};

std::vector<Path> probe_cloud(const GridConfig& grid, const Path& p, const CloudSpec& spec);

struct ViscosityProbe {
  bool is_touch_point = false;
  /// Sub: dt phi + H(phi, dx phi, dxx phi). Super: -dt phi + H(-phi, -dx phi, -dxx phi).
  double residual = 0.0;
  /// Largest (w - phi) (sub) or -(w + phi) (super) seen on the cloud, and the value at p.
  double cloud_excess = 0.0;
  double gap_at_point = 0.0;
};

inline constexpr double kTouchTolerance = 1e-9;

/// Checks phi in A^+(p, w) on the cloud and returns the subsolution residual (>= 0 expected).
ViscosityProbe subsolution_probe(const ControlProblem& cp, const PathFunctional& w, const PathFunctional& test,
                                 const Path& p, const CloudSpec& cloud = {}, const FDScheme& scheme = {});

/// Checks phi in A^-(p, w) on the cloud and returns the supersolution residual (<= 0 expected).
ViscosityProbe supersolution_probe(const ControlProblem& cp, const PathFunctional& w, const PathFunctional& test,
                                   const Path& p, const CloudSpec& cloud = {}, const FDScheme& scheme = {});

/// Smooth functional touching w at p from above (side = +1) or below (side = -1):
///   w(p) + theta (s - t) + <a, x(s) - x(t)> + 1/2 (x(s) - x(t))^T c (x(s) - x(t)) + side kappa Upsilon-bar(., p)
/// with theta, a, c the derivatives of w at p. Touching is only certified by a probe.
PathFunctional fitted_test_functional(const PathFunctional& w, const Path& p, double kappa, int side,
                                      std::size_t last_index, const FDScheme& scheme = {});

/// -f with negated closed-form derivatives.
PathFunctional negated(const PathFunctional& f);

/// Spatial grid for the one-dimensional state-dependent reduction. `substeps`
/// is the number of explicit steps per path step; 0 picks the smallest count
/// that satisfies the CFL condition.
struct MarkovGridSpec {
  double x_min = -4.0;
  double x_max = 4.0;
  double dx = 0.05;
  std::size_t substeps = 0;
};

/// V-bar on nodes x_min + i dx at the path-grid times k dt (levels[k][i]).
struct MarkovSolution {
  MarkovGridSpec spec;
  std::size_t substeps = 0;
  double dt = 0.0;
  std::vector<std::vector<double>> levels;

  std::size_t nodes() const { return levels.empty() ? 0 : levels.front().size(); }
  double node(std::size_t i) const { return spec.x_min + static_cast<double>(i) * spec.dx; }
  /// Linear interpolation at time index k.
  double interpolate(std::size_t k, double x) const;
  /// dx^2 / 8 times the largest second difference over the bracketing cell and its neighbours.
  double interpolation_bound(std::size_t k, double x) const;
};

/// Throws Contract when the coefficients depend on more than (t, x(t)).
void require_state_dependent(const ControlProblem& cp, std::uint64_t seed = 0);

/// Explicit backward scheme for the reduced HJB equation (d = n = 1) with
/// upwinded drift, central second differences and a per-node max over U.
/// Boundary nodes are extrapolated linearly.
MarkovSolution markov_fd_solve(const ControlProblem& cp, const MarkovGridSpec& spec);

struct MarkovConsistency {
  double residual = 0.0;  // |tree value - interpolated V-bar|
  double bound = 0.0;     // interpolation + fd + tree error estimates
  double tree_value = 0.0;
  double fd_value = 0.0;
  double interpolation_error = 0.0;
  double fd_error = 0.0;    // |V-bar(dx) - V-bar(2 dx)| at the point
  double tree_error = 0.0;  // |tree(dt) - tree(dt / 2)| at the point
};

MarkovConsistency markov_consistency(const ControlProblem& cp, const Path& p, const MarkovGridSpec& spec,
                                     std::size_t leaf_budget = kDefaultLeafBudget);

/// Psi(g, e) = W1(g) - W2(e) - beta Upsilon(g, e) - beta^{1/3} |g(t) - e(t)|^2
///             - eps ((nu T - t) / (nu T)) (Upsilon(g) + Upsilon(e)).
double comparison_psi(const PathFunctional& w1, const PathFunctional& w2, const Path& p, const Path& q, double beta,
                      double eps, double nu, double horizon, const GaugeParams& g = {});

/// A pair of equal-time d-dimensional paths stored as one 2d-dimensional path.
Path pack_pair(const Path& p, const Path& q);
std::pair<Path, Path> unpack_pair(const Path& packed);

/// Upsilon(g, g') + Upsilon(e, e') + |s - s'|^2 on packed pairs.
double pair_gauge(const Path& a, const Path& b, const GaugeParams& g = {});

}  // namespace pathctl
