#pragma once

#include "pathctl/bshjb.hpp"
#include "pathctl/control.hpp"
#include "pathctl/funcalc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pathctl {

/// Coefficients as expression strings (see Expression for the grammar).
/// drift has d entries, diffusion d rows of n entries.
struct ProblemSpec {
  std::string name;
  std::string description;
  GridConfig grid;
  std::vector<Control> controls;
  std::vector<std::string> drift;
  std::vector<std::vector<std::string>> diffusion;
  std::string generator = "0";
  std::string terminal = "x1";
};

ControlProblem build_problem(const ProblemSpec& spec);

/// Built-in instances: lq, heat, bangbang, deterministic, lookback, linear-y.
const std::vector<ProblemSpec>& presets();

/// Throws Config for unknown names.
ProblemSpec preset(const std::string& name);

/// Random path-dependent instance (d = n = 1) with |q_y| <= 0.5.
ProblemSpec random_spec(std::uint64_t seed, std::size_t steps = 4);

/// Random instance whose optimal control does not depend on the path:
/// drift affine in u, constant diffusion, generator lambda y + h(u), phi linear.
ProblemSpec random_linear_spec(std::uint64_t seed, std::size_t steps = 4);

/// Random augmented problem with d, m in {1, 2} whose generator and terminal
/// data ignore x and u (q linear in y and z, phi built from omega's endpoint,
/// running max and mean). Drift and diffusion depend on omega, x and u.
AugmentedProblem random_augmented(std::uint64_t seed, std::size_t steps = 4);

struct ClassicalSolution {
  std::string name;
  ControlProblem problem;
  PathFunctional solution;  // all derivatives in closed form
};

/// Problems (d = n = 1, b = 0, sigma = 1, q = 0) with a known classical solution
/// of the path-dependent HJB equation on the given steps and horizon:
///   endpoint:  phi = x(T), v = x(t)
///   integral:  phi = sum_{j <= N} x(j dt) dt, v = sum_{j <= k} x(j dt) dt + x(t)(T - t)
///   heat:      phi = x(T)^2, v = x(t)^2 + (T - t)
std::vector<ClassicalSolution> classical_solutions(std::size_t steps = 4, double horizon = 1.0);

}  // namespace pathctl
