#pragma once

#include "pathctl/path.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace pathctl {

using Control = double;

using DriftFn = std::function<Vector(const Path&, Control)>;
using DiffusionFn = std::function<Matrix(const Path&, Control)>;
using GeneratorFn = std::function<double(const Path&, double y, const Vector& z, Control)>;
using TerminalFn = std::function<double(const Path&)>;

/// Coefficients of the controlled path-dependent SDE and its cost BSDE:
///   dX = b(X_s, u) ds + sigma(X_s, u) dW,
///   Y(s) = phi(X_T) + int_s^T q(X_l, Y, Z, u) dl - int_s^T Z dW.
struct ControlProblem {
  GridConfig grid;
  std::vector<Control> controls;
  DriftFn drift;
  DiffusionFn diffusion;
  GeneratorFn generator;
  TerminalFn terminal;

  double dt() const { return grid.dt(); }
  std::size_t final_index() const { return grid.steps; }
  void validate() const;
  /// Checks that p lives on this problem's grid.
  void require_on_grid(const Path& p) const;
};

/// Adapted control choice. Open-loop sequences are indexed by grid step
/// counted from `first_step`; feedback maps see the history up to the node.
class ControlStrategy {
 public:
  static ControlStrategy constant(std::size_t index);
  static ControlStrategy open_loop(std::vector<std::size_t> indices, std::size_t first_step);
  static ControlStrategy feedback(std::function<std::size_t(const Path&)> rule);

  std::size_t choose(const Path& history) const;

 private:
  std::function<std::size_t(const Path&)> rule_;
};

/// Euler-Maruyama path from p0 to end_index with Gaussian increments.
Path simulate_psde(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat, std::size_t end_index,
                   std::uint64_t seed);

inline constexpr std::size_t kDefaultNodeCap = std::size_t{1} << 18;
inline constexpr std::size_t kDefaultLeafBudget = std::size_t{1} << 22;

/// Non-recombining tree of +-sqrt(dt) Brownian increments (2^n branches per
/// step) with the controlled state along each branch.
struct NoiseTree {
  struct Node {
    Vector state;
    std::size_t parent = 0;
    std::size_t branch = 0;
    std::size_t control = 0;  // index into U used on the step leaving this node
  };

  Path root;
  std::size_t depth = 0;
  std::size_t branching = 1;
  std::size_t noise_dim = 1;
  std::vector<std::vector<Node>> levels;

  double dt() const { return root.dt(); }
  Path path(std::size_t level, std::size_t index) const;
  std::vector<std::size_t> children(std::size_t level, std::size_t index) const;
  std::size_t leaf_count() const { return levels.back().size(); }
};

/// Sign pattern of branch c: coordinate j is -sqrt(dt) when bit j of c is set.
Vector tree_increment(std::size_t branch, std::size_t noise_dim, double dt);

NoiseTree simulate_tree(const ControlProblem& cp, const Path& p0, std::size_t end_index,
                        const ControlStrategy& strat = ControlStrategy::constant(0),
                        std::size_t node_cap = kDefaultNodeCap);

struct BsdeSolution {
  std::vector<std::vector<double>> y;
  std::vector<std::vector<Vector>> z;
};

/// Backward recursion Y = E[Y'] + q(X, Y, Z, u) dt, Z = E[Y' dW^T] / dt with the
/// implicit step solved by fixed-point iteration. Terminal data defaults to phi
/// at the leaves (ordered as tree.levels.back()).
BsdeSolution solve_bsde_tree(const ControlProblem& cp, const NoiseTree& tree,
                             const std::vector<double>* terminal = nullptr);

/// One implicit step of the discrete BSDE at a node.
double bsde_step(const ControlProblem& cp, const Path& node, Control u, const std::vector<double>& child_values,
                 const std::vector<Vector>& increments, Vector* z_out = nullptr);

/// G_{t,t+delta}[eta] with eta given per depth-delta leaf.
double backward_semigroup(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat,
                          std::size_t delta_steps, const std::vector<double>& eta);
double backward_semigroup(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat,
                          std::size_t delta_steps, const std::function<double(const Path&)>& eta);

/// J(p0, u) = Y(t) with terminal phi.
double cost(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat);

struct ValueResult {
  double value = 0.0;
  /// Feedback strategy attaining the value (per-node argmax, lowest index on ties).
  ControlStrategy policy = ControlStrategy::constant(0);
};

/// Value functional by backward induction with a per-node max over U.
double value(const ControlProblem& cp, const Path& p0, std::size_t leaf_budget = kDefaultLeafBudget);
ValueResult value_with_policy(const ControlProblem& cp, const Path& p0, std::size_t leaf_budget = kDefaultLeafBudget);

/// sup over adapted controls on [t, t+delta] of G[eta(X_{t+delta})].
double sup_semigroup(const ControlProblem& cp, const Path& p0, std::size_t delta_steps,
                     const std::function<double(const Path&)>& eta, std::size_t leaf_budget = kDefaultLeafBudget);

/// |V(p0) - sup_u G_{t,t+delta}[V(X_{t+delta})]|.
double dpp_check(const ControlProblem& cp, const Path& p0, std::size_t delta_steps,
                 std::size_t leaf_budget = kDefaultLeafBudget);

struct OpenLoopCost {
  std::vector<std::size_t> sequence;
  double cost = 0.0;
};

/// Costs of every open-loop control sequence from p0 to the horizon.
std::vector<OpenLoopCost> enumerate_open_loop(const ControlProblem& cp, const Path& p0,
                                              std::size_t max_sequences = std::size_t{1} << 16);

/// Largest observed |q(y1) - q(y2)| / |y1 - y2| at p over all controls.
double probe_generator_lipschitz(const ControlProblem& cp, const Path& p);

/// Random-walk history of length k on the problem grid (scale sqrt(dt) per step).
Path random_history(const GridConfig& grid, std::size_t t_index, std::uint64_t seed, double scale = 1.0);

struct RegularityProbe {
  double lipschitz_ratio = 0.0;
  double time_ratio = 0.0;
};

/// Empirical sup of |V(g) - V(g')| / ||g - g'||_0 over same-time pairs sharing
/// a history prefix, and of |V(g_{t,t'}) - V(g_t)| / ((1 + ||g||_0) sqrt(t'-t)).
RegularityProbe regularity_probe(const ControlProblem& cp, std::size_t samples, std::uint64_t seed,
                                 std::size_t leaf_budget = kDefaultLeafBudget);

/// E ||X_T||_0^p / (1 + ||p0||_0^p) from Monte Carlo Euler paths.
double moment_ratio(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat, double power,
                    std::size_t samples, std::uint64_t seed);

}  // namespace pathctl
