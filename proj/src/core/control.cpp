#include "pathctl/control.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace pathctl {

void ControlProblem::validate() const {
  grid.validate();
  require(!controls.empty(), ErrorKind::InvalidArgument, "control problem: U must be nonempty");
  require(drift && diffusion && generator && terminal, ErrorKind::InvalidArgument,
          "control problem: all coefficients must be set");
}

void ControlProblem::require_on_grid(const Path& p) const {
  require(p.dim() == grid.dim, ErrorKind::DimensionMismatch, "path dimension does not match the problem");
  require(std::abs(p.dt() - dt()) <= 1e-12 * dt(), ErrorKind::DimensionMismatch, "path dt does not match the problem");
  require(p.t_index() <= grid.steps, ErrorKind::OutOfRange, "path extends beyond the horizon");
}

ControlStrategy ControlStrategy::constant(std::size_t index) {
  ControlStrategy s;
  s.rule_ = [index](const Path&) { return index; };
  return s;
}

ControlStrategy ControlStrategy::open_loop(std::vector<std::size_t> indices, std::size_t first_step) {
  ControlStrategy s;
  s.rule_ = [seq = std::move(indices), first_step](const Path& p) {
    require(p.t_index() >= first_step && p.t_index() - first_step < seq.size(), ErrorKind::OutOfRange,
            "open-loop strategy queried outside its horizon");
    return seq[p.t_index() - first_step];
  };
  return s;
}

ControlStrategy ControlStrategy::feedback(std::function<std::size_t(const Path&)> rule) {
  ControlStrategy s;
  s.rule_ = std::move(rule);
  return s;
}

std::size_t ControlStrategy::choose(const Path& history) const { return rule_(history); }

namespace {

std::size_t checked_control(const ControlProblem& cp, std::size_t idx) {
  require(idx < cp.controls.size(), ErrorKind::OutOfRange, "strategy returned a control index outside U");
  return idx;
}

Vector next_state(const ControlProblem& cp, const Path& path, Control u, const Vector& dw) {
  const Vector b = cp.drift(path, u);
  const Matrix sigma = cp.diffusion(path, u);
  require(static_cast<std::size_t>(b.size()) == cp.grid.dim, ErrorKind::DimensionMismatch, "drift has wrong dimension");
  require(static_cast<std::size_t>(sigma.rows()) == cp.grid.dim &&
              static_cast<std::size_t>(sigma.cols()) == cp.grid.noise_dim,
          ErrorKind::DimensionMismatch, "diffusion has wrong shape");
  Vector next = path.endpoint() + b * cp.dt() + sigma * dw;
  require(next.allFinite(), ErrorKind::NonFinite,
          "state is not finite after step " + std::to_string(path.t_index()));
  return next;
}

// b^e with overflow reported as SIZE_MAX.
std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base) return std::numeric_limits<std::size_t>::max();
    out *= base;
  }
  return out;
}

std::vector<Vector> all_increments(std::size_t noise_dim, double dt) {
  std::vector<Vector> out;
  const std::size_t branching = std::size_t{1} << noise_dim;
  out.reserve(branching);
  for (std::size_t c = 0; c < branching; ++c) out.push_back(tree_increment(c, noise_dim, dt));
  return out;
}

// Implicit steps need L dt < 1/2 for the fixed-point contraction.
void check_step_contract(const ControlProblem& cp, const Path& p) {
  const double lip = probe_generator_lipschitz(cp, p);
  require(lip * cp.dt() < 0.5, ErrorKind::Contract,
          "generator Lipschitz constant in y (" + std::to_string(lip) + ") too large for dt = " + std::to_string(cp.dt()));
}

std::vector<double> policy_key(const Path& p) {
  std::vector<double> key(p.values().data(), p.values().data() + p.values().size());
  key.push_back(static_cast<double>(p.t_index()));
  return key;
}

using PolicyMap = std::map<std::vector<double>, std::size_t>;

struct Induction {
  const ControlProblem& cp;
  std::vector<Vector> increments;
  PolicyMap* policy = nullptr;

  double run(const Path& path, std::size_t remaining, const std::function<double(const Path&)>& eta) const {
    if (remaining == 0) {
      const double v = eta(path);
      require(std::isfinite(v), ErrorKind::NonFinite, "terminal data is not finite");
      return v;
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    std::vector<double> child_values(increments.size());
    for (std::size_t ui = 0; ui < cp.controls.size(); ++ui) {
      const Control u = cp.controls[ui];
      for (std::size_t c = 0; c < increments.size(); ++c) {
        child_values[c] = run(path.append(next_state(cp, path, u, increments[c])), remaining - 1, eta);
      }
      const double y = bsde_step(cp, path, u, child_values, increments);
      if (y > best) {
        best = y;
        best_idx = ui;
      }
    }
    if (policy) (*policy)[policy_key(path)] = best_idx;
    return best;
  }
};

void check_budget(const ControlProblem& cp, std::size_t remaining, std::size_t leaf_budget) {
  const std::size_t fan = cp.controls.size() * (std::size_t{1} << cp.grid.noise_dim);
  require(checked_power(fan, remaining) <= leaf_budget, ErrorKind::CapExceeded,
          "backward induction needs (|U| 2^n)^" + std::to_string(remaining) + " leaves, above the budget of " +
              std::to_string(leaf_budget));
}

}  // namespace

Vector tree_increment(std::size_t branch, std::size_t noise_dim, double dt) {
  const double s = std::sqrt(dt);
  Vector out(static_cast<Eigen::Index>(noise_dim));
  for (std::size_t j = 0; j < noise_dim; ++j) out(static_cast<Eigen::Index>(j)) = ((branch >> j) & 1U) ? -s : s;
  return out;
}

Path simulate_psde(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat, std::size_t end_index,
                   std::uint64_t seed) {
  cp.validate();
  cp.require_on_grid(p0);
  require(end_index >= p0.t_index() && end_index <= cp.grid.steps, ErrorKind::OutOfRange,
          "simulate_psde: end index outside [t, T]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sq = std::sqrt(cp.dt());
  Matrix values(static_cast<Eigen::Index>(cp.grid.dim), static_cast<Eigen::Index>(end_index + 1));
  values.leftCols(p0.values().cols()) = p0.values();
  Path current = p0;
  Vector dw(static_cast<Eigen::Index>(cp.grid.noise_dim));
  for (std::size_t k = p0.t_index(); k < end_index; ++k) {
    const Control u = cp.controls[checked_control(cp, strat.choose(current))];
    for (Eigen::Index j = 0; j < dw.size(); ++j) dw(j) = sq * normal(rng);
    values.col(static_cast<Eigen::Index>(k + 1)) = next_state(cp, current, u, dw);
    current = Path(values.leftCols(static_cast<Eigen::Index>(k + 2)), cp.dt());
  }
  return current;
}

Path NoiseTree::path(std::size_t level, std::size_t index) const {
  require(level <= depth && index < levels[level].size(), ErrorKind::OutOfRange, "noise tree: node out of range");
  std::vector<const Vector*> states(level);
  std::size_t idx = index;
  for (std::size_t l = level; l > 0; --l) {
    const Node& node = levels[l][idx];
    states[l - 1] = &node.state;
    idx = node.parent;
  }
  Matrix values(static_cast<Eigen::Index>(root.dim()), static_cast<Eigen::Index>(root.size() + level));
  values.leftCols(static_cast<Eigen::Index>(root.size())) = root.values();
  for (std::size_t l = 0; l < level; ++l) values.col(static_cast<Eigen::Index>(root.size() + l)) = *states[l];
  return Path(std::move(values), root.dt());
}

std::vector<std::size_t> NoiseTree::children(std::size_t level, std::size_t index) const {
  require(level < depth, ErrorKind::OutOfRange, "noise tree: leaves have no children");
  std::vector<std::size_t> out(branching);
  for (std::size_t c = 0; c < branching; ++c) out[c] = index * branching + c;
  return out;
}

NoiseTree simulate_tree(const ControlProblem& cp, const Path& p0, std::size_t end_index, const ControlStrategy& strat,
                        std::size_t node_cap) {
  cp.validate();
  cp.require_on_grid(p0);
  require(end_index >= p0.t_index() && end_index <= cp.grid.steps, ErrorKind::OutOfRange,
          "simulate_tree: end index outside [t, T]");
  NoiseTree tree;
  tree.root = p0;
  tree.depth = end_index - p0.t_index();
  tree.noise_dim = cp.grid.noise_dim;
  tree.branching = std::size_t{1} << cp.grid.noise_dim;
  require(checked_power(tree.branching, tree.depth) <= node_cap, ErrorKind::CapExceeded,
          "simulate_tree: (2^n)^depth exceeds the node cap of " + std::to_string(node_cap));

  const std::vector<Vector> incs = all_increments(tree.noise_dim, cp.dt());
  tree.levels.resize(tree.depth + 1);
  std::vector<Path> frontier{p0};
  tree.levels[0].push_back({p0.endpoint(), 0, 0, tree.depth > 0 ? checked_control(cp, strat.choose(p0)) : 0});
  for (std::size_t level = 0; level < tree.depth; ++level) {
    std::vector<Path> next_frontier;
    next_frontier.reserve(frontier.size() * tree.branching);
    auto& next_level = tree.levels[level + 1];
    next_level.reserve(frontier.size() * tree.branching);
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const Control u = cp.controls[tree.levels[level][i].control];
      for (std::size_t c = 0; c < tree.branching; ++c) {
        Path child = frontier[i].append(next_state(cp, frontier[i], u, incs[c]));
        const bool interior = level + 1 < tree.depth;
        next_level.push_back({child.endpoint(), i, c, interior ? checked_control(cp, strat.choose(child)) : 0});
        next_frontier.push_back(std::move(child));
      }
    }
    frontier = std::move(next_frontier);
  }
  return tree;
}

double bsde_step(const ControlProblem& cp, const Path& node, Control u, const std::vector<double>& child_values,
                 const std::vector<Vector>& increments, Vector* z_out) {
  const double dt = cp.dt();
  const double count = static_cast<double>(child_values.size());
  double mean = 0.0;
  Vector z = Vector::Zero(increments.front().size());
  for (std::size_t c = 0; c < child_values.size(); ++c) {
    mean += child_values[c];
    z += child_values[c] * increments[c];
  }
  mean /= count;
  z /= count * dt;
  if (z_out) *z_out = z;

  constexpr int kMaxRounds = 50;
  constexpr double kTol = 1e-13;
  double y = mean;
  for (int round = 0; round < kMaxRounds; ++round) {
    const double next = mean + cp.generator(node, y, z, u) * dt;
    require(std::isfinite(next), ErrorKind::NonFinite, "bsde: generator returned a non-finite value");
    if (std::abs(next - y) <= kTol * (1.0 + std::abs(next))) return next;
    y = next;
  }
  fail(ErrorKind::Divergence, "bsde: implicit step did not converge (Lipschitz/step-size contract violated)");
}

BsdeSolution solve_bsde_tree(const ControlProblem& cp, const NoiseTree& tree, const std::vector<double>* terminal) {
  cp.validate();
  const std::vector<Vector> incs = all_increments(tree.noise_dim, tree.dt());
  BsdeSolution sol;
  sol.y.resize(tree.depth + 1);
  sol.z.resize(tree.depth + 1);
  const std::size_t leaves = tree.leaf_count();
  if (terminal) {
    require(terminal->size() == leaves, ErrorKind::DimensionMismatch, "bsde: terminal data does not match the leaves");
    sol.y[tree.depth] = *terminal;
  } else {
    sol.y[tree.depth].resize(leaves);
    for (std::size_t i = 0; i < leaves; ++i) sol.y[tree.depth][i] = cp.terminal(tree.path(tree.depth, i));
  }
  for (double v : sol.y[tree.depth]) require(std::isfinite(v), ErrorKind::NonFinite, "bsde: terminal data not finite");
  sol.z[tree.depth].assign(leaves, Vector::Zero(static_cast<Eigen::Index>(tree.noise_dim)));

  std::vector<double> child_values(tree.branching);
  for (std::size_t level = tree.depth; level-- > 0;) {
    const std::size_t count = tree.levels[level].size();
    sol.y[level].resize(count);
    sol.z[level].resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < tree.branching; ++c) child_values[c] = sol.y[level + 1][i * tree.branching + c];
      const Control u = cp.controls[tree.levels[level][i].control];
      sol.y[level][i] = bsde_step(cp, tree.path(level, i), u, child_values, incs, &sol.z[level][i]);
    }
  }
  return sol;
}

double backward_semigroup(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat,
                          std::size_t delta_steps, const std::vector<double>& eta) {
  const NoiseTree tree = simulate_tree(cp, p0, p0.t_index() + delta_steps, strat);
  return solve_bsde_tree(cp, tree, &eta).y[0][0];
}

double backward_semigroup(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat,
                          std::size_t delta_steps, const std::function<double(const Path&)>& eta) {
  const NoiseTree tree = simulate_tree(cp, p0, p0.t_index() + delta_steps, strat);
  std::vector<double> terminal(tree.leaf_count());
  for (std::size_t i = 0; i < terminal.size(); ++i) terminal[i] = eta(tree.path(tree.depth, i));
  return solve_bsde_tree(cp, tree, &terminal).y[0][0];
}

double cost(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat) {
  cp.validate();
  cp.require_on_grid(p0);
  check_step_contract(cp, p0);
  const NoiseTree tree = simulate_tree(cp, p0, cp.final_index(), strat);
  return solve_bsde_tree(cp, tree).y[0][0];
}

double sup_semigroup(const ControlProblem& cp, const Path& p0, std::size_t delta_steps,
                     const std::function<double(const Path&)>& eta, std::size_t leaf_budget) {
  cp.validate();
  cp.require_on_grid(p0);
  require(p0.t_index() + delta_steps <= cp.grid.steps, ErrorKind::OutOfRange, "semigroup horizon beyond T");
  check_budget(cp, delta_steps, leaf_budget);
  check_step_contract(cp, p0);
  const Induction ind{cp, all_increments(cp.grid.noise_dim, cp.dt()), nullptr};
  return ind.run(p0, delta_steps, eta);
}

double value(const ControlProblem& cp, const Path& p0, std::size_t leaf_budget) {
  cp.validate();
  cp.require_on_grid(p0);
  return sup_semigroup(cp, p0, cp.grid.steps - p0.t_index(), cp.terminal, leaf_budget);
}

ValueResult value_with_policy(const ControlProblem& cp, const Path& p0, std::size_t leaf_budget) {
  cp.validate();
  cp.require_on_grid(p0);
  const std::size_t remaining = cp.grid.steps - p0.t_index();
  check_budget(cp, remaining, leaf_budget);
  check_step_contract(cp, p0);
  auto policy = std::make_shared<PolicyMap>();
  const Induction ind{cp, all_increments(cp.grid.noise_dim, cp.dt()), policy.get()};
  ValueResult result;
  result.value = ind.run(p0, remaining, cp.terminal);
  result.policy = ControlStrategy::feedback([policy](const Path& p) {
    const auto it = policy->find(policy_key(p));
    require(it != policy->end(), ErrorKind::Contract, "recorded policy queried off the value tree");
    return it->second;
  });
  return result;
}

double dpp_check(const ControlProblem& cp, const Path& p0, std::size_t delta_steps, std::size_t leaf_budget) {
  const double v = value(cp, p0, leaf_budget);
  const auto inner = [&](const Path& p) { return value(cp, p, leaf_budget); };
  const double two_stage = sup_semigroup(cp, p0, delta_steps, inner, leaf_budget);
  return std::abs(v - two_stage);
}

std::vector<OpenLoopCost> enumerate_open_loop(const ControlProblem& cp, const Path& p0, std::size_t max_sequences) {
  cp.validate();
  cp.require_on_grid(p0);
  const std::size_t depth = cp.grid.steps - p0.t_index();
  const std::size_t total = checked_power(cp.controls.size(), depth);
  require(total <= max_sequences, ErrorKind::CapExceeded, "enumerate_open_loop: too many sequences");
  std::vector<OpenLoopCost> out;
  out.reserve(total);
  std::vector<std::size_t> seq(depth, 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t j = 0; j < depth; ++j) {
      seq[j] = c % cp.controls.size();
      c /= cp.controls.size();
    }
    out.push_back({seq, cost(cp, p0, ControlStrategy::open_loop(seq, p0.t_index()))});
  }
  return out;
}

double probe_generator_lipschitz(const ControlProblem& cp, const Path& p) {
  static constexpr double kPairs[][2] = {{-1.0, 1.0}, {0.0, 0.5}, {-10.0, 10.0}, {2.0, 3.0}, {-5.0, -4.0}};
  const Vector z = Vector::Zero(static_cast<Eigen::Index>(cp.grid.noise_dim));
  double lip = 0.0;
  for (const Control u : cp.controls) {
    for (const auto& pr : kPairs) {
      const double a = cp.generator(p, pr[0], z, u);
      const double b = cp.generator(p, pr[1], z, u);
      require(std::isfinite(a) && std::isfinite(b), ErrorKind::NonFinite, "generator is not finite");
      lip = std::max(lip, std::abs(a - b) / std::abs(pr[0] - pr[1]));
    }
  }
  return lip;
}

Path random_history(const GridConfig& grid, std::size_t t_index, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const double sq = std::sqrt(grid.dt());
  Matrix values(static_cast<Eigen::Index>(grid.dim), static_cast<Eigen::Index>(t_index + 1));
  for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, 0) = scale * uniform(rng);
  for (Eigen::Index j = 1; j < values.cols(); ++j)
    for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, j) = values(i, j - 1) + scale * sq * normal(rng);
  return Path(std::move(values), grid.dt());
}

RegularityProbe regularity_probe(const ControlProblem& cp, std::size_t samples, std::uint64_t seed,
                                 std::size_t leaf_budget) {
  cp.validate();
  require(cp.grid.steps >= 1, ErrorKind::InvalidArgument, "regularity_probe: need at least one step");
  RegularityProbe out;
  const double sq = std::sqrt(cp.dt());
  for (std::size_t s = 0; s < samples; ++s) {
    // One stream per sample so that doubling the sample count nests the smaller sample.
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(sseq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, cp.grid.steps - 1)(rng);
    const Path g = random_history(cp.grid, k, rng());

    Matrix perturbed = g.values();
    if (k == 0) {
      for (Eigen::Index i = 0; i < perturbed.rows(); ++i) perturbed(i, 0) += 0.1 * normal(rng);
    } else {
      const std::size_t shared = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      Vector walk = Vector::Zero(perturbed.rows());
      for (std::size_t j = shared + 1; j <= k; ++j) {
        for (Eigen::Index i = 0; i < walk.size(); ++i) walk(i) += 0.1 * sq * normal(rng);
        perturbed.col(static_cast<Eigen::Index>(j)) += walk;
      }
    }
    const Path g2(std::move(perturbed), g.dt());
    const double gap = sup_distance(g, g2);
    const double vg = value(cp, g, leaf_budget);
    if (gap > 0.0) out.lipschitz_ratio = std::max(out.lipschitz_ratio, std::abs(vg - value(cp, g2, leaf_budget)) / gap);

    const std::size_t shift = std::uniform_int_distribution<std::size_t>(1, cp.grid.steps - k)(rng);
    const Path later = horizontal_extension(g, k + shift);
    const double scale = (1.0 + sup_norm(g)) * std::sqrt(static_cast<double>(shift) * cp.dt());
    out.time_ratio = std::max(out.time_ratio, std::abs(value(cp, later, leaf_budget) - vg) / scale);
  }
  return out;
}

double moment_ratio(const ControlProblem& cp, const Path& p0, const ControlStrategy& strat, double power,
                    std::size_t samples, std::uint64_t seed) {
  require(samples >= 1, ErrorKind::InvalidArgument, "moment_ratio: need samples");
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Path x = simulate_psde(cp, p0, strat, cp.final_index(), seed + s);
    acc += std::pow(sup_norm(x), power);
  }
  return acc / static_cast<double>(samples) / (1.0 + std::pow(sup_norm(p0), power));
}

}  // namespace pathctl
