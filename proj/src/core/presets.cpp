#include "pathctl/presets.hpp"

#include "pathctl/error.hpp"
#include "pathctl/expr.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace pathctl {

ControlProblem build_problem(const ProblemSpec& spec) {
  spec.grid.validate();
  const std::size_t d = spec.grid.dim;
  const std::size_t n = spec.grid.noise_dim;
  require(!spec.controls.empty(), ErrorKind::Config, "problem: controls must be a nonempty list");
  require(spec.drift.size() == d, ErrorKind::Config, "problem: drift needs " + std::to_string(d) + " entries");
  require(spec.diffusion.size() == d, ErrorKind::Config, "problem: diffusion needs " + std::to_string(d) + " rows");
  for (const auto& row : spec.diffusion)
    require(row.size() == n, ErrorKind::Config, "problem: diffusion rows need " + std::to_string(n) + " entries");

  std::vector<Expression> drift;
  for (const auto& s : spec.drift) drift.push_back(Expression::parse(s, d, n));
  std::vector<Expression> diffusion;
  for (const auto& row : spec.diffusion)
    for (const auto& s : row) diffusion.push_back(Expression::parse(s, d, n));
  const Expression generator = Expression::parse(spec.generator, d, n);
  const Expression terminal = Expression::parse(spec.terminal, d, n);
  const double horizon = spec.grid.horizon;

  ControlProblem cp;
  cp.grid = spec.grid;
  cp.controls = spec.controls;
  cp.drift = [drift, horizon](const Path& p, Control u) {
    Vector out(static_cast<Eigen::Index>(drift.size()));
    for (std::size_t i = 0; i < drift.size(); ++i) out(static_cast<Eigen::Index>(i)) = drift[i]({&p, horizon, u});
    return out;
  };
  cp.diffusion = [diffusion, horizon, d, n](const Path& p, Control u) {
    Matrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = diffusion[i * n + j]({&p, horizon, u});
    return out;
  };
  cp.generator = [generator, horizon](const Path& p, double y, const Vector& z, Control u) {
    return generator({&p, horizon, u, y, &z});
  };
  cp.terminal = [terminal, horizon](const Path& p) { return terminal({&p, horizon}); };
  return cp;
}

namespace {

ProblemSpec scalar(std::string name, std::string description, std::vector<Control> controls, std::string drift,
                   std::string diffusion, std::string generator, std::string terminal) {
  ProblemSpec s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.controls = std::move(controls);
  s.drift = {std::move(drift)};
  s.diffusion = {{std::move(diffusion)}};
  s.generator = std::move(generator);
  s.terminal = std::move(terminal);
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parenthesized so that negative constants compose safely.
std::string term(double v) { return "(" + num(v) + ")"; }

}  // namespace

const std::vector<ProblemSpec>& presets() {
  static const std::vector<ProblemSpec> all = {
      scalar("lq", "b = u, sigma = 1, q = -u^2, phi = x(T), U = {0, 0.5, 1}", {0.0, 0.5, 1.0}, "u", "1", "-u^2",
             "x1"),
      scalar("heat", "b = 0, sigma = 1, q = 0, phi = x(T)^2", {0.0}, "0", "1", "0", "x1^2"),
      scalar("bangbang", "b = u in {-1, 1}, sigma = 1, q = 0, phi = |x(T)|", {-1.0, 1.0}, "u", "1", "0", "abs(x1)"),
      scalar("deterministic", "b = u in {-1, 0.5, 1}, sigma = 0, q = -u^2, phi = x(T)", {-1.0, 0.5, 1.0}, "u", "0",
             "-u^2", "x1"),
      scalar("lookback", "b = u, sigma = 1, q = -u^2, phi = max_s x(s), U = {0, 0.5, 1}", {0.0, 0.5, 1.0}, "u", "1",
             "-u^2", "m1"),
      scalar("linear-y", "b = 0, sigma = 1, q = 0.5 y + u - u^2, phi = x(T), U = {0, 0.5}", {0.0, 0.5}, "0", "1",
             "0.5*y + u - u^2", "x1"),
  };
  return all;
}

ProblemSpec preset(const std::string& name) {
  for (const auto& s : presets())
    if (s.name == name) return s;
  std::string known;
  for (const auto& s : presets()) known += (known.empty() ? "" : ", ") + s.name;
  fail(ErrorKind::Config, "unknown preset '" + name + "' (known: " + known + ")");
}

namespace {

// Constants are drawn in a fixed order before any string is assembled.
std::vector<double> draws(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = c(rng);
  return out;
}

std::vector<Control> draw_controls(std::mt19937_64& rng, int lo, int hi) {
  const int n = std::uniform_int_distribution<int>(lo, hi)(rng);
  return draws(rng, static_cast<std::size_t>(n));
}

// Maps a draw in [-1, 1] to [0.3, 1.2].
double positive(double v) { return 0.75 + 0.45 * v; }

}  // namespace

ProblemSpec random_spec(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  const std::vector<Control> controls = draw_controls(rng, 2, 3);
  const std::vector<double> k = draws(rng, 15);
  ProblemSpec s = scalar(
      "random-" + std::to_string(seed), "random path-dependent instance", controls,
      term(k[0]) + " + " + term(k[1]) + "*u + " + term(0.5 * k[2]) + "*sin(x1) + " + term(0.3 * k[3]) + "*m1",
      term(positive(k[4])) + " + " + term(0.3 * k[5]) + "*u + " + term(0.2 * k[6]) + "*cos(a1)",
      term(0.5 * k[7]) + "*y + " + term(0.5 * k[8]) + "*z1 + " + term(k[9]) + "*u - " + term(positive(k[10])) +
          "*u^2 + " + term(0.5 * k[11]) + "*cos(m1)",
      term(k[12]) + "*x1 + " + term(0.5 * k[13]) + "*m1 + " + term(0.5 * k[14]) + "*sin(a1)");
  s.grid.steps = steps;
  return s;
}

ProblemSpec random_linear_spec(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  const std::vector<Control> controls = draw_controls(rng, 2, 4);
  const std::vector<double> k = draws(rng, 7);
  ProblemSpec s = scalar("random-linear-" + std::to_string(seed), "random instance with a path-independent argmax",
                         controls, term(k[0]) + " + " + term(k[1]) + "*u", term(positive(k[2])),
                         term(0.5 * k[3]) + "*y + " + term(k[4]) + "*u - " + term(positive(k[5])) + "*u^2",
                         term(k[6]) + "*x1");
  s.grid.steps = steps;
  return s;
}

AugmentedProblem random_augmented(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> small(1, 2);
  AugmentedProblem ap;
  ap.grid.steps = steps;
  ap.grid.dim = ap.grid.noise_dim = small(rng);
  ap.state_dim = small(rng);
  ap.controls = draw_controls(rng, 2, 3);
  const std::vector<double> k = draws(rng, 10);
  const auto d = static_cast<Eigen::Index>(ap.grid.dim);
  const auto m = static_cast<Eigen::Index>(ap.state_dim);

  ap.drift = [k, m](const Path& omega, const Vector& x, Control u) {
    Vector out(m);
    for (Eigen::Index i = 0; i < m; ++i) out(i) = k[0] * u + k[1] * std::sin(x(i)) + 0.5 * k[2] * omega.endpoint()(0);
    return out;
  };
  ap.diffusion = [k, m, d](const Path& omega, const Vector& x, Control u) {
    Matrix out(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        out(i, j) = (i == j ? positive(k[3]) : 0.2 * k[4]) + 0.2 * k[5] * u * std::cos(x(i) + omega.endpoint()(j));
    return out;
  };
  ap.generator = [k](const Path& omega, const Vector&, double y, const Vector& z, Control) {
    return 0.5 * k[6] * y + 0.5 * k[7] * z.sum() + std::cos(omega.endpoint()(0));
  };
  ap.terminal = [k](const Path& omega, const Vector&) {
    return k[8] * omega.endpoint().sum() + sup_norm(omega) + 0.5 * k[9] * omega.values().row(0).mean();
  };
  return ap;
}

std::vector<ClassicalSolution> classical_solutions(std::size_t steps, double horizon) {
  ControlProblem base;
  base.grid.steps = steps;
  base.grid.horizon = horizon;
  base.grid.validate();
  base.controls = {0.0};
  base.drift = [](const Path&, Control) { return Vector::Zero(1).eval(); };
  base.diffusion = [](const Path&, Control) { return Matrix::Identity(1, 1).eval(); };
  base.generator = [](const Path&, double, const Vector&, Control) { return 0.0; };
  const auto zero_dt = [](const Path&) { return 0.0; };
  const auto zero_dxx = [](const Path&) { return Matrix::Zero(1, 1).eval(); };
  const auto running_sum = [](const Path& p) { return p.values().row(0).sum() * p.dt(); };

  std::vector<ClassicalSolution> out;

  ClassicalSolution endpoint{"endpoint", base, {}};
  endpoint.problem.terminal = [](const Path& p) { return p.endpoint()(0); };
  endpoint.solution.eval = endpoint.problem.terminal;
  endpoint.solution.analytic_dt = zero_dt;
  endpoint.solution.analytic_dx = [](const Path&) { return Vector::Ones(1).eval(); };
  endpoint.solution.analytic_dxx = zero_dxx;
  out.push_back(std::move(endpoint));

  ClassicalSolution integral{"integral", base, {}};
  integral.problem.terminal = running_sum;
  integral.solution.eval = [running_sum, horizon](const Path& p) {
    return running_sum(p) + p.endpoint()(0) * (horizon - p.time());
  };
  integral.solution.analytic_dt = zero_dt;
  integral.solution.analytic_dx = [horizon](const Path& p) {
    return Vector::Constant(1, p.dt() + horizon - p.time()).eval();
  };
  integral.solution.analytic_dxx = zero_dxx;
  out.push_back(std::move(integral));

  ClassicalSolution heat{"heat", base, {}};
  heat.problem.terminal = [](const Path& p) { return p.endpoint()(0) * p.endpoint()(0); };
  heat.solution.eval = [horizon](const Path& p) {
    return p.endpoint()(0) * p.endpoint()(0) + (horizon - p.time());
  };
  heat.solution.analytic_dt = [](const Path&) { return -1.0; };
  heat.solution.analytic_dx = [](const Path& p) { return Vector(2.0 * p.endpoint()); };
  heat.solution.analytic_dxx = [](const Path&) { return Matrix::Constant(1, 1, 2.0).eval(); };
  out.push_back(std::move(heat));
  return out;
}

}  // namespace pathctl
