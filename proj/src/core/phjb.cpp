#include "pathctl/phjb.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace pathctl {

HamiltonianValue hamiltonian(const ControlProblem& cp, const HamiltonianInput& in) {
  cp.validate();
  const auto d = static_cast<Eigen::Index>(cp.grid.dim);
  require(in.path.dim() == cp.grid.dim && in.p.size() == d && in.l.rows() == d && in.l.cols() == d,
          ErrorKind::DimensionMismatch, "hamiltonian: argument dimensions do not match the problem");
  require((in.l - in.l.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + in.l.cwiseAbs().maxCoeff()),
          ErrorKind::InvalidArgument, "hamiltonian: l must be symmetric");
  HamiltonianValue out{-std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < cp.controls.size(); ++i) {
    const Control u = cp.controls[i];
    const Vector b = cp.drift(in.path, u);
    const Matrix sigma = cp.diffusion(in.path, u);
    const double v = in.p.dot(b) + 0.5 * (in.l * sigma * sigma.transpose()).trace() +
                     cp.generator(in.path, in.r, sigma.transpose() * in.p, u);
    require(std::isfinite(v), ErrorKind::NonFinite, "hamiltonian: non-finite summand");
    if (v > out.value) out = {v, i};
  }
  return out;
}

Derivatives derivatives(const PathFunctional& f, const Path& p, const FDScheme& scheme,
                        std::optional<std::size_t> last_index) {
  Derivatives d;
  d.dt = f.analytic_dt ? f.analytic_dt(p) : horizontal_derivative(f, p, scheme, last_index);
  d.dx = f.analytic_dx ? f.analytic_dx(p) : vertical_gradient(f, p, scheme);
  d.dxx = f.analytic_dxx ? f.analytic_dxx(p) : vertical_hessian(f, p, scheme);
  return d;
}

double generator(const ControlProblem& cp, const PathFunctional& phi, const Path& p, Control u,
                 const FDScheme& scheme) {
  cp.validate();
  cp.require_on_grid(p);
  const Derivatives d = derivatives(phi, p, scheme, cp.final_index());
  const Vector b = cp.drift(p, u);
  const Matrix sigma = cp.diffusion(p, u);
  return d.dt + d.dx.dot(b) + 0.5 * (d.dxx * sigma * sigma.transpose()).trace() +
         cp.generator(p, phi(p), sigma.transpose() * d.dx, u);
}

double phjb_residual(const ControlProblem& cp, const PathFunctional& v, const Path& p, const FDScheme& scheme) {
  cp.validate();
  cp.require_on_grid(p);
  require(p.t_index() < cp.final_index(), ErrorKind::OutOfRange, "phjb_residual: path must be interior (t < T)");
  const Derivatives d = derivatives(v, p, scheme, cp.final_index());
  return d.dt + hamiltonian(cp, {p, v(p), d.dx, d.dxx}).value;
}

std::vector<Path> probe_cloud(const GridConfig& grid, const Path& p, const CloudSpec& spec) {
  require(spec.min_radius > 0.0 && spec.max_radius >= spec.min_radius, ErrorKind::InvalidArgument,
          "probe_cloud: radii must satisfy 0 < min <= max");
  require(p.t_index() <= grid.steps, ErrorKind::OutOfRange, "probe_cloud: path beyond the horizon");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> when(p.t_index(), grid.steps);
  std::uniform_real_distribution<double> log_radius(std::log(spec.min_radius), std::log(spec.max_radius));
  const double sq = std::sqrt(p.dt());

  std::vector<Path> cloud;
  cloud.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const std::size_t k = when(rng);
    const double r = std::exp(log_radius(rng));
    Matrix values(p.values().rows(), static_cast<Eigen::Index>(k + 1));
    values.leftCols(p.values().cols()) = p.values();
    if (i % 2 == 1) {
      for (Eigen::Index j = 0; j < p.values().cols(); ++j)
        for (Eigen::Index c = 0; c < values.rows(); ++c) values(c, j) += r * normal(rng);
    }
    for (auto j = p.values().cols(); j < values.cols(); ++j)
      for (Eigen::Index c = 0; c < values.rows(); ++c) values(c, j) = values(c, j - 1) + r * sq * normal(rng);
    cloud.emplace_back(std::move(values), p.dt());
  }
  return cloud;
}

namespace {

ViscosityProbe probe(const ControlProblem& cp, const PathFunctional& w, const PathFunctional& test, const Path& p,
                     const CloudSpec& cloud, const FDScheme& scheme, bool sub) {
  cp.validate();
  cp.require_on_grid(p);
  require(p.t_index() < cp.final_index(), ErrorKind::OutOfRange, "viscosity probe: path must be interior (t < T)");
  // Sub: max of (w - phi) is 0 at p. Super: min of (w + phi) is 0 at p.
  const auto gap = [&](const Path& q) { return sub ? w(q) - test(q) : -(w(q) + test(q)); };

  ViscosityProbe out;
  out.gap_at_point = gap(p);
  out.cloud_excess = -std::numeric_limits<double>::infinity();
  for (const Path& q : probe_cloud(cp.grid, p, cloud)) out.cloud_excess = std::max(out.cloud_excess, gap(q));
  out.is_touch_point = std::abs(out.gap_at_point) <= kTouchTolerance && out.cloud_excess <= kTouchTolerance;

  const Derivatives d = derivatives(test, p, scheme, cp.final_index());
  const double sign = sub ? 1.0 : -1.0;
  out.residual = sign * d.dt + hamiltonian(cp, {p, sign * test(p), sign * d.dx, sign * d.dxx}).value;
  return out;
}

Path refine(const Path& p) {
  const Eigen::Index n = p.values().cols();
  Matrix values(p.values().rows(), 2 * n - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    values.col(2 * j) = p.values().col(j);
    if (j + 1 < n) values.col(2 * j + 1) = 0.5 * (p.values().col(j) + p.values().col(j + 1));
  }
  return Path(std::move(values), 0.5 * p.dt());
}

Path state_path(double x, std::size_t k, double dt) { return Path::constant(Vector::Constant(1, x), k, dt); }

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

bool close(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         ((a - b).cwiseAbs().array() <= 1e-12 * (1.0 + a.cwiseAbs().array() + b.cwiseAbs().array())).all();
}

}  // namespace

ViscosityProbe subsolution_probe(const ControlProblem& cp, const PathFunctional& w, const PathFunctional& test,
                                 const Path& p, const CloudSpec& cloud, const FDScheme& scheme) {
  return probe(cp, w, test, p, cloud, scheme, true);
}

ViscosityProbe supersolution_probe(const ControlProblem& cp, const PathFunctional& w, const PathFunctional& test,
                                   const Path& p, const CloudSpec& cloud, const FDScheme& scheme) {
  return probe(cp, w, test, p, cloud, scheme, false);
}

PathFunctional fitted_test_functional(const PathFunctional& w, const Path& p, double kappa, int side,
                                      std::size_t last_index, const FDScheme& scheme) {
  require(side == 1 || side == -1, ErrorKind::InvalidArgument, "fitted test functional: side must be +1 or -1");
  require(kappa >= 0.0, ErrorKind::InvalidArgument, "fitted test functional: kappa must be nonnegative");
  const Derivatives d = derivatives(w, p, scheme, last_index);
  const double w0 = w(p);
  const double t0 = p.time();
  const Vector x0 = p.endpoint();
  const Matrix c = 0.5 * (d.dxx + d.dxx.transpose());
  const PathFunctional gauge = upsilon_bar_functional(p);
  const double k = side * kappa;

  PathFunctional f;
  f.eval = [=](const Path& q) {
    const Vector e = q.endpoint() - x0;
    return w0 + d.dt * (q.time() - t0) + d.dx.dot(e) + 0.5 * e.dot(c * e) + k * gauge(q);
  };
  f.analytic_dt = [=](const Path& q) { return d.dt + k * gauge.analytic_dt(q); };
  f.analytic_dx = [=](const Path& q) { return Vector(d.dx + c * (q.endpoint() - x0) + k * gauge.analytic_dx(q)); };
  f.analytic_dxx = [=](const Path& q) { return Matrix(c + k * gauge.analytic_dxx(q)); };
  return f;
}

PathFunctional negated(const PathFunctional& f) {
  PathFunctional out;
  out.eval = [f](const Path& q) { return -f(q); };
  if (f.analytic_dt) out.analytic_dt = [f](const Path& q) { return -f.analytic_dt(q); };
  if (f.analytic_dx) out.analytic_dx = [f](const Path& q) { return Vector(-f.analytic_dx(q)); };
  if (f.analytic_dxx) out.analytic_dxx = [f](const Path& q) { return Matrix(-f.analytic_dxx(q)); };
  return out;
}

void require_state_dependent(const ControlProblem& cp, std::uint64_t seed) {
  cp.validate();
  const std::size_t steps = cp.grid.steps;
  const std::size_t times[] = {0, steps / 2, steps - 1, steps};
  const Vector z = Vector::Constant(static_cast<Eigen::Index>(cp.grid.noise_dim), 0.25);
  for (std::size_t trial = 0; trial < 4; ++trial) {
    for (std::size_t k : times) {
      if (k == 0) continue;  // a single-node history has nothing to vary
      const Path a = random_history(cp.grid, k, seed + 2 * trial);
      Matrix other = random_history(cp.grid, k, seed + 2 * trial + 1).values();
      other.col(other.cols() - 1) = a.endpoint();
      const Path b(std::move(other), a.dt());
      const char* msg = "coefficients depend on the history, not only on (t, x(t))";
      if (k == steps) {
        require(close(cp.terminal(a), cp.terminal(b)), ErrorKind::Contract, msg);
        continue;
      }
      for (const Control u : cp.controls) {
        require(close(cp.drift(a, u), cp.drift(b, u)), ErrorKind::Contract, msg);
        require(close(cp.diffusion(a, u), cp.diffusion(b, u)), ErrorKind::Contract, msg);
        require(close(cp.generator(a, 0.3, z, u), cp.generator(b, 0.3, z, u)), ErrorKind::Contract, msg);
      }
    }
  }
}

double MarkovSolution::interpolate(std::size_t k, double x) const {
  require(k < levels.size(), ErrorKind::OutOfRange, "markov: time index outside the grid");
  require(x >= spec.x_min && x <= spec.x_max, ErrorKind::OutOfRange, "markov: x outside the spatial grid");
  const std::size_t n = nodes();
  const std::size_t i = std::min(static_cast<std::size_t>((x - spec.x_min) / spec.dx), n - 2);
  const double w = (x - node(i)) / spec.dx;
  return (1.0 - w) * levels[k][i] + w * levels[k][i + 1];
}

double MarkovSolution::interpolation_bound(std::size_t k, double x) const {
  require(k < levels.size(), ErrorKind::OutOfRange, "markov: time index outside the grid");
  const std::size_t n = nodes();
  const auto i = static_cast<std::ptrdiff_t>(std::min(static_cast<std::size_t>((x - spec.x_min) / spec.dx), n - 2));
  const auto& v = levels[k];
  double second = 0.0;
  for (std::ptrdiff_t j = i - 1; j <= i + 2; ++j) {
    const auto c = std::clamp<std::ptrdiff_t>(j, 1, static_cast<std::ptrdiff_t>(n) - 2);
    second = std::max(second, std::abs((v[c + 1] + v[c - 1]) - 2.0 * v[c]));
  }
  return second / 8.0;
}

MarkovSolution markov_fd_solve(const ControlProblem& cp, const MarkovGridSpec& spec) {
  cp.validate();
  require(cp.grid.dim == 1 && cp.grid.noise_dim == 1, ErrorKind::InvalidArgument,
          "markov_fd_solve: only d = n = 1 is supported");
  require(spec.dx > 0.0 && spec.x_max > spec.x_min, ErrorKind::InvalidArgument, "markov_fd_solve: bad spatial grid");
  require_state_dependent(cp);

  const std::size_t n = static_cast<std::size_t>(std::floor((spec.x_max - spec.x_min) / spec.dx + 0.5)) + 1;
  require(n >= 4, ErrorKind::InvalidArgument, "markov_fd_solve: need at least 4 spatial nodes");
  const std::size_t steps = cp.grid.steps;
  const double dt = cp.dt();
  const double dx = spec.dx;

  MarkovSolution sol;
  sol.spec = spec;
  sol.spec.x_max = spec.x_min + static_cast<double>(n - 1) * dx;
  sol.dt = dt;
  const auto x_at = [&](std::size_t i) { return spec.x_min + static_cast<double>(i) * dx; };

  // Coefficients b, sigma per (k, i, u); q is evaluated inside the sweep.
  const std::size_t nu = cp.controls.size();
  std::vector<double> bs(steps * n * nu), ss(steps * n * nu);
  std::vector<Path> paths;
  paths.reserve(steps * n);
  double rate = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      paths.push_back(state_path(x_at(i), k, dt));
      for (std::size_t a = 0; a < nu; ++a) {
        const std::size_t idx = (k * n + i) * nu + a;
        bs[idx] = cp.drift(paths.back(), cp.controls[a])(0);
        ss[idx] = cp.diffusion(paths.back(), cp.controls[a])(0, 0);
        require(std::isfinite(bs[idx]) && std::isfinite(ss[idx]), ErrorKind::NonFinite,
                "markov_fd_solve: non-finite coefficient");
        rate = std::max(rate, ss[idx] * ss[idx] / (dx * dx) + std::abs(bs[idx]) / dx);
      }
    }
  }
  if (spec.substeps == 0) {
    sol.substeps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt * rate * (1.0 + 1e-12))));
  } else {
    sol.substeps = spec.substeps;
    require(dt / static_cast<double>(sol.substeps) * rate <= 1.0, ErrorKind::Contract,
            "markov_fd_solve: CFL condition violated (need at least " +
                std::to_string(static_cast<std::size_t>(std::ceil(dt * rate))) + " substeps)");
  }
  const double tau = dt / static_cast<double>(sol.substeps);

  sol.levels.assign(steps + 1, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    sol.levels[steps][i] = cp.terminal(state_path(x_at(i), steps, dt));
    require(std::isfinite(sol.levels[steps][i]), ErrorKind::NonFinite, "markov_fd_solve: non-finite terminal value");
  }

  std::vector<double> cur, next(n);
  Vector z(1);
  for (std::size_t k = steps; k-- > 0;) {
    cur = sol.levels[k + 1];
    for (std::size_t s = 0; s < sol.substeps; ++s) {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double fwd = (cur[i + 1] - cur[i]) / dx;
        const double bwd = (cur[i] - cur[i - 1]) / dx;
        const double second = ((cur[i + 1] + cur[i - 1]) - 2.0 * cur[i]) / (dx * dx);
        const double central = (cur[i + 1] - cur[i - 1]) / (2.0 * dx);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < nu; ++a) {
          const std::size_t idx = (k * n + i) * nu + a;
          const double b = bs[idx];
          const double sg = ss[idx];
          z(0) = sg * central;
          const double h = (b > 0.0 ? b * fwd : b * bwd) + 0.5 * sg * sg * second +
                           cp.generator(paths[k * n + i], cur[i], z, cp.controls[a]);
          best = std::max(best, h);
        }
        next[i] = cur[i] + tau * best;
      }
      next[0] = 2.0 * next[1] - next[2];
      next[n - 1] = 2.0 * next[n - 2] - next[n - 3];
      std::swap(cur, next);
    }
    for (double v : cur) require(std::isfinite(v), ErrorKind::NonFinite, "markov_fd_solve: scheme blew up");
    sol.levels[k] = cur;
  }
  return sol;
}

MarkovConsistency markov_consistency(const ControlProblem& cp, const Path& p, const MarkovGridSpec& spec,
                                     std::size_t leaf_budget) {
  cp.validate();
  cp.require_on_grid(p);
  const std::size_t k = p.t_index();
  const double x = p.endpoint()(0);

  MarkovConsistency out;
  out.tree_value = value(cp, p, leaf_budget);
  const MarkovSolution fine = markov_fd_solve(cp, spec);
  out.fd_value = fine.interpolate(k, x);
  out.interpolation_error = fine.interpolation_bound(k, x);

  // Scheme error estimate from the nodes shared with a grid of spacing 2 dx.
  MarkovGridSpec coarse_spec = spec;
  coarse_spec.dx = 2.0 * spec.dx;
  const MarkovSolution coarse = markov_fd_solve(cp, coarse_spec);
  const std::size_t ic = std::min(static_cast<std::size_t>((x - coarse.spec.x_min) / coarse.spec.dx),
                                  coarse.nodes() - 2);
  for (std::size_t j = ic; j <= ic + 1; ++j) {
    const std::size_t fi = 2 * j;
    if (fi < fine.nodes()) out.fd_error = std::max(out.fd_error, std::abs(fine.levels[k][fi] - coarse.levels[k][j]));
  }

  ControlProblem half = cp;
  half.grid.steps = 2 * cp.grid.steps;
  out.tree_error = std::abs(out.tree_value - value(half, refine(p), leaf_budget));

  out.residual = std::abs(out.tree_value - out.fd_value);
  out.bound = out.interpolation_error + out.fd_error + out.tree_error;
  return out;
}

double comparison_psi(const PathFunctional& w1, const PathFunctional& w2, const Path& p, const Path& q, double beta,
                      double eps, double nu, double horizon, const GaugeParams& g) {
  require_comparable(p, q);
  require(p.t_index() == q.t_index(), ErrorKind::InvalidArgument, "comparison_psi: pair must share its time");
  require(beta > 0.0 && eps > 0.0, ErrorKind::InvalidArgument, "comparison_psi: beta and eps must be positive");
  require(nu > 1.0 && horizon > 0.0, ErrorKind::InvalidArgument, "comparison_psi: need nu > 1 and T > 0");
  const double t = p.time();
  const double weight = eps * (nu * horizon - t) / (nu * horizon);
  return w1(p) - w2(q) - beta * upsilon(p, q, g) - std::cbrt(beta) * (p.endpoint() - q.endpoint()).squaredNorm() -
         weight * (upsilon_norm(p, g) + upsilon_norm(q, g));
}

Path pack_pair(const Path& p, const Path& q) {
  require_comparable(p, q);
  require(p.t_index() == q.t_index(), ErrorKind::InvalidArgument, "pack_pair: pair must share its time");
  Matrix values(p.values().rows() * 2, p.values().cols());
  values << p.values(), q.values();
  return Path(std::move(values), p.dt());
}

std::pair<Path, Path> unpack_pair(const Path& packed) {
  const Eigen::Index rows = packed.values().rows();
  require(rows % 2 == 0, ErrorKind::DimensionMismatch, "unpack_pair: packed dimension must be even");
  const Eigen::Index d = rows / 2;
  return {Path(packed.values().topRows(d), packed.dt()), Path(packed.values().bottomRows(d), packed.dt())};
}

double pair_gauge(const Path& a, const Path& b, const GaugeParams& g) {
  const auto [ga, ea] = unpack_pair(a);
  const auto [gb, eb] = unpack_pair(b);
  const double gap = a.time() - b.time();
  return upsilon(ga, gb, g) + upsilon(ea, eb, g) + gap * gap;
}

}  // namespace pathctl
