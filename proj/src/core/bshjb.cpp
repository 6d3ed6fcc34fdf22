#include "pathctl/bshjb.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pathctl {

void AugmentedProblem::validate() const {
  grid.validate();
  require(grid.noise_dim == grid.dim, ErrorKind::DimensionMismatch, "augmented problem: noise dimension must equal d");
  require(state_dim >= 1, ErrorKind::InvalidArgument, "augmented problem: state dimension must be >= 1");
  require(!controls.empty(), ErrorKind::InvalidArgument, "augmented problem: U must be nonempty");
  require(drift && diffusion && generator && terminal, ErrorKind::InvalidArgument,
          "augmented problem: all coefficients must be set");
}

Path stack(const Path& omega, const Path& xi) {
  require(omega.t_index() == xi.t_index(), ErrorKind::InvalidArgument, "stack: paths must share their time");
  require(std::abs(omega.dt() - xi.dt()) <= 1e-12 * omega.dt(), ErrorKind::DimensionMismatch,
          "stack: paths live on different grids");
  Matrix values(omega.values().rows() + xi.values().rows(), omega.values().cols());
  values << omega.values(), xi.values();
  return Path(std::move(values), omega.dt());
}

std::pair<Path, Path> split(const Path& packed, std::size_t d) {
  const auto rows = packed.values().rows();
  const auto top = static_cast<Eigen::Index>(d);
  require(top >= 1 && top < rows, ErrorKind::DimensionMismatch, "split: bad block size");
  return {Path(packed.values().topRows(top), packed.dt()), Path(packed.values().bottomRows(rows - top), packed.dt())};
}

ControlProblem augment(const AugmentedProblem& ap) {
  ap.validate();
  const std::size_t d = ap.grid.dim;
  const std::size_t m = ap.state_dim;
  const auto omega_of = [d](const Path& p) { return Path(p.values().topRows(static_cast<Eigen::Index>(d)), p.dt()); };
  const auto x_of = [d, m](const Path& p) {
    return Vector(p.values().col(p.values().cols() - 1).segment(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m)));
  };
  const auto check_rows = [m](const Path& p, std::size_t dd) {
    require(p.dim() == dd + m, ErrorKind::DimensionMismatch, "augmented problem: path has wrong dimension");
  };

  ControlProblem cp;
  cp.grid = ap.grid;
  cp.grid.dim = d + m;
  cp.grid.noise_dim = d;
  cp.controls = ap.controls;
  cp.drift = [=](const Path& p, Control u) {
    check_rows(p, d);
    const Vector bar = ap.drift(omega_of(p), x_of(p), u);
    require(static_cast<std::size_t>(bar.size()) == m, ErrorKind::DimensionMismatch, "augmented drift has wrong size");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(d + m));
    out.tail(static_cast<Eigen::Index>(m)) = bar;
    return out;
  };
  cp.diffusion = [=](const Path& p, Control u) {
    check_rows(p, d);
    const Matrix bar = ap.diffusion(omega_of(p), x_of(p), u);
    require(static_cast<std::size_t>(bar.rows()) == m && static_cast<std::size_t>(bar.cols()) == d,
            ErrorKind::DimensionMismatch, "augmented diffusion has wrong shape");
    Matrix out(static_cast<Eigen::Index>(d + m), static_cast<Eigen::Index>(d));
    out << Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)), bar;
    return out;
  };
  cp.generator = [=](const Path& p, double y, const Vector& z, Control u) {
    check_rows(p, d);
    return ap.generator(omega_of(p), x_of(p), y, z, u);
  };
  cp.terminal = [=](const Path& p) {
    check_rows(p, d);
    return ap.terminal(omega_of(p), x_of(p));
  };
  return cp;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

// Plain recursion over the omega tree; shares no code with the control module's solver.
struct ReducedBsde {
  const AugmentedProblem& ap;
  Vector x;
  Control u;
  double dt;

  double solve(const Path& omega, std::size_t remaining, Vector* z_root) const {
    if (remaining == 0) return ap.terminal(omega, x);
    const std::size_t d = ap.grid.dim;
    const std::size_t branches = std::size_t{1} << d;
    const double s = std::sqrt(dt);
    double mean = 0.0;
    Vector z = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < branches; ++c) {
      Vector inc(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) inc(static_cast<Eigen::Index>(j)) = ((c >> j) & 1U) ? -s : s;
      const double y = solve(omega.append(omega.endpoint() + inc), remaining - 1, nullptr);
      mean += y;
      z += y * inc;
    }
    mean /= static_cast<double>(branches);
    z /= static_cast<double>(branches) * dt;
    if (z_root) *z_root = z;

    double y = mean;
    for (int it = 0; it < 200; ++it) {
      const double next = mean + ap.generator(omega, x, y, z, u) * dt;
      const bool done = std::abs(next - y) <= 1e-15 * (1.0 + std::abs(next));
      y = next;
      if (done) return y;
    }
    fail(ErrorKind::Divergence, "remark64: Picard iteration for the reduced BSDE did not converge");
  }
};

}  // namespace

void require_x_u_independent(const AugmentedProblem& ap, const Path& omega) {
  ap.validate();
  const auto m = static_cast<Eigen::Index>(ap.state_dim);
  const Vector z = Vector::Constant(static_cast<Eigen::Index>(ap.grid.dim), 0.1);
  const Vector base = Vector::Zero(m);
  const Vector probes[] = {base, Vector::Constant(m, 1.0), Vector::Constant(m, -0.7), Vector::LinSpaced(m, 0.3, 2.3)};
  const Path terminal_omega = horizontal_extension(omega, ap.grid.steps);
  const double q0 = ap.generator(omega, base, 0.2, z, ap.controls.front());
  const double phi0 = ap.terminal(terminal_omega, base);
  const char* msg = "remark64: generator or terminal data depend on x or u";
  for (const Vector& x : probes) {
    require(close(ap.terminal(terminal_omega, x), phi0), ErrorKind::Contract, msg);
    for (const Control u : ap.controls) require(close(ap.generator(omega, x, 0.2, z, u), q0), ErrorKind::Contract, msg);
  }
}

Remark64Result remark64_check(const AugmentedProblem& ap, const Path& omega, const Vector& x, std::size_t leaf_budget) {
  ap.validate();
  require(omega.dim() == ap.grid.dim, ErrorKind::DimensionMismatch, "remark64: omega has wrong dimension");
  require(static_cast<std::size_t>(x.size()) == ap.state_dim, ErrorKind::DimensionMismatch,
          "remark64: x has wrong dimension");
  require(omega.t_index() <= ap.grid.steps, ErrorKind::OutOfRange, "remark64: omega beyond the horizon");
  require_x_u_independent(ap, omega);

  Remark64Result out;
  const ReducedBsde reduced{ap, x, ap.controls.front(), ap.grid.dt()};
  Vector z = Vector::Zero(static_cast<Eigen::Index>(ap.grid.dim));
  out.bsde_value = reduced.solve(omega, ap.grid.steps - omega.t_index(), &z);
  out.bsde_z = z.norm();

  const Path xi = Path::constant(x, omega.t_index(), omega.dt());
  out.augmented_value = value(augment(ap), stack(omega, xi), leaf_budget);
  out.residual = std::abs(out.bsde_value - out.augmented_value);
  return out;
}

double bshjb_residual(const AugmentedProblem& ap, const BivariateFunctional& v, const Path& omega, const Vector& x,
                      const FDScheme& scheme) {
  ap.validate();
  require(omega.dim() == ap.grid.dim, ErrorKind::DimensionMismatch, "bshjb_residual: omega has wrong dimension");
  require(static_cast<std::size_t>(x.size()) == ap.state_dim, ErrorKind::DimensionMismatch,
          "bshjb_residual: x has wrong dimension");
  require(omega.t_index() < ap.grid.steps, ErrorKind::OutOfRange, "bshjb_residual: omega must be interior (t < T)");
  const auto d = static_cast<Eigen::Index>(ap.grid.dim);
  const auto m = static_cast<Eigen::Index>(ap.state_dim);

  PathFunctional in_omega;
  in_omega.eval = [&](const Path& w) { return v(w, x); };
  const double hw = scheme.vertical_step(omega);
  const double hx = 1e-4 * (1.0 + x.norm());

  const double vt = v.dt ? v.dt(omega, x) : horizontal_derivative(in_omega, omega, scheme, ap.grid.steps);
  const Vector vg = v.dgamma ? v.dgamma(omega, x) : vertical_gradient(in_omega, omega, scheme);
  const Matrix vgg = v.dgammagamma ? v.dgammagamma(omega, x) : vertical_hessian(in_omega, omega, scheme);

  const auto ex = [&](Eigen::Index i, double h) {
    Vector e = Vector::Zero(m);
    e(i) = h;
    return e;
  };
  const auto ew = [&](Eigen::Index j, double h) {
    Vector e = Vector::Zero(d);
    e(j) = h;
    return e;
  };

  Vector vx(m);
  Matrix vxx(m, m);
  if (v.dx) {
    vx = v.dx(omega, x);
  } else {
    for (Eigen::Index i = 0; i < m; ++i) vx(i) = (v(omega, x + ex(i, hx)) - v(omega, x - ex(i, hx))) / (2.0 * hx);
  }
  if (v.dxx) {
    vxx = v.dxx(omega, x);
  } else {
    const double center = v(omega, x);
    for (Eigen::Index i = 0; i < m; ++i) {
      vxx(i, i) = (v(omega, x + ex(i, hx)) - 2.0 * center + v(omega, x - ex(i, hx))) / (hx * hx);
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const Vector a = ex(i, hx), b = ex(j, hx);
        vxx(i, j) = vxx(j, i) =
            (v(omega, x + a + b) - v(omega, x + a - b) - v(omega, x - a + b) + v(omega, x - a - b)) / (4.0 * hx * hx);
      }
    }
  }
  Matrix vxg(m, d);
  if (v.dxgamma) {
    vxg = v.dxgamma(omega, x);
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const Path up = vertical_bump(omega, ew(j, hw));
        const Path down = vertical_bump(omega, ew(j, -hw));
        const Vector a = ex(i, hx);
        vxg(i, j) = (v(up, x + a) - v(up, x - a) - v(down, x + a) + v(down, x - a)) / (4.0 * hx * hw);
      }
    }
  }

  const double value_here = v(omega, x);
  double best = -std::numeric_limits<double>::infinity();
  for (const Control u : ap.controls) {
    const Vector b = ap.drift(omega, x, u);
    const Matrix sigma = ap.diffusion(omega, x, u);
    const double h = vx.dot(b) + 0.5 * (vxx * sigma * sigma.transpose()).trace() + 0.5 * vgg.trace() +
                     (sigma.transpose() * vxg).trace() + ap.generator(omega, x, value_here, vg + sigma.transpose() * vx, u);
    require(std::isfinite(h), ErrorKind::NonFinite, "bshjb_residual: non-finite Hamiltonian summand");
    best = std::max(best, h);
  }
  return vt + best;
}

PathFunctional lift(const BivariateFunctional& v, std::size_t d) {
  PathFunctional f;
  f.eval = [v, d](const Path& p) {
    const auto [omega, xi] = split(p, d);
    return v(omega, xi.endpoint());
  };
  return f;
}

}  // namespace pathctl
