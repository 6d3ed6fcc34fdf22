#include "doctest.h"

#include "pathctl/bshjb.hpp"
#include "pathctl/error.hpp"
#include "pathctl/phjb.hpp"
#include "pathctl/presets.hpp"
#include "support.hpp"

#include <cmath>

using namespace pathctl;
using testsupport::error_kind;
using testsupport::random_path;
using testsupport::scalar_path;
using testsupport::vec;

namespace {

// d = m = 1 with constant coefficients.
AugmentedProblem scalar_augmented(double b, double sigma, double q) {
  AugmentedProblem ap;
  ap.controls = {0.0};
  ap.drift = [b](const Path&, const Vector&, Control u) { return vec({b + u}); };
  ap.diffusion = [sigma](const Path&, const Vector&, Control) { return Matrix::Constant(1, 1, sigma).eval(); };
  ap.generator = [q](const Path&, const Vector&, double, const Vector&, Control) { return q; };
  ap.terminal = [](const Path& omega, const Vector&) { return omega.endpoint()(0); };
  return ap;
}

// Nonlinear in both arguments with a genuine omega-x interaction.
BivariateFunctional mixed_functional() {
  BivariateFunctional v;
  v.eval = [](const Path& omega, const Vector& x) {
    const double w = omega.endpoint()(0);
    return std::sin(w) * x(0) + 0.3 * x.squaredNorm() + 0.2 * w * w + 0.1 * omega.time() * w + 0.05 * sup_norm(omega);
  };
  return v;
}

}  // namespace

TEST_CASE("augmentation block structure") {
  const ControlProblem cp = augment(scalar_augmented(0.0, 0.0, 0.0));
  CHECK(cp.grid.dim == 2);
  CHECK(cp.grid.noise_dim == 1);
  const Path omega = scalar_path({0.0, 0.2}, 0.25);
  const Path start = stack(omega, Path::constant(vec({0.8}), 1, 0.25));
  const NoiseTree tree = simulate_tree(cp, start, 4);
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    const Path leaf = tree.path(3, i);
    const auto [w, xi] = split(leaf, 1);
    CHECK(xi == Path::constant(vec({0.8}), 4, 0.25));
    CHECK(restriction(w, 1) == omega);
  }
}

TEST_CASE("augmented drift has a zero first block and the noise replays exactly") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const AugmentedProblem ap = random_augmented(seed);
    const ControlProblem cp = augment(ap);
    const std::size_t d = ap.grid.dim;
    const auto dd = static_cast<Eigen::Index>(d);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 20; ++i) {
      const Path p = random_path(rng, d + ap.state_dim, 2, cp.dt());
      for (Control u : cp.controls) {
        CHECK(cp.drift(p, u).head(dd).norm() == 0.0);
        CHECK(cp.diffusion(p, u).topRows(dd) == Matrix::Identity(dd, dd));
      }
    }
    const Path start = random_path(rng, d + ap.state_dim, 1, cp.dt());
    const NoiseTree tree = simulate_tree(cp, start, 4, ControlStrategy::constant(cp.controls.size() - 1));
    for (std::size_t level = 1; level <= tree.depth; ++level) {
      for (std::size_t i = 0; i < tree.levels[level].size(); ++i) {
        const auto& node = tree.levels[level][i];
        const Vector step = node.state.head(dd) - tree.levels[level - 1][node.parent].state.head(dd);
        // Exact up to the rounding of x + dw - x.
        CHECK((step - tree_increment(node.branch, d, cp.dt())).cwiseAbs().maxCoeff() <= 1e-14);
      }
    }
  }
}

TEST_CASE("stack and split") {
  std::mt19937_64 rng(61);
  const Path w = random_path(rng, 2, 3, 0.25);
  const Path x = random_path(rng, 1, 3, 0.25);
  const auto [a, b] = split(stack(w, x), 2);
  CHECK(a == w);
  CHECK(b == x);
  CHECK_THROWS_AS(stack(w, random_path(rng, 1, 2, 0.25)), Error);
  CHECK_THROWS_AS(split(w, 2), Error);
}

TEST_CASE("reduction examples") {
  const Path omega = scalar_path({0.0, 0.4, -0.1}, 0.25);
  const Remark64Result r = remark64_check(scalar_augmented(0.3, 0.7, 0.0), omega, vec({0.5}));
  CHECK(r.bsde_value == doctest::Approx(-0.1).epsilon(1e-14));
  CHECK(r.residual <= 1e-15);
  CHECK(r.bsde_z == doctest::Approx(1.0).epsilon(1e-12));

  const Remark64Result c = remark64_check(scalar_augmented(0.3, 0.7, 1.5), omega, vec({0.5}));
  CHECK(c.bsde_value == doctest::Approx(-0.1 + 1.5 * 0.5).epsilon(1e-14));
  CHECK(c.residual <= 1e-12);

  AugmentedProblem lookback = scalar_augmented(0.3, 0.7, 0.0);
  lookback.controls = {-1.0, 0.5, 2.0};
  lookback.generator = [](const Path&, const Vector&, double y, const Vector& z, Control) { return 0.4 * y - 0.2 * z(0); };
  lookback.terminal = [](const Path& w, const Vector&) { return w.values().maxCoeff(); };
  CHECK(remark64_check(lookback, omega, vec({0.5})).residual <= 1e-10);
}

TEST_CASE("reduction on random instances") {
  std::mt19937_64 rng(62);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AugmentedProblem ap = random_augmented(seed);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    const Path omega = random_path(rng, ap.grid.dim, k, ap.grid.dt());
    const Vector x = random_path(rng, ap.state_dim, 0, 1.0).endpoint();
    CHECK(remark64_check(ap, omega, x).residual <= 1e-10);
  }
}

TEST_CASE("reduction rejects x- or u-dependent data") {
  AugmentedProblem ap = scalar_augmented(0.0, 1.0, 0.0);
  ap.controls = {0.0, 1.0};
  ap.generator = [](const Path&, const Vector&, double, const Vector&, Control u) { return u; };
  CHECK(error_kind([&] { remark64_check(ap, scalar_path({0.0}, 0.25), vec({0.0})); }) == ErrorKind::Contract);
  ap = scalar_augmented(0.0, 1.0, 0.0);
  ap.terminal = [](const Path& w, const Vector& x) { return w.endpoint()(0) + x(0); };
  CHECK(error_kind([&] { remark64_check(ap, scalar_path({0.0}, 0.25), vec({0.0})); }) == ErrorKind::Contract);
}

TEST_CASE("BSHJB residual examples") {
  const Path omega = scalar_path({0.0, 0.3, -0.2}, 0.25);
  BivariateFunctional state;
  state.eval = [](const Path&, const Vector& x) { return x(0); };
  CHECK(std::abs(bshjb_residual(scalar_augmented(0.0, 0.8, 0.0), state, omega, vec({0.4}))) <= 1e-8);

  BivariateFunctional noise;
  noise.eval = [](const Path& w, const Vector&) { return w.endpoint()(0); };
  CHECK(std::abs(bshjb_residual(scalar_augmented(0.5, 0.0, 0.0), noise, omega, vec({0.4}))) <= 1e-8);

  // Heat in omega: the trace of the omega Hessian cancels the horizontal derivative.
  for (std::size_t d : {1u, 2u}) {
    AugmentedProblem ap = scalar_augmented(0.5, 0.0, 0.0);
    ap.grid.dim = ap.grid.noise_dim = d;
    ap.diffusion = [d](const Path&, const Vector&, Control) {
      return Matrix::Zero(1, static_cast<Eigen::Index>(d)).eval();
    };
    BivariateFunctional heat;
    heat.eval = [d](const Path& w, const Vector&) {
      return w.endpoint().squaredNorm() + (1.0 - w.time()) * static_cast<double>(d);
    };
    heat.dt = [d](const Path&, const Vector&) { return -static_cast<double>(d); };
    heat.dgamma = [](const Path& w, const Vector&) { return Vector(2.0 * w.endpoint()); };
    heat.dgammagamma = [d](const Path&, const Vector&) {
      return Matrix(2.0 * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    };
    std::mt19937_64 rng(63);
    const Path w = random_path(rng, d, 2, 0.25);
    CHECK(std::abs(bshjb_residual(ap, heat, w, vec({0.4}))) <= 1e-8);

    BivariateFunctional fd;
    fd.eval = heat.eval;
    CHECK(std::abs(bshjb_residual(ap, fd, w, vec({0.4}))) <= 1e-5);
  }
}

TEST_CASE("BSHJB residual equals the lifted PHJB residual") {
  std::mt19937_64 rng(64);
  const BivariateFunctional v = mixed_functional();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const AugmentedProblem ap = random_augmented(seed);
    const ControlProblem cp = augment(ap);
    for (int i = 0; i < 5; ++i) {
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
      const Path omega = random_path(rng, ap.grid.dim, k, ap.grid.dt());
      const Path xi = random_path(rng, ap.state_dim, k, ap.grid.dt());
      const double lhs = bshjb_residual(ap, v, omega, xi.endpoint());
      const double rhs = phjb_residual(cp, lift(v, ap.grid.dim), stack(omega, xi));
      CHECK(std::abs(lhs - rhs) <= 1e-5 * (1.0 + std::abs(rhs)));
    }
  }
}

TEST_CASE("augmented value depends on the state history only through its endpoint") {
  std::mt19937_64 rng(65);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const AugmentedProblem ap = random_augmented(seed, 3);
    const ControlProblem cp = augment(ap);
    const Path omega = random_path(rng, ap.grid.dim, 1, cp.dt());
    const Path xi = random_path(rng, ap.state_dim, 1, cp.dt());
    Matrix shuffled = random_path(rng, ap.state_dim, 1, cp.dt()).values();
    shuffled.col(1) = xi.endpoint();
    CHECK(value(cp, stack(omega, xi)) == value(cp, stack(omega, Path(shuffled, cp.dt()))));
  }
}
