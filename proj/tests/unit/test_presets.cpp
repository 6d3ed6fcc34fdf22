#include "doctest.h"

#include "pathctl/control.hpp"
#include "pathctl/error.hpp"
#include "pathctl/presets.hpp"
#include "support.hpp"

#include <cmath>

using namespace pathctl;
using testsupport::error_kind;
using testsupport::scalar_path;
using testsupport::vec;

TEST_CASE("every preset builds and evaluates") {
  const Path p = scalar_path({0.0, 0.3, -0.4}, 0.25);
  for (const auto& spec : presets()) {
    CAPTURE(spec.name);
    CHECK(!spec.description.empty());
    const ControlProblem cp = build_problem(spec);
    for (Control u : cp.controls) {
      CHECK(std::isfinite(cp.drift(p, u)(0)));
      CHECK(std::isfinite(cp.diffusion(p, u)(0, 0)));
      CHECK(std::isfinite(cp.generator(p, 0.1, vec({0.2}), u)));
    }
    CHECK(std::isfinite(cp.terminal(p)));
    CHECK(preset(spec.name).name == spec.name);
  }
}

TEST_CASE("preset coefficients") {
  const Path p = scalar_path({0.0, 0.3, -0.4}, 0.25);
  const ControlProblem lq = build_problem(preset("lq"));
  CHECK(lq.drift(p, 0.5)(0) == 0.5);
  CHECK(lq.generator(p, 0.0, vec({0.0}), 0.5) == -0.25);
  CHECK(lq.terminal(p) == -0.4);
  CHECK(build_problem(preset("lookback")).terminal(p) == 0.3);
  CHECK(build_problem(preset("bangbang")).terminal(p) == 0.4);
  CHECK(build_problem(preset("heat")).terminal(p) == doctest::Approx(0.16).epsilon(1e-15));
  CHECK(build_problem(preset("deterministic")).diffusion(p, 1.0)(0, 0) == 0.0);
  CHECK(build_problem(preset("linear-y")).generator(p, 2.0, vec({0.0}), 0.5) == 1.25);
}

TEST_CASE("unknown preset lists the known names") {
  try {
    preset("nope");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("lq, heat") != std::string::npos);
  }
}

TEST_CASE("random instances are deterministic in the seed") {
  const Path p = scalar_path({0.1, -0.2, 0.5}, 0.25);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemSpec a = random_spec(seed);
    const ProblemSpec b = random_spec(seed);
    CHECK(a.drift == b.drift);
    CHECK(a.diffusion == b.diffusion);
    CHECK(a.generator == b.generator);
    CHECK(a.terminal == b.terminal);
    CHECK(a.controls == b.controls);
    CHECK(random_spec(seed + 100).generator != a.generator);
    CHECK(random_linear_spec(seed).generator == random_linear_spec(seed).generator);
    CHECK(random_spec(seed, 7).grid.steps == 7);

    const ControlProblem cp = build_problem(a);
    // |q_y| <= 0.5 and the diffusion stays positive.
    for (Control u : cp.controls) {
      const double slope = cp.generator(p, 1.0, vec({0.0}), u) - cp.generator(p, 0.0, vec({0.0}), u);
      CHECK(std::abs(slope) <= 0.5 + 1e-12);
      CHECK(cp.diffusion(p, u)(0, 0) > 0.0);
    }

    const AugmentedProblem x = random_augmented(seed);
    const AugmentedProblem y = random_augmented(seed);
    CHECK(x.grid.dim == y.grid.dim);
    CHECK(x.state_dim == y.state_dim);
    CHECK(x.controls == y.controls);
  }
}

TEST_CASE("build_problem rejects malformed specs") {
  ProblemSpec s = preset("lq");
  s.controls.clear();
  CHECK(error_kind([&] { build_problem(s); }) == ErrorKind::Config);
  s = preset("lq");
  s.drift.push_back("0");
  CHECK(error_kind([&] { build_problem(s); }) == ErrorKind::Config);
  s = preset("lq");
  s.diffusion[0].push_back("0");
  CHECK(error_kind([&] { build_problem(s); }) == ErrorKind::Config);
  s = preset("lq");
  s.terminal = "x2";
  CHECK(error_kind([&] { build_problem(s); }) == ErrorKind::Config);
  s = preset("lq");
  s.grid.steps = 0;
  CHECK(error_kind([&] { build_problem(s); }) == ErrorKind::InvalidArgument);

  s = preset("lq");
  s.grid.dim = 2;
  s.drift = {"u", "x1"};
  s.diffusion = {{"1"}, {"0.5*x2"}};
  s.terminal = "x1 + x2";
  const ControlProblem cp = build_problem(s);
  Matrix v(2, 1);
  v << 0.3, -0.2;
  const Path p(v, 0.25);
  CHECK(cp.drift(p, 1.0) == vec({1.0, 0.3}));
  CHECK(cp.diffusion(p, 0.0)(1, 0) == -0.1);
  CHECK(cp.terminal(p) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("classical solutions match their terminal data") {
  std::mt19937_64 rng(71);
  for (const auto& c : classical_solutions(5, 2.0)) {
    CAPTURE(c.name);
    const Path p = testsupport::random_path(rng, 1, 5, 0.4);
    CHECK(c.solution.eval(p) == doctest::Approx(c.problem.terminal(p)).epsilon(1e-14));
  }
}
