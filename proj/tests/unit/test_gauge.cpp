#include "doctest.h"

#include "pathctl/error.hpp"
#include "pathctl/gauge.hpp"
#include "support.hpp"

#include <cmath>

using namespace pathctl;
using testsupport::random_path;
using testsupport::scalar_path;
using testsupport::vec;

namespace {

// Direct transcription of the S_m definition with explicit loops over the joint grid.
double s_m_oracle(const Path& p, const Path& q, int m) {
  const std::size_t n = std::max(p.size(), q.size());
  double sup = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Vector a = p.at(std::min(j, p.size() - 1));
    const Vector b = q.at(std::min(j, q.size() - 1));
    sup = std::max(sup, (a - b).norm());
  }
  if (sup == 0.0) return 0.0;
  const double n2m = std::pow(sup, 2 * m);
  const double e2m = std::pow((p.endpoint() - q.endpoint()).norm(), 2 * m);
  return std::pow(n2m - e2m, 3) / (n2m * n2m);
}

// Gradients use a smaller step than the library default: the O(h^2) truncation
// at 1e-4 (1 + |x|) reaches a few 1e-6 close to the branch boundary.
FDScheme gradient_scheme(const Path& p) {
  FDScheme s;
  s.h_vertical = 1e-5 * (1.0 + p.endpoint().norm());
  return s;
}

double max_rel(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("S_m examples") {
  const GaugeParams g;
  const Path p = scalar_path({0.0, 2.0, 1.0}, 0.5);
  CHECK(s_m(p, p, g) == 0.0);
  const Path q = scalar_path({0.0, 0.5, 1.0}, 0.5);
  CHECK(s_m(p, q, g) == doctest::Approx(std::pow(1.5, 6)));
  CHECK(s_m(Path::constant(vec({1.0}), 3, 0.5), Path::zero(1, 3, 0.5), g) == 0.0);
}

TEST_CASE("S_m matches the loop oracle and its bounds") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> len(0, 5);
  for (int m = 1; m <= 3; ++m) {
    const GaugeParams g{m, 3.0};
    for (int i = 0; i < 2000; ++i) {
      const Path p = random_path(rng, 2, len(rng), 0.2);
      const Path q = random_path(rng, 2, len(rng), 0.2);
      const double s = s_m(p, q, g);
      REQUIRE(s == doctest::Approx(s_m_oracle(p, q, m)).epsilon(1e-12));
      REQUIRE(s >= 0.0);
      REQUIRE(s <= std::pow(sup_distance(p, q), 2 * m) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("Upsilon examples") {
  const GaugeParams g;
  const Path c = Path::constant(vec({-1.5}), 4, 0.25);
  CHECK(upsilon(c, Path::zero(1, 4, 0.25), g) == doctest::Approx(3.0 * std::pow(1.5, 6)));
  CHECK(upsilon(c, c, g) == 0.0);
  CHECK(upsilon_bar(c, c, g) == 0.0);
  const Path d = scalar_path({0.0, 1.0, 0.5, 0.2, -0.3}, 0.25);
  CHECK(upsilon_bar(c, d, g) == upsilon(c, d, g));
}

TEST_CASE("Upsilon bound and time-augmented lower bound on random pairs") {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  for (int m = 1; m <= 3; ++m) {
    for (double M : {3.0, 5.0}) {
      const GaugeParams g{m, M};
      for (int i = 0; i < 1000; ++i) {
        const Path p = random_path(rng, 2, len(rng), 0.125);
        const Path q = random_path(rng, 2, len(rng), 0.125);
        const double n2m = std::pow(sup_distance(p, q), 2 * m);
        const double u = upsilon(p, q, g);
        REQUIRE(u - n2m >= -1e-12 * (1.0 + n2m));
        REQUIRE(M * n2m - u >= -1e-12 * (1.0 + n2m));
        if (m == 3) {
          const double gap = p.time() - q.time();
          REQUIRE(upsilon_bar(p, q, g) >= n2m + gap * gap - 1e-12 * (1.0 + n2m));
        }
      }
    }
  }
}

TEST_CASE("Upsilon-bar is gauge-type") {
  // Upsilon-bar <= delta with delta = min(eps^6, eps^2) / 2 forces both parts of d_infty below eps.
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<std::size_t> len(3, 5);
  const GaugeParams g;
  int hits = 0;
  for (double eps : {0.5, 0.3}) {
    const double delta = std::min(std::pow(eps, 6), eps * eps) / 2.0;
    for (int i = 0; i < 5000; ++i) {
      const Path p = random_path(rng, 1, len(rng), 0.1, 0.2);
      const Path q = random_path(rng, 1, len(rng), 0.1, 0.2);
      if (upsilon_bar(p, q, g) > delta) continue;
      ++hits;
      CHECK(sup_distance(p, q) < eps);
      CHECK(std::abs(p.time() - q.time()) < eps);
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("translation identity for equal-time pairs") {
  std::mt19937_64 rng(34);
  const GaugeParams g;
  for (int i = 0; i < 500; ++i) {
    const Path p = random_path(rng, 2, 4, 0.25);
    const Path q = random_path(rng, 2, 4, 0.25);
    CHECK(upsilon(p, q, g) == doctest::Approx(upsilon_norm(difference(p, q), g)).epsilon(1e-12));
  }
}

TEST_CASE("subadditivity") {
  const GaugeParams g;
  const Path z = Path::zero(2, 3, 0.25);
  CHECK(subadditivity_gap(z, z, g) == 0.0);
  std::mt19937_64 rng(35);
  const Path p = random_path(rng, 2, 3, 0.25);
  CHECK(subadditivity_gap(p, z, g) == doctest::Approx((std::pow(2.0, 5) - 1.0) * upsilon_norm(p, g)));
  for (int m = 1; m <= 3; ++m) {
    for (double M : {3.0, 5.0}) {
      for (int i = 0; i < 1000; ++i) {
        const Path a = random_path(rng, 2, 4, 0.25);
        const Path b = random_path(rng, 2, 4, 0.25);
        REQUIRE(subadditivity_gap(a, b, {m, M}) >= -1e-12);
      }
    }
  }
  CHECK_THROWS_AS(subadditivity_gap(p, Path::zero(2, 2, 0.25), g), Error);
}

TEST_CASE("params are validated") {
  CHECK_THROWS_AS(s_m(Path::zero(1, 1, 1.0), Path::zero(1, 1, 1.0), {0, 3.0}), Error);
  CHECK_THROWS_AS(s_m(Path::zero(1, 1, 1.0), Path::zero(1, 1, 1.0), {7, 3.0}), Error);
}

TEST_CASE("closed-form S derivatives: zero branches") {
  const GaugeParams g;
  const Path a = scalar_path({0.0, 1.0}, 0.5);
  CHECK(classify_branch(a, a).branch == GaugeBranch::Singular);
  CHECK(grad_s(a, a, g).norm() == 0.0);
  CHECK(hess_s(a, a, g).norm() == 0.0);

  // Endpoint gap 2 beats the interior sup 0.5.
  const Path p = scalar_path({0.5, 1.0, 2.0}, 0.5);
  const Path anchor = scalar_path({0.0, 1.0}, 0.5);
  CHECK(classify_branch(p, anchor).branch == GaugeBranch::EndpointDominant);
  CHECK(grad_s(p, anchor, g).norm() == 0.0);
  CHECK(hess_s(p, anchor, g).norm() == 0.0);

  const Path tie = scalar_path({0.5, 1.0, 1.5}, 0.5);
  CHECK(classify_branch(tie, anchor).branch == GaugeBranch::Tie);
  CHECK(grad_s(tie, anchor, g).norm() == 0.0);

  CHECK_THROWS_AS(grad_s(anchor, p, g), Error);
}

TEST_CASE("closed-form derivatives agree with finite differences off the branch boundary") {
  std::mt19937_64 rng(36);
  std::uniform_int_distribution<std::size_t> len(1, 5);
  int interior = 0;
  for (int m = 1; m <= 3; ++m) {
    const GaugeParams g{m, 3.0};
    for (int i = 0; i < 300; ++i) {
      const std::size_t ka = len(rng);
      const Path anchor = random_path(rng, 2, ka, 0.2, 0.5);
      const Path p = random_path(rng, 2, ka + len(rng) - 1, 0.2, 0.5);
      const BranchInfo info = classify_branch(p, anchor);
      const double h = 1e-4 * (1.0 + p.endpoint().norm());
      if (info.branch == GaugeBranch::Singular || std::abs(info.endpoint_gap - info.interior_sup) < 10.0 * h) continue;
      if (info.branch == GaugeBranch::InteriorDominant) ++interior;

      PathFunctional s;
      s.eval = [&](const Path& x) { return s_m(x, anchor, g); };
      CHECK(max_rel(grad_s(p, anchor, g), vertical_gradient(s, p, gradient_scheme(p))) < 1e-6);
      CHECK(max_rel(hess_s(p, anchor, g), vertical_hessian(s, p)) < 1e-4);

      const PathFunctional u = upsilon_functional(anchor, g);
      CHECK(max_rel(u.analytic_dx(p), vertical_gradient(u, p, gradient_scheme(p))) < 1e-6);
      CHECK(max_rel(u.analytic_dxx(p), vertical_hessian(u, p)) < 1e-4);
      CHECK(horizontal_derivative(u, p) == 0.0);
    }
  }
  CHECK(interior > 100);
}

TEST_CASE("power derivatives") {
  const Path p = scalar_path({1.0, 3.0}, 0.5);
  CHECK(grad_power(p, vec({0.0}), 1)(0) == 6.0);
  CHECK(hess_power(p, vec({0.0}), 1)(0, 0) == 2.0);
  CHECK(grad_power(p, vec({3.0}), 2).norm() == 0.0);
  CHECK(hess_power(p, vec({3.0}), 3).norm() == 0.0);

  std::mt19937_64 rng(37);
  for (int m = 1; m <= 3; ++m) {
    for (int i = 0; i < 100; ++i) {
      const Path q = random_path(rng, 3, 3, 0.25);
      const Vector a = random_path(rng, 3, 0, 0.25).endpoint();
      const PathFunctional f = power_functional(a, m);
      CHECK(max_rel(f.analytic_dx(q), vertical_gradient(f, q, gradient_scheme(q))) < 1e-6);
      CHECK(max_rel(f.analytic_dxx(q), vertical_hessian(f, q)) < 1e-4);
      CHECK(horizontal_derivative(f, q) == 0.0);
    }
  }
}

TEST_CASE("Upsilon-bar horizontal derivative") {
  const Path anchor = scalar_path({0.0, 0.3}, 0.25);
  const Path p = scalar_path({0.0, 0.1, -0.4, 0.2}, 0.25);
  const PathFunctional f = upsilon_bar_functional(anchor);
  // (s + h - t)^2 - (s - t)^2 over h with s - t = 0.5, h = 0.25.
  CHECK(horizontal_derivative(f, p) == doctest::Approx(1.25));
  CHECK(f.analytic_dt(p) == doctest::Approx(1.0));
}
