#include "doctest.h"

#include "pathctl/error.hpp"
#include "pathctl/path.hpp"
#include "support.hpp"

using namespace pathctl;
using testsupport::random_path;
using testsupport::scalar_path;
using testsupport::vec;

TEST_CASE("sup_norm on small paths") {
  CHECK(sup_norm(Path::zero(3, 5, 0.1)) == 0.0);
  CHECK(sup_norm(Path::constant(vec({2.0}), 4, 0.25)) == 2.0);
  CHECK(sup_norm(scalar_path({1.0, -3.0, 2.0}, 0.5)) == 3.0);

  Matrix v(2, 2);
  v << 3.0, 0.0, 4.0, 1.0;
  CHECK(sup_norm(Path(v, 1.0)) == doctest::Approx(5.0));
}

TEST_CASE("path construction rejects bad input") {
  CHECK_THROWS_AS(Path(Matrix::Zero(1, 2), 0.0), Error);
  Matrix bad = Matrix::Zero(1, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(Path(bad, 0.1), Error);
}

TEST_CASE("d_infty examples") {
  const Path p = scalar_path({0.0, 1.0, -1.0}, 0.5);
  CHECK(d_infty(p, p) == 0.0);
  // Both identically zero, times 1 and 2.
  CHECK(d_infty(Path::zero(1, 2, 0.5), Path::zero(1, 4, 0.5)) == doctest::Approx(1.0));
  CHECK(d_infty(Path::zero(1, 2, 0.5), Path::constant(vec({2.0}), 2, 0.5)) == 2.0);
}

TEST_CASE("d_infty holds the shorter path") {
  const Path a = scalar_path({0.0, 2.0}, 1.0);
  const Path b = scalar_path({0.0, 2.0, 5.0}, 1.0);
  // a held at 2 against 5 at time 2, plus a time gap of 1.
  CHECK(d_infty(a, b) == doctest::Approx(4.0));
  CHECK(d_infty(b, a) == d_infty(a, b));
}

TEST_CASE("d_infty requires comparable paths") {
  CHECK_THROWS_AS(d_infty(Path::zero(1, 2, 0.5), Path::zero(2, 2, 0.5)), Error);
  CHECK_THROWS_AS(d_infty(Path::zero(1, 2, 0.5), Path::zero(1, 2, 0.25)), Error);
}

TEST_CASE("vertical bump touches only the last column") {
  const Path p = scalar_path({1.0, 2.0, 3.0}, 0.1);
  CHECK(vertical_bump(p, vec({0.0})) == p);
  const Path q = vertical_bump(p, vec({1.0}));
  CHECK(q.endpoint()(0) == 4.0);
  CHECK(q.at(0)(0) == 1.0);
  CHECK(q.at(1)(0) == 2.0);

  std::mt19937_64 rng(5);
  const Path r = random_path(rng, 3, 4, 0.1);
  const Vector ei = vec({1.0, 0.0, 0.0});
  const Vector ej = vec({0.0, 0.0, 1.0});
  CHECK(vertical_bump(vertical_bump(r, ei), ej) == vertical_bump(r, ei + ej));
  CHECK_THROWS_AS(vertical_bump(r, vec({1.0})), Error);
}

TEST_CASE("horizontal extension and restriction") {
  const Path p = scalar_path({1.0, 5.0}, 0.1);
  CHECK(horizontal_extension(p, 1) == p);
  const Path e = horizontal_extension(p, 4);
  CHECK(e.t_index() == 4);
  for (std::size_t j = 2; j <= 4; ++j) CHECK(e.at(j)(0) == 5.0);
  CHECK(restriction(e, 1) == p);
  CHECK_THROWS_AS(horizontal_extension(p, 0), Error);

  CHECK(restriction(p, 1) == p);
  CHECK(restriction(p, 0) == scalar_path({1.0}, 0.1));
  CHECK_THROWS_AS(restriction(p, 2), Error);
}

TEST_CASE("metric properties over random triples") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t d = dim(rng);
    const Path a = random_path(rng, d, len(rng), 0.125);
    const Path b = random_path(rng, d, len(rng), 0.125);
    const Path c = random_path(rng, d, len(rng), 0.125);
    REQUIRE(d_infty(a, c) <= d_infty(a, b) + d_infty(b, c) + 1e-12);
    REQUIRE(d_infty(a, b) == d_infty(b, a));
    REQUIRE((d_infty(a, b) == 0.0) == (a == b));
  }
}

TEST_CASE("extension and restriction keep or shrink the sup") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const Path p = random_path(rng, 2, 5, 0.1);
    CHECK(sup_norm(horizontal_extension(p, 9)) == sup_norm(p));
    for (std::size_t k = 0; k <= 5; ++k) CHECK(sup_norm(restriction(p, k)) <= sup_norm(p));
  }
}

TEST_CASE("sup_distance_before_end excludes the joint final node") {
  const Path a = scalar_path({0.0, 1.0, 9.0}, 1.0);
  const Path b = Path::zero(1, 2, 1.0);
  CHECK(sup_distance(a, b) == 9.0);
  CHECK(sup_distance_before_end(a, b) == 1.0);
  CHECK(sup_distance_before_end(scalar_path({3.0}, 1.0), scalar_path({1.0}, 1.0)) == 0.0);
}

TEST_CASE("grid config validation") {
  GridConfig g;
  CHECK_NOTHROW(g.validate());
  CHECK(g.dt() == 0.25);
  g.steps = 0;
  CHECK_THROWS_AS(g.validate(), Error);
}
