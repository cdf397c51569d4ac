#include <cmath>

#include "doctest.h"
#include "skle/errors.hpp"
#include "skle/geometry.hpp"
#include "skle/rng.hpp"

using namespace skle;

namespace {

SlitConfig random_config(const CounterRng& rng, std::uint64_t n0, int count) {
  std::vector<Slit> s;
  for (int j = 0; j < count; ++j) {
    double y = 0.5 + j + rng.uniform(n0 + 3 * j);
    double x = 6.0 * rng.uniform(n0 + 3 * j + 1) - 3.0;
    double L = 0.1 + 2.0 * rng.uniform(n0 + 3 * j + 2);
    s.push_back({y, x, x + L});
  }
  return SlitConfig(s);
}

}  // namespace

TEST_CASE("valid and degenerate configurations") {
  CHECK_NOTHROW(SlitConfig({{1.0, 0.0, 1.0}}));
  CHECK(SlitConfig().empty());
  CHECK_NOTHROW(validate({}));

  try {
    SlitConfig({{1.0, 0.0, 1.0}, {1.0, 0.5, 2.0}});
    FAIL("overlap accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
  CHECK_THROWS_AS(SlitConfig({{0.0, 0.0, 1.0}}), Error);
  CHECK_THROWS_AS(SlitConfig({{1.0, 1.0, 1.0}}), Error);
  CHECK_THROWS_AS(SlitConfig({{1.0, 2.0, 1.0}}), Error);
  CHECK_THROWS_AS(validate({1.0, 0.0}), Error);
  // Same height, disjoint intervals is fine.
  CHECK_NOTHROW(SlitConfig({{1.0, 0.0, 1.0}, {1.0, 1.5, 2.0}}));
}

TEST_CASE("metric") {
  SlitConfig a({{1.0, 0.0, 1.0}});
  CHECK(distance(a, SlitConfig({{1.0, 0.1, 1.0}})) == doctest::Approx(0.1));
  CHECK(distance(a, a) == 0.0);
  CHECK(distance(a, SlitConfig({{1.1, 0.0, 1.0}})) == doctest::Approx(0.2));
}

TEST_CASE("scale and translate") {
  SlitConfig a({{1.0, 0.0, 1.0}});
  CHECK(scale(a, 2.0) == SlitConfig({{2.0, 0.0, 2.0}}));
  CHECK(translate(a, -3.0) == SlitConfig({{1.0, -3.0, -2.0}}));
}

TEST_CASE("property: the state space is a cone closed under shifts") {
  CounterRng rng(5, 1);
  for (int trial = 0; trial < 200; ++trial) {
    SlitConfig s = random_config(rng, 100 * trial, 1 + trial % 3);
    double c = 0.1 + 10.0 * rng.uniform(100 * trial + 50);
    double r = 20.0 * rng.uniform(100 * trial + 51) - 10.0;
    CHECK_NOTHROW(validate(scale(s, c).flat()));
    CHECK_NOTHROW(validate(translate(s, r).flat()));
    CHECK(distance(scale(s, c), scale(scale(s, c), 1.0)) == 0.0);
    CHECK(SlitConfig::from_flat(s.flat()) == s);
    CHECK(distance(translate(translate(s, r), -r), s) < 1e-12);
    CHECK(domain_hash(s) == domain_hash(SlitConfig::from_flat(s.flat())));
  }
}

TEST_CASE("property: metric axioms") {
  CounterRng rng(6, 2);
  for (int trial = 0; trial < 100; ++trial) {
    SlitConfig a = random_config(rng, 300 * trial, 2);
    SlitConfig b = random_config(rng, 300 * trial + 100, 2);
    SlitConfig c = random_config(rng, 300 * trial + 200, 2);
    CHECK(distance(a, b) == doctest::Approx(distance(b, a)));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
  }
}

TEST_CASE("boundary point tags") {
  SlitConfig s({{1.0, -0.5, 0.5}});
  CHECK_NOTHROW(check_point(s, HalfPlanePoint::on_slit(s, 0, 0.2, Side::Upper)));
  CHECK_NOTHROW(check_point(s, HalfPlanePoint::endpoint(s, 0, true)));
  CHECK_THROWS_AS(check_point(s, HalfPlanePoint{0.2, 0.7, Side::Upper, 0}), Error);
  CHECK(distance_to_slit(s[0], cplx(0.0, 2.0)) == doctest::Approx(1.0));
  CHECK(distance_to_slit(s[0], cplx(1.5, 1.0)) == doctest::Approx(1.0));
}
