#include <cmath>

#include "doctest.h"
#include "skle/driver.hpp"
#include "skle/stats.hpp"

using namespace skle;
using doctest::Approx;

namespace {

const SlitConfig kSymmetric({{1.0, -0.5, 0.5}});
const double kSqrt6 = std::sqrt(6.0);

}  // namespace

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_q(1.0) == Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_q(0.5) == Approx(0.96394524).epsilon(1e-6));
  CHECK(kolmogorov_q(0.0) == 1.0);
  KsResult same = ks_two_sample({1, 2, 3, 4}, {1, 2, 3, 4});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == Approx(1.0));
  KsResult apart = ks_two_sample({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
  CHECK(apart.statistic == 1.0);
  CHECK(apart.p_value < 1e-3);
  CHECK(mean({1.0, 2.0, 6.0}) == Approx(3.0));
  CHECK(sample_variance({1.0, 2.0, 6.0}) == Approx(7.0));
}

TEST_CASE("Brownian increments are reproducible and coarsen by summation") {
  auto a = brownian_increments(9, 3, 64, 1e-3);
  auto b = brownian_increments(9, 3, 64, 1e-3);
  CHECK(a == b);
  CHECK(a != brownian_increments(9, 4, 64, 1e-3));
  auto c = coarsen(a, 4);
  REQUIRE(c.size() == 16);
  CHECK(c[2] == Approx(a[8] + a[9] + a[10] + a[11]));
}

TEST_CASE("pure Brownian driver without slits") {
  auto runs = simulate_ensemble(0.0, SlitConfig(), CoefficientSpec::constant(kSqrt6, "neg_bmd"), 0.01, 1e-3, 21, 2000);
  std::vector<double> v = terminal_values(runs);
  REQUIRE(v.size() == 2000);
  double ratio = sample_variance(v) / 0.01;
  CHECK(ratio > 5.4);
  CHECK(ratio < 6.6);
}

TEST_CASE("noise-free driver reproduces the deterministic flow") {
  SdeRun r = simulate(0.2, kSymmetric, CoefficientSpec::constant(0.0, "zero"), 0.05, 1e-3, 1);
  DrivingPath d = integrate_slits([](double) { return 0.2; }, kSymmetric, 0.05, 1e-3);
  for (double x : r.path.xi) CHECK(x == 0.2);
  CHECK(r.path.slits.back() == d.slits.back());
}

TEST_CASE("reruns are bit-identical") {
  auto coeff = CoefficientSpec::constant(kSqrt6, "neg_bmd");
  SdeRun a = simulate(0.0, kSymmetric, coeff, 0.02, 1e-3, 7, 3);
  SdeRun b = simulate(0.0, kSymmetric, coeff, 0.02, 1e-3, 7, 3);
  CHECK(a.path.xi == b.path.xi);
  CHECK(a.path.slits.back() == b.path.slits.back());
  SdeRun c = simulate_with(0.0, kSymmetric, coeff, 1e-3, a.increments);
  CHECK(c.path.xi == a.path.xi);
}

TEST_CASE("the neg_bmd drift pushes away from an off-centre slit") {
  SlitConfig offset({{0.5, 0.0, 1.0}});
  auto coeff = CoefficientSpec::constant(0.0, "neg_bmd");
  SdeRun r = simulate(0.0, offset, coeff, 0.01, 1e-3, 1);
  CHECK(r.path.xi.back() != 0.0);
}

TEST_CASE("Brownian scaling in law") {
  auto coeff = CoefficientSpec::constant(kSqrt6, "neg_bmd");
  EnsembleTest exact = scaling_check(coeff, 0.0, SlitConfig(), 2.0, 500, 0.05, 1e-3, 31);
  CHECK(exact.ks.p_value > 0.01);
  EnsembleTest broken = scaling_check(CoefficientSpec::broken_scaling(kSqrt6, 4.0), 0.0, SlitConfig(), 2.0, 500,
                                      0.05, 1e-3, 32);
  CHECK(broken.ks.p_value < 0.01);
}

TEST_CASE("translation invariance in law") {
  auto coeff = CoefficientSpec::constant(kSqrt6, "neg_bmd");
  CHECK(x_homogeneity_check(coeff, 0.0, SlitConfig(), 1.5, 500, 0.05, 1e-3, 41).ks.p_value > 0.01);
  CHECK(x_homogeneity_check(coeff, 0.0, kSymmetric, 1.5, 150, 0.02, 1e-3, 42).ks.p_value > 0.01);
  EnsembleTest broken =
      x_homogeneity_check(CoefficientSpec::broken_shift(kSqrt6, 20.0), 0.0, SlitConfig(), 1.5, 500, 0.05, 1e-3, 43);
  CHECK(broken.ks.p_value < 0.01);
}
