#include <cmath>

#include "doctest.h"
#include "skle/errors.hpp"
#include "skle/locality.hpp"

using namespace skle;
using doctest::Approx;

namespace {

const FlowHull& unit_slit() {
  static const FlowHull A = FlowHull::vertical(SlitConfig(), 0.0, 0.25, 1e-4);
  return A;
}

DrivingPath linear_base(const SlitConfig& s, double slope, double T) {
  return integrate_slits([slope](double t) { return slope * t; }, s, T, 1e-3);
}

}  // namespace

TEST_CASE("canonical map of a vertical slit") {
  FlowHull none = FlowHull::none(SlitConfig());
  CHECK(canonical_map(none, cplx(0.3, 0.4)) == cplx(0.3, 0.4));
  CHECK(std::abs(canonical_map(unit_slit(), cplx(0.0, 2.0)) - cplx(0.0, std::sqrt(3.0))) < 1e-6);
  cplx z(0.0, 80.0);
  double a = unit_slit().capacity();
  CHECK(a == Approx(0.5));
  CHECK(std::abs((z * (canonical_map(unit_slit(), z) - z)).real() - a) < 1e-2 * a);
  CHECK_THROWS_AS(canonical_map(unit_slit(), cplx(0.0, 0.5)), Error);
}

TEST_CASE("empty hull leaves the driver unchanged") {
  SlitConfig s({{1.0, -0.5, 0.5}});
  ImageRun r = image_run(linear_base(s, 0.5, 0.05), FlowHull::none(s));
  REQUIRE_FALSE(r.samples.empty());
  for (const ImageSample& q : r.samples) {
    CHECK(q.xi_image == Approx(q.xi).epsilon(1e-12));
    CHECK(q.d1 == Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(q.d2) < 1e-12);
    CHECK(q.clock == Approx(q.t).epsilon(1e-12));
  }
}

TEST_CASE("derivatives of h at t = 0 match finite differences of the canonical map") {
  FlowHull A = FlowHull::vertical(SlitConfig(), -1.0, 0.09, 1e-3);
  DrivingPath base = linear_base(SlitConfig(), 0.0, 0.01);
  ImageRun r = image_run(base, A);
  REQUIRE_FALSE(r.samples.empty());
  const double e = 1e-3;
  auto phi = [&](double x) { return canonical_map(A, cplx(x, 0.0)).real(); };
  double d1 = (phi(e) - phi(-e)) / (2.0 * e);
  double d2 = (phi(e) - 2.0 * phi(0.0) + phi(-e)) / (e * e);
  CHECK(r.samples[0].xi_image == Approx(phi(0.0)).epsilon(1e-8));
  CHECK(std::abs(r.samples[0].d1 - d1) < 1e-4);
  CHECK(std::abs(r.samples[0].d2 - d2) < 1e-3);

  Derivatives big = h_derivatives(r, 0, 0.2), small = h_derivatives(r, 0, 0.1);
  CHECK(std::abs(big.d2 - small.d2) < 1e-3);
}

TEST_CASE("capacity-rate identity") {
  CapacityRateReport coarse = capacity_rate_check(1.0, 0.5, 0.1, 1e-3);
  REQUIRE_FALSE(coarse.residual.empty());
  CHECK(coarse.max_residual < 5e-2);
  for (std::size_t k = 0; k < coarse.t.size(); ++k) CHECK(coarse.rate_image[k] > 0.0);
}

TEST_CASE("image capacity runs on the clock of h'^2") {
  SlitConfig s({{1.0, -0.5, 0.5}});
  FlowHull A = FlowHull::vertical(s, -1.5, 0.09, 1e-3);
  ImageRun r = image_run(linear_base(s, 0.3, 0.05), A);
  REQUIRE(r.samples.size() > 2);
  for (std::size_t k = 1; k < r.samples.size(); ++k) {
    CHECK(r.samples[k].clock > r.samples[k - 1].clock);
    CHECK(r.samples[k].d1 > 0.0);
  }
  // The image domain is the flow of A's image domain.
  CHECK(r.image.slits.front() == A.image_domain());
}

TEST_CASE("zipper capacity of a vertical segment") {
  std::vector<cplx> curve;
  for (int k = 0; k <= 100; ++k) curve.emplace_back(0.0, 0.01 * k);
  std::vector<double> c = zipper_capacity(curve);
  CHECK(c.front() == 0.0);
  CHECK(c.back() == Approx(0.5).epsilon(1e-6));
}

TEST_CASE("locality in the half-plane") {
  FlowHull A = FlowHull::vertical(SlitConfig(), -1.5, 0.09, 1e-3);
  LocalityOptions opt;
  LocalityReport good = locality_test(SlitConfig(), A, std::sqrt(6.0), 150, 5, opt);
  CHECK(good.terminal.p_value > 0.01);
  CHECK(good.quadratic_variation.p_value > 0.01);
  // Without slits the fresh drift functional is identically zero, so only the residual is tested.
  CHECK(std::abs(good.drift_residual.z) < 3.0);

  LocalityReport bad = locality_test(SlitConfig(), A, 3.0, 150, 5, opt);
  CHECK(bad.drift.p_value < 0.01);
  CHECK(std::abs(bad.drift_residual.z) > 3.0);

  CHECK_THROWS_AS(locality_test(SlitConfig(), FlowHull::none(SlitConfig()), 2.0, 10, 1, opt), Error);
}

TEST_CASE("capacity comparison") {
  CapacityComparison none = capacity_comparison(SlitConfig(), 0.0, {0.1, 0.05});
  for (double r : none.ratio) CHECK(std::abs(r) < 1e-12);
}
