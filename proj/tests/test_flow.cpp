#include <cmath>

#include "doctest.h"
#include "skle/errors.hpp"
#include "skle/flow.hpp"
#include "skle/locality.hpp"
#include "skle/oracle.hpp"

using namespace skle;
using doctest::Approx;

namespace {

const SlitConfig kSymmetric({{1.0, -0.5, 0.5}});

const DrivingPath& half_plane_fine() {
  static const DrivingPath p = integrate_slits([](double) { return 0.0; }, SlitConfig(), 1.0, 1e-4);
  return p;
}

const DrivingPath& symmetric_run() {
  static const DrivingPath p = integrate_slits([](double) { return 0.0; }, kSymmetric, 0.25, 1e-3);
  return p;
}

}  // namespace

TEST_CASE("closed-form flow without slits") {
  FlowOptions o;
  o.continue_after_swallow = true;
  PointTrack tr = flow_point(cplx(0.0, 1.0), half_plane_fine(), o);
  CHECK(std::abs(tr.final_value - std::sqrt(3.0)) < 1e-6);
  CHECK(std::abs(tr.t_swallow - 0.25) < 1e-4);

  PointTrack off = flow_point(cplx(0.5, 0.5), half_plane_fine());
  CHECK(std::abs(off.final_value - std::sqrt(cplx(0.5, 0.5) * cplx(0.5, 0.5) + 4.0)) < 1e-6);
  CHECK_FALSE(off.swallowed());
}

TEST_CASE("real points stay real") {
  DrivingPath p = integrate_slits([](double) { return 0.0; }, SlitConfig(), 0.3, 1e-3);
  for (double x : {-2.0, 0.7, 3.0}) {
    PointTrack tr = flow_point(cplx(x, 0.0), p);
    for (cplx g : tr.g) CHECK(g.imag() == 0.0);
  }
}

TEST_CASE("capacity grows like 2t") {
  CHECK(capacity(half_plane_fine(), 0.0).a == Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(capacity(half_plane_fine(), 0.5).a - 1.0) < 1e-3);
  DrivingPath p = integrate_slits([](double t) { return 0.3 * t; }, kSymmetric, 0.2, 1e-3);
  CHECK(std::abs(capacity(p, 0.2).a - 0.4) < 4e-3);
}

TEST_CASE("table and function drivers give the same path") {
  std::vector<double> samples(101);
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k] = 0.3 * static_cast<double>(k) * 1e-3;
  DrivingPath a = integrate_slits(samples, kSymmetric, 1e-3);
  DrivingPath b = integrate_slits([](double t) { return 0.3 * t; }, kSymmetric, 0.1, 1e-3);
  CHECK(distance(a.slits.back(), b.slits.back()) < 1e-12);
}

TEST_CASE("slit motion") {
  const DrivingPath& p = symmetric_run();
  for (std::size_t k = 1; k < p.slits.size(); ++k) CHECK(p.slits[k][0].y < p.slits[k - 1][0].y);
  // Reflection symmetry keeps the slit centred.
  CHECK(std::abs(p.slits.back()[0].center()) < 1e-9);

  DrivingPath coarse = integrate_slits([](double) { return 0.0; }, kSymmetric, 0.1, 1e-3);
  DrivingPath fine = integrate_slits([](double) { return 0.0; }, kSymmetric, 0.1, 5e-4);
  CHECK(distance(coarse.slits.back(), fine.slits.back()) < 1e-3);
}

TEST_CASE("a collapsing slit ends the run") {
  DrivingPath p = integrate_slits([](double t) { return 0.3 * t; }, SlitConfig({{0.04, -0.5, 2.2}}), 0.5, 1e-3);
  if (p.ended_early) CHECK_FALSE(p.end_reason.empty());
  CHECK(p.horizon() <= 0.5 + 1e-12);
}

TEST_CASE("trace") {
  CHECK(std::abs(trace(half_plane_fine(), 0.25) - cplx(0.0, 1.0)) < 1e-3);
  CHECK(trace(half_plane_fine(), 0.0, 1e-3).imag() < 1e-2);
  DrivingPath p = integrate_slits([](double t) { return std::sin(4.0 * t); }, kSymmetric, 0.2, 1e-3);
  CHECK(std::abs(trace(p, 0.2, 1e-3) - trace(p, 0.2, 5e-4)) < 1e-3);
  CHECK_THROWS_AS(trace(p, 0.2, 0.0), Error);
}

TEST_CASE("hull of the vertical slit") {
  ProbeGrid grid{-0.5, 0.5, 0.0, 1.5, 41, 61};
  HullSample hs = hull(half_plane_fine(), 0.25, grid);
  REQUIRE_FALSE(hs.points.empty());
  for (cplx z : hs.points) {
    CHECK(std::abs(z.real()) <= 2.0 * grid.dx());
    CHECK(z.imag() <= 1.0 + 2.0 * grid.dx());
  }
}

TEST_CASE("property: hulls are nested and shrink as t -> 0") {
  DrivingPath p = integrate_slits([](double t) { return std::sin(6.0 * t); }, kSymmetric, 0.2, 1e-3);
  ProbeGrid grid{-1.0, 1.0, 0.0, 0.9, 41, 19};
  std::vector<PointTrack> tracks = flow_points(grid.points(), p);
  HullSample a = hull_from_tracks(tracks, grid, 0.1), b = hull_from_tracks(tracks, grid, 0.2);
  for (cplx z : a.points) {
    bool found = false;
    for (cplx w : b.points) found = found || z == w;
    CHECK(found);
  }
  double prev = INFINITY;
  for (double t : {0.2, 0.05, 0.0125}) {
    double diam = std::abs(trace(p, t) - p.xi.front());
    CHECK(diam < prev);
    prev = diam;
  }
}

TEST_CASE("property: hulls stay in the growth ball") {
  for (int variant = 0; variant < 3; ++variant) {
    auto drv = [variant](double t) { return variant == 0 ? 0.5 * t : variant == 1 ? std::cos(8.0 * t) - 1.0 : -t * t; };
    DrivingPath p = integrate_slits(drv, kSymmetric, 0.15, 1e-3);
    double R = hull_radius(p, p.horizon(), kernel_growth_bound(p));
    HullSample hs = hull(p, p.horizon(), ProbeGrid{-1.5, 1.5, 0.0, 1.5, 31, 16});
    for (cplx z : hs.points) CHECK(std::abs(z - p.xi.front()) <= 4.0 * R);
  }
}

TEST_CASE("parallel point flows match sequential ones") {
  std::vector<cplx> zs{{0.2, 0.3}, {-0.4, 0.6}, {1.0, 0.2}, {0.0, 2.0}};
  std::vector<PointTrack> par = flow_points(zs, symmetric_run());
  for (std::size_t i = 0; i < zs.size(); ++i) CHECK(par[i].final_value == flow_point(zs[i], symmetric_run()).final_value);
}

TEST_CASE("inverse flow undoes the forward flow") {
  cplx z(0.3, 0.8);
  cplx w = advance(symmetric_run(), 0.0, 0.25, z);
  CHECK(std::abs(inverse_flow(symmetric_run(), 0.25, w) - z) < 1e-6);
}

TEST_CASE("flow agrees with the hitting representation") {
  const DrivingPath& p = symmetric_run();
  const double H = trace(p, 0.25, 1e-4).imag();
  const double h = 1.0 / 64.0;
  std::vector<cplx> probes{{0.0, 2.0}, {0.8, 0.4}};
  auto est = im_g_via_hitting(kSymmetric, [&](double x, double y) { return std::abs(x) <= 0.5 * h && y <= H + 0.5 * h; },
                              probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    double ode = flow_point(probes[i], p).final_value.imag();
    CHECK(std::abs(est[i].value - ode) / ode < 2e-2);
  }
}

TEST_CASE("capacity matches the ring-integral oracle") {
  CapacityComparison c = capacity_comparison(kSymmetric, 0.0, {0.1});
  CHECK(std::abs(c.a[0] - 0.2) / 0.2 < 1e-2);
}
