#include <cmath>

#include "doctest.h"
#include "skle/absorbing.hpp"
#include "skle/errors.hpp"
#include "skle/kernel.hpp"
#include "skle/oracle.hpp"
#include "skle/rng.hpp"

using namespace skle;
using doctest::Approx;

namespace {

const SlitConfig kSymmetric({{1.0, -0.5, 0.5}});
const SlitConfig kOffset({{1.0, 0.0, 1.0}});
const SlitConfig kPair({{1.0, -2.0, -1.0}, {1.5, 0.5, 2.0}});

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Grid oracles shared between cases; each is a sizeable sparse solve.
const GridKernel& grid_symmetric() {
  static const GridKernel g = grid_kernel(kSymmetric, 0.0);
  return g;
}
const GridKernel& grid_offset() {
  static const GridKernel g = grid_kernel(kOffset, 0.0);
  return g;
}

}  // namespace

TEST_CASE("half-plane kernel") {
  KernelSolution k = solve(SlitConfig(), 0.0);
  cplx v = k.eval(cplx(0.0, 1.0));
  CHECK(std::abs(v - cplx(0.0, 1.0 / M_PI)) < 1e-15);
  CHECK(k.poisson(cplx(1.0, 1.0)) == Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  CHECK(std::abs(k.eval(cplx(0.0, 2.0)) - cplx(0.0, 1.0 / (2.0 * M_PI))) < 1e-15);
}

TEST_CASE("imaginary part is constant on a slit and matches the shorted grid") {
  KernelSolution k = solve(kSymmetric, 0.0);
  const double m = k.level(0);
  for (double x : {-0.45, -0.2, 0.0, 0.3, 0.49}) {
    CHECK(k.eval(HalfPlanePoint::on_slit(kSymmetric, 0, x, Side::Upper)).imag() == Approx(m).epsilon(1e-6));
    CHECK(k.eval(HalfPlanePoint::on_slit(kSymmetric, 0, x, Side::Lower)).imag() == Approx(m).epsilon(1e-6));
  }
  CHECK(k.eval(HalfPlanePoint::on_slit(kSymmetric, 0, 0.0, Side::Upper)).imag() ==
        Approx(k.eval(HalfPlanePoint::on_slit(kSymmetric, 0, 0.0, Side::Lower)).imag()).epsilon(1e-9));
  CHECK(rel(grid_symmetric().levels[0], m) < 1e-2);
}

TEST_CASE("boundary values: real on the line away from the pole") {
  KernelSolution k = solve(kPair, 0.3);
  for (double x : {-3.0, -1.0, 0.0, 1.0, 4.0}) CHECK(std::abs(k.eval(cplx(x, 0.0)).imag()) < 1e-10);
}

TEST_CASE("endpoint value agrees with extrapolation in the square-root chart") {
  KernelSolution k = solve(kSymmetric, 0.0);
  cplx end = k.eval(HalfPlanePoint::endpoint(kSymmetric, 0, false));
  // f(h) = f0 + c sqrt(h) + O(h) along a vertical offset.
  const double h = 1e-6;
  cplx z = kSymmetric[0].left();
  cplx f1 = k.eval(z + cplx(0.0, h)), f4 = k.eval(z + cplx(0.0, h / 4.0));
  cplx extrap = 2.0 * f4 - f1;
  CHECK(std::abs(extrap.real() - end.real()) < 1e-4);
}

TEST_CASE("slit drift") {
  CHECK(slit_drift(SlitConfig(), 0.0).empty());
  KernelSolution k = solve(kSymmetric, 0.0);
  std::vector<double> d = slit_drift(k);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == Approx(-2.0 * M_PI * k.level(0)).epsilon(1e-9));
  CHECK(d[0] < 0.0);
  CHECK(d[1] == Approx(-d[2]).epsilon(1e-8));
}

TEST_CASE("BMD constants") {
  CHECK(b_bmd(SlitConfig(), 0.4) == 0.0);
  CHECK(c_bmd(SlitConfig(), 0.4) == 0.0);

  for (const SlitConfig& s : {kOffset, kPair}) {
    double b = b_bmd(s, 0.0);
    CHECK(rel(b_bmd(scale(s, 2.0), 0.0), 0.5 * b) < 1e-6);
    KernelSolution k = solve(s, 0.0);
    CHECK(rel(b_bmd_ladder(k), b) < 1e-4);
    CHECK(c_bmd(s, 0.7) == Approx(c_bmd(translate(s, -0.7), 0.0)).epsilon(1e-8));
  }

  // The symmetric slit has b = 0 by reflection, so the oracle is compared in absolute terms.
  CHECK(std::abs(b_bmd(kSymmetric, 0.0)) < 1e-10);
  CHECK(std::abs(grid_symmetric().b_bmd) < 1e-2);
  CHECK(rel(grid_offset().b_bmd, b_bmd(kOffset, 0.0)) < 1e-2);
  CHECK(rel(grid_symmetric().c_bmd, c_bmd(kSymmetric, 0.0)) < 5e-2);
}

TEST_CASE("kernel at large height") {
  KernelSolution k = solve(kSymmetric, 0.0);
  CHECK(std::abs(1e3 * k.poisson(cplx(0.0, 1e3)) * M_PI - 1.0) < 1e-3);
}

TEST_CASE("property: scaling and translation of the kernel") {
  CounterRng rng(77, 0);
  for (int trial = 0; trial < 6; ++trial) {
    double xi = 2.0 * rng.uniform(10 * trial) - 1.0;
    double c = 0.3 + 3.0 * rng.uniform(10 * trial + 1);
    double r = 6.0 * rng.uniform(10 * trial + 2) - 3.0;
    KernelSolution base = solve(kPair, xi);
    KernelSolution sc = solve(scale(kPair, c), c * xi);
    KernelSolution tr = solve(translate(kPair, r), xi + r);
    for (int p = 0; p < 8; ++p) {
      cplx z(6.0 * rng.uniform(10 * trial + 3 + 100 * p) - 3.0, 0.05 + 3.0 * rng.uniform(10 * trial + 4 + 100 * p));
      cplx ref = base.eval(z);
      CHECK(std::abs(c * sc.eval(c * z) - ref) <= 1e-6 * std::abs(ref));
      CHECK(std::abs(tr.eval(z + r) - ref) <= 1e-6 * std::abs(ref));
    }
  }
}

TEST_CASE("property: reflection x -> -x conjugates the kernel") {
  SlitConfig mirrored({{1.0, 1.0, 2.0}, {1.5, -2.0, -0.5}});
  KernelSolution a = solve(kPair, 0.3), b = solve(mirrored, -0.3);
  for (cplx z : {cplx(0.2, 0.4), cplx(-1.0, 2.0), cplx(1.7, 0.9)}) {
    cplx w = -std::conj(z);
    CHECK(std::abs(-std::conj(b.eval(w)) - a.eval(z)) < 1e-8);
  }
}

TEST_CASE("period matrix") {
  PeriodMatrix one = period_matrix(kSymmetric);
  CHECK(one.a(0, 0) > 0.0);

  PeriodMatrix pm = period_matrix(kPair);
  CHECK(pm.a(0, 1) == Approx(pm.a(1, 0)).epsilon(1e-6));
  SlitConfig swapped({kPair[1], kPair[0]});
  PeriodMatrix ps = period_matrix(swapped);
  CHECK(ps.a(0, 0) == Approx(pm.a(1, 1)).epsilon(1e-9));
  CHECK(ps.a(0, 1) == Approx(pm.a(1, 0)).epsilon(1e-9));

  // Flux of the grid harmonic measure through the five-point stencil, same sign convention.
  GridField f = harmonic_measure_phi(kPair, 0);
  auto flux = [&](const Slit& s, double level) {
    int jy = static_cast<int>(std::lround(s.y / f.h));
    double sum = 0.0;
    for (int i = 0; i <= f.nx; ++i) {
      double x = f.x(i);
      if (x < s.x_left - 1e-9 || x > s.x_right + 1e-9) continue;
      sum += level - f.at(i, jy + 1) + level - f.at(i, jy - 1);
      if (std::abs(x - s.x_left) < 0.5 * f.h) sum += level - f.at(i - 1, jy);
      if (std::abs(x - s.x_right) < 0.5 * f.h) sum += level - f.at(i + 1, jy);
    }
    return sum;
  };
  CHECK(rel(flux(kPair[0], 1.0), pm.a(0, 0)) < 5e-2);
  CHECK(rel(flux(kPair[1], 0.0), pm.a(0, 1)) < 5e-2);
  CHECK(pm.a(0, 1) < 0.0);
}

TEST_CASE("decomposition through absorbing quantities") {
  for (cplx z : {cplx(0.3, 0.2), cplx(-1.0, 1.0)}) CHECK(kernel_via_decomposition(SlitConfig(), z, 0.1) ==
                                                        Approx(poisson_half_plane(z, 0.1)).epsilon(1e-14));
  KernelSolution k = solve(kSymmetric, 0.2);
  CounterRng rng(3, 3);
  for (int p = 0; p < 10; ++p) {
    cplx z(4.0 * rng.uniform(2 * p) - 2.0, 0.1 + 2.5 * rng.uniform(2 * p + 1));
    CHECK(rel(kernel_via_decomposition(kSymmetric, z, 0.2), k.poisson(z)) < 1e-2);
  }
}

TEST_CASE("kernel cache returns identical solutions") {
  KernelCache cache;
  auto a = cache.get(kPair, 0.25);
  auto b = cache.get(kPair, 0.25);
  CHECK(a == b);
  CHECK(cache.hits() == 1);
  KernelSolution fresh = solve(kPair, 0.25);
  CHECK(a->eval(cplx(0.1, 0.7)) == fresh.eval(cplx(0.1, 0.7)));
  auto c = cache.get(kPair, 0.25 + 1e-6);
  CHECK(c->pole() == 0.25 + 1e-6);
}

TEST_CASE("solver diagnostics") {
  KernelSolution k = solve(kPair, 0.0);
  CHECK(k.residual() < 1e-6);
  CHECK(k.condition() >= 1.0);
}
