#include <cmath>

#include "doctest.h"
#include "skle/absorbing.hpp"
#include "skle/oracle.hpp"

using namespace skle;
using doctest::Approx;

namespace {

const SlitConfig kSymmetric({{1.0, -0.5, 0.5}});
const Rect kSmall{-4.0, 4.0, 4.0, 1.0 / 16.0};

double max_abs_error(const GridField& f, const std::function<double(double, double)>& exact) {
  double worst = 0.0;
  for (int j = 1; j < f.ny; ++j)
    for (int i = 1; i < f.nx; ++i) worst = std::max(worst, std::abs(f.at(i, j) - exact(f.x(i), f.y(j))));
  return worst;
}

}  // namespace

TEST_CASE("constant data gives a constant field") {
  GridData d;
  d.bottom = [](double) { return 1.0; };
  d.outer = [](double, double) { return 1.0; };
  GridField f = grid_bmd_harmonic(kSymmetric, d, kSmall);
  CHECK(max_abs_error(f, [](double, double) { return 1.0; }) < 1e-10);
  CHECK(f.levels[0] == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("linear data is reproduced exactly without slits") {
  GridData d;
  d.outer = [](double, double y) { return y; };
  GridField f = grid_bmd_harmonic(SlitConfig(), d, kSmall);
  CHECK(max_abs_error(f, [](double, double y) { return y; }) < 1e-10);
  CHECK(f.residual < 1e-10);
}

TEST_CASE("absorbing harmonic measure") {
  GridField phi = harmonic_measure_phi(kSymmetric, 0);
  AbsorbingField exact = harmonic_measure(kSymmetric, 0);
  for (double x : {-3.0, 0.0, 2.0}) CHECK(phi.value(x, 0.0) == 0.0);
  for (cplx z : {cplx(0.0, 1.5), cplx(1.0, 2.0), cplx(0.0, 0.5), cplx(-2.0, 0.3)}) {
    double v = phi.value(z.real(), z.imag());
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == Approx(exact.value(z)).epsilon(2e-2));
  }
  WosSampler sampler;
  sampler.seed = 4;
  MonteCarloEstimate mc = wos_harmonic_measure(kSymmetric, 0, cplx(0.0, 1.5), 20000, sampler);
  CHECK(std::abs(mc.mean - phi.value(0.0, 1.5)) < 3.0 * mc.stderr_ + 5e-3);
}

TEST_CASE("harmonic measures of several slits sum to at most one") {
  SlitConfig pair({{1.0, -2.0, -1.0}, {1.5, 0.5, 2.0}});
  GridField a = harmonic_measure_phi(pair, 0, kSmall), b = harmonic_measure_phi(pair, 1, kSmall);
  for (int j = 1; j < a.ny; j += 7)
    for (int i = 1; i < a.nx; i += 7) CHECK(a.at(i, j) + b.at(i, j) <= 1.0 + 1e-12);
}

TEST_CASE("hitting representation of Im g") {
  SUBCASE("empty hull") {
    std::vector<cplx> probes{{0.0, 1.0}, {1.0, 0.5}};
    auto est = im_g_via_hitting(SlitConfig(), [](double, double) { return false; }, probes);
    for (std::size_t i = 0; i < probes.size(); ++i) CHECK(est[i].value == Approx(probes[i].imag()).epsilon(1e-2));
  }
  SUBCASE("vertical slit [0, i]") {
    const double h = 1.0 / 64.0;
    auto seg = [&](double x, double y) { return std::abs(x) <= 0.5 * h && y <= 1.0 + 0.5 * h; };
    auto est = im_g_via_hitting(SlitConfig(), seg, {cplx(0.0, 2.0), cplx(1.0, 1.0)});
    CHECK(est[0].value == Approx(std::sqrt(3.0)).epsilon(2e-2));
    CHECK(est[1].value == Approx(std::sqrt(cplx(1.0, 1.0) * cplx(1.0, 1.0) + 1.0).imag()).epsilon(2e-2));
  }
}

TEST_CASE("ring capacity") {
  CHECK(capacity_via_ring(SlitConfig(), [](double, double) { return false; }, 2.0) == Approx(0.0).epsilon(1e-12));
  const double h = 1.0 / 64.0;
  auto seg = [&](double x, double y) { return std::abs(x) <= 0.5 * h && y <= 1.0 + 0.5 * h; };
  CHECK(capacity_via_ring(SlitConfig(), seg, 2.0) == Approx(0.5).epsilon(3e-2));
}
