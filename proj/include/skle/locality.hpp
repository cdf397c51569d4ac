#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "skle/driver.hpp"
#include "skle/flow.hpp"
#include "skle/oracle.hpp"

namespace skle {

// Hull A grown by a Komatu-Loewner flow; its canonical map is the terminal flow map.
struct FlowHull {
  DrivingPath eta;
  bool empty = true;

  const SlitConfig& domain() const { return eta.slits.front(); }
  const SlitConfig& image_domain() const { return eta.slits.back(); }
  double horizon() const { return empty ? 0.0 : eta.horizon(); }
  double capacity() const { return 2.0 * horizon(); }

  static FlowHull none(const SlitConfig& domain);
  // Hull of the flow driven by the constant x over [0, T_A].
  static FlowHull vertical(const SlitConfig& domain, double x, double T_A, double dt, const FlowOptions& opt = {});
  // Points on the hull: the base point (both sides) and trace samples.
  std::vector<cplx> outline(int samples = 16) const;
};

cplx canonical_map(const FlowHull& A, cplx z, const FlowOptions& opt = {});

struct Derivatives {
  cplx h, d1, d2, d3;
  double tail = 0.0;  // |highest resolved Taylor coefficient| relative to |h' rho|
};

// Derivatives at a real centre from values on the upper half of a circle, with the
// lower half supplied by reflection. `f` receives the circle points in order.
Derivatives circle_derivatives(const std::function<std::vector<cplx>(const std::vector<cplx>&)>& f, double centre,
                               double rho, int points);

struct ImageOptions {
  FlowOptions flow;
  int circle = 24;            // points on the full circle
  double rho_max = 0.25;
  double rho_fraction = 0.3;  // of the distance to the nearest obstacle
  double rho_min = 0.05;
  double max_tail = 2e-2;     // larger tails mean the circle is not in the analytic disc
  int iterations = 3;
  double clock_stop = std::numeric_limits<double>::infinity();  // stop once int lambda dt reaches this
};

struct ImageSample {
  double t = 0.0;
  double xi = 0.0;        // base driver
  double xi_image = 0.0;  // h_t(xi(t))
  double d1 = 1.0, d2 = 0.0, d3 = 0.0;  // h', h'', h''' at xi(t)
  double clock = 0.0;     // int_0^t h'^2, half the image capacity
  double rho = 0.0;
};

struct ImageRun {
  FlowHull hull;
  DrivingPath base;
  DrivingPath image;  // flow in the image domain with rate h'^2
  std::vector<ImageSample> samples;
  bool hit = false;   // the base hull reached A
  std::string stop_reason;

  double capacity(std::size_t k) const { return 2.0 * samples[k].clock; }
};

ImageRun image_run(const DrivingPath& base, const FlowHull& A, const ImageOptions& opt = {});

// h_t(w) = g~_t(Phi_A(g_t^{-1}(w))) at grid index k.
cplx h_map(const ImageRun& run, std::size_t k, cplx w, const FlowOptions& opt = {});
Derivatives h_derivatives(const ImageRun& run, std::size_t k, double rho, int points = 24,
                          const FlowOptions& opt = {});

// Half-plane capacity of a curve by vertical-slit zipper: cumulative capacity after
// each vertex (entry 0 is the base point, capacity 0).
std::vector<double> zipper_capacity(const std::vector<cplx>& curve);

// Relative residual |d a~/dt - 2 h'^2| / (2 h'^2) at interior index k, central differences
// of the supplied capacity series.
double capacity_rate_residual(const ImageRun& run, const std::vector<double>& capacity, std::size_t k);

struct CapacityRateReport {
  std::vector<double> t, rate_image, rate_zipper, residual;
  double max_residual = 0.0;
};
// N = 0, driver identically 0, A = vertical slit at x of height H; the image capacity is
// taken from a zipper on Phi_A of the trace.
CapacityRateReport capacity_rate_check(double x, double H, double T, double dt, const ImageOptions& opt = {});

struct DriftReport {
  double mean = 0.0, stderr_ = 0.0, z = 0.0;
  std::size_t paths = 0;
};
// Standardised residual of the image-driver drift against
// h'(b + b_BMD) + h''(alpha^2 - 6)/2 - h'^2 b_BMD(image), using the known Brownian part.
DriftReport drift_check(const std::vector<ImageRun>& runs, const std::vector<SdeRun>& sde, double alpha,
                        double alpha_prediction, bool neg_bmd);

struct LocalityOptions {
  ImageOptions image;
  double clock = 0.05;         // image-clock horizon U
  double base_factor = 2.0;    // base horizon as a multiple of U / h'(xi0)^2
  double max_hit_fraction = 0.2;
  // Both ensembles are stopped once the driver comes this close to the image of A's
  // base on the real line; stopped paths are excluded from the comparison.
  double stop_distance = 0.25;
  double dt = 1e-3;
};

struct LocalityReport {
  KsResult terminal, quadratic_variation, drift;
  std::size_t paths = 0;
  std::size_t hits = 0;          // image runs that could not be continued near A
  std::size_t stopped = 0;       // image runs meeting the stopping rule
  std::size_t fresh_stopped = 0;
  std::size_t short_runs = 0;
  std::size_t used = 0, fresh_used = 0;
  double hit_fraction = 0.0;     // (hits + stopped) / paths
  DriftReport drift_residual;
  std::vector<double> image_terminal, fresh_terminal;
};

LocalityReport locality_test(const SlitConfig& domain, const FlowHull& A, double alpha, std::size_t n_paths,
                             std::uint64_t seed, const LocalityOptions& opt = {});

struct CapacityComparison {
  std::vector<double> t, a, a0, ratio;
  bool decreasing = false;
};
// Vertical segments [x, x + 2i sqrt(t)] in the slit domain and in H on the same grid.
CapacityComparison capacity_comparison(const SlitConfig& domain, double x, const std::vector<double>& t_ladder,
                                       double R = 2.0, const Rect& rect = {});

}  // namespace skle
