#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "skle/geometry.hpp"

namespace skle {

struct Rect {
  double x0 = -8.0;
  double x1 = 8.0;
  double y1 = 8.0;
  double h = 1.0 / 64.0;
};

using NodeSet = std::vector<std::pair<int, int>>;

struct GridData {
  // Dirichlet data on y = 0, on the outer rectangle sides/top, and on hull nodes.
  std::function<double(double)> bottom = [](double) { return 0.0; };
  std::function<double(double, double)> outer = [](double, double) { return 0.0; };
  std::function<double(double, double)> hull = [](double, double) { return 0.0; };
  // Dirichlet data on slit nodes when slits are not shorted.
  std::function<double(int, double)> slit = [](int, double) { return 0.0; };
  // Shorted slit node value is level_j + offset(j, x); kirchhoff(j) is the required
  // sum over slit edges of (node value - neighbour value).
  std::function<double(int, double)> offset = [](int, double) { return 0.0; };
  std::function<double(int)> kirchhoff = [](int) { return 0.0; };
};

class GridField {
 public:
  int nx = 0, ny = 0;
  double x0 = 0.0, h = 0.0;
  std::vector<double> u;        // (nx+1)*(ny+1), row-major in j
  std::vector<double> levels;   // shorted slit values
  double residual = 0.0;        // max 5-point residual at free nodes
  double kirchhoff_residual = 0.0;
  double snap_error = 0.0;      // max endpoint snap distance

  double at(int i, int j) const { return u[static_cast<std::size_t>(j) * (nx + 1) + i]; }
  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return j * h; }
  // Bilinear interpolation.
  double value(double xx, double yy) const;
};

// Factorised five-point Laplacian on a rectangle with slits (shorted or absorbing) and
// Dirichlet hull nodes. Reusable for several data sets on the same layout.
class GridSolver {
 public:
  GridSolver(const SlitConfig& domain, const Rect& rect, bool shorted, const NodeSet& hull = {});
  ~GridSolver();
  GridSolver(GridSolver&&) noexcept;

  GridField solve(const GridData& data) const;
  const Rect& rect() const { return rect_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int node_i(double x) const;
  int node_j(double y) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Rect rect_;
  int nx_ = 0, ny_ = 0;
};

// Discrete BMD-harmonic extension (slits shorted).
GridField grid_bmd_harmonic(const SlitConfig& domain, const GridData& data, const Rect& rect = {},
                            const NodeSet& hull = {});

// Absorbing harmonic measure of slit i with dipole-corrected outer data.
GridField harmonic_measure_phi(const SlitConfig& domain, int i, const Rect& rect = {});

struct GridKernel {
  GridField regular_im;  // Im of the regular part on the grid
  GridField coarse_im;   // same at spacing 2h when extrapolating in h
  double xi = 0.0;
  double b_bmd = 0.0;
  double c_bmd = 0.0;
  std::vector<double> levels;  // slit values of Im Psi
  double poisson(double x, double y) const;
};

// BMD Poisson kernel with pole xi: the half-plane kernel is carried exactly and the
// bounded remainder solved on the shorted grid. With extrapolate, values are combined
// from spacings h and 2h assuming first-order convergence.
GridKernel grid_kernel(const SlitConfig& domain, double xi, const Rect& rect = {}, bool extrapolate = true);

// Grid nodes on the vertical segment from x + 0i up to x + i*height (inclusive).
NodeSet vertical_segment_nodes(const Rect& rect, double x, double height);
// Grid nodes whose position satisfies the predicate.
NodeSet nodes_where(const Rect& rect, const std::function<bool(double, double)>& inside);

// Im g(z) = lim r P(hit y = r before hull), one grid solve per ladder entry.
struct HittingEstimate {
  double value = 0.0;
  std::vector<double> ladder;   // r * P at each r
};
std::vector<HittingEstimate> im_g_via_hitting(const SlitConfig& domain,
                                              const std::function<bool(double, double)>& hull,
                                              const std::vector<cplx>& probes,
                                              const std::vector<double>& r_ladder = {4.0, 6.0, 8.0},
                                              double half_width = 8.0, double h = 1.0 / 64.0);

// Ring-integral capacity of a hull given as grid nodes.
double capacity_via_ring(const SlitConfig& domain, const std::function<bool(double, double)>& hull,
                         double R, const Rect& rect = {});
// Same, from an already solved hull field.
double capacity_via_ring(const GridField& hull_field, double R);

// Walk-on-spheres estimate of absorbing slit harmonic measure.
struct WosSampler {
  unsigned long long seed = 1;
  long max_steps = 100000;
  double delta = 1e-4;
};
struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n = 0;
};
MonteCarloEstimate wos_harmonic_measure(const SlitConfig& domain, int i, cplx z, long walks,
                                        const WosSampler& sampler = {});

}  // namespace skle
