#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "skle/geometry.hpp"
#include "skle/kernel.hpp"

namespace skle {

struct FlowOptions {
  KernelOptions kernel;
  double margin = kDefaultMargin;
  double swallow_tol = 1e-4;
  int substep_div = 16;        // smallest substep is dt / substep_div
  double stiffness = 0.05;     // substep <= stiffness * |g - xi|^2
  bool continue_after_swallow = false;
  KernelCache* cache = nullptr;
};

// Discretised driving process with the kernels solved along it. Between grid times the
// driver and the regular part of Psi are interpolated quadratically through the
// endpoint and midpoint solves.
class DrivingPath {
 public:
  double dt = 1e-3;
  std::vector<double> xi;        // steps + 1
  std::vector<double> xi_mid;    // steps
  std::vector<SlitConfig> slits; // steps + 1
  std::vector<std::shared_ptr<const KernelSolution>> kernel;      // steps + 1
  std::vector<std::shared_ptr<const KernelSolution>> kernel_mid;  // steps
  // Optional clock rate lambda(t): the flow runs as dg/dt = -2 pi lambda Psi. Empty means 1.
  std::vector<double> rate;      // steps + 1
  std::vector<double> rate_mid;  // steps
  bool ended_early = false;
  std::string end_reason;
  std::string provenance;
  unsigned long long seed = 0;

  std::size_t steps() const { return xi.empty() ? 0 : xi.size() - 1; }
  double horizon() const { return static_cast<double>(steps()) * dt; }
  std::size_t slit_count() const { return slits.empty() ? 0 : slits.front().size(); }

  double xi_at(double t) const;
  cplx regular_at(double t, cplx z) const;
  double rate_at(double t) const;
  cplx psi(double t, cplx z) const;
  // Loewner velocity -2 pi lambda Psi.
  cplx velocity(double t, cplx z) const { return -2.0 * M_PI * rate_at(t) * psi(t, z); }
  std::vector<double> flat_at(double t) const;
};

// Builds a DrivingPath one step at a time; the slit equations are advanced by RK4 with a
// fresh kernel solve per stage.
class PathBuilder {
 public:
  PathBuilder(const SlitConfig& s0, double xi0, double dt, const FlowOptions& opt = {});
  // Time-changed variant; every step must then supply the rate.
  PathBuilder(const SlitConfig& s0, double xi0, double rate0, double dt, const FlowOptions& opt);

  // Advances one step with driver values at mid-step and end of step. Returns false and
  // marks the path ended when the slit state leaves the state space.
  bool step(double xi_mid, double xi_next);
  bool step(double xi_mid, double xi_next, double rate_mid, double rate_next);
  // Drops the last step.
  void pop();

  const DrivingPath& path() const { return path_; }
  DrivingPath take() { return std::move(path_); }
  const KernelSolution& current_kernel() const { return *path_.kernel.back(); }
  bool alive() const { return !path_.ended_early; }
  void stop(const std::string& reason) {
    path_.ended_early = true;
    path_.end_reason = reason;
  }

 private:
  std::shared_ptr<const KernelSolution> solve_at(const SlitConfig& s, double xi) const;
  DrivingPath path_;
  FlowOptions opt_;
  std::vector<double> drift_;  // slit drift at the current grid point
};

DrivingPath integrate_slits(const std::function<double(double)>& xi, const SlitConfig& s0, double T,
                            double dt, const FlowOptions& opt = {});

// Driver given as samples on the time grid (linear in between).
DrivingPath integrate_slits(const std::vector<double>& xi_samples, const SlitConfig& s0, double dt,
                            const FlowOptions& opt = {});

struct PointTrack {
  cplx z0;
  std::vector<cplx> g;   // values at grid times up to the swallow (or the end)
  double t_swallow = std::numeric_limits<double>::infinity();
  bool swallowed() const { return t_swallow < std::numeric_limits<double>::infinity(); }
  cplx final_value;
  double final_time = 0.0;
};

PointTrack flow_point(cplx z, const DrivingPath& path, const FlowOptions& opt = {}, double t_end = -1.0);
std::vector<PointTrack> flow_points(const std::vector<cplx>& zs, const DrivingPath& path,
                                    const FlowOptions& opt = {}, double t_end = -1.0);

// Flows g from time t0 to t1 with adaptive RK4 substeps; no swallow handling.
cplx advance(const DrivingPath& path, double t0, double t1, cplx g, const FlowOptions& opt = {});

// g_t^{-1}(w) by integrating the flow backward from time t to 0.
cplx inverse_flow(const DrivingPath& path, double t, cplx w, const FlowOptions& opt = {});

// Tip estimate g_t^{-1}(xi(t) + i lift).
cplx trace(const DrivingPath& path, double t, double lift = 1e-3, const FlowOptions& opt = {});

struct CapacityFit {
  double a = 0.0;
  double spread = 0.0;   // disagreement between the two- and three-term tail models
};

// Half-plane capacity at every grid time from probes at iy, y in {20, 40, 80}.
std::vector<CapacityFit> capacity_curve(const DrivingPath& path, const FlowOptions& opt = {});
CapacityFit capacity(const DrivingPath& path, double t, const FlowOptions& opt = {});

struct ProbeGrid {
  double x0 = -2.0, x1 = 2.0, y0 = 0.0, y1 = 2.0;
  int nx = 81, ny = 41;  // y0 row is skipped when y0 == 0
  std::vector<cplx> points() const;
  double dx() const { return (x1 - x0) / (nx - 1); }
};

struct HullSample {
  double t = 0.0;
  std::vector<cplx> points;
  std::vector<std::pair<cplx, cplx>> boundary;  // marching-squares segments
};

HullSample hull_from_tracks(const std::vector<PointTrack>& tracks, const ProbeGrid& grid, double t);
HullSample hull(const DrivingPath& path, double t, const ProbeGrid& grid, const FlowOptions& opt = {});

// Sampled sup of 2 pi |z - xi| |Psi| over the run.
double kernel_growth_bound(const DrivingPath& path, int stride = 10);
// R_t = max(sup |xi(s) - xi(0)|, sqrt(M1 t / 2)).
double hull_radius(const DrivingPath& path, double t, double m1);

}  // namespace skle
