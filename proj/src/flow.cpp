#include "skle/flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "skle/errors.hpp"
#include "skle/parallel.hpp"

namespace skle {

namespace {

std::vector<double> axpy(const std::vector<double>& x, double a, const std::vector<double>& y) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + a * y[i];
  return r;
}

// Lagrange weights on nodes 0, 1/2, 1.
struct Quad {
  double w0, wm, w1;
};

Quad quad_weights(double th) {
  return {(1 - th) * (1 - 2 * th), 4 * th * (1 - th), th * (2 * th - 1)};
}

}  // namespace

// ---------------------------------------------------------------- DrivingPath

double DrivingPath::xi_at(double t) const {
  const std::size_t n = steps();
  if (n == 0) return xi.front();
  double u = t / dt;
  std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(n - 1)));
  Quad q = quad_weights(u - static_cast<double>(k));
  return q.w0 * xi[k] + q.wm * xi_mid[k] + q.w1 * xi[k + 1];
}

cplx DrivingPath::regular_at(double t, cplx z) const {
  if (slit_count() == 0) return 0.0;
  const std::size_t n = steps();
  if (n == 0) return kernel.front()->regular(z);
  double u = t / dt;
  std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(n - 1)));
  Quad q = quad_weights(u - static_cast<double>(k));
  return q.w0 * kernel[k]->regular(z) + q.wm * kernel_mid[k]->regular(z) + q.w1 * kernel[k + 1]->regular(z);
}

double DrivingPath::rate_at(double t) const {
  if (rate.empty()) return 1.0;
  const std::size_t n = steps();
  if (n == 0) return rate.front();
  double u = t / dt;
  std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(n - 1)));
  Quad q = quad_weights(u - static_cast<double>(k));
  return q.w0 * rate[k] + q.wm * rate_mid[k] + q.w1 * rate[k + 1];
}

cplx DrivingPath::psi(double t, cplx z) const {
  return psi_half_plane(z, xi_at(t)) + regular_at(t, z);
}

std::vector<double> DrivingPath::flat_at(double t) const {
  const std::size_t n = steps();
  if (n == 0) return slits.front().flat();
  double u = std::clamp(t / dt, 0.0, static_cast<double>(n));
  std::size_t k = std::min(static_cast<std::size_t>(u), n - 1);
  double th = u - static_cast<double>(k);
  std::vector<double> a = slits[k].flat(), b = slits[k + 1].flat();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += th * (b[i] - a[i]);
  return a;
}

// ---------------------------------------------------------------- PathBuilder

PathBuilder::PathBuilder(const SlitConfig& s0, double xi0, double dt, const FlowOptions& opt) : opt_(opt) {
  if (!(dt > 0)) throw Error(ErrorKind::Validation, "dt must be positive");
  path_.dt = dt;
  path_.xi.push_back(xi0);
  path_.slits.push_back(SlitConfig(s0.slits(), opt.margin));
  path_.kernel.push_back(solve_at(s0, xi0));
  drift_ = slit_drift(*path_.kernel.back());
}

PathBuilder::PathBuilder(const SlitConfig& s0, double xi0, double rate0, double dt, const FlowOptions& opt)
    : PathBuilder(s0, xi0, dt, opt) {
  path_.rate.push_back(rate0);
}

void PathBuilder::pop() {
  if (path_.steps() == 0) return;
  path_.xi.pop_back();
  path_.xi_mid.pop_back();
  path_.slits.pop_back();
  path_.kernel.pop_back();
  path_.kernel_mid.pop_back();
  if (!path_.rate.empty()) {
    path_.rate.pop_back();
    path_.rate_mid.pop_back();
  }
  path_.ended_early = false;
  path_.end_reason.clear();
  drift_ = slit_drift(*path_.kernel.back());
}

std::shared_ptr<const KernelSolution> PathBuilder::solve_at(const SlitConfig& s, double xi) const {
  try {
    if (opt_.cache) return opt_.cache->get(s, xi, opt_.kernel);
    return std::make_shared<const KernelSolution>(solve(s, xi, opt_.kernel));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoConvergence && !path_.kernel.empty()) throw;
    throw Error(ErrorKind::KernelFailure, std::string("kernel solve failed: ") + e.what(), e.value());
  }
}

bool PathBuilder::step(double xi_mid, double xi_next) {
  if (!path_.rate.empty()) throw Error(ErrorKind::Validation, "time-changed path needs step rates");
  return step(xi_mid, xi_next, 1.0, 1.0);
}

bool PathBuilder::step(double xi_mid, double xi_next, double rate_mid, double rate_next) {
  if (path_.ended_early) return false;
  const double r0 = path_.rate.empty() ? 1.0 : path_.rate.back();
  const double dt = path_.dt;
  const double t = path_.horizon();
  const std::vector<double> s0 = path_.slits.back().flat();
  auto stage = [&](const std::vector<double>& v, double xi, double r) -> std::vector<double> {
    SlitConfig c = SlitConfig::from_flat(v, opt_.margin);
    std::vector<double> f = slit_drift(*solve_at(c, xi));
    for (double& x : f) x *= r;
    return f;
  };
  try {
    std::vector<double> next;
    std::shared_ptr<const KernelSolution> k_next, k_mid;
    std::vector<double> f_next;
    if (s0.empty()) {
      k_next = solve_at(path_.slits.back(), xi_next);
      k_mid = solve_at(path_.slits.back(), xi_mid);
    } else {
      std::vector<double> f1 = drift_;
      for (double& x : f1) x *= r0;
      std::vector<double> f2 = stage(axpy(s0, 0.5 * dt, f1), xi_mid, rate_mid);
      std::vector<double> f3 = stage(axpy(s0, 0.5 * dt, f2), xi_mid, rate_mid);
      std::vector<double> f4 = stage(axpy(s0, dt, f3), xi_next, rate_next);
      next = s0;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += dt / 6.0 * (f1[i] + 2 * f2[i] + 2 * f3[i] + f4[i]);
      SlitConfig cn = SlitConfig::from_flat(next, opt_.margin);
      k_next = solve_at(cn, xi_next);
      f_next = slit_drift(*k_next);
      std::vector<double> mid(next.size());
      for (std::size_t i = 0; i < mid.size(); ++i)
        mid[i] = 0.5 * (s0[i] + next[i]) + dt / 8.0 * (f1[i] - rate_next * f_next[i]);
      k_mid = solve_at(SlitConfig::from_flat(mid, opt_.margin), xi_mid);
    }
    path_.xi.push_back(xi_next);
    path_.xi_mid.push_back(xi_mid);
    path_.slits.push_back(k_next->domain());
    path_.kernel.push_back(k_next);
    path_.kernel_mid.push_back(k_mid);
    if (!path_.rate.empty()) {
      path_.rate.push_back(rate_next);
      path_.rate_mid.push_back(rate_mid);
    }
    drift_ = std::move(f_next);
    return true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate && e.kind() != ErrorKind::NoConvergence) throw;
    path_.ended_early = true;
    path_.end_reason = (e.kind() == ErrorKind::Degenerate ? "state-space margin reached at t="
                                                          : "kernel unresolved near the boundary at t=") +
                       std::to_string(t + dt);
    return false;
  }
}

DrivingPath integrate_slits(const std::function<double(double)>& xi, const SlitConfig& s0, double T,
                            double dt, const FlowOptions& opt) {
  PathBuilder b(s0, xi(0.0), dt, opt);
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  for (std::size_t k = 0; k < n; ++k) {
    double t = static_cast<double>(k) * dt;
    if (!b.step(xi(t + 0.5 * dt), xi(t + dt))) break;
  }
  DrivingPath p = b.take();
  p.provenance = "deterministic";
  return p;
}

DrivingPath integrate_slits(const std::vector<double>& xs, const SlitConfig& s0, double dt,
                            const FlowOptions& opt) {
  if (xs.empty()) throw Error(ErrorKind::Validation, "empty driver");
  PathBuilder b(s0, xs[0], dt, opt);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k)
    if (!b.step(0.5 * (xs[k] + xs[k + 1]), xs[k + 1])) break;
  DrivingPath p = b.take();
  p.provenance = "table";
  return p;
}

// ---------------------------------------------------------------- point flows

namespace {

cplx rk4(const DrivingPath& p, double t, cplx g, double tau) {
  cplx k1 = p.velocity(t, g);
  cplx k2 = p.velocity(t + 0.5 * tau, g + 0.5 * tau * k1);
  cplx k3 = p.velocity(t + 0.5 * tau, g + 0.5 * tau * k2);
  cplx k4 = p.velocity(t + tau, g + tau * k3);
  return g + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// RK4 step with halving until the step stays in the closed half-plane and moves less than
// half the distance to the driver. Returns the step actually taken through tau.
cplx guarded_step(const DrivingPath& p, double t, cplx g, double& tau, bool real_line) {
  for (int halvings = 0; halvings < 30; ++halvings, tau *= 0.5) {
    double d = std::min(std::abs(g - p.xi_at(t)), std::abs(g - p.xi_at(t + tau)));
    cplx gn = rk4(p, t, g, tau);
    if (real_line) gn.imag(0.0);
    if (finite(gn) && gn.imag() >= 0 && std::abs(gn - g) <= 0.5 * d) return gn;
  }
  throw Error(ErrorKind::StepRejected, "flow step halving exhausted", t);
}

}  // namespace

PointTrack flow_point(cplx z, const DrivingPath& p, const FlowOptions& opt, double t_end) {
  PointTrack tr;
  tr.z0 = z;
  tr.g.push_back(z);
  const double dt = p.dt;
  const double horizon = (t_end < 0) ? p.horizon() : std::min(t_end, p.horizon());
  const auto nsteps = static_cast<std::size_t>(std::llround(horizon / dt));
  const double tau_min = dt / opt.substep_div;
  const double d_eff = std::max(opt.swallow_tol, std::sqrt(tau_min / opt.stiffness));
  const bool real_start = z.imag() == 0.0;
  double t = 0.0;
  cplx g = z;
  bool on_boundary = real_start;  // after a swallow with continuation
  double side = 1.0;
  for (std::size_t k = 0; k < nsteps; ++k) {
    const double t_next = static_cast<double>(k + 1) * dt;
    while (t < t_next - 1e-14 * dt) {
      double xi = p.xi_at(t);
      cplx rel = g - xi;
      double d = std::abs(rel);
      if (!tr.swallowed() && d <= d_eff && (real_start || !on_boundary)) {
        double extra = std::max(0.0, -(rel * rel).real()) / (4.0 * p.rate_at(t));
        if (real_start) extra = d * d / (4.0 * p.rate_at(t));
        tr.t_swallow = std::min(t + extra, horizon);
        if (!opt.continue_after_swallow) {
          tr.final_value = g;
          tr.final_time = t;
          return tr;
        }
        side = (rel.real() >= 0) ? 1.0 : -1.0;
        on_boundary = true;
        // Restart on the real line with the local half-plane profile.
        t = std::min(t_next, std::max(t, tr.t_swallow));
        double restart = std::max(t_next, tr.t_swallow + tau_min);
        g = p.xi_at(restart) + side * 2.0 * std::sqrt(restart - tr.t_swallow);
        t = restart;
        if (t >= t_next - 1e-14 * dt) break;
        continue;
      }
      double tau = std::min(t_next - t, std::max(tau_min, opt.stiffness * d * d));
      g = guarded_step(p, t, g, tau, on_boundary);
      t += tau;
    }
    tr.g.push_back(g);
  }
  tr.final_value = g;
  tr.final_time = t;
  return tr;
}

std::vector<PointTrack> flow_points(const std::vector<cplx>& zs, const DrivingPath& p, const FlowOptions& opt,
                                    double t_end) {
  std::vector<PointTrack> out(zs.size());
  parallel_for(zs.size(), [&](std::size_t i) { out[i] = flow_point(zs[i], p, opt, t_end); });
  return out;
}

cplx advance(const DrivingPath& p, double t0, double t1, cplx g, const FlowOptions& opt) {
  const double tau_min = p.dt / (64.0 * opt.substep_div);
  double t = t0;
  while (t < t1 - 1e-14 * p.dt) {
    double d = std::abs(g - p.xi_at(t));
    double cell = (std::floor(t / p.dt + 1e-9) + 1.0) * p.dt;
    double tau = std::min({t1 - t, cell - t, std::max(tau_min, opt.stiffness * d * d)});
    g = guarded_step(p, t, g, tau, false);
    t += tau;
  }
  return g;
}

cplx inverse_flow(const DrivingPath& p, double t, cplx w, const FlowOptions& opt) {
  double s = std::min(t, p.horizon());
  cplx z = w;
  long guard = 0;
  while (s > 0) {
    double d = std::abs(z - p.xi_at(s));
    double cell = (std::ceil(s / p.dt - 1e-9) - 1.0) * p.dt;
    double tau = std::min({s - cell, std::max(1e-15, opt.stiffness * d * d)});
    cplx k1 = p.velocity(s, z);
    cplx k2 = p.velocity(s - 0.5 * tau, z - 0.5 * tau * k1);
    cplx k3 = p.velocity(s - 0.5 * tau, z - 0.5 * tau * k2);
    cplx k4 = p.velocity(s - tau, z - tau * k3);
    z -= tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s -= tau;
    if (!finite(z) || ++guard > 10000000) throw Error(ErrorKind::LiftTooSmall, "reverse flow did not resolve");
  }
  return z;
}

cplx trace(const DrivingPath& p, double t, double lift, const FlowOptions& opt) {
  if (t <= 0) return p.xi.front();
  if (!(lift > 1e-12)) throw Error(ErrorKind::LiftTooSmall, "lift must exceed 1e-12", lift);
  return inverse_flow(p, t, cplx(p.xi_at(std::min(t, p.horizon())), lift), opt);
}

// ---------------------------------------------------------------- capacity

namespace {

CapacityFit fit_capacity(const double ys[3], const double vals[3]) {
  // Three-term model a + c/y^2 + e/y^4 (exact) and two-term least squares.
  Eigen::Matrix3d M;
  Eigen::Vector3d v;
  Eigen::MatrixXd M2(3, 2);
  for (int i = 0; i < 3; ++i) {
    double u = 1.0 / (ys[i] * ys[i]);
    M(i, 0) = 1.0;
    M(i, 1) = u;
    M(i, 2) = u * u;
    M2(i, 0) = 1.0;
    M2(i, 1) = u;
    v(i) = vals[i];
  }
  double a3 = M.fullPivLu().solve(v)(0);
  double a2 = M2.colPivHouseholderQr().solve(v)(0);
  return {a3, std::abs(a3 - a2)};
}

constexpr double kCapHeights[3] = {20.0, 40.0, 80.0};

}  // namespace

std::vector<CapacityFit> capacity_curve(const DrivingPath& p, const FlowOptions& opt) {
  std::vector<cplx> zs;
  for (double y : kCapHeights) zs.emplace_back(p.xi.front(), y);
  std::vector<PointTrack> tr = flow_points(zs, p, opt);
  std::vector<CapacityFit> out(p.steps() + 1);
  for (std::size_t k = 0; k <= p.steps(); ++k) {
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      if (tr[i].g.size() <= k) throw Error(ErrorKind::FitUnstable, "capacity probe swallowed");
      vals[i] = (zs[i] * (tr[i].g[k] - zs[i])).real();
    }
    out[k] = fit_capacity(kCapHeights, vals);
  }
  return out;
}

CapacityFit capacity(const DrivingPath& p, double t, const FlowOptions& opt) {
  if (t <= 0) return {};
  std::vector<cplx> zs;
  for (double y : kCapHeights) zs.emplace_back(p.xi.front(), y);
  double vals[3];
  for (int i = 0; i < 3; ++i) {
    PointTrack tr = flow_point(zs[i], p, opt, t);
    if (tr.swallowed()) throw Error(ErrorKind::FitUnstable, "capacity probe swallowed");
    vals[i] = (zs[i] * (tr.final_value - zs[i])).real();
  }
  CapacityFit f = fit_capacity(kCapHeights, vals);
  if (f.spread > 1e-2 * std::max(f.a, p.dt)) throw Error(ErrorKind::FitUnstable, "capacity tail models disagree", f.spread);
  return f;
}

// ---------------------------------------------------------------- hulls

std::vector<cplx> ProbeGrid::points() const {
  std::vector<cplx> pts;
  for (int j = 0; j < ny; ++j) {
    double y = y0 + (y1 - y0) * j / (ny - 1);
    if (y <= 0) continue;
    for (int i = 0; i < nx; ++i) pts.emplace_back(x0 + (x1 - x0) * i / (nx - 1), y);
  }
  return pts;
}

HullSample hull_from_tracks(const std::vector<PointTrack>& tracks, const ProbeGrid& grid, double t) {
  HullSample h;
  h.t = t;
  for (const auto& tr : tracks)
    if (tr.t_swallow <= t) h.points.push_back(tr.z0);
  // Marching squares on the membership indicator over rows with y > 0.
  int row0 = (grid.y0 <= 0) ? 1 : 0;
  int rows = grid.ny - row0;
  auto inside = [&](int i, int j) { return tracks[static_cast<std::size_t>(j) * grid.nx + i].t_swallow <= t; };
  auto pos = [&](double i, double j) {
    return cplx(grid.x0 + grid.dx() * i, grid.y0 + (grid.y1 - grid.y0) * (j + row0) / (grid.ny - 1));
  };
  for (int j = 0; j + 1 < rows; ++j) {
    for (int i = 0; i + 1 < grid.nx; ++i) {
      bool c[4] = {inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)};
      cplx e[4] = {pos(i + 0.5, j), pos(i + 1, j + 0.5), pos(i + 0.5, j + 1), pos(i, j + 0.5)};
      std::vector<int> cut;
      for (int k = 0; k < 4; ++k)
        if (c[k] != c[(k + 1) % 4]) cut.push_back(k);
      for (std::size_t k = 0; k + 1 < cut.size(); k += 2) h.boundary.emplace_back(e[cut[k]], e[cut[k + 1]]);
    }
  }
  return h;
}

HullSample hull(const DrivingPath& p, double t, const ProbeGrid& grid, const FlowOptions& opt) {
  return hull_from_tracks(flow_points(grid.points(), p, opt, t), grid, t);
}

double kernel_growth_bound(const DrivingPath& p, int stride) {
  double m = 2.0;
  for (std::size_t k = 0; k <= p.steps(); k += std::max(1, stride)) {
    const KernelSolution& K = *p.kernel[k];
    double xi = p.xi[k];
    auto probe = [&](cplx z) {
      if (z == cplx(xi, 0.0)) return;
      m = std::max(m, 2.0 * M_PI * std::abs(z - xi) * std::abs(K.eval(z)));
    };
    for (int a = 0; a < 24; ++a)
      for (int r = 0; r < 30; ++r) probe(cplx(xi, 0.0) + std::polar(1e-3 * std::pow(1.5, r), M_PI * (a + 0.5) / 24));
    const SlitConfig& s = K.domain();
    for (int j = 0; j < static_cast<int>(s.size()); ++j) {
      for (int i = 1; i < 32; ++i) {
        double x = s[j].x_left + (s[j].x_right - s[j].x_left) * i / 32.0;
        for (Side side : {Side::Upper, Side::Lower}) {
          cplx v = K.eval(HalfPlanePoint{x, s[j].y, side, j});
          m = std::max(m, 2.0 * M_PI * std::abs(cplx(x, s[j].y) - xi) * std::abs(v));
        }
      }
      for (bool right : {false, true}) {
        HalfPlanePoint e = HalfPlanePoint::endpoint(s, j, right);
        m = std::max(m, 2.0 * M_PI * std::abs(e.z() - xi) * std::abs(K.eval(e)));
      }
    }
  }
  return m;
}

double hull_radius(const DrivingPath& p, double t, double m1) {
  double sup = 0.0;
  for (std::size_t k = 0; k <= p.steps() && static_cast<double>(k) * p.dt <= t + 1e-12; ++k)
    sup = std::max(sup, std::abs(p.xi[k] - p.xi[0]));
  for (std::size_t k = 0; k < p.steps() && static_cast<double>(k) * p.dt < t; ++k)
    sup = std::max(sup, std::abs(p.xi_mid[k] - p.xi[0]));
  return std::max(sup, std::sqrt(m1 * t / 2.0));
}

}  // namespace skle
