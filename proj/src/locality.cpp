#include "skle/locality.hpp"

#include <algorithm>
#include <cmath>

#include "skle/errors.hpp"
#include "skle/parallel.hpp"

namespace skle {

FlowHull FlowHull::none(const SlitConfig& domain) {
  FlowHull A;
  A.eta = PathBuilder(domain, 0.0, 1.0).take();
  A.empty = true;
  return A;
}

FlowHull FlowHull::vertical(const SlitConfig& domain, double x, double T_A, double dt, const FlowOptions& opt) {
  FlowHull A;
  A.eta = integrate_slits([x](double) { return x; }, domain, T_A, dt, opt);
  if (A.eta.ended_early) throw Error(ErrorKind::HullTooLarge, "hull flow ended early: " + A.eta.end_reason);
  A.empty = T_A <= 0;
  return A;
}

std::vector<cplx> FlowHull::outline(int samples) const {
  if (empty) return {};
  const double x = eta.xi.front();
  std::vector<cplx> pts{cplx(x - 1e-3, 0.0), cplx(x + 1e-3, 0.0)};
  for (int j = 1; j <= samples; ++j) pts.push_back(trace(eta, horizon() * j / samples));
  return pts;
}

cplx canonical_map(const FlowHull& A, cplx z, const FlowOptions& opt) {
  if (A.empty) return z;
  PointTrack tr = flow_point(z, A.eta, opt);
  if (tr.swallowed()) throw Error(ErrorKind::InsideHull, "point lies in the hull", tr.t_swallow);
  return tr.final_value;
}

Derivatives circle_derivatives(const std::function<std::vector<cplx>(const std::vector<cplx>&)>& f, double centre,
                               double rho, int n) {
  if (n < 10 || n % 2 != 0) throw Error(ErrorKind::Validation, "circle needs an even number of points", n);
  std::vector<cplx> w(n / 2);
  for (int m = 0; m < n / 2; ++m) w[m] = centre + std::polar(rho, 2.0 * M_PI * (m + 0.5) / n);
  std::vector<cplx> v = f(w);
  const int top = n / 2 - 1;
  std::vector<cplx> c(n / 2, 0.0);
  for (int m = 0; m < n / 2; ++m) {
    double th = 2.0 * M_PI * (m + 0.5) / n;
    for (int j = 0; j <= top; ++j) {
      c[j] += v[m] * std::polar(1.0, -j * th);
      c[j] += std::conj(v[m]) * std::polar(1.0, j * th);
    }
  }
  for (cplx& x : c) x /= static_cast<double>(n);
  double tail = std::abs(c[top]) / std::max(std::abs(c[1]), 1e-300);
  return {c[0], c[1] / rho, 2.0 * c[2] / (rho * rho), 6.0 * c[3] / (rho * rho * rho), tail};
}

// ---------------------------------------------------------------- image runs

namespace {

double obstacle_distance(double xi, const SlitConfig& s, const std::vector<PointTrack>& tracks, std::size_t k,
                         double t, bool& hit) {
  double d = std::numeric_limits<double>::infinity();
  for (const Slit& sl : s.slits()) d = std::min(d, distance_to_slit(sl, cplx(xi, 0.0)));
  for (const PointTrack& tr : tracks) {
    if (tr.t_swallow <= t || tr.g.size() <= k) {
      hit = true;
      continue;
    }
    d = std::min(d, std::abs(tr.g[k] - xi));
  }
  return d;
}

}  // namespace

ImageRun image_run(const DrivingPath& base, const FlowHull& A, const ImageOptions& opt) {
  ImageRun run;
  run.hull = A;
  run.base = base;
  const double dt = base.dt;
  const std::size_t K = base.steps();

  if (A.empty) {
    run.image = base;
    for (std::size_t k = 0; k <= K; ++k) {
      double t = static_cast<double>(k) * dt;
      run.samples.push_back({t, base.xi[k], base.xi[k], 1.0, 0.0, 0.0, t, 0.0});
      if (t >= opt.clock_stop) break;
    }
    run.stop_reason = "hull empty";
    return run;
  }

  std::vector<PointTrack> tracks = flow_points(A.outline(), base, opt.flow);
  const int half = opt.circle / 2;

  // Circle values pulled back through g_t and pushed through Phi_A.
  auto pulled = [&](std::size_t k, double rho) {
    double t = static_cast<double>(k) * dt;
    std::vector<cplx> p(half);
    for (int m = 0; m < half; ++m) {
      cplx w = base.xi[k] + std::polar(rho, 2.0 * M_PI * (m + 0.5) / opt.circle);
      p[m] = canonical_map(A, inverse_flow(base, t, w, opt.flow), opt.flow);
    }
    return p;
  };
  auto coefficients = [&](const std::vector<cplx>& v, double centre, double rho) {
    return circle_derivatives([&](const std::vector<cplx>&) { return v; }, centre, rho, opt.circle);
  };
  auto choose_rho = [&](std::size_t k) -> double {
    bool hit = false;
    double d = obstacle_distance(base.xi[k], base.slits[k], tracks, k, static_cast<double>(k) * dt, hit);
    if (hit) {
      run.hit = true;
      return 0.0;
    }
    double rho = std::min(opt.rho_max, opt.rho_fraction * d);
    if (rho < opt.rho_min) {
      run.hit = true;
      return 0.0;
    }
    return rho;
  };

  try {
    double rho = choose_rho(0);
    if (run.hit) throw Error(ErrorKind::TooCloseToHull, "start point too close to the hull");
    Derivatives d0 = coefficients(pulled(0, rho), base.xi[0], rho);
    if (d0.tail > opt.max_tail) throw Error(ErrorKind::TooCloseToHull, "circle leaves the analytic disc", d0.tail);
    ImageSample s0{0.0, base.xi[0], d0.h.real(), d0.d1.real(), d0.d2.real(), d0.d3.real(), 0.0, rho};
    run.samples.push_back(s0);
    PathBuilder builder(A.image_domain(), s0.xi_image, s0.d1 * s0.d1, dt, opt.flow);

    for (std::size_t k = 0; k < K; ++k) {
      const ImageSample& cur = run.samples.back();
      if (cur.clock >= opt.clock_stop) {
        run.stop_reason = "clock reached";
        break;
      }
      if (!builder.alive()) {
        run.stop_reason = builder.path().end_reason;
        break;
      }
      const double t = static_cast<double>(k) * dt;
      rho = choose_rho(k + 1);
      if (run.hit) {
        run.stop_reason = "base hull reached A";
        break;
      }
      std::vector<cplx> q = pulled(k + 1, rho);
      for (cplx& z : q) z = advance(builder.path(), 0.0, t, z, opt.flow);

      const double xi_next = base.xi[k + 1];
      const double lam_k = cur.d1 * cur.d1;
      double guess_xi = cur.xi_image + cur.d1 * (xi_next - cur.xi);
      double guess_lam = lam_k;
      double guess_d2 = cur.d2, guess_d3 = cur.d3;
      Derivatives d{};
      bool ok = true;
      for (int it = 0; it <= opt.iterations; ++it) {
        // Midpoint of h_t(xi(t)) along the step from its second-order expansion in xi.
        const double dx = xi_next - cur.xi;
        const double off = base.xi_mid[k] - 0.5 * (cur.xi + xi_next);
        double mid = 0.5 * (cur.xi_image + guess_xi) + cur.d1 * off - 0.125 * guess_d2 * dx * dx;
        double lam_mid = 0.5 * (lam_k + guess_lam) + 2.0 * cur.d1 * guess_d2 * off -
                         0.25 * (guess_d2 * guess_d2 + cur.d1 * guess_d3) * dx * dx;
        if (!builder.step(mid, guess_xi, lam_mid, guess_lam)) {
          ok = false;
          break;
        }
        if (it == opt.iterations) break;
        std::vector<cplx> r(q.size());
        for (std::size_t m = 0; m < q.size(); ++m) r[m] = advance(builder.path(), t, t + dt, q[m], opt.flow);
        d = coefficients(r, xi_next, rho);
        builder.pop();
        if (d.tail > opt.max_tail) throw Error(ErrorKind::TooCloseToHull, "circle leaves the analytic disc", d.tail);
        guess_xi = d.h.real();
        guess_lam = d.d1.real() * d.d1.real();
        guess_d2 = 0.5 * (cur.d2 + d.d2.real());
        guess_d3 = 0.5 * (cur.d3 + d.d3.real());
      }
      if (!ok) {
        run.stop_reason = builder.path().end_reason;
        break;
      }
      ImageSample s{t + dt, xi_next, d.h.real(), d.d1.real(), d.d2.real(), d.d3.real(),
                    cur.clock + 0.5 * dt * (lam_k + guess_lam), rho};
      run.samples.push_back(s);
    }
    if (run.stop_reason.empty()) run.stop_reason = "horizon";
    run.image = builder.take();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsideHull && e.kind() != ErrorKind::TooCloseToHull &&
        e.kind() != ErrorKind::StepRejected)
      throw;
    run.hit = true;
    run.stop_reason = e.what();
  }
  return run;
}

cplx h_map(const ImageRun& run, std::size_t k, cplx w, const FlowOptions& opt) {
  double t = static_cast<double>(k) * run.base.dt;
  cplx z = canonical_map(run.hull, inverse_flow(run.base, t, w, opt), opt);
  if (run.hull.empty) return z;
  return advance(run.image, 0.0, t, z, opt);
}

Derivatives h_derivatives(const ImageRun& run, std::size_t k, double rho, int points, const FlowOptions& opt) {
  if (k >= run.samples.size()) throw Error(ErrorKind::Validation, "time index beyond the image run");
  return circle_derivatives(
      [&](const std::vector<cplx>& w) {
        std::vector<cplx> v(w.size());
        for (std::size_t m = 0; m < w.size(); ++m) {
          try {
            v[m] = h_map(run, k, w[m], opt);
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::InsideHull)
              throw Error(ErrorKind::TooCloseToHull, "circle meets the hull", rho);
            throw;
          }
        }
        return v;
      },
      run.base.xi[k], rho, points);
}

// ---------------------------------------------------------------- capacity rate

namespace {

// Square root of (z - x)^2 + y^2 on the upper half-plane minus the slit [x, x + iy].
cplx slit_root(cplx z, double x, double y) {
  cplx u = z - x;
  cplx r = std::sqrt(u * u + y * y);
  if (r.imag() < 0 || (r.imag() == 0 && r.real() * u.real() < 0)) r = -r;
  return r;
}

}  // namespace

std::vector<double> zipper_capacity(const std::vector<cplx>& curve) {
  std::vector<cplx> p = curve;
  std::vector<double> cap(curve.size(), 0.0);
  for (std::size_t j = 1; j < p.size(); ++j) {
    // Straighten: move the base point to the real line, then open the segment to the next vertex.
    double x0 = p[0].real();
    double x = p[j].real(), y = std::max(p[j].imag(), 0.0);
    for (std::size_t m = j; m < p.size(); ++m) p[m] = x + slit_root(p[m], x, y);
    (void)x0;
    cap[j] = cap[j - 1] + 0.5 * y * y;
  }
  return cap;
}

double capacity_rate_residual(const ImageRun& run, const std::vector<double>& capacity, std::size_t k) {
  if (k == 0 || k + 1 >= capacity.size() || k >= run.samples.size())
    throw Error(ErrorKind::Validation, "capacity rate needs an interior index");
  double dt = run.base.dt;
  double rate = (capacity[k + 1] - capacity[k - 1]) / (2.0 * dt);
  double pred = 2.0 * run.samples[k].d1 * run.samples[k].d1;
  return std::abs(rate - pred) / pred;
}

CapacityRateReport capacity_rate_check(double x, double H, double T, double dt, const ImageOptions& opt) {
  SlitConfig none;
  DrivingPath base = integrate_slits([](double) { return 0.0; }, none, T, dt, opt.flow);
  FlowHull A = FlowHull::vertical(none, x, H * H / 4.0, dt / 4.0, opt.flow);
  ImageRun run = image_run(base, A, opt);

  // Zipper on Phi_A of the trace 2i sqrt(s), vertices subdividing each step.
  const int q = 16;
  const std::size_t K = run.samples.size() - 1;
  std::vector<cplx> curve;
  for (std::size_t k = 0; k < K; ++k)
    for (int i = 0; i < q; ++i) {
      double s = (static_cast<double>(k) + static_cast<double>(i) / q) * dt;
      curve.push_back(x + slit_root(cplx(0.0, 2.0 * std::sqrt(s)), x, H));
    }
  curve.push_back(x + slit_root(cplx(0.0, 2.0 * std::sqrt(static_cast<double>(K) * dt)), x, H));
  std::vector<double> zc = zipper_capacity(curve);
  std::vector<double> cap(K + 1);
  for (std::size_t k = 0; k <= K; ++k) cap[k] = zc[k * q];

  CapacityRateReport rep;
  for (std::size_t k = 2; k + 2 <= K; ++k) {
    double r = capacity_rate_residual(run, cap, k);
    rep.t.push_back(run.samples[k].t);
    rep.rate_image.push_back(2.0 * run.samples[k].d1 * run.samples[k].d1);
    rep.rate_zipper.push_back((cap[k + 1] - cap[k - 1]) / (2.0 * dt));
    rep.residual.push_back(r);
    rep.max_residual = std::max(rep.max_residual, r);
  }
  return rep;
}

// ---------------------------------------------------------------- drift and locality

namespace {

double bmd_at(const DrivingPath& p, std::size_t k) {
  return p.slit_count() == 0 ? 0.0 : b_bmd(*p.kernel[k]);
}

// Drift functional increment of step k: dxi~ - alpha h' dB - predicted drift dt.
double drift_increment(const ImageRun& run, const std::vector<double>& dB, std::size_t k, double alpha,
                       double alpha_pred, bool neg_bmd) {
  const ImageSample& a = run.samples[k];
  const ImageSample& b = run.samples[k + 1];
  const double dt = run.base.dt;
  double bb = bmd_at(run.base, k);
  double drift = neg_bmd ? -bb : 0.0;
  double bi = run.hull.empty ? bb : bmd_at(run.image, k);
  double pred = a.d1 * (drift + bb) + 0.5 * a.d2 * (alpha_pred * alpha_pred - 6.0) - a.d1 * a.d1 * bi;
  return (b.xi_image - a.xi_image) - alpha * a.d1 * dB[k] - pred * dt;
}

}  // namespace

DriftReport drift_check(const std::vector<ImageRun>& runs, const std::vector<SdeRun>& sde, double alpha,
                        double alpha_prediction, bool neg_bmd) {
  std::vector<double> r;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].hit || runs[i].samples.size() < 2) continue;
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < runs[i].samples.size(); ++k)
      s += drift_increment(runs[i], sde[i].increments, k, alpha, alpha_prediction, neg_bmd);
    r.push_back(s / runs[i].samples.back().t);
  }
  if (r.size() < 10) throw Error(ErrorKind::InsufficientPaths, "too few usable paths", static_cast<double>(r.size()));
  DriftReport d;
  d.paths = r.size();
  d.mean = mean(r);
  d.stderr_ = std::sqrt(sample_variance(r) / static_cast<double>(r.size()));
  d.z = d.stderr_ > 0 ? d.mean / d.stderr_ : 0.0;
  return d;
}

namespace {

struct Functionals {
  double terminal = 0.0, qv = 0.0, drift = 0.0;
};

// Path functionals on the clock u up to U, with linear interpolation inside the last step.
template <class Value, class Clock, class Noise>
bool functionals_at(std::size_t n, double U, Value value, Clock clock, Noise noise, Functionals& out) {
  double qv = 0.0, mart = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double u0 = clock(k), u1 = clock(k + 1);
    double dv = value(k + 1) - value(k);
    if (u1 >= U) {
      double w = (u1 > u0) ? (U - u0) / (u1 - u0) : 1.0;
      out.terminal = value(k) + w * dv;
      out.qv = qv + w * dv * dv;
      out.drift = out.terminal - value(0) - (mart + w * noise(k));
      return true;
    }
    qv += dv * dv;
    mart += noise(k);
  }
  return false;
}

}  // namespace

LocalityReport locality_test(const SlitConfig& domain, const FlowHull& A, double alpha, std::size_t n_paths,
                             std::uint64_t seed, const LocalityOptions& opt) {
  if (A.empty) throw Error(ErrorKind::Validation, "locality test needs a nonempty hull");
  const double dt = opt.dt;
  const double U = opt.clock;
  CoefficientSpec coeff = CoefficientSpec::constant(alpha, "neg_bmd");
  SdeOptions so;
  so.flow = opt.image.flow;

  DrivingPath still = PathBuilder(domain, 0.0, dt, opt.image.flow).take();
  ImageRun r0 = image_run(still, A, opt.image);
  if (r0.samples.empty()) throw Error(ErrorKind::TooCloseToHull, "start point too close to the hull");
  const double xi_image0 = r0.samples[0].xi_image;
  const double lam0 = r0.samples[0].d1 * r0.samples[0].d1;
  const double T = std::ceil(opt.base_factor * U / lam0 / dt) * dt;
  // Images of two real points beside A's base.
  const double xa = A.eta.xi.front();
  const std::vector<cplx> feet{canonical_map(A, cplx(xa - 0.05, 0.0), opt.image.flow),
                               canonical_map(A, cplx(xa + 0.05, 0.0), opt.image.flow)};

  std::vector<SdeRun> base = simulate_ensemble(0.0, domain, coeff, T, dt, seed, n_paths, so);
  ImageOptions io = opt.image;
  io.clock_stop = U;
  std::vector<ImageRun> runs(n_paths);
  std::vector<char> stopped(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    runs[i] = image_run(base[i].path, A, io);
    const ImageRun& r = runs[i];
    if (r.hit) return;
    std::vector<PointTrack> ft = flow_points(feet, r.image, io.flow);
    for (std::size_t k = 0; k < r.samples.size() && r.samples[k].clock <= U; ++k)
      for (const auto& f : ft)
        if (k >= f.g.size() || std::abs(f.g[k] - r.samples[k].xi_image) < opt.stop_distance) stopped[i] = 1;
  });

  LocalityReport rep;
  rep.paths = n_paths;
  std::vector<double> qv_img, dr_img;
  std::vector<ImageRun> ok;
  std::vector<SdeRun> ok_sde;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const ImageRun& r = runs[i];
    if (stopped[i]) {
      ++rep.stopped;
      continue;
    }
    if (r.hit) {
      ++rep.hits;
      continue;
    }
    Functionals f;
    const auto& dB = base[i].increments;
    bool done = functionals_at(
        r.samples.size(), U, [&](std::size_t k) { return r.samples[k].xi_image; },
        [&](std::size_t k) { return r.samples[k].clock; },
        [&](std::size_t k) { return alpha * r.samples[k].d1 * dB[k]; }, f);
    if (!done) {
      ++rep.short_runs;
      continue;
    }
    rep.image_terminal.push_back(f.terminal);
    qv_img.push_back(f.qv);
    dr_img.push_back(f.drift);
    ok.push_back(r);
    ok_sde.push_back(base[i]);
  }
  rep.used = rep.image_terminal.size();
  rep.hit_fraction = static_cast<double>(rep.hits + rep.stopped) / static_cast<double>(std::max<std::size_t>(1, n_paths));
  if (rep.hit_fraction > opt.max_hit_fraction)
    throw Error(ErrorKind::TooManyHits, "too many paths reached the hull", rep.hit_fraction);
  if (rep.used < 10) throw Error(ErrorKind::InsufficientPaths, "too few usable paths", static_cast<double>(rep.used));

  std::vector<SdeRun> fresh =
      simulate_ensemble(xi_image0, A.image_domain(), coeff, U, dt, seed ^ 0x5DEECE66DULL, n_paths, so);
  std::vector<char> fresh_stopped(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    const DrivingPath& p = fresh[i].path;
    std::vector<PointTrack> ft = flow_points(feet, p, io.flow);
    for (std::size_t k = 0; k < p.xi.size(); ++k)
      for (const auto& f : ft)
        if (k >= f.g.size() || std::abs(f.g[k] - p.xi[k]) < opt.stop_distance) fresh_stopped[i] = 1;
  });
  std::vector<double> qv_f, dr_f;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const DrivingPath& p = fresh[i].path;
    if (fresh_stopped[i]) {
      ++rep.fresh_stopped;
      continue;
    }
    if (p.ended_early) continue;
    Functionals f;
    bool done = functionals_at(
        p.xi.size(), U - 1e-12, [&](std::size_t k) { return p.xi[k]; },
        [&](std::size_t k) { return static_cast<double>(k) * dt; },
        [&](std::size_t k) { return alpha * fresh[i].increments[k]; }, f);
    if (!done) continue;
    rep.fresh_terminal.push_back(f.terminal);
    qv_f.push_back(f.qv);
    dr_f.push_back(f.drift);
  }
  rep.fresh_used = rep.fresh_terminal.size();
  rep.terminal = ks_two_sample(rep.image_terminal, rep.fresh_terminal);
  rep.quadratic_variation = ks_two_sample(qv_img, qv_f);
  rep.drift = ks_two_sample(dr_img, dr_f);
  rep.drift_residual = drift_check(ok, ok_sde, alpha, std::sqrt(6.0), true);
  return rep;
}

// ---------------------------------------------------------------- capacity comparison

CapacityComparison capacity_comparison(const SlitConfig& domain, double x, const std::vector<double>& t_ladder,
                                       double R, const Rect& rect) {
  CapacityComparison c;
  for (double t : t_ladder) {
    double H = 2.0 * std::sqrt(t);
    double tol = 0.5 * rect.h;
    auto seg = [=](double xx, double yy) { return std::abs(xx - x) <= tol && yy <= H + tol; };
    double a = capacity_via_ring(domain, seg, R, rect);
    double a0 = capacity_via_ring(SlitConfig(), seg, R, rect);
    c.t.push_back(t);
    c.a.push_back(a);
    c.a0.push_back(a0);
    c.ratio.push_back(std::abs(a - a0) / t);
  }
  c.decreasing = true;
  for (std::size_t i = 1; i < c.ratio.size(); ++i) c.decreasing = c.decreasing && c.ratio[i] < c.ratio[i - 1];
  return c;
}

}  // namespace skle
