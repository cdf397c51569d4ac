#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "skle/errors.hpp"
#include "skle/oracle.hpp"

namespace skle {

namespace {

enum : int { kFree = 0, kBoundary = -1, kHull = -2, kAbsorbSlit = -3 };
constexpr int kShortBase = 1;  // shorted slit j has type kShortBase + j

constexpr int di[4] = {1, -1, 0, 0};
constexpr int dj[4] = {0, 0, 1, -1};

}  // namespace

struct GridSolver::Impl {
  int nx, ny, nslit;
  double x0, h;
  bool shorted;
  std::vector<int> type;         // per node
  std::vector<int> slit_of;      // absorbing slit index per node, or -1
  std::vector<int> unknown;      // per node: free unknown index, or -1
  int nfree = 0;
  double snap = 0.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> A;

  std::size_t id(int i, int j) const { return static_cast<std::size_t>(j) * (nx + 1) + i; }
  double xx(int i) const { return x0 + i * h; }
  double yy(int j) const { return j * h; }
};

GridSolver::GridSolver(const SlitConfig& domain, const Rect& rect, bool shorted, const NodeSet& hull)
    : impl_(std::make_unique<Impl>()), rect_(rect) {
  Impl& g = *impl_;
  g.h = rect.h;
  g.x0 = rect.x0;
  g.nx = static_cast<int>(std::lround((rect.x1 - rect.x0) / rect.h));
  g.ny = static_cast<int>(std::lround(rect.y1 / rect.h));
  if (std::abs(g.nx * rect.h - (rect.x1 - rect.x0)) > 1e-9 || std::abs(g.ny * rect.h - rect.y1) > 1e-9)
    throw Error(ErrorKind::Validation, "grid spacing must divide the rectangle");
  nx_ = g.nx;
  ny_ = g.ny;
  g.nslit = static_cast<int>(domain.size());
  g.shorted = shorted;
  const std::size_t nn = static_cast<std::size_t>(g.nx + 1) * (g.ny + 1);
  g.type.assign(nn, kFree);
  g.slit_of.assign(nn, -1);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      if (i == 0 || j == 0 || i == g.nx || j == g.ny) g.type[g.id(i, j)] = kBoundary;
  for (auto [i, j] : hull)
    if (i > 0 && j > 0 && i < g.nx && j < g.ny) g.type[g.id(i, j)] = kHull;
  for (int s = 0; s < g.nslit; ++s) {
    const Slit& sl = domain[s];
    int js = static_cast<int>(std::lround(sl.y / g.h));
    int il = static_cast<int>(std::lround((sl.x_left - g.x0) / g.h));
    int ir = static_cast<int>(std::lround((sl.x_right - g.x0) / g.h));
    if (js <= 0 || js >= g.ny || il <= 0 || ir >= g.nx || ir <= il)
      throw Error(ErrorKind::Validation, "slit does not fit the grid");
    g.snap = std::max({g.snap, std::abs(js * g.h - sl.y), std::abs(g.xx(il) - sl.x_left),
                       std::abs(g.xx(ir) - sl.x_right)});
    for (int i = il; i <= ir; ++i) {
      g.type[g.id(i, js)] = shorted ? kShortBase + s : kAbsorbSlit;
      g.slit_of[g.id(i, js)] = s;
    }
  }
  g.unknown.assign(nn, -1);
  for (std::size_t p = 0; p < nn; ++p)
    if (g.type[p] == kFree) g.unknown[p] = g.nfree++;
  const int nunk = g.nfree + (shorted ? g.nslit : 0);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.nfree) * 5 + 16);
  std::vector<double> slit_diag(g.nslit, 0.0);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      std::size_t p = g.id(i, j);
      int t = g.type[p];
      if (t == kFree) {
        int row = g.unknown[p];
        trip.emplace_back(row, row, 4.0);
        for (int d = 0; d < 4; ++d) {
          std::size_t q = g.id(i + di[d], j + dj[d]);
          int tq = g.type[q];
          if (tq == kFree) trip.emplace_back(row, g.unknown[q], -1.0);
          else if (tq >= kShortBase) trip.emplace_back(row, g.nfree + tq - kShortBase, -1.0);
        }
      } else if (t >= kShortBase) {
        int s = t - kShortBase;
        int row = g.nfree + s;
        for (int d = 0; d < 4; ++d) {
          std::size_t q = g.id(i + di[d], j + dj[d]);
          int tq = g.type[q];
          if (tq == t) continue;
          slit_diag[s] += 1.0;
          if (tq == kFree) trip.emplace_back(row, g.unknown[q], -1.0);
          else if (tq >= kShortBase) trip.emplace_back(row, g.nfree + tq - kShortBase, -1.0);
        }
      }
    }
  }
  if (shorted)
    for (int s = 0; s < g.nslit; ++s) trip.emplace_back(g.nfree + s, g.nfree + s, slit_diag[s]);
  g.A.resize(nunk, nunk);
  g.A.setFromTriplets(trip.begin(), trip.end());
  g.ldlt.compute(g.A);
  if (g.ldlt.info() != Eigen::Success) throw Error(ErrorKind::NonConvergent, "grid factorisation failed");
}

GridSolver::~GridSolver() = default;
GridSolver::GridSolver(GridSolver&&) noexcept = default;

int GridSolver::node_i(double x) const { return static_cast<int>(std::lround((x - rect_.x0) / rect_.h)); }
int GridSolver::node_j(double y) const { return static_cast<int>(std::lround(y / rect_.h)); }

GridField GridSolver::solve(const GridData& data) const {
  const Impl& g = *impl_;
  const std::size_t nn = g.type.size();
  // Known node values (Dirichlet) and shorted offsets.
  std::vector<double> known(nn, 0.0);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      std::size_t p = g.id(i, j);
      double x = g.xx(i), y = g.yy(j);
      switch (g.type[p]) {
        case kBoundary: known[p] = (j == 0) ? data.bottom(x) : data.outer(x, y); break;
        case kHull: known[p] = data.hull(x, y); break;
        case kAbsorbSlit: known[p] = data.slit(g.slit_of[p], x); break;
        case kFree: break;
        default: known[p] = data.offset(g.type[p] - kShortBase, x);
      }
    }
  }
  const int nunk = g.A.rows();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nunk);
  for (int s = 0; s < (g.shorted ? g.nslit : 0); ++s) rhs(g.nfree + s) = data.kirchhoff(s);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      std::size_t p = g.id(i, j);
      int t = g.type[p];
      if (t == kFree) {
        double& r = rhs(g.unknown[p]);
        for (int d = 0; d < 4; ++d) {
          std::size_t q = g.id(i + di[d], j + dj[d]);
          if (g.type[q] != kFree) r += known[q];
        }
      } else if (t >= kShortBase) {
        double& r = rhs(g.nfree + t - kShortBase);
        for (int d = 0; d < 4; ++d) {
          std::size_t q = g.id(i + di[d], j + dj[d]);
          int tq = g.type[q];
          if (tq == t) continue;
          r -= known[p];
          if (tq != kFree) r += known[q];
        }
      }
    }
  }
  Eigen::VectorXd sol = g.ldlt.solve(rhs);
  if (g.ldlt.info() != Eigen::Success) throw Error(ErrorKind::NonConvergent, "grid solve failed");

  GridField f;
  f.nx = g.nx;
  f.ny = g.ny;
  f.x0 = g.x0;
  f.h = g.h;
  f.snap_error = g.snap;
  f.u.assign(nn, 0.0);
  f.levels.assign(g.nslit, 0.0);
  if (g.shorted)
    for (int s = 0; s < g.nslit; ++s) f.levels[s] = sol(g.nfree + s);
  for (std::size_t p = 0; p < nn; ++p) {
    int t = g.type[p];
    if (t == kFree) f.u[p] = sol(g.unknown[p]);
    else if (t >= kShortBase) f.u[p] = f.levels[t - kShortBase] + known[p];
    else f.u[p] = known[p];
  }
  // Residual checks.
  std::vector<double> kir(g.nslit, 0.0);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      std::size_t p = g.id(i, j);
      int t = g.type[p];
      if (t == kFree) {
        double r = 4.0 * f.u[p];
        for (int d = 0; d < 4; ++d) r -= f.u[g.id(i + di[d], j + dj[d])];
        f.residual = std::max(f.residual, std::abs(r));
      } else if (t >= kShortBase) {
        for (int d = 0; d < 4; ++d) {
          std::size_t q = g.id(i + di[d], j + dj[d]);
          if (g.type[q] != t) kir[t - kShortBase] += f.u[p] - f.u[q];
        }
      }
    }
  }
  for (int s = 0; s < (g.shorted ? g.nslit : 0); ++s)
    f.kirchhoff_residual = std::max(f.kirchhoff_residual, std::abs(kir[s] - data.kirchhoff(s)));
  return f;
}

double GridField::value(double xx, double yy) const {
  double fi = (xx - x0) / h, fj = yy / h;
  int i = std::clamp(static_cast<int>(std::floor(fi)), 0, nx - 1);
  int j = std::clamp(static_cast<int>(std::floor(fj)), 0, ny - 1);
  double a = fi - i, b = fj - j;
  return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
         a * b * at(i + 1, j + 1);
}

GridField grid_bmd_harmonic(const SlitConfig& domain, const GridData& data, const Rect& rect,
                            const NodeSet& hull) {
  GridSolver s(domain, rect, true, hull);
  return s.solve(data);
}

NodeSet vertical_segment_nodes(const Rect& rect, double x, double height) {
  return nodes_where(rect, [&](double xx, double yy) {
    return std::abs(xx - x) < 0.5 * rect.h && yy <= height + 1e-12;
  });
}

NodeSet nodes_where(const Rect& rect, const std::function<bool(double, double)>& inside) {
  NodeSet out;
  int nx = static_cast<int>(std::lround((rect.x1 - rect.x0) / rect.h));
  int ny = static_cast<int>(std::lround(rect.y1 / rect.h));
  for (int j = 1; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      if (inside(rect.x0 + i * rect.h, j * rect.h)) out.emplace_back(i, j);
  return out;
}

namespace {

// Coefficient of Im z/|z|^2 in the far field, from a half-ring integral.
double dipole_coefficient(const GridField& f, double R) {
  const int n = 512;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    double th = M_PI * (k + 0.5) / n;
    acc += f.value(R * std::cos(th), R * std::sin(th)) * std::sin(th);
  }
  return (2.0 * R / M_PI) * acc * (M_PI / n);
}

double fit_radius(const Rect& r) { return 0.6 * std::min({r.y1, -r.x0, r.x1}); }

}  // namespace

GridField harmonic_measure_phi(const SlitConfig& domain, int i, const Rect& rect) {
  if (i < 0 || i >= static_cast<int>(domain.size())) throw Error(ErrorKind::Validation, "slit index out of range");
  GridSolver s(domain, rect, false);
  GridData d;
  d.slit = [i](int j, double) { return j == i ? 1.0 : 0.0; };
  double c = 0.0;
  GridField f;
  for (int it = 0; it < 4; ++it) {
    d.outer = [c](double x, double y) { return c * y / (x * x + y * y); };
    f = s.solve(d);
    c = dipole_coefficient(f, fit_radius(rect));
  }
  return f;
}

double GridKernel::poisson(double x, double y) const {
  double dx = x - xi;
  double reg = regular_im.value(x, y);
  if (!coarse_im.u.empty()) reg = 2.0 * reg - coarse_im.value(x, y);
  return y / (M_PI * (dx * dx + y * y)) + reg;
}

namespace {

GridKernel grid_kernel_single(const SlitConfig& domain, double xi, const Rect& rect) {
  auto ph = [xi](double x, double y) {
    double dx = x - xi;
    return y / (M_PI * (dx * dx + y * y));
  };
  GridSolver s(domain, rect, true);
  GridData d;
  d.offset = [&](int j, double x) { return -ph(x, domain[j].y); };
  // The Kirchhoff balance holds for Im Psi = P_H + w; the shift collects P_H differences.
  const double hh = rect.h;
  d.kirchhoff = [&](int j) {
    const Slit& sl = domain[j];
    int js = s.node_j(sl.y);
    int il = s.node_i(sl.x_left), ir = s.node_i(sl.x_right);
    double ys = js * hh;
    double k = 0.0;
    for (int i = il; i <= ir; ++i) {
      double x = rect.x0 + i * hh;
      double pq = ph(x, ys);
      k += ph(x, ys + hh) - pq;
      k += ph(x, ys - hh) - pq;
      if (i == il) k += ph(x - hh, ys) - pq;
      if (i == ir) k += ph(x + hh, ys) - pq;
    }
    return k;
  };
  // Far field of the regular part: Im(A/z^2 + B/z^3), refined from the solution.
  double A = 0.0, B = 0.0;
  GridField f;
  const double Rf = fit_radius(rect);
  for (int it = 0; it < 3; ++it) {
    d.outer = [A, B, xi](double x, double y) {
      cplx z(x - xi, y);
      return (A / (z * z) + B / (z * z * z)).imag();
    };
    f = s.solve(d);
    // Im(A e^{-2i th}/R^2 + B e^{-3i th}/R^3) = -A sin2th/R^2 - B sin3th/R^3
    const int n = 512;
    double s2 = 0.0, s3 = 0.0;
    for (int k = 0; k < n; ++k) {
      double th = M_PI * (k + 0.5) / n;
      double v = f.value(xi + Rf * std::cos(th), Rf * std::sin(th));
      s2 += v * std::sin(2 * th);
      s3 += v * std::sin(3 * th);
    }
    s2 *= M_PI / n;
    s3 *= M_PI / n;
    A = -s2 * (2.0 / M_PI) * Rf * Rf;
    B = -s3 * (2.0 / M_PI) * Rf * Rf * Rf;
  }
  GridKernel gk;
  gk.regular_im = f;
  gk.xi = xi;
  gk.levels = f.levels;
  // Re R(xi) from dU/dx = dV/dy along the real axis, averaged over both directions.
  auto dvdy = [&](double x) { return (8.0 * f.value(x, hh) - f.value(x, 2 * hh)) / (6.0 * hh); };
  auto far = [&](double x) {
    cplx z(x - xi, 0.0);
    return (A / (z * z) + B / (z * z * z)).real();
  };
  auto along = [&](double end) {
    const int n = static_cast<int>(std::lround(std::abs(end - xi) / hh));
    double step = (end - xi) / n, acc = 0.0;
    for (int k = 0; k <= n; ++k) acc += ((k == 0 || k == n) ? 0.5 : 1.0) * dvdy(xi + k * step);
    return far(end) - acc * step;
  };
  gk.b_bmd = 2.0 * M_PI * 0.5 * (along(rect.x1 - 2 * hh) + along(rect.x0 + 2 * hh));
  double w1 = f.value(xi, hh), w2 = f.value(xi, 2 * hh);
  gk.c_bmd = 2.0 * M_PI * (8.0 * w1 - w2) / (6.0 * hh);
  return gk;
}

}  // namespace

GridKernel grid_kernel(const SlitConfig& domain, double xi, const Rect& rect, bool extrapolate) {
  GridKernel fine = grid_kernel_single(domain, xi, rect);
  if (!extrapolate || domain.empty()) return fine;
  Rect r2 = rect;
  r2.h = 2.0 * rect.h;
  GridKernel coarse = grid_kernel_single(domain, xi, r2);
  fine.coarse_im = std::move(coarse.regular_im);
  fine.b_bmd = 2.0 * fine.b_bmd - coarse.b_bmd;
  fine.c_bmd = 2.0 * fine.c_bmd - coarse.c_bmd;
  for (std::size_t j = 0; j < fine.levels.size(); ++j) fine.levels[j] = 2.0 * fine.levels[j] - coarse.levels[j];
  return fine;
}

std::vector<HittingEstimate> im_g_via_hitting(const SlitConfig& domain,
                                              const std::function<bool(double, double)>& hull,
                                              const std::vector<cplx>& probes,
                                              const std::vector<double>& r_ladder, double half_width,
                                              double h) {
  std::vector<HittingEstimate> out(probes.size());
  for (double r : r_ladder) {
    Rect rect{-half_width, half_width, r, h};
    GridSolver s(domain, rect, true, nodes_where(rect, hull));
    GridData d;
    d.outer = [r](double, double y) { return y / r; };
    GridField f = s.solve(d);
    for (std::size_t p = 0; p < probes.size(); ++p)
      out[p].ladder.push_back(r * f.value(probes[p].real(), probes[p].imag()));
  }
  // r P = Im g + c1/r + c2/r^2: exact fit through the ladder.
  for (auto& e : out) {
    const std::size_t n = r_ladder.size();
    if (n == 1) {
      e.value = e.ladder[0];
      continue;
    }
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) M(i, k) = std::pow(1.0 / r_ladder[i], static_cast<double>(k));
      v(i) = e.ladder[i];
    }
    e.value = M.colPivHouseholderQr().solve(v)(0);
  }
  return out;
}

double capacity_via_ring(const GridField& f, double R) { return dipole_coefficient(f, R); }

double capacity_via_ring(const SlitConfig& domain, const std::function<bool(double, double)>& hull,
                         double R, const Rect& rect) {
  if (domain.extent() >= R) throw Error(ErrorKind::HullTooLarge, "slits leave the ring");
  NodeSet nodes = nodes_where(rect, hull);
  for (auto [i, j] : nodes) {
    if (std::hypot(rect.x0 + i * rect.h, j * rect.h) >= R)
      throw Error(ErrorKind::HullTooLarge, "hull leaves the ring");
  }
  if (nodes.empty()) return 0.0;
  GridSolver s(domain, rect, true, nodes);
  GridData d;
  d.hull = [](double, double y) { return y; };
  double a = 0.0;
  const double Rf = fit_radius(rect);
  for (int it = 0; it < 6; ++it) {
    d.outer = [a](double x, double y) { return a * y / (x * x + y * y); };
    GridField f = s.solve(d);
    double next = dipole_coefficient(f, Rf);
    double ring = dipole_coefficient(f, R);
    if (std::abs(next - a) < 1e-12 * std::max(1.0, std::abs(a)) || it == 5) return ring;
    a = next;
  }
  return a;
}

}  // namespace skle
