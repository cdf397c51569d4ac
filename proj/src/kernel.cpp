#include "skle/kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "skle/errors.hpp"
#include "skle/joukowski.hpp"

namespace skle {

namespace {

constexpr cplx kI{0.0, 1.0};

struct Frame {
  double c, L, y;
  cplx zeta(cplx z) const { return (z - cplx(c, y)) / L; }
  cplx zeta_image(cplx z) const { return (z - cplx(c, -y)) / L; }
};

Frame frame(const Slit& s) { return {s.center(), s.half_length(), s.y}; }

Joukowski own_side(Side side, double s) {
  switch (side) {
    case Side::Upper: return joukowski_upper(s);
    case Side::Lower: return joukowski_lower(s);
    case Side::EndLeft: return {{-1.0, 0.0}, {0.0, 0.0}};
    case Side::EndRight: return {{1.0, 0.0}, {0.0, 0.0}};
    default: return joukowski(s);
  }
}

double half_plane_poisson(cplx z, double xi) {
  double dx = z.real() - xi;
  return z.imag() / (M_PI * (dx * dx + z.imag() * z.imag()));
}

// Builds and solves the collocation system for m modes per slit.
void assemble_and_solve(const SlitConfig& d, double xi, int m, const KernelOptions& opt,
                        std::vector<double>& coef, std::vector<double>& level, double& cond) {
  const int n = static_cast<int>(d.size());
  const int p = m + 1;
  const int dim = n * p;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  std::vector<cplx> pw(m), pw_img(m);

  for (int j = 0; j < n; ++j) {
    Frame fj = frame(d[j]);
    for (int i = 0; i < p; ++i) {
      double s = std::cos((2.0 * i + 1.0) * M_PI / (2.0 * p));
      cplx z(fj.c + fj.L * s, fj.y);
      int row = j * p + i;
      for (int l = 0; l < n; ++l) {
        Frame fl = frame(d[l]);
        cplx F = (l == j) ? joukowski_upper(s).F : joukowski(fl.zeta(z)).F;
        cplx G = joukowski(fl.zeta_image(z)).F;
        cplx a = F, b = G;
        for (int k = 0; k < m; ++k) {
          // Im[(-i)(F^k - G^k)] = -Re(F^k - G^k)
          A(row, l * p + k) = -(a - b).real();
          a *= F;
          b *= G;
        }
      }
      A(row, j * p + m) = -1.0;
      rhs(row) = -half_plane_poisson(z, xi);
    }
  }

  Eigen::VectorXd sol;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  double rc = lu.rcond();
  cond = rc > 0 ? 1.0 / rc : INFINITY;
  if (cond <= opt.cond_regularize) {
    sol = lu.solve(rhs);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
    if (cond > opt.cond_cap) throw Error(ErrorKind::IllConditioned, "kernel collocation ill-conditioned", cond);
    svd.setThreshold(1.0 / opt.cond_regularize);
    sol = svd.solve(rhs);
  }
  coef.assign(static_cast<std::size_t>(n) * m, 0.0);
  level.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < m; ++k) coef[j * m + k] = sol(j * p + k);
    level[j] = sol(j * p + m);
  }
}

}  // namespace

cplx KernelSolution::slit_term(int j, cplx z, Side side, bool own) const {
  Frame f = frame(domain_[j]);
  const double* c = coef_.data() + static_cast<std::size_t>(j) * m_;
  cplx F = own ? own_side(side, (z.real() - f.c) / f.L).F : joukowski(f.zeta(z)).F;
  cplx G = joukowski(f.zeta_image(z)).F;
  return -kI * (power_series(c, m_, F) - power_series(c, m_, G));
}

cplx KernelSolution::regular(cplx z) const {
  cplx r = 0.0;
  for (int j = 0; j < static_cast<int>(domain_.size()); ++j) r += slit_term(j, z, Side::Interior, false);
  return r;
}

cplx KernelSolution::regular(const HalfPlanePoint& p) const {
  if (p.side == Side::Interior || p.side == Side::Boundary) return regular(p.z());
  cplx z = p.z();
  cplx r = 0.0;
  for (int j = 0; j < static_cast<int>(domain_.size()); ++j) r += slit_term(j, z, p.side, j == p.slit);
  return r;
}

cplx KernelSolution::eval(cplx z) const {
  if (z == cplx(xi_, 0.0)) throw Error(ErrorKind::AtPole, "evaluation at the pole");
  return psi_half_plane(z, xi_) + regular(z);
}

cplx KernelSolution::eval(const HalfPlanePoint& p) const {
  cplx z = p.z();
  if (z == cplx(xi_, 0.0)) throw Error(ErrorKind::AtPole, "evaluation at the pole");
  return psi_half_plane(z, xi_) + regular(p);
}

cplx KernelSolution::regular_derivative(cplx z) const {
  cplx r = 0.0;
  for (int j = 0; j < static_cast<int>(domain_.size()); ++j) {
    Frame f = frame(domain_[j]);
    const double* c = coef_.data() + static_cast<std::size_t>(j) * m_;
    Joukowski a = joukowski(f.zeta(z));
    Joukowski b = joukowski(f.zeta_image(z));
    cplx da = -weighted_power_series(c, m_, a.F) / a.S;
    cplx db = -weighted_power_series(c, m_, b.F) / b.S;
    r += -kI * (da - db) / f.L;
  }
  return r;
}

cplx KernelSolution::derivative(cplx z) const {
  cplx w = z - xi_;
  return 1.0 / (M_PI * w * w) + regular_derivative(z);
}

KernelSolution solve(const SlitConfig& domain, double xi, const KernelOptions& opt) {
  KernelSolution k;
  k.domain_ = domain;
  k.xi_ = xi;
  if (domain.empty()) return k;

  const int n = static_cast<int>(domain.size());
  int m = std::max(opt.nodes, 2);
  for (;;) {
    assemble_and_solve(domain, xi, m, opt, k.coef_, k.level_, k.cond_);
    k.m_ = m;
    // Slit constancy at points between collocation nodes, both sides.
    double res = 0.0;
    const int q = 2 * (m + 1);
    for (int j = 0; j < n; ++j) {
      const Slit& s = domain[j];
      for (int i = 1; i < q; ++i) {
        double x = s.center() + s.half_length() * std::cos(M_PI * i / q);
        for (Side side : {Side::Upper, Side::Lower}) {
          double v = k.eval(HalfPlanePoint{x, s.y, side, j}).imag();
          res = std::max(res, std::abs(v - k.level_[j]));
        }
      }
    }
    k.residual_ = res;
    if (res <= opt.tol_slit) break;
    if (2 * m > opt.max_nodes) {
      if (res <= opt.tol_relaxed) break;
      throw Error(ErrorKind::NoConvergence, "slit constancy residual above tolerance", res);
    }
    m *= 2;
  }
  return k;
}

std::vector<double> slit_drift(const KernelSolution& k) {
  const SlitConfig& d = k.domain();
  const std::size_t n = d.size();
  std::vector<double> out(3 * n);
  for (std::size_t j = 0; j < n; ++j) {
    int jj = static_cast<int>(j);
    cplx left = k.eval(HalfPlanePoint::endpoint(d, jj, false));
    cplx right = k.eval(HalfPlanePoint::endpoint(d, jj, true));
    out[j] = -2.0 * M_PI * left.imag();
    out[n + j] = -2.0 * M_PI * left.real();
    out[2 * n + j] = -2.0 * M_PI * right.real();
  }
  return out;
}

std::vector<double> slit_drift(const SlitConfig& domain, double xi, const KernelOptions& opt) {
  return slit_drift(solve(domain, xi, opt));
}

double b_bmd(const KernelSolution& k) {
  if (k.domain().empty()) return 0.0;
  return 2.0 * M_PI * k.regular(cplx(k.pole(), 0.0)).real();
}

double c_bmd(const KernelSolution& k) {
  if (k.domain().empty()) return 0.0;
  return 2.0 * M_PI * k.regular_derivative(cplx(k.pole(), 0.0)).real();
}

double b_bmd(const SlitConfig& domain, double xi, const KernelOptions& opt) {
  return b_bmd(solve(domain, xi, opt));
}

double c_bmd(const SlitConfig& domain, double xi, const KernelOptions& opt) {
  return c_bmd(solve(domain, xi, opt));
}

namespace {

// Richardson on f(h) = f0 + c2 h^2 + c4 h^4 + ... with h shrinking by 4 per level.
double richardson_even(std::vector<double> v) {
  double factor = 16.0;
  for (std::size_t lev = 1; lev < v.size(); ++lev) {
    for (std::size_t i = v.size() - 1; i >= lev; --i) v[i] = (factor * v[i] - v[i - 1]) / (factor - 1.0);
    factor *= 16.0;
  }
  return v.back();
}

double ladder(const std::vector<double>& vals, double scale_hint) {
  std::vector<double> head(vals.begin(), vals.end() - 1);
  double full = richardson_even(vals);
  double part = richardson_even(head);
  if (std::abs(full - part) > 1e-6 * std::max(1.0, std::abs(scale_hint)))
    throw Error(ErrorKind::ExtrapolationUnstable, "ladder values disagree", std::abs(full - part));
  return full;
}

}  // namespace

double b_bmd_ladder(const KernelSolution& k, double h0, int levels) {
  if (k.domain().empty()) return 0.0;
  std::vector<double> v;
  double h = h0;
  for (int i = 0; i < levels; ++i, h *= 0.25) {
    cplx z(k.pole(), h);
    cplx r = k.eval(z) - psi_half_plane(z, k.pole());
    v.push_back(2.0 * M_PI * r.real());
  }
  return ladder(v, v.front());
}

double c_bmd_ladder(const KernelSolution& k, double h0, int levels) {
  if (k.domain().empty()) return 0.0;
  std::vector<double> v;
  double h = h0;
  for (int i = 0; i < levels; ++i, h *= 0.25) {
    cplx z(k.pole(), h);
    double d = 0.25 * h;
    auto reg = [&](cplx w) { return k.eval(w) - psi_half_plane(w, k.pole()); };
    cplx der = (reg(z + d) - reg(z - d)) / (2.0 * d);
    v.push_back(2.0 * M_PI * der.real());
  }
  return ladder(v, v.front());
}

}  // namespace skle

namespace skle {

std::shared_ptr<const KernelSolution> KernelCache::get(const SlitConfig& s, double xi, const KernelOptions& opt) {
  std::vector<double> flat = s.flat();
  unsigned long long key = 1469598103934665603ULL;
  auto mix = [&](double v) {
    key ^= static_cast<unsigned long long>(std::llround(v / quantum_));
    key *= 1099511628211ULL;
  };
  for (double v : flat) mix(v);
  mix(xi);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      for (const Entry& e : it->second) {
        if (e.xi == xi && e.flat == flat) {
          ++hits_;
          return e.k;
        }
      }
    }
  }
  auto k = std::make_shared<const KernelSolution>(solve(s, xi, opt));
  std::lock_guard<std::mutex> lock(mutex_);
  ++misses_;
  if (size_ >= capacity_) {
    map_.clear();
    size_ = 0;
  }
  map_[key].push_back({std::move(flat), xi, k});
  ++size_;
  return k;
}

}  // namespace skle
