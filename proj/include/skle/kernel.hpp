#pragma once

#include <complex>
#include <vector>

#include "skle/geometry.hpp"

namespace skle {

struct KernelOptions {
  int nodes = 48;               // Chebyshev modes per slit
  int max_nodes = 384;
  double tol_slit = 1e-6;       // slit-constancy target
  double tol_relaxed = 1e-4;    // accepted near the state-space margin
  double cond_regularize = 1e12;
  double cond_cap = 1e15;
};

// Psi(z) = -1/(pi (z - xi)) + R(z). The regular part is a sum over slits of
//   R_j(z) = sum_k a_jk (-i) [F^k(zeta_j) - F^k(zeta'_j)],
// zeta_j = (z - c_j - i y_j)/L_j and zeta'_j its image under reflection across R.
// Each term is real on R, and its imaginary part jumps by nothing across the slit.
class KernelSolution {
 public:
  const SlitConfig& domain() const { return domain_; }
  double pole() const { return xi_; }
  int modes() const { return m_; }
  double level(int j) const { return level_[j]; }
  double residual() const { return residual_; }
  double condition() const { return cond_; }

  cplx eval(cplx z) const;
  cplx eval(const HalfPlanePoint& p) const;
  cplx regular(cplx z) const;
  cplx regular(const HalfPlanePoint& p) const;
  cplx regular_derivative(cplx z) const;
  cplx derivative(cplx z) const;

  // Imaginary part of Psi, i.e. the BMD Poisson kernel K*(z, xi).
  double poisson(cplx z) const { return eval(z).imag(); }

  const std::vector<double>& coefficients() const { return coef_; }

 private:
  friend KernelSolution solve(const SlitConfig&, double, const KernelOptions&);
  cplx slit_term(int j, cplx z, Side side, bool own) const;

  SlitConfig domain_;
  double xi_ = 0.0;
  int m_ = 0;
  std::vector<double> coef_;   // slit-major, m_ per slit
  std::vector<double> level_;
  double residual_ = 0.0;
  double cond_ = 1.0;
};

KernelSolution solve(const SlitConfig& domain, double xi, const KernelOptions& opt = {});

// Drift of (y, x, x^r) under the slit equations.
std::vector<double> slit_drift(const KernelSolution& k);
std::vector<double> slit_drift(const SlitConfig& domain, double xi, const KernelOptions& opt = {});

// 2 pi times the regular part of Psi at its pole, and of its derivative.
double b_bmd(const KernelSolution& k);
double c_bmd(const KernelSolution& k);
double b_bmd(const SlitConfig& domain, double xi, const KernelOptions& opt = {});
double c_bmd(const SlitConfig& domain, double xi, const KernelOptions& opt = {});

// Ladder estimate from interior values at xi + i h, h = h0 4^{-k}; used to cross-check
// the direct evaluation. Throws ExtrapolationUnstable when the ladder disagrees.
double b_bmd_ladder(const KernelSolution& k, double h0 = 1e-2, int levels = 4);
double c_bmd_ladder(const KernelSolution& k, double h0 = 1e-2, int levels = 4);

// Closed-form half-plane kernel.
inline cplx psi_half_plane(cplx z, double xi) { return -1.0 / (M_PI * (z - xi)); }

}  // namespace skle

#include <memory>
#include <mutex>
#include <unordered_map>

namespace skle {

// Memo of kernel solves. Buckets are keyed by (s, xi) quantised to `quantum`; a hit
// requires exact equality, so cached and fresh results are identical.
class KernelCache {
 public:
  explicit KernelCache(std::size_t capacity = 4096, double quantum = 1e-4)
      : capacity_(capacity), quantum_(quantum) {}

  std::shared_ptr<const KernelSolution> get(const SlitConfig& s, double xi, const KernelOptions& opt = {});
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  struct Entry {
    std::vector<double> flat;
    double xi;
    std::shared_ptr<const KernelSolution> k;
  };
  std::size_t capacity_;
  double quantum_;
  std::size_t size_ = 0, hits_ = 0, misses_ = 0;
  std::unordered_map<unsigned long long, std::vector<Entry>> map_;
  std::mutex mutex_;
};

}  // namespace skle
