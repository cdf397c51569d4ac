#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "skle/geometry.hpp"

namespace skle {

// Harmonic function in D, zero on R, prescribed on each slit, vanishing at infinity.
// Single-layer form with densities sigma_j(s) = sum_k c_jk T_k(s)/sqrt(1-s^2) against
// the half-plane Green function log|z - conj w| - log|z - w|.
class AbsorbingField {
 public:
  double value(cplx z) const;
  // d/dy at a real point.
  double dy_boundary(double x) const;
  // Flux into slit j (normal pointing toward the slit).
  double flux_into(int j) const;
  int modes() const { return m_; }

 private:
  friend AbsorbingField solve_absorbing(const SlitConfig&, const std::function<double(int, double)>&, int);
  SlitConfig domain_;
  int m_ = 0;
  std::vector<double> coef_;  // (m_+1) per slit, k = 0..m_
};

AbsorbingField solve_absorbing(const SlitConfig& domain,
                               const std::function<double(int, double)>& data, int modes = 48);

// Absorbing harmonic measure of slit i.
AbsorbingField harmonic_measure(const SlitConfig& domain, int i, int modes = 48);

struct PeriodMatrix {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

PeriodMatrix period_matrix(const SlitConfig& domain, int modes = 48);

// Poisson kernel of the half-plane killed on the slits.
double poisson_absorbing(const SlitConfig& domain, cplx z, double zeta, int modes = 48);

// Im Psi(z, zeta) rebuilt from absorbing quantities and the period matrix.
double kernel_via_decomposition(const SlitConfig& domain, cplx z, double zeta, int modes = 48);

inline double poisson_half_plane(cplx z, double zeta) {
  double dx = z.real() - zeta;
  return z.imag() / (M_PI * (dx * dx + z.imag() * z.imag()));
}

}  // namespace skle
