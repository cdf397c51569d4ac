#include "skle/absorbing.hpp"

#include <cmath>

#include "skle/errors.hpp"
#include "skle/joukowski.hpp"

namespace skle {

namespace {

struct Frame {
  double c, L, y;
};

Frame frame(const Slit& s) { return {s.center(), s.half_length(), s.y}; }

// Re of sum_k c_k Lambda_k(F) with Lambda_0 = -pi log(2F), Lambda_k = -(pi/k) F^k.
double log_potential(const double* c, int m, cplx F) {
  double v = -M_PI * c[0] * std::log(2.0 * std::abs(F));
  cplx acc = 0.0;
  for (int k = m; k >= 1; --k) acc = acc * F + c[k] / static_cast<double>(k);
  return v - M_PI * (acc * F).real();
}

}  // namespace

AbsorbingField solve_absorbing(const SlitConfig& domain,
                               const std::function<double(int, double)>& data, int modes) {
  AbsorbingField f;
  f.domain_ = domain;
  f.m_ = modes;
  const int n = static_cast<int>(domain.size());
  if (n == 0) return f;
  const int p = modes + 1;
  Eigen::MatrixXd A(n * p, n * p);
  Eigen::VectorXd rhs(n * p);
  for (int j = 0; j < n; ++j) {
    Frame fj = frame(domain[j]);
    for (int i = 0; i < p; ++i) {
      double s = std::cos((2.0 * i + 1.0) * M_PI / (2.0 * p));
      cplx z(fj.c + fj.L * s, fj.y);
      int row = j * p + i;
      rhs(row) = data(j, z.real());
      for (int l = 0; l < n; ++l) {
        Frame fl = frame(domain[l]);
        cplx F = (l == j) ? joukowski_upper(s).F : joukowski((z - cplx(fl.c, fl.y)) / fl.L).F;
        cplx G = joukowski((z - cplx(fl.c, -fl.y)) / fl.L).F;
        // Column k: L_l Re[Lambda_k(G) - Lambda_k(F)].
        A(row, l * p) = fl.L * (-M_PI * std::log(2.0 * std::abs(G)) + M_PI * std::log(2.0 * std::abs(F)));
        cplx a = F, b = G;
        for (int k = 1; k <= modes; ++k) {
          A(row, l * p + k) = fl.L * (-(M_PI / k) * b.real() + (M_PI / k) * a.real());
          a *= F;
          b *= G;
        }
      }
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (lu.rcond() < 1e-14) throw Error(ErrorKind::Singular, "absorbing collocation singular", lu.rcond());
  Eigen::VectorXd c = lu.solve(rhs);
  f.coef_.assign(c.data(), c.data() + c.size());
  return f;
}

double AbsorbingField::value(cplx z) const {
  double u = 0.0;
  const int p = m_ + 1;
  for (int l = 0; l < static_cast<int>(domain_.size()); ++l) {
    Frame fl = frame(domain_[l]);
    const double* c = coef_.data() + l * p;
    cplx F = joukowski((z - cplx(fl.c, fl.y)) / fl.L).F;
    cplx G = joukowski((z - cplx(fl.c, -fl.y)) / fl.L).F;
    u += fl.L * (log_potential(c, m_, G) - log_potential(c, m_, F));
  }
  return u;
}

double AbsorbingField::dy_boundary(double x) const {
  double d = 0.0;
  const int p = m_ + 1;
  for (int l = 0; l < static_cast<int>(domain_.size()); ++l) {
    Frame fl = frame(domain_[l]);
    const double* c = coef_.data() + l * p;
    auto term = [&](cplx zeta) {
      Joukowski j = joukowski(zeta);
      cplx acc = 0.0;
      for (int k = m_; k >= 0; --k) acc = acc * j.F + c[k];
      return acc / j.S;
    };
    cplx t = term((cplx(x, 0.0) - cplx(fl.c, -fl.y)) / fl.L) - term((cplx(x, 0.0) - cplx(fl.c, fl.y)) / fl.L);
    d += -M_PI * t.imag();
  }
  return d;
}

double AbsorbingField::flux_into(int j) const {
  return 2.0 * M_PI * M_PI * domain_[j].half_length() * coef_[static_cast<std::size_t>(j) * (m_ + 1)];
}

AbsorbingField harmonic_measure(const SlitConfig& domain, int i, int modes) {
  if (i < 0 || i >= static_cast<int>(domain.size())) throw Error(ErrorKind::Validation, "slit index out of range");
  return solve_absorbing(domain, [i](int j, double) { return j == i ? 1.0 : 0.0; }, modes);
}

PeriodMatrix period_matrix(const SlitConfig& domain, int modes) {
  const int n = static_cast<int>(domain.size());
  if (n == 0) throw Error(ErrorKind::Validation, "period matrix needs at least one slit");
  PeriodMatrix pm;
  pm.a.resize(n, n);
  for (int i = 0; i < n; ++i) {
    AbsorbingField phi = harmonic_measure(domain, i, modes);
    for (int j = 0; j < n; ++j) pm.a(i, j) = phi.flux_into(j);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pm.a);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) throw Error(ErrorKind::Singular, "period matrix singular");
  pm.b = lu.inverse();
  return pm;
}

double poisson_absorbing(const SlitConfig& domain, cplx z, double zeta, int modes) {
  if (domain.empty()) return poisson_half_plane(z, zeta);
  AbsorbingField u = solve_absorbing(
      domain, [&](int j, double x) { return poisson_half_plane(cplx(x, domain[j].y), zeta); }, modes);
  return poisson_half_plane(z, zeta) - u.value(z);
}

double kernel_via_decomposition(const SlitConfig& domain, cplx z, double zeta, int modes) {
  double kd = poisson_absorbing(domain, z, zeta, modes);
  const int n = static_cast<int>(domain.size());
  if (n == 0) return kd;
  PeriodMatrix pm = period_matrix(domain, modes);
  std::vector<double> phi_z(n), dn_phi(n);
  for (int i = 0; i < n; ++i) {
    AbsorbingField phi = harmonic_measure(domain, i, modes);
    phi_z[i] = phi.value(z);
    dn_phi[i] = -phi.dy_boundary(zeta);  // outward normal of H
  }
  double corr = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) corr += pm.b(i, j) * phi_z[i] * dn_phi[j];
  return kd - corr;
}

}  // namespace skle
