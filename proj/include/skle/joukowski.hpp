#pragma once

#include <cmath>
#include <complex>

namespace skle {

// Exterior inverse of the Joukowski map zeta = (w + 1/w)/2, |w| >= 1, cut on [-1, 1].
//   S = sqrt(zeta^2 - 1) with S ~ zeta at infinity
//   F = zeta - S = 1/w, so |F| <= 1 and F^k are the slit basis functions.
struct Joukowski {
  std::complex<double> F;
  std::complex<double> S;
};

inline Joukowski joukowski(std::complex<double> zeta) {
  std::complex<double> S = std::sqrt(zeta - 1.0) * std::sqrt(zeta + 1.0);
  std::complex<double> w = zeta + S;
  return {1.0 / w, S};
}

// One-sided limits on the cut, s in (-1, 1).
inline Joukowski joukowski_upper(double s) {
  double r = std::sqrt((1.0 - s) * (1.0 + s));
  return {{s, -r}, {0.0, r}};
}

inline Joukowski joukowski_lower(double s) {
  double r = std::sqrt((1.0 - s) * (1.0 + s));
  return {{s, r}, {0.0, -r}};
}

// Sum_{k=1..m} c[k-1] F^k by Horner.
template <class Coef>
std::complex<double> power_series(const Coef& c, int m, std::complex<double> F) {
  std::complex<double> acc = 0.0;
  for (int k = m; k >= 1; --k) acc = acc * F + c[k - 1];
  return acc * F;
}

// Sum_{k=1..m} k c[k-1] F^k.
template <class Coef>
std::complex<double> weighted_power_series(const Coef& c, int m, std::complex<double> F) {
  std::complex<double> acc = 0.0;
  for (int k = m; k >= 1; --k) acc = acc * F + static_cast<double>(k) * c[k - 1];
  return acc * F;
}

}  // namespace skle
