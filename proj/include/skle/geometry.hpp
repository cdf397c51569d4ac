#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace skle {

using cplx = std::complex<double>;

inline constexpr double kDefaultMargin = 1e-9;

struct Slit {
  double y = 1.0;
  double x_left = 0.0;
  double x_right = 1.0;

  cplx left() const { return {x_left, y}; }
  cplx right() const { return {x_right, y}; }
  double center() const { return 0.5 * (x_left + x_right); }
  double half_length() const { return 0.5 * (x_right - x_left); }
  bool operator==(const Slit&) const = default;
};

// A labeled standard slit domain: the upper half-plane minus N horizontal slits.
class SlitConfig {
 public:
  SlitConfig() = default;

  // Throws Degenerate if any invariant fails (within margin).
  explicit SlitConfig(std::vector<Slit> slits, double margin = kDefaultMargin);

  // Flat layout (y_1..y_N, x_1..x_N, xr_1..xr_N).
  static SlitConfig from_flat(const std::vector<double>& v, double margin = kDefaultMargin);
  std::vector<double> flat() const;

  std::size_t size() const { return slits_.size(); }
  bool empty() const { return slits_.empty(); }
  const Slit& operator[](std::size_t j) const { return slits_[j]; }
  const std::vector<Slit>& slits() const { return slits_; }

  // Radius of a disk about the origin containing every slit.
  double extent() const;
  // Smallest slit height, +inf for N=0.
  double min_height() const;

  bool operator==(const SlitConfig& o) const { return slits_ == o.slits_; }

 private:
  std::vector<Slit> slits_;
};

SlitConfig validate(const std::vector<double>& flat, double margin = kDefaultMargin);

// Metric on labeled domains: max_k |dz_k| + |dz_k^r|.
double distance(const SlitConfig& a, const SlitConfig& b);

SlitConfig scale(const SlitConfig& s, double c);
SlitConfig translate(const SlitConfig& s, double r);

// True when (s, margin) is still inside the state space.
bool in_state_space(const std::vector<double>& flat, double margin = kDefaultMargin);

// Where a point sits relative to the closed domain.
enum class Side { Interior, Boundary, Upper, Lower, EndLeft, EndRight };

struct HalfPlanePoint {
  double re = 0.0;
  double im = 0.0;
  Side side = Side::Interior;
  int slit = -1;

  cplx z() const { return {re, im}; }
  static HalfPlanePoint interior(cplx z) { return {z.real(), z.imag(), Side::Interior, -1}; }
  static HalfPlanePoint boundary(double x) { return {x, 0.0, Side::Boundary, -1}; }
  static HalfPlanePoint on_slit(const SlitConfig& s, int j, double x, Side side);
  static HalfPlanePoint endpoint(const SlitConfig& s, int j, bool right);
};

// Checks tag consistency; throws Validation on a mismatch.
void check_point(const SlitConfig& s, const HalfPlanePoint& p);

// Distance from z to the closed slit j.
double distance_to_slit(const Slit& s, cplx z);

// Stable 64-bit digest of the flat representation.
unsigned long long domain_hash(const SlitConfig& s);

}  // namespace skle
