#include "skle/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "skle/errors.hpp"

namespace skle {

namespace {

void require(bool ok, const std::string& reason) {
  if (!ok) throw Error(ErrorKind::Degenerate, reason);
}

}  // namespace

SlitConfig::SlitConfig(std::vector<Slit> slits, double margin) : slits_(std::move(slits)) {
  for (std::size_t j = 0; j < slits_.size(); ++j) {
    const Slit& a = slits_[j];
    require(std::isfinite(a.y) && std::isfinite(a.x_left) && std::isfinite(a.x_right),
            "slit " + std::to_string(j) + " has a non-finite coordinate");
    require(a.y > margin, "slit " + std::to_string(j) + " height y <= margin");
    require(a.x_right - a.x_left > margin,
            "slit " + std::to_string(j) + " has x_left >= x_right");
    for (std::size_t k = 0; k < j; ++k) {
      const Slit& b = slits_[k];
      if (std::abs(a.y - b.y) > margin) continue;
      bool apart = a.x_left > b.x_right + margin || b.x_left > a.x_right + margin;
      require(apart, "slits " + std::to_string(k) + " and " + std::to_string(j) +
                         " overlap at equal height");
    }
  }
}

SlitConfig SlitConfig::from_flat(const std::vector<double>& v, double margin) {
  if (v.size() % 3 != 0) throw Error(ErrorKind::ShapeMismatch, "flat vector length not a multiple of 3");
  std::size_t n = v.size() / 3;
  std::vector<Slit> s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = {v[j], v[n + j], v[2 * n + j]};
  return SlitConfig(std::move(s), margin);
}

std::vector<double> SlitConfig::flat() const {
  std::size_t n = slits_.size();
  std::vector<double> v(3 * n);
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = slits_[j].y;
    v[n + j] = slits_[j].x_left;
    v[2 * n + j] = slits_[j].x_right;
  }
  return v;
}

double SlitConfig::extent() const {
  double r = 0.0;
  for (const auto& s : slits_) r = std::max({r, std::abs(s.left()), std::abs(s.right())});
  return r;
}

double SlitConfig::min_height() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : slits_) m = std::min(m, s.y);
  return m;
}

SlitConfig validate(const std::vector<double>& flat, double margin) {
  return SlitConfig::from_flat(flat, margin);
}

bool in_state_space(const std::vector<double>& flat, double margin) {
  try {
    SlitConfig::from_flat(flat, margin);
    return true;
  } catch (const Error&) {
    return false;
  }
}

double distance(const SlitConfig& a, const SlitConfig& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "domains have different slit counts");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k].left() - b[k].left()) + std::abs(a[k].right() - b[k].right()));
  }
  return d;
}

SlitConfig scale(const SlitConfig& s, double c) {
  if (!(c > 0)) throw Error(ErrorKind::Validation, "scale factor must be positive");
  std::vector<Slit> out = s.slits();
  for (auto& a : out) {
    a.y *= c;
    a.x_left *= c;
    a.x_right *= c;
  }
  return SlitConfig(std::move(out), 0.0);
}

SlitConfig translate(const SlitConfig& s, double r) {
  std::vector<Slit> out = s.slits();
  for (auto& a : out) {
    a.x_left += r;
    a.x_right += r;
  }
  return SlitConfig(std::move(out), 0.0);
}

HalfPlanePoint HalfPlanePoint::on_slit(const SlitConfig& s, int j, double x, Side side) {
  return {x, s[j].y, side, j};
}

HalfPlanePoint HalfPlanePoint::endpoint(const SlitConfig& s, int j, bool right) {
  const Slit& a = s[j];
  return {right ? a.x_right : a.x_left, a.y, right ? Side::EndRight : Side::EndLeft, j};
}

double distance_to_slit(const Slit& s, cplx z) {
  double dx = 0.0;
  if (z.real() < s.x_left) dx = s.x_left - z.real();
  if (z.real() > s.x_right) dx = z.real() - s.x_right;
  return std::hypot(dx, z.imag() - s.y);
}

void check_point(const SlitConfig& s, const HalfPlanePoint& p) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, m); };
  switch (p.side) {
    case Side::Interior:
      if (!(p.im > 0)) fail("interior point must have positive imaginary part");
      for (const auto& a : s.slits())
        if (distance_to_slit(a, p.z()) == 0.0) fail("interior point lies on a slit");
      break;
    case Side::Boundary:
      if (p.im != 0.0) fail("boundary point must be real");
      break;
    default: {
      if (p.slit < 0 || p.slit >= static_cast<int>(s.size())) fail("slit index out of range");
      const Slit& a = s[p.slit];
      if (p.im != a.y) fail("slit point height mismatch");
      if (p.side == Side::Upper || p.side == Side::Lower) {
        if (!(p.re > a.x_left && p.re < a.x_right)) fail("slit-side point outside open segment");
      } else if (p.re != (p.side == Side::EndRight ? a.x_right : a.x_left)) {
        fail("endpoint abscissa mismatch");
      }
    }
  }
}

unsigned long long domain_hash(const SlitConfig& s) {
  // FNV-1a over the raw bytes of the flat vector.
  unsigned long long h = 1469598103934665603ULL;
  for (double v : s.flat()) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof(double));
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace skle
