#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skle/flow.hpp"

namespace skle {

inline constexpr const char* kVersion = "0.1.0";

// Slit configuration as JSON: {"slits": [{"y":..,"x_left":..,"x_right":..}], "margin": ..}.
SlitConfig domain_from_json(const std::string& text);
std::string domain_to_json(const SlitConfig& s);
SlitConfig read_domain(const std::string& path);

struct DriverSpec {
  std::string kind = "constant";  // constant | linear | table | sde
  double value = 0.0;             // constant value, or slope for linear
  double xi0 = 0.0;
  std::string table;              // CSV path with columns t,xi
  double alpha = 0.0;             // sde
  std::string drift = "zero";     // sde: zero | neg_bmd
};

struct ProbeSpec {
  double x0 = -2.0, x1 = 2.0, y0 = 0.0, y1 = 2.0;
  int nx = 41, ny = 21;
};

struct Scenario {
  SlitConfig domain;
  DriverSpec driver;
  double T = 0.5;
  double dt = 1e-3;
  std::optional<ProbeSpec> probes;
  std::uint64_t seed = 1;
  std::string out_prefix = "run";
};

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& s);

// Driver samples on the grid k*dt, k = 0..round(T/dt); a table is linearly interpolated.
std::vector<double> driver_samples(const DriverSpec& d, double T, double dt);
std::vector<std::pair<double, double>> read_table(const std::string& path);

// CSV with a provenance header line and 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::uint64_t seed, double dt, const SlitConfig& domain,
            const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  std::size_t width_;
};

std::string format_number(double v);

// Line-art picture of hull boundary segments, trace points and slits.
void write_svg(std::ostream& out, const SlitConfig& slits, const HullSample& hull, const std::vector<cplx>& trace,
               const ProbeGrid& frame);

}  // namespace skle
