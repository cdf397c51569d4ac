#include "skle/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skle/errors.hpp"

namespace skle {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw Error(ErrorKind::Validation, "unknown key '" + it.key() + "' in " + where);
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Validation, std::string("missing or mistyped '") + key + "' in " + where);
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SlitConfig domain_from(const json& j) {
  reject_unknown(j, {"slits", "margin"}, "domain");
  double margin = j.contains("margin") ? get<double>(j, "margin", "domain") : 1e-9;
  std::vector<Slit> slits;
  if (j.contains("slits")) {
    if (!j.at("slits").is_array()) throw Error(ErrorKind::Validation, "'slits' must be an array");
    for (const json& s : j.at("slits")) {
      reject_unknown(s, {"y", "x_left", "x_right"}, "slit");
      slits.push_back({get<double>(s, "y", "slit"), get<double>(s, "x_left", "slit"), get<double>(s, "x_right", "slit")});
    }
  }
  return SlitConfig(slits, margin);
}

json domain_json(const SlitConfig& s) {
  json a = json::array();
  for (const Slit& sl : s.slits()) a.push_back({{"y", sl.y}, {"x_left", sl.x_left}, {"x_right", sl.x_right}});
  return {{"slits", a}};
}

}  // namespace

SlitConfig domain_from_json(const std::string& text) { return domain_from(parse(text)); }

std::string domain_to_json(const SlitConfig& s) { return domain_json(s).dump(2); }

SlitConfig read_domain(const std::string& path) { return domain_from_json(slurp(path)); }

Scenario scenario_from_json(const std::string& text) {
  json j = parse(text);
  reject_unknown(j, {"domain", "driver", "T", "dt", "probes", "seed", "out_prefix"}, "scenario");
  Scenario s;
  if (j.contains("domain")) s.domain = domain_from(j.at("domain"));
  if (j.contains("driver")) {
    const json& d = j.at("driver");
    reject_unknown(d, {"kind", "value", "xi0", "table", "alpha", "drift"}, "driver");
    if (d.contains("kind")) s.driver.kind = get<std::string>(d, "kind", "driver");
    if (d.contains("value")) s.driver.value = get<double>(d, "value", "driver");
    if (d.contains("xi0")) s.driver.xi0 = get<double>(d, "xi0", "driver");
    if (d.contains("table")) s.driver.table = get<std::string>(d, "table", "driver");
    if (d.contains("alpha")) s.driver.alpha = get<double>(d, "alpha", "driver");
    if (d.contains("drift")) s.driver.drift = get<std::string>(d, "drift", "driver");
    static const std::set<std::string> kinds{"constant", "linear", "table", "sde"};
    if (!kinds.count(s.driver.kind)) throw Error(ErrorKind::Validation, "unknown driver kind " + s.driver.kind);
  }
  if (j.contains("T")) s.T = get<double>(j, "T", "scenario");
  if (j.contains("dt")) s.dt = get<double>(j, "dt", "scenario");
  if (j.contains("seed")) s.seed = get<std::uint64_t>(j, "seed", "scenario");
  if (j.contains("out_prefix")) s.out_prefix = get<std::string>(j, "out_prefix", "scenario");
  if (j.contains("probes")) {
    const json& p = j.at("probes");
    reject_unknown(p, {"x0", "x1", "y0", "y1", "nx", "ny"}, "probes");
    ProbeSpec ps;
    ps.x0 = get<double>(p, "x0", "probes");
    ps.x1 = get<double>(p, "x1", "probes");
    ps.y0 = get<double>(p, "y0", "probes");
    ps.y1 = get<double>(p, "y1", "probes");
    ps.nx = get<int>(p, "nx", "probes");
    ps.ny = get<int>(p, "ny", "probes");
    s.probes = ps;
  }
  if (!(s.T >= 0) || !(s.dt > 0)) throw Error(ErrorKind::Validation, "T must be >= 0 and dt > 0");
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["domain"] = domain_json(s.domain);
  j["driver"] = {{"kind", s.driver.kind}, {"value", s.driver.value}, {"xi0", s.driver.xi0},
                 {"table", s.driver.table}, {"alpha", s.driver.alpha}, {"drift", s.driver.drift}};
  j["T"] = s.T;
  j["dt"] = s.dt;
  j["seed"] = s.seed;
  j["out_prefix"] = s.out_prefix;
  if (s.probes) {
    const ProbeSpec& p = *s.probes;
    j["probes"] = {{"x0", p.x0}, {"x1", p.x1}, {"y0", p.y0}, {"y1", p.y1}, {"nx", p.nx}, {"ny", p.ny}};
  }
  return j.dump(2);
}

std::vector<std::pair<double, double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    double t, x;
    if (std::sscanf(line.c_str(), "%lf,%lf", &t, &x) != 2) continue;  // header or junk
    rows.emplace_back(t, x);
  }
  if (rows.empty()) throw Error(ErrorKind::Validation, "driver table has no rows: " + path);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].first > rows[i - 1].first)) throw Error(ErrorKind::Validation, "driver table times must increase");
  return rows;
}

std::vector<double> driver_samples(const DriverSpec& d, double T, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<double> xs(n + 1);
  if (d.kind == "constant") {
    std::fill(xs.begin(), xs.end(), d.value);
  } else if (d.kind == "linear") {
    for (std::size_t k = 0; k <= n; ++k) xs[k] = d.xi0 + d.value * static_cast<double>(k) * dt;
  } else if (d.kind == "table") {
    auto rows = read_table(d.table);
    for (std::size_t k = 0; k <= n; ++k) {
      double t = static_cast<double>(k) * dt;
      if (t > rows.back().first + 1e-12 || t < rows.front().first - 1e-12)
        throw Error(ErrorKind::Validation, "driver table does not cover [0, T]");
      auto it = std::lower_bound(rows.begin(), rows.end(), t,
                                 [](const auto& r, double v) { return r.first < v; });
      if (it == rows.begin()) {
        xs[k] = it->second;
      } else if (it == rows.end()) {
        xs[k] = rows.back().second;
      } else {
        auto a = *(it - 1), b = *it;
        xs[k] = a.second + (b.second - a.second) * (t - a.first) / (b.first - a.first);
      }
    }
  } else {
    throw Error(ErrorKind::Validation, "driver kind has no deterministic samples: " + d.kind);
  }
  return xs;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, std::uint64_t seed, double dt, const SlitConfig& domain,
                     const std::vector<std::string>& columns)
    : out_(out), width_(columns.size()) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", domain_hash(domain));
  out_ << "# skle " << kVersion << " seed=" << seed << " dt=" << format_number(dt) << " domain=" << hash << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw Error(ErrorKind::ShapeMismatch, "CSV row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
  out_ << "\n";
}

void write_svg(std::ostream& out, const SlitConfig& slits, const HullSample& hull, const std::vector<cplx>& trace,
               const ProbeGrid& frame) {
  const double W = 600.0;
  const double sx = W / (frame.x1 - frame.x0);
  const double H = sx * (frame.y1 - frame.y0);
  auto X = [&](double x) { return (x - frame.x0) * sx; };
  auto Y = [&](double y) { return H - (y - frame.y0) * sx; };
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<line x1=\"0\" y1=\"" << Y(0) << "\" x2=\"" << W << "\" y2=\"" << Y(0) << "\" stroke=\"black\"/>\n";
  for (const Slit& s : slits.slits())
    out << "<line x1=\"" << X(s.x_left) << "\" y1=\"" << Y(s.y) << "\" x2=\"" << X(s.x_right) << "\" y2=\"" << Y(s.y)
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  for (const auto& [a, b] : hull.boundary)
    out << "<line x1=\"" << X(a.real()) << "\" y1=\"" << Y(a.imag()) << "\" x2=\"" << X(b.real()) << "\" y2=\""
        << Y(b.imag()) << "\" stroke=\"steelblue\"/>\n";
  if (!trace.empty()) {
    out << "<polyline fill=\"none\" stroke=\"firebrick\" points=\"";
    for (cplx z : trace) out << X(z.real()) << "," << Y(z.imag()) << " ";
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace skle
