#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "skle/acceptance.hpp"
#include "skle/absorbing.hpp"
#include "skle/driver.hpp"
#include "skle/errors.hpp"
#include "skle/flow.hpp"
#include "skle/io.hpp"
#include "skle/kernel.hpp"
#include "skle/locality.hpp"
#include "skle/oracle.hpp"

using namespace skle;
using nlohmann::json;

namespace {

std::vector<cplx> read_probes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
  std::vector<cplx> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    double x, y;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2) continue;
    if (!(y > 0)) throw Error(ErrorKind::Validation, "probe must lie in the upper half-plane", y);
    out.emplace_back(x, y);
  }
  if (out.empty()) throw Error(ErrorKind::Validation, "no probes in " + path);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path);
  return out;
}

ProbeGrid parse_grid(const std::string& spec) {
  ProbeGrid g;
  if (spec.empty() || spec == "grid") return g;
  double v[6];
  if (std::sscanf(spec.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5]) != 6)
    throw Error(ErrorKind::Validation, "--probes expects 'grid' or x0,x1,y0,y1,nx,ny");
  g = {v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
  if (!(g.x1 > g.x0) || !(g.y1 > g.y0) || g.y0 < 0 || g.nx < 2 || g.ny < 2)
    throw Error(ErrorKind::Validation, "probe grid is empty or below the real line");
  return g;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_error(const std::string& kind, const std::string& message, double value) {
  json e{{"kind", kind}, {"message", message}, {"value", std::isfinite(value) ? json(value) : json(nullptr)}};
  std::cerr << e.dump() << std::endl;
}

// --- subcommands ---

struct KernelArgs {
  std::string domain, probe, out = "kernel.csv";
  double xi = 0.0;
};

void run_kernel(const KernelArgs& a) {
  SlitConfig s = read_domain(a.domain);
  std::vector<cplx> probes = read_probes(a.probe);
  KernelSolution k = solve(s, a.xi);
  std::ofstream out = open_out(a.out);
  CsvWriter w(out, 0, 0.0, s, {"re", "im", "psi_re", "psi_im"});
  for (cplx z : probes) {
    cplx p = k.eval(z);
    w.row({z.real(), z.imag(), p.real(), p.imag()});
  }
}

struct OracleArgs {
  std::string task, domain, probe, out = "oracle.csv";
  double xi = 0.0, hull_x = 0.0, hull_height = 0.0, radius = 2.0, h = 1.0 / 64.0;
  int slit = 0;
};

void run_oracle(const OracleArgs& a) {
  SlitConfig s = read_domain(a.domain);
  std::ofstream out = open_out(a.out);
  Rect rect;
  rect.h = a.h;
  const double half = 0.5 * a.h;
  auto segment = [&](double x, double y) { return std::abs(x - a.hull_x) <= half && y <= a.hull_height + half; };
  if (a.task == "capacity") {
    if (!(a.hull_height > 0)) throw Error(ErrorKind::Validation, "--hull-height must be positive", a.hull_height);
    CsvWriter w(out, 0, a.h, s, {"x", "height", "capacity"});
    w.row({a.hull_x, a.hull_height, capacity_via_ring(s, segment, a.radius, rect)});
    return;
  }
  std::vector<cplx> probes = read_probes(a.probe);
  if (a.task == "im_g") {
    auto est = im_g_via_hitting(s, segment, probes, {4.0, 6.0, 8.0}, 8.0, a.h);
    CsvWriter w(out, 0, a.h, s, {"re", "im", "im_g"});
    for (std::size_t i = 0; i < probes.size(); ++i) w.row({probes[i].real(), probes[i].imag(), est[i].value});
  } else if (a.task == "phi") {
    if (a.slit < 0 || static_cast<std::size_t>(a.slit) >= s.size())
      throw Error(ErrorKind::ShapeMismatch, "--slit out of range", a.slit);
    GridField f = harmonic_measure_phi(s, a.slit, rect);
    CsvWriter w(out, 0, a.h, s, {"re", "im", "phi"});
    for (cplx z : probes) w.row({z.real(), z.imag(), f.value(z.real(), z.imag())});
  } else if (a.task == "kstar") {
    GridKernel g = grid_kernel(s, a.xi, rect);
    CsvWriter w(out, 0, a.h, s, {"re", "im", "kstar"});
    for (cplx z : probes) w.row({z.real(), z.imag(), g.poisson(z.real(), z.imag())});
  } else {
    throw Error(ErrorKind::Validation, "unknown oracle task '" + a.task + "'");
  }
}

struct FlowArgs {
  std::string scenario, domain, driver, probes, out_prefix;
  std::optional<double> constant;
  double T = 0.5, dt = 1e-3;
};

void run_flow(const FlowArgs& a) {
  Scenario sc;
  if (!a.scenario.empty()) {
    sc = scenario_from_json(slurp(a.scenario));
  } else {
    if (a.domain.empty()) throw Error(ErrorKind::Validation, "--domain or --scenario is required");
    sc.domain = read_domain(a.domain);
    sc.T = a.T;
    sc.dt = a.dt;
    if (!a.driver.empty()) {
      sc.driver.kind = "table";
      sc.driver.table = a.driver;
    } else {
      sc.driver.kind = "constant";
      sc.driver.value = a.constant.value_or(0.0);
    }
    if (!a.probes.empty()) {
      ProbeGrid g = parse_grid(a.probes);
      sc.probes = ProbeSpec{g.x0, g.x1, g.y0, g.y1, g.nx, g.ny};
    }
  }
  if (!a.out_prefix.empty()) sc.out_prefix = a.out_prefix;
  if (!(sc.dt > 0) || !(sc.T > 0)) throw Error(ErrorKind::Validation, "T and dt must be positive");

  DrivingPath path;
  if (sc.driver.kind == "sde") {
    path = simulate(sc.driver.xi0, sc.domain, CoefficientSpec::constant(sc.driver.alpha, sc.driver.drift), sc.T, sc.dt,
                    sc.seed)
               .path;
  } else {
    path = integrate_slits(driver_samples(sc.driver, sc.T, sc.dt), sc.domain, sc.dt);
  }
  if (path.ended_early) std::cerr << "skle: run ended early: " << path.end_reason << "\n";

  const std::size_t N = sc.domain.size();
  std::vector<std::string> cols{"t", "xi", "capacity"};
  for (std::size_t j = 0; j < N; ++j) {
    cols.push_back("y_" + std::to_string(j + 1));
    cols.push_back("x_" + std::to_string(j + 1));
    cols.push_back("xr_" + std::to_string(j + 1));
  }
  std::vector<CapacityFit> cap = capacity_curve(path);
  {
    std::ofstream out = open_out(sc.out_prefix + ".slits.csv");
    CsvWriter w(out, sc.seed, sc.dt, sc.domain, cols);
    for (std::size_t k = 0; k <= path.steps(); ++k) {
      std::vector<double> row{static_cast<double>(k) * sc.dt, path.xi[k], cap[k].a};
      for (const Slit& sl : path.slits[k].slits()) {
        row.push_back(sl.y);
        row.push_back(sl.x_left);
        row.push_back(sl.x_right);
      }
      w.row(row);
    }
  }
  if (!sc.probes) return;
  const ProbeSpec& p = *sc.probes;
  ProbeGrid grid{p.x0, p.x1, p.y0, p.y1, p.nx, p.ny};
  std::vector<PointTrack> tracks = flow_points(grid.points(), path);
  double t = path.horizon();
  {
    std::ofstream out = open_out(sc.out_prefix + ".points.csv");
    CsvWriter w(out, sc.seed, sc.dt, sc.domain, {"re", "im", "t_swallow", "g_re", "g_im"});
    for (const PointTrack& tr : tracks)
      w.row({tr.z0.real(), tr.z0.imag(), tr.swallowed() ? tr.t_swallow : NAN, tr.final_value.real(),
             tr.final_value.imag()});
  }
  HullSample hs = hull_from_tracks(tracks, grid, t);
  {
    std::ofstream out = open_out(sc.out_prefix + ".hull.csv");
    CsvWriter w(out, sc.seed, sc.dt, sc.domain, {"x0", "y0", "x1", "y1"});
    for (const auto& [u, v] : hs.boundary) w.row({u.real(), u.imag(), v.real(), v.imag()});
  }
  std::vector<cplx> tips;
  const std::size_t stride = std::max<std::size_t>(1, path.steps() / 100);
  for (std::size_t k = stride; k <= path.steps(); k += stride) {
    try {
      tips.push_back(trace(path, static_cast<double>(k) * sc.dt));
    } catch (const Error&) {
    }
  }
  std::ofstream svg = open_out(sc.out_prefix + ".svg");
  write_svg(svg, path.slits.back(), hs, tips, grid);
}

struct SimulateArgs {
  std::string domain, b = "neg_bmd", out = "runs";
  double alpha = std::sqrt(6.0), T = 0.2, dt = 1e-3, xi0 = 0.0;
  std::size_t paths = 200;
  std::uint64_t seed = 7;
};

void run_simulate(const SimulateArgs& a) {
  SlitConfig s = read_domain(a.domain);
  if (a.b != "zero" && a.b != "neg_bmd") throw Error(ErrorKind::Validation, "--b must be zero or neg_bmd");
  if (!(a.T > 0) || !(a.dt > 0) || a.paths == 0) throw Error(ErrorKind::Validation, "T, dt and paths must be positive");
  std::vector<SdeRun> runs = simulate_ensemble(a.xi0, s, CoefficientSpec::constant(a.alpha, a.b), a.T, a.dt, a.seed,
                                               a.paths);
  std::filesystem::create_directories(a.out);
  std::ofstream drv = open_out(a.out + "/drivers.csv");
  CsvWriter wd(drv, a.seed, a.dt, s, {"path", "t", "xi"});
  std::ofstream sum = open_out(a.out + "/summary.csv");
  CsvWriter ws(sum, a.seed, a.dt, s, {"path", "horizon", "xi_end", "ended_early"});
  for (const SdeRun& r : runs) {
    const auto idx = static_cast<double>(r.index);
    for (std::size_t k = 0; k <= r.path.steps(); ++k) wd.row({idx, static_cast<double>(k) * a.dt, r.path.xi[k]});
    ws.row({idx, r.path.horizon(), r.path.xi.back(), r.path.ended_early ? 1.0 : 0.0});
  }
}

struct LocalityArgs {
  std::string domain, hull, report = "locality.json";
  double alpha = std::sqrt(6.0), T = 0.05, dt = 1e-3;
  std::size_t paths = 200;
  std::uint64_t seed = 11;
};

json ks_json(const KsResult& k) {
  return {{"statistic", k.statistic}, {"p_value", k.p_value}, {"n1", k.n1}, {"n2", k.n2}};
}

void run_locality(const LocalityArgs& a) {
  SlitConfig s = read_domain(a.domain);
  json h = json::parse(slurp(a.hull), nullptr, false);
  if (h.is_discarded() || !h.is_object()) throw Error(ErrorKind::Validation, "hull file must be a JSON object");
  for (auto it = h.begin(); it != h.end(); ++it)
    if (it.key() != "x" && it.key() != "T_A") throw Error(ErrorKind::Validation, "unknown key '" + it.key() + "' in hull");
  if (!h.contains("x") || !h.contains("T_A") || !h["x"].is_number() || !h["T_A"].is_number())
    throw Error(ErrorKind::Validation, "hull needs numeric 'x' and 'T_A'");
  LocalityOptions opt;
  opt.clock = a.T;
  opt.dt = a.dt;
  FlowHull A = FlowHull::vertical(s, h["x"].get<double>(), h["T_A"].get<double>(), a.dt);
  LocalityReport r = locality_test(s, A, a.alpha, a.paths, a.seed, opt);
  json out{{"version", kVersion},
           {"seed", a.seed},
           {"dt", a.dt},
           {"domain_hash", domain_hash(s)},
           {"alpha", a.alpha},
           {"T", a.T},
           {"paths", r.paths},
           {"hits", r.hits},
           {"stopped", r.stopped},
           {"fresh_stopped", r.fresh_stopped},
           {"short_runs", r.short_runs},
           {"used", r.used},
           {"fresh_used", r.fresh_used},
           {"hit_fraction", r.hit_fraction},
           {"terminal", ks_json(r.terminal)},
           {"quadratic_variation", ks_json(r.quadratic_variation)},
           {"drift", ks_json(r.drift)},
           {"drift_residual",
            {{"mean", r.drift_residual.mean},
             {"stderr", r.drift_residual.stderr_},
             {"z", r.drift_residual.z},
             {"paths", r.drift_residual.paths}}}};
  std::ofstream f = open_out(a.report);
  f << out.dump(2) << "\n";
}

struct CapacityArgs {
  std::string domain, driver, out = "capacity.csv";
  double constant = 0.0, T = 0.5, dt = 1e-3;
};

void run_capacity(const CapacityArgs& a) {
  SlitConfig s = read_domain(a.domain);
  DriverSpec d;
  if (!a.driver.empty()) {
    d.kind = "table";
    d.table = a.driver;
  } else {
    d.value = a.constant;
  }
  if (!(a.T > 0) || !(a.dt > 0)) throw Error(ErrorKind::Validation, "T and dt must be positive");
  DrivingPath p = integrate_slits(driver_samples(d, a.T, a.dt), s, a.dt);
  std::vector<CapacityFit> c = capacity_curve(p);
  std::ofstream out = open_out(a.out);
  CsvWriter w(out, 0, a.dt, s, {"t", "capacity", "spread", "two_t"});
  for (std::size_t k = 0; k < c.size(); ++k) {
    double t = static_cast<double>(k) * a.dt;
    w.row({t, c[k].a, c[k].spread, 2.0 * t});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Komatu-Loewner evolutions on standard slit domains"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report argument errors as JSON as well");

  KernelArgs ka;
  auto* kc = app.add_subcommand("kernel", "Evaluate the complex Poisson kernel at probe points");
  kc->add_option("--domain", ka.domain, "Slit configuration JSON")->required();
  kc->add_option("--xi", ka.xi, "Pole on the real line");
  kc->add_option("--probe", ka.probe, "CSV of re,im probe points")->required();
  kc->add_option("--out", ka.out, "Output CSV");

  OracleArgs oa;
  auto* oc = app.add_subcommand("oracle", "Grid and hitting-probability reference values");
  oc->add_option("--task", oa.task, "im_g | phi | capacity | kstar")
      ->required()
      ->check(CLI::IsMember({"im_g", "phi", "capacity", "kstar"}));
  oc->add_option("--domain", oa.domain)->required();
  oc->add_option("--probe", oa.probe, "CSV of re,im probe points");
  oc->add_option("--xi", oa.xi);
  oc->add_option("--slit", oa.slit, "Slit index for phi");
  oc->add_option("--hull-x", oa.hull_x, "Foot of the vertical hull segment");
  oc->add_option("--hull-height", oa.hull_height, "Height of the vertical hull segment");
  oc->add_option("--radius", oa.radius, "Ring radius for capacity");
  oc->add_option("--spacing", oa.h, "Grid spacing");
  oc->add_option("--out", oa.out);

  FlowArgs fa;
  auto* fc = app.add_subcommand("flow", "Integrate the deterministic flow and extract the hull");
  fc->add_option("--scenario", fa.scenario, "Scenario JSON (replaces the other inputs)");
  fc->add_option("--domain", fa.domain);
  fc->add_option("--driver", fa.driver, "CSV of t,xi");
  fc->add_option("--constant", fa.constant, "Constant driver value");
  fc->add_option("--T", fa.T);
  fc->add_option("--dt", fa.dt);
  fc->add_option("--probes", fa.probes, "'grid' or x0,x1,y0,y1,nx,ny");
  fc->add_option("--out-prefix", fa.out_prefix);

  SimulateArgs sa;
  auto* sc = app.add_subcommand("simulate", "Simulate an ensemble of stochastic drivers");
  sc->add_option("--domain", sa.domain)->required();
  sc->add_option("--alpha", sa.alpha);
  sc->add_option("--b", sa.b, "zero | neg_bmd");
  sc->add_option("--xi0", sa.xi0);
  sc->add_option("--T", sa.T);
  sc->add_option("--dt", sa.dt);
  sc->add_option("--paths", sa.paths);
  sc->add_option("--seed", sa.seed);
  sc->add_option("--out", sa.out, "Output directory");

  LocalityArgs la;
  auto* lc = app.add_subcommand("locality", "Compare mapped and fresh ensembles");
  lc->add_option("--domain", la.domain)->required();
  lc->add_option("--hull", la.hull, "JSON {\"x\": foot, \"T_A\": growth time}")->required();
  lc->add_option("--alpha", la.alpha);
  lc->add_option("--paths", la.paths);
  lc->add_option("--T", la.T, "Image-clock horizon");
  lc->add_option("--dt", la.dt);
  lc->add_option("--seed", la.seed);
  lc->add_option("--report", la.report);

  CapacityArgs ca;
  auto* cc = app.add_subcommand("capacity", "Half-plane capacity along a deterministic run");
  cc->add_option("--domain", ca.domain)->required();
  cc->add_option("--driver", ca.driver, "CSV of t,xi");
  cc->add_option("--constant", ca.constant);
  cc->add_option("--T", ca.T);
  cc->add_option("--dt", ca.dt);
  cc->add_option("--out", ca.out);

  AcceptanceOptions ao;
  auto* ac = app.add_subcommand("acceptance", "Run the acceptance suite");
  ac->add_flag("--quick", ao.quick, "Smaller statistical ensembles");
  ac->add_option("--only", ao.only, "Criterion keys to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    if (json_errors) write_error("Validation", e.what(), NAN);
    else app.exit(e);
    return 2;
  }

  try {
    if (*kc) run_kernel(ka);
    else if (*oc) run_oracle(oa);
    else if (*fc) run_flow(fa);
    else if (*sc) run_simulate(sa);
    else if (*lc) run_locality(la);
    else if (*cc) run_capacity(ca);
    else if (*ac) {
      auto results = run_acceptance(ao, std::cout);
      for (const auto& r : results)
        if (!r.pass) return 1;
    }
  } catch (const Error& e) {
    write_error(kind_name(e.kind()), e.what(), e.value());
    return is_validation(e.kind()) ? 2 : 3;
  } catch (const std::exception& e) {
    write_error("Internal", e.what(), NAN);
    return 3;
  }
  return 0;
}
