#include "skle/driver.hpp"

#include <cmath>

#include "skle/errors.hpp"
#include "skle/parallel.hpp"
#include "skle/rng.hpp"

namespace skle {

CoefficientSpec CoefficientSpec::constant(double alpha, const std::string& drift) {
  if (!(alpha >= 0)) throw Error(ErrorKind::Validation, "alpha must be nonnegative", alpha);
  CoefficientSpec c;
  c.name = "alpha=" + std::to_string(alpha) + ",b=" + drift;
  c.alpha = [alpha](double, const SlitConfig&) { return alpha; };
  if (drift == "zero") {
    c.b = [](double, const SlitConfig&, const KernelSolution&) { return 0.0; };
  } else if (drift == "neg_bmd") {
    c.b = [](double, const SlitConfig&, const KernelSolution& k) { return -b_bmd(k); };
  } else {
    throw Error(ErrorKind::Validation, "unknown drift rule: " + drift);
  }
  return c;
}

CoefficientSpec CoefficientSpec::broken_scaling(double alpha, double kappa) {
  CoefficientSpec c;
  c.name = "broken_scaling";
  c.alpha = [alpha](double, const SlitConfig&) { return alpha; };
  c.b = [kappa](double, const SlitConfig&, const KernelSolution&) { return kappa; };
  return c;
}

CoefficientSpec CoefficientSpec::broken_shift(double alpha, double kappa) {
  CoefficientSpec c;
  c.name = "broken_shift";
  c.alpha = [alpha](double, const SlitConfig&) { return alpha; };
  c.b = [kappa](double xi, const SlitConfig&, const KernelSolution&) { return -kappa * xi; };
  return c;
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t index, std::size_t steps, double dt) {
  CounterRng rng(seed, index);
  std::vector<double> dB(steps);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) dB[k] = sd * rng.normal(k);
  return dB;
}

std::vector<double> coarsen(const std::vector<double>& increments, std::size_t factor) {
  if (factor == 0 || increments.size() % factor != 0)
    throw Error(ErrorKind::ShapeMismatch, "increment count not divisible by factor");
  std::vector<double> out(increments.size() / factor, 0.0);
  for (std::size_t k = 0; k < increments.size(); ++k) out[k / factor] += increments[k];
  return out;
}

SdeRun simulate_with(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double dt,
                     std::vector<double> increments, const SdeOptions& opt) {
  SdeRun run;
  PathBuilder builder(s0, xi0, dt, opt.flow);
  double xi = xi0;
  for (std::size_t k = 0; k < increments.size() && builder.alive(); ++k) {
    const SlitConfig& s = builder.path().slits.back();
    double a = coeff.alpha(xi, s);
    double b = coeff.b(xi, s, builder.current_kernel());
    if (!std::isfinite(b) || std::abs(b) * dt > opt.blowup * std::max(a, 1.0) * std::sqrt(dt)) {
      builder.stop("drift blow-up at t=" + std::to_string(static_cast<double>(k) * dt));
      break;
    }
    double next = xi + a * increments[k] + b * dt;
    builder.step(0.5 * (xi + next), next);
    xi = next;
  }
  run.path = builder.take();
  run.path.provenance = "sde:" + coeff.name;
  run.increments = std::move(increments);
  return run;
}

SdeRun simulate(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double T, double dt,
                std::uint64_t seed, std::uint64_t index, const SdeOptions& opt) {
  if (!(T >= 0) || !(dt > 0)) throw Error(ErrorKind::Validation, "T must be >= 0 and dt > 0");
  auto steps = static_cast<std::size_t>(std::llround(T / dt));
  SdeRun run = simulate_with(xi0, s0, coeff, dt, brownian_increments(seed, index, steps, dt), opt);
  run.seed = seed;
  run.index = index;
  run.path.seed = seed;
  return run;
}

std::vector<SdeRun> simulate_ensemble(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double T,
                                      double dt, std::uint64_t seed, std::size_t n_paths, const SdeOptions& opt) {
  std::vector<SdeRun> runs(n_paths);
  parallel_for(n_paths, [&](std::size_t i) { runs[i] = simulate(xi0, s0, coeff, T, dt, seed, i, opt); });
  return runs;
}

std::vector<double> terminal_values(const std::vector<SdeRun>& runs) {
  std::vector<double> out;
  for (const auto& r : runs)
    if (!r.path.ended_early) out.push_back(r.path.xi.back());
  return out;
}

namespace {

std::size_t ended(const std::vector<SdeRun>& runs) {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.path.ended_early ? 1 : 0;
  return n;
}

}  // namespace

EnsembleTest scaling_check(const CoefficientSpec& coeff, double xi0, const SlitConfig& s0, double c,
                           std::size_t n_paths, double T, double dt, std::uint64_t seed, const SdeOptions& opt) {
  if (!(c > 0)) throw Error(ErrorKind::Validation, "scale must be positive", c);
  auto base = simulate_ensemble(xi0, s0, coeff, T, dt, seed, n_paths, opt);
  auto other = simulate_ensemble(c * xi0, scale(s0, c), coeff, c * c * T, c * c * dt, seed + 0x9E3779B9ULL, n_paths, opt);
  std::vector<double> a = terminal_values(base), b = terminal_values(other);
  for (double& v : b) v /= c;
  return {ks_two_sample(a, b), ended(base), ended(other)};
}

EnsembleTest x_homogeneity_check(const CoefficientSpec& coeff, double xi0, const SlitConfig& s0, double r,
                                 std::size_t n_paths, double T, double dt, std::uint64_t seed,
                                 const SdeOptions& opt) {
  auto base = simulate_ensemble(xi0, s0, coeff, T, dt, seed, n_paths, opt);
  auto other = simulate_ensemble(xi0 + r, translate(s0, r), coeff, T, dt, seed + 0x9E3779B9ULL, n_paths, opt);
  std::vector<double> a = terminal_values(base), b = terminal_values(other);
  for (double& v : b) v -= r;
  return {ks_two_sample(a, b), ended(base), ended(other)};
}

}  // namespace skle
