#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skle/flow.hpp"
#include "skle/stats.hpp"

namespace skle {

// Diffusion and drift of the driving SDE. Both rules receive the driving
// point and the slit configuration together with the kernel solved there.
struct CoefficientSpec {
  std::string name;
  std::function<double(double xi, const SlitConfig& s)> alpha;
  std::function<double(double xi, const SlitConfig& s, const KernelSolution& k)> b;

  static CoefficientSpec constant(double alpha, const std::string& drift = "zero");
  // Drift of the wrong homogeneity degree (0 instead of -1): b = kappa.
  static CoefficientSpec broken_scaling(double alpha, double kappa);
  // Drift depending on the absolute position: b = -kappa * xi.
  static CoefficientSpec broken_shift(double alpha, double kappa);
};

struct SdeOptions {
  FlowOptions flow;
  double blowup = 10.0;
};

struct SdeRun {
  DrivingPath path;
  std::vector<double> increments;  // Brownian increments per step
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t index, std::size_t steps, double dt);

// Sum consecutive groups of `factor` increments.
std::vector<double> coarsen(const std::vector<double>& increments, std::size_t factor);

SdeRun simulate(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double T, double dt,
                std::uint64_t seed, std::uint64_t index = 0, const SdeOptions& opt = {});

SdeRun simulate_with(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double dt,
                     std::vector<double> increments, const SdeOptions& opt = {});

std::vector<SdeRun> simulate_ensemble(double xi0, const SlitConfig& s0, const CoefficientSpec& coeff, double T,
                                      double dt, std::uint64_t seed, std::size_t n_paths, const SdeOptions& opt = {});

// Terminal driver values of an ensemble; paths that ended early are skipped.
std::vector<double> terminal_values(const std::vector<SdeRun>& runs);

struct EnsembleTest {
  KsResult ks;
  std::size_t base_ended = 0, other_ended = 0;
};

// Law of c^{-1} xi(c^2 T) started at (c xi0, c s0) against xi(T) started at (xi0, s0).
EnsembleTest scaling_check(const CoefficientSpec& coeff, double xi0, const SlitConfig& s0, double c,
                           std::size_t n_paths, double T, double dt, std::uint64_t seed, const SdeOptions& opt = {});

// Law of xi(T) - r started at (xi0 + r, s0 + r) against xi(T) started at (xi0, s0).
EnsembleTest x_homogeneity_check(const CoefficientSpec& coeff, double xi0, const SlitConfig& s0, double r,
                                 std::size_t n_paths, double T, double dt, std::uint64_t seed,
                                 const SdeOptions& opt = {});

}  // namespace skle
