#include <algorithm>
#include <cmath>

#include "skle/oracle.hpp"
#include "skle/rng.hpp"

namespace skle {

MonteCarloEstimate wos_harmonic_measure(const SlitConfig& domain, int i, cplx z0, long walks,
                                        const WosSampler& sampler) {
  CounterRng rng(sampler.seed, static_cast<std::uint64_t>(i) + 1000);
  std::uint64_t draw = 0;
  long hits = 0;
  for (long w = 0; w < walks; ++w) {
    cplx z = z0;
    for (long step = 0; step < sampler.max_steps; ++step) {
      double r = z.imag();
      if (r < sampler.delta) break;  // killed on the real line
      int nearest = -1;
      for (int j = 0; j < static_cast<int>(domain.size()); ++j) {
        double dj = distance_to_slit(domain[j], z);
        if (dj < r) {
          r = dj;
          nearest = j;
        }
      }
      if (nearest >= 0 && r < sampler.delta) {
        if (nearest == i) ++hits;
        break;
      }
      double th = 2.0 * M_PI * rng.uniform(draw++);
      z += std::polar(r, th);
    }
  }
  MonteCarloEstimate e;
  e.n = walks;
  e.mean = static_cast<double>(hits) / walks;
  e.stderr_ = std::sqrt(std::max(e.mean * (1 - e.mean), 1e-300) / walks);
  return e;
}

}  // namespace skle
