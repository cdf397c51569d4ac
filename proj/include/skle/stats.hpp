#pragma once

#include <cstddef>
#include <vector>

namespace skle {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0, n2 = 0;
};

// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);

}  // namespace skle
