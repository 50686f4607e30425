#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace dexhand::stats {

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse standard normal CDF (Acklam's rational approximation refined
/// with one Halley step; absolute error < 1e-14 on (1e-300, 1-1e-16)).
double normal_quantile(double p);

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);

/// Wilson score interval for k successes out of n at the given two-sided
/// confidence level. Exact at the boundaries: k=0 gives low=0, k=n gives
/// high=1.
std::pair<double, double> wilson_ci(int k, int n, double confidence);

struct ZTestResult {
  double z = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // pooled proportion 0 or 1
};

/// Pooled two-proportion z-test, two-sided p-value.
ZTestResult two_prop_ztest(int k1, int n1, int k2, int n2);

/// Deterministic per-trial seed derivation (splitmix64 over the master
/// seed and trial coordinates).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c);

}  // namespace dexhand::stats
