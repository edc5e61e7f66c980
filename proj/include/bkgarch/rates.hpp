#pragma once

#include <cstddef>

namespace bkgarch {

/// Normalizing sequences for sample size n (n >= 16):
///   b_n      = n^{-3/4} (log n)^{1/2} (log log n)^{1/4}
///   r_n      = sqrt(n) b_n, the Bahadur-Kiefer rate of the remainder
///   b_n_star = b_n / sqrt(n)
///   lambda_n = n^{-1/2} (2 log log n)^{1/2}
struct RateConstants {
  std::size_t n = 0;
  double r_n = 0.0;
  double b_n = 0.0;
  double b_n_star = 0.0;
  double lambda_n = 0.0;
};

/// Throws InvalidArgument for n < 16.
RateConstants rate_constants(std::size_t n);

}  // namespace bkgarch
