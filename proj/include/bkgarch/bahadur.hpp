#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bkgarch/empirical.hpp"
#include "bkgarch/garch.hpp"
#include "bkgarch/marginal.hpp"
#include "bkgarch/rates.hpp"

namespace bkgarch {

struct Interval {
  double lo = 0.05;
  double hi = 0.95;
};

/// Where the sup of a remainder is searched.
///  - candidates: the jump points {U_i} and {k/n} (both one-sided limits and
///    the value at the point), which is where every sup is attained;
///  - dense: candidates plus a uniform grid of 10 n points.
enum class GridPolicy { candidates, dense };

/// F, Q and f of the reference law the sample is compared against.
struct ReferenceDistribution {
  RealFunction cdf;
  RealFunction quantile;
  RealFunction density;
};

/// The uniform law on [0,1].
ReferenceDistribution uniform_reference();

/// Fast table evaluators of a marginal model. The model must outlive the view.
ReferenceDistribution reference_of(const MarginalModel& marginal);

struct BkResult {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double r_uniform = 0.0;       // sup_{[0,1]} |gamma_n - alpha_n|
  double r_general = 0.0;       // sup_{[lo,hi]} |f(Q) q_n - alpha_n|
  double r_general_full = 0.0;  // same sup over all jump points in (0,1)
  double sup_beta = 0.0;        // sup |beta_n| = sup |alpha_n|
  double oscillation = 0.0;
  double lil = 0.0;
};

/// sup |f(Q(y)) sqrt(n) (Q(y) - Q_n(y)) - sqrt(n) (E_n(y) - y)| over y in
/// [lo, hi], where E_n is the ECDF of `sorted_u` and Q_n the empirical
/// quantile of `sorted_x`. The two samples must be the same data before and
/// after the transform, both sorted.
double general_remainder(std::span<const double> sorted_x, std::span<const double> sorted_u,
                         const RealFunction& quantile, const RealFunction& density, double lo,
                         double hi, GridPolicy policy = GridPolicy::candidates);

/// sup_{y in [0,1]} |gamma_n(y) - alpha_n(y)| for a sorted sample on [0,1].
double uniform_remainder(std::span<const double> sorted_u,
                         GridPolicy policy = GridPolicy::candidates);

/// All remainder statistics of a raw sample against a reference law.
BkResult bk_remainder(std::span<const double> x, const ReferenceDistribution& reference,
                      Interval interval, GridPolicy policy = GridPolicy::candidates,
                      std::uint64_t seed = 0);

/// Same, for a simulated path against the marginal of its parameters.
/// Throws InvalidArgument when the path and model disagree on parameters or
/// the path reuses the model's seed.
BkResult bk_remainder(const PathSample& path, const MarginalModel& marginal, Interval interval,
                      GridPolicy policy = GridPolicy::candidates);

struct RatioRow {
  std::size_t n = 0;
  double statistic = 0.0;
  double r_n = 0.0;
  double ratio = 0.0;
};

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;
  std::vector<RatioRow> ratios;
};

/// Least-squares line through (log n, log statistic); needs two distinct n.
std::pair<double, double> fit_loglog(std::span<const std::pair<std::size_t, double>> points);

/// Log-log slope of the per-n summaries and their ratio to r_n.
/// Needs at least three distinct n.
RateFit rate_fit(std::span<const std::pair<std::size_t, double>> points);

}  // namespace bkgarch
