#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bkgarch/garch.hpp"
#include "bkgarch/innovations.hpp"

namespace bkgarch {

inline constexpr std::size_t kDefaultMarginalDraws = 100'000;
inline constexpr std::size_t kDefaultMarginalGap = 50;

/// Stationary marginal law of X as the scale mixture
///   F(x) = mean_j H(x / sigma_j),  f(x) = mean_j h(x / sigma_j) / sigma_j
/// over thinned sigma draws from one long simulated path.
///
/// `cdf`, `pdf`, `pdf_deriv` and `quantile` evaluate the mixture directly
/// (O(M) per call). The `*_fast` evaluators use a cached cubic Hermite table on
/// an asinh-spaced grid, accurate to about 1e-12 in F, and fall back to the
/// direct mixture outside the tabulated range.
class MarginalModel {
 public:
  /// Throws InvalidArgument when M < 10^4 or gap == 0 and NonStationaryError
  /// for non-stationary parameters.
  static MarginalModel build(const GarchParams& params, const InnovationModel& innovation,
                             std::size_t draws, std::size_t gap, std::uint64_t seed,
                             std::size_t burn_in = kDefaultBurnIn);

  /// Wraps explicit sigma values. No minimum on the number of draws.
  static MarginalModel from_sigma_draws(const GarchParams& params,
                                        const InnovationModel& innovation,
                                        std::vector<double> sigma_draws, std::uint64_t seed,
                                        std::size_t gap);

  static MarginalModel load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;
  /// CSV with columns x,F,f at the table nodes.
  void dump_grid(const std::filesystem::path& file) const;

  double cdf(double x) const;
  double pdf(double x) const;
  double pdf_deriv(double x) const;
  /// x with |cdf(x) - y| <= 1e-10, by bracketing and safeguarded bisection.
  double quantile(double y) const;

  double cdf_fast(double x) const;
  double pdf_fast(double x) const;
  double quantile_fast(double y) const;

  const GarchParams& params() const noexcept { return params_; }
  const InnovationModel& innovation() const noexcept { return innovation_; }
  std::span<const double> sigma_draws() const noexcept { return sigma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t gap() const noexcept { return gap_; }
  std::span<const double> table_nodes() const noexcept { return node_x_; }

 private:
  MarginalModel(GarchParams params, InnovationModel innovation, std::vector<double> sigma,
                std::uint64_t seed, std::size_t gap);
  void build_table();
  std::size_t segment(double x) const;

  GarchParams params_;
  InnovationModel innovation_;
  std::vector<double> sigma_;
  std::uint64_t seed_ = 0;
  std::size_t gap_ = 0;

  std::vector<double> node_x_;
  std::vector<double> node_F_;
  std::vector<double> node_f_;
  std::vector<double> node_fd_;
};

/// Probability integral transform U_i = F(X_i) through the cached table,
/// clamped to the open unit interval. The path must come from the model's
/// parameters and must not reuse the seed the marginal was built from.
std::vector<double> pit(const PathSample& path, const MarginalModel& marginal);

}  // namespace bkgarch
