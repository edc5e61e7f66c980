#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bkgarch/innovations.hpp"

namespace bkgarch {

/// Coefficients of
///   X_k = sigma_k eps_k,
///   sigma_k^2 = delta + sum_i beta_i sigma_{k-i}^2 + sum_j alpha_j X_{k-j}^2.
struct GarchParams {
  double delta = 1.0;
  std::vector<double> beta;   // beta_1..beta_p, p >= 0
  std::vector<double> alpha;  // alpha_1..alpha_q, q >= 1

  std::size_t p() const noexcept { return beta.size(); }
  std::size_t q() const noexcept { return alpha.size(); }
  double beta_sum() const noexcept;
  double alpha_sum() const noexcept;

  /// Throws InvalidArgument unless delta > 0, all coefficients >= 0, q >= 1.
  void validate() const;

  bool operator==(const GarchParams&) const = default;
};

/// A simulated stretch of the process together with its provenance.
struct PathSample {
  std::vector<double> x;       // X_1..X_n
  std::vector<double> sigma2;  // sigma_1^2..sigma_n^2
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  GarchParams params;
  InnovationModel innovation = InnovationModel::gaussian();

  std::size_t size() const noexcept { return x.size(); }
};

/// Path CSV: a provenance comment line followed by columns index,x,sigma2.
void write_path_csv(const PathSample& path, const std::filesystem::path& file);
PathSample read_path_csv(const std::filesystem::path& file);

inline constexpr std::size_t kDefaultBurnIn = 10'000;
inline constexpr double kDivergenceLimit = 1e300;

/// Runs the recursion for burn_in + n steps and keeps the last n.
/// The start state is the unconditional variance delta / (1 - sum beta - sum alpha)
/// when that is finite and positive, otherwise delta.
/// Throws NonStationaryError unless the parameters pass the stationarity
/// check or `allow_nonstationary` is set; throws DivergenceError if sigma^2
/// exceeds 1e300.
PathSample simulate(const GarchParams& params, const InnovationModel& model, std::size_t n,
                    std::size_t burn_in, std::uint64_t seed, bool allow_nonstationary = false);

/// Independent paths of equal length, seeds mixed from `seed` and the block index.
std::vector<PathSample> simulate_blocks(const GarchParams& params, const InnovationModel& model,
                                        std::size_t block_length, std::size_t blocks,
                                        std::uint64_t seed,
                                        std::size_t burn_in = kDefaultBurnIn);

/// Dimension of the companion state: max(p,1) + max(q,1) - 1.
std::size_t companion_dimension(const GarchParams& params);

/// Random coefficient matrix A(eps) acting on the state
///   (sigma_{k+1}^2, ..., sigma_{k-p'+2}^2, X_k^2, ..., X_{k-q'+2}^2)
/// with p' = max(p,1) and q' = max(q,1), so that Y_k = A(eps_k) Y_{k-1} + B.
Eigen::MatrixXd companion_matrix(const GarchParams& params, double eps);

/// The constant term B = (delta, 0, ..., 0).
Eigen::VectorXd companion_offset(const GarchParams& params);

struct LyapunovEstimate {
  double gamma_hat = 0.0;
  double std_error = 0.0;
  std::size_t iterations = 0;
};

/// Top Lyapunov exponent of the companion products, estimated from the log
/// growth of a renormalized matrix-vector product. The standard error comes
/// from batch means. Returns gamma_hat = -inf when every coefficient is zero.
LyapunovEstimate lyapunov_exponent(const GarchParams& params, const InnovationModel& model,
                                   std::size_t iterations, std::uint64_t seed);

enum class Stationarity { stationary, non_stationary, inconclusive };

std::string to_string(Stationarity verdict);

struct StationarityVerdict {
  Stationarity verdict = Stationarity::inconclusive;
  LyapunovEstimate estimate;
  /// |gamma_hat| / std_error (infinite when std_error is 0).
  double margin = 0.0;
};

inline constexpr std::size_t kStationarityIterations = 1'000'000;
inline constexpr std::uint64_t kStationaritySeed = 0x5eed'1a9u;

StationarityVerdict is_stationary(const GarchParams& params, const InnovationModel& model,
                                  std::size_t iterations = kStationarityIterations,
                                  std::uint64_t seed = kStationaritySeed);

/// sigma_k^2 = a + sum_{i>=1} b_i X_{k-i}^2.
struct ArchInfinity {
  double a = 0.0;
  std::vector<double> b;  // b_1..b_m
};

/// Power-series coefficients of alpha(z) / (1 - beta(z)). Needs sum beta < 1.
ArchInfinity arch_infinity_coeffs(const GarchParams& params, std::size_t m);

struct Autocovariance {
  std::vector<double> acov;          // lag 0..max_lag, biased (divisor n)
  std::vector<double> partial_sums;  // acov[0] + 2 sum_{1..L} acov[k]
};

/// Sample autocovariances of X^2. Requires max_lag < n / 10.
Autocovariance autocovariance_x2(const PathSample& path, std::size_t max_lag);

/// Across-block variance of sum_i 1/sigma_i divided by the block length.
/// Needs at least 100 blocks of equal length.
double inverse_sigma_variance(std::span<const PathSample> blocks);

}  // namespace bkgarch
