#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace bkgarch {

/// Order statistics X_{1:n} <= ... <= X_{n:n}.
class SortedSample {
 public:
  /// Sorts the input. Throws InvalidArgument on empty input or NaN.
  explicit SortedSample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  /// k-th order statistic, 1-based.
  double order_stat(std::size_t k) const { return values_[k - 1]; }

 private:
  std::vector<double> values_;
};

/// F_n(x) = #{X_i <= x} / n.
double ecdf(const SortedSample& sample, double x);

/// Q_n(y) = X_{ceil(n y):n} for y in (0, 1].
double equantile(const SortedSample& sample, double y);

/// A process evaluated on a set of points. Jump points appear twice, first
/// with the left limit and then with the right limit.
struct ProcessEvaluation {
  std::vector<double> grid;
  std::vector<double> values;
  double sup_abs = 0.0;
  std::size_t n = 0;
};

using RealFunction = std::function<double(double)>;

/// beta_n(x) = sqrt(n) (F_n(x) - F(x)) on `grid` (sorted) and at both sides
/// of every order statistic.
ProcessEvaluation empirical_process(const SortedSample& sample, const RealFunction& cdf,
                                    std::span<const double> grid);

/// q_n(y) = sqrt(n) (Q(y) - Q_n(y)) on `y_grid` (sorted, inside (0,1)) and at
/// both sides of every jump point i/n, i = 1..n-1.
ProcessEvaluation quantile_process(const SortedSample& sample, const RealFunction& quantile,
                                   std::span<const double> y_grid);

struct UniformProcesses {
  ProcessEvaluation alpha;  // sqrt(n) (E_n(x) - x) on [0,1]
  ProcessEvaluation gamma;  // sqrt(n) (y - G_n(y)) on (0,1)
};

/// Uniform empirical and quantile processes of a sample on [0,1].
/// Throws InvalidArgument for entries outside [0,1].
UniformProcesses uniform_processes(std::span<const double> u);

/// max |E_n(t_{i+j}) - E_n(t_i) - (t_{i+j} - t_i)| over the grid t_i = i * spacing,
/// i = 0..floor(1/spacing)+1, and |j| <= floor(width/spacing)+1.
/// `sorted_u` must be sorted.
double uniform_oscillation(std::span<const double> sorted_u, double width, double spacing);

/// Oscillation of the empirical CDF over windows of width lambda_n on a grid
/// of spacing b_n_star, computed after the transform U = F(X).
/// Requires n >= 16.
double oscillation_statistic(const SortedSample& sample, const RealFunction& cdf);

/// (log log n)^{-1/2} sup |process|. Requires n >= 16.
double lil_statistic(const ProcessEvaluation& eval, std::size_t n);

/// Writes columns grid,value.
void write_csv(const ProcessEvaluation& eval, const std::filesystem::path& file);

}  // namespace bkgarch
