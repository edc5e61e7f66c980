#include "bkgarch/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include "bkgarch/error.hpp"
#include "bkgarch/rates.hpp"

namespace bkgarch {

SortedSample::SortedSample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("sample must be non-empty");
  if (std::any_of(values_.begin(), values_.end(), [](double v) { return std::isnan(v); })) {
    throw InvalidArgument("sample contains NaN");
  }
  std::sort(values_.begin(), values_.end());
}

double ecdf(const SortedSample& sample, double x) {
  const auto v = sample.values();
  const auto count = std::upper_bound(v.begin(), v.end(), x) - v.begin();
  return static_cast<double>(count) / static_cast<double>(v.size());
}

double equantile(const SortedSample& sample, double y) {
  if (!(y > 0.0 && y <= 1.0)) throw InvalidArgument("equantile level must lie in (0,1]");
  const std::size_t n = sample.size();
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(nd * y));
  k = std::clamp<std::size_t>(k, 1, n);
  // smallest k with k/n >= y, robust to rounding in n*y
  if (k > 1 && static_cast<double>(k - 1) / nd >= y) --k;
  return sample.order_stat(k);
}

namespace {

void push(ProcessEvaluation& eval, double point, double value) {
  eval.grid.push_back(point);
  eval.values.push_back(value);
  eval.sup_abs = std::max(eval.sup_abs, std::abs(value));
}

}  // namespace

ProcessEvaluation empirical_process(const SortedSample& sample, const RealFunction& cdf,
                                    std::span<const double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw InvalidArgument("grid must be sorted");
  const auto x = sample.values();
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const double sqrt_n = std::sqrt(nd);

  ProcessEvaluation eval;
  eval.n = n;
  eval.grid.reserve(grid.size() + 2 * n);
  eval.values.reserve(grid.size() + 2 * n);

  std::size_t g = 0;
  std::size_t i = 0;  // number of order statistics strictly below the current point
  while (i < n || g < grid.size()) {
    if (g < grid.size() && (i == n || grid[g] < x[i])) {
      push(eval, grid[g], sqrt_n * (static_cast<double>(i) / nd - cdf(grid[g])));
      ++g;
      continue;
    }
    const double v = x[i];
    std::size_t j = i;
    while (j < n && x[j] == v) ++j;
    const double fv = cdf(v);
    push(eval, v, sqrt_n * (static_cast<double>(i) / nd - fv));
    push(eval, v, sqrt_n * (static_cast<double>(j) / nd - fv));
    while (g < grid.size() && grid[g] == v) ++g;
    i = j;
  }
  return eval;
}

ProcessEvaluation quantile_process(const SortedSample& sample, const RealFunction& quantile,
                                   std::span<const double> y_grid) {
  if (!std::is_sorted(y_grid.begin(), y_grid.end())) throw InvalidArgument("grid must be sorted");
  if (!y_grid.empty() && !(y_grid.front() > 0.0 && y_grid.back() < 1.0)) {
    throw InvalidArgument("quantile process grid must lie inside (0,1)");
  }
  const std::size_t n = sample.size();
  const double nd = static_cast<double>(n);
  const double sqrt_n = std::sqrt(nd);

  ProcessEvaluation eval;
  eval.n = n;
  std::size_t g = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double jump = static_cast<double>(k) / nd;
    while (g < y_grid.size() && y_grid[g] < jump) {
      push(eval, y_grid[g], sqrt_n * (quantile(y_grid[g]) - sample.order_stat(k)));
      ++g;
    }
    if (k == n) break;
    while (g < y_grid.size() && y_grid[g] == jump) ++g;
    const double qj = quantile(jump);
    push(eval, jump, sqrt_n * (qj - sample.order_stat(k)));
    push(eval, jump, sqrt_n * (qj - sample.order_stat(k + 1)));
  }
  return eval;
}

UniformProcesses uniform_processes(std::span<const double> u) {
  if (u.empty()) throw InvalidArgument("sample must be non-empty");
  if (std::any_of(u.begin(), u.end(), [](double v) { return !(v >= 0.0 && v <= 1.0); })) {
    throw InvalidArgument("uniform sample entries must lie in [0,1]");
  }
  std::vector<double> s(u.begin(), u.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const double nd = static_cast<double>(n);
  const double sqrt_n = std::sqrt(nd);
  auto scaled = [&](std::size_t k, double v) { return (static_cast<double>(k) / nd - v) * sqrt_n; };

  UniformProcesses out;
  out.alpha.n = n;
  out.gamma.n = n;

  // alpha_n: E_n is right-continuous with jumps at the data.
  if (s.front() > 0.0) push(out.alpha, 0.0, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s[j] == s[i]) ++j;
    push(out.alpha, s[i], scaled(i, s[i]));
    push(out.alpha, s[i], scaled(j, s[i]));
    i = j;
  }
  if (s.back() < 1.0) push(out.alpha, 1.0, 0.0);

  // gamma_n: G_n(y) = U_{ceil(ny):n} is left-continuous with jumps at k/n.
  push(out.gamma, 0.0, scaled(0, s[0]));
  for (std::size_t k = 1; k < n; ++k) {
    const double y = static_cast<double>(k) / nd;
    push(out.gamma, y, scaled(k, s[k - 1]));
    push(out.gamma, y, scaled(k, s[k]));
  }
  push(out.gamma, 1.0, scaled(n, s[n - 1]));
  return out;
}

double uniform_oscillation(std::span<const double> sorted_u, double width, double spacing) {
  if (!(spacing > 0.0) || !(width > 0.0)) {
    throw InvalidArgument("oscillation width and spacing must be positive");
  }
  const std::size_t n = sorted_u.size();
  const double nd = static_cast<double>(n);
  const auto e = static_cast<std::size_t>(std::floor(1.0 / spacing)) + 1;
  const auto d = static_cast<std::size_t>(std::floor(width / spacing)) + 1;

  std::vector<double> dev(e + 1);
  std::size_t count = 0;
  for (std::size_t i = 0; i <= e; ++i) {
    const double t = static_cast<double>(i) * spacing;
    while (count < n && sorted_u[count] <= t) ++count;
    dev[i] = static_cast<double>(count) / nd - t;
  }

  // Sliding-window extremes of dev over [i-d, i+d].
  std::deque<std::size_t> maxq;
  std::deque<std::size_t> minq;
  std::size_t next = 0;
  double best = 0.0;
  for (std::size_t i = 0; i <= e; ++i) {
    const std::size_t hi = std::min(e, i + d);
    for (; next <= hi; ++next) {
      while (!maxq.empty() && dev[maxq.back()] <= dev[next]) maxq.pop_back();
      maxq.push_back(next);
      while (!minq.empty() && dev[minq.back()] >= dev[next]) minq.pop_back();
      minq.push_back(next);
    }
    const std::size_t lo = i >= d ? i - d : 0;
    while (maxq.front() < lo) maxq.pop_front();
    while (minq.front() < lo) minq.pop_front();
    best = std::max({best, dev[maxq.front()] - dev[i], dev[i] - dev[minq.front()]});
  }
  return best;
}

double oscillation_statistic(const SortedSample& sample, const RealFunction& cdf) {
  const auto rc = rate_constants(sample.size());
  std::vector<double> u(sample.size());
  std::transform(sample.values().begin(), sample.values().end(), u.begin(), cdf);
  // cdf is nondecreasing; sorting only guards against evaluator noise
  std::sort(u.begin(), u.end());
  return uniform_oscillation(u, rc.lambda_n, rc.b_n_star);
}

double lil_statistic(const ProcessEvaluation& eval, std::size_t n) {
  if (n < 16) throw InvalidArgument("lil statistic needs n >= 16");
  return eval.sup_abs / std::sqrt(std::log(std::log(static_cast<double>(n))));
}

void write_csv(const ProcessEvaluation& eval, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.precision(17);
  out << "grid,value\n";
  for (std::size_t i = 0; i < eval.grid.size(); ++i) {
    out << eval.grid[i] << ',' << eval.values[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + file.string());
}

}  // namespace bkgarch
