#include "bkgarch/bahadur.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "bkgarch/error.hpp"

namespace bkgarch {

RateConstants rate_constants(std::size_t n) {
  if (n < 16) throw InvalidArgument("rate constants need n >= 16");
  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  const double loglog_n = std::log(log_n);
  RateConstants rc;
  rc.n = n;
  rc.b_n = std::pow(nd, -0.75) * std::sqrt(log_n) * std::pow(loglog_n, 0.25);
  rc.r_n = std::pow(nd, -0.25) * std::sqrt(log_n) * std::pow(loglog_n, 0.25);
  rc.b_n_star = rc.b_n / std::sqrt(nd);
  rc.lambda_n = std::sqrt(2.0 * loglog_n / nd);
  return rc;
}

ReferenceDistribution uniform_reference() {
  return {[](double x) { return std::clamp(x, 0.0, 1.0); }, [](double y) { return y; },
          [](double x) { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; }};
}

ReferenceDistribution reference_of(const MarginalModel& marginal) {
  const MarginalModel* m = &marginal;
  return {[m](double x) { return m->cdf_fast(x); }, [m](double y) { return m->quantile_fast(y); },
          [m](double x) { return m->pdf_fast(x); }};
}

double general_remainder(std::span<const double> sorted_x, std::span<const double> sorted_u,
                         const RealFunction& quantile, const RealFunction& density, double lo,
                         double hi, GridPolicy policy) {
  const std::size_t n = sorted_u.size();
  if (n == 0 || sorted_x.size() != n) throw InvalidArgument("samples must be non-empty and paired");
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw InvalidArgument("invalid remainder interval");
  const double nd = static_cast<double>(n);
  const double sqrt_n = std::sqrt(nd);

  // Extra (non-jump) evaluation points: the interval ends and the dense grid.
  std::vector<double> extra{lo, hi};
  if (policy == GridPolicy::dense) {
    const std::size_t m = 10 * n;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
      if (t > lo && t < hi) extra.push_back(t);
    }
  }
  std::sort(extra.begin(), extra.end());

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t i = 0;  // data values consumed (all < current t)
  std::size_t k = 1;  // next jump point k/n, k = 1..n-1
  std::size_t e = 0;
  double best = 0.0;
  for (;;) {
    const double t_data = i < n ? sorted_u[i] : inf;
    const double t_jump = k < n ? static_cast<double>(k) / nd : inf;
    const double t_extra = e < extra.size() ? extra[e] : inf;
    const double t = std::min({t_data, t_jump, t_extra});
    if (t > hi) break;

    const std::size_t below = i;  // #{U < t}
    while (i < n && sorted_u[i] == t) ++i;
    const std::size_t at_or_below = i;  // #{U <= t}
    const std::size_t jumps_below = k - 1;
    const bool is_jump = t_jump == t;
    if (is_jump) ++k;
    while (e < extra.size() && extra[e] == t) ++e;
    if (t < lo) continue;

    const double qt = quantile(t);
    const double ft = density(qt);
    const double qn_left = sorted_x[jumps_below];
    const double qn_right = is_jump ? sorted_x[jumps_below + 1] : qn_left;
    const double quant_left = ft * (sqrt_n * (qt - qn_left));
    const double quant_right = ft * (sqrt_n * (qt - qn_right));
    const double emp_left = sqrt_n * (static_cast<double>(below) / nd - t);
    const double emp_right = sqrt_n * (static_cast<double>(at_or_below) / nd - t);

    if (t > lo) best = std::max(best, std::abs(quant_left - emp_left));
    best = std::max(best, std::abs(quant_left - emp_right));
    if (t < hi) best = std::max(best, std::abs(quant_right - emp_right));
  }
  return best;
}

double uniform_remainder(std::span<const double> sorted_u, GridPolicy policy) {
  return general_remainder(
      sorted_u, sorted_u, [](double y) { return y; }, [](double) { return 1.0; }, 0.0, 1.0,
      policy);
}

BkResult bk_remainder(std::span<const double> x, const ReferenceDistribution& reference,
                      Interval interval, GridPolicy policy, std::uint64_t seed) {
  if (!(interval.lo > 0.0 && interval.lo < interval.hi && interval.hi < 1.0)) {
    throw InvalidArgument("working interval must satisfy 0 < lo < hi < 1");
  }
  const SortedSample sample(std::vector<double>(x.begin(), x.end()));
  const std::size_t n = sample.size();
  const auto rc = rate_constants(n);

  const auto xs = sample.values();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = reference.cdf(xs[i]);
    if (i > 0 && u[i] < u[i - 1]) u[i] = u[i - 1];
  }

  BkResult r;
  r.n = n;
  r.seed = seed;
  r.r_uniform = uniform_remainder(u, policy);
  r.r_general = general_remainder(xs, u, reference.quantile, reference.density, interval.lo,
                                  interval.hi, policy);
  // Full interval: all jump points in (0,1). The ends are padded past the
  // extreme order statistics so both one-sided limits there are included.
  const double u_lo = u.front() > 0.0 ? 0.5 * u.front() : u.front();
  const double u_hi = u.back() < 1.0 ? u.back() + 0.5 * (1.0 - u.back()) : u.back();
  r.r_general_full =
      u_lo < u_hi ? general_remainder(xs, u, reference.quantile, reference.density, u_lo, u_hi,
                                      GridPolicy::candidates)
                  : 0.0;
  r.sup_beta = uniform_processes(u).alpha.sup_abs;
  r.oscillation = uniform_oscillation(u, rc.lambda_n, rc.b_n_star);
  r.lil = r.sup_beta / std::sqrt(std::log(std::log(static_cast<double>(n))));
  return r;
}

BkResult bk_remainder(const PathSample& path, const MarginalModel& marginal, Interval interval,
                      GridPolicy policy) {
  if (!(path.params == marginal.params()) || !(path.innovation == marginal.innovation())) {
    throw InvalidArgument("path and marginal model come from different parameters");
  }
  if (path.seed == marginal.seed()) {
    throw InvalidArgument("path reuses the seed of the marginal model; use a fresh path");
  }
  return bk_remainder(path.x, reference_of(marginal), interval, policy, path.seed);
}

std::pair<double, double> fit_loglog(std::span<const std::pair<std::size_t, double>> points) {
  std::set<std::size_t> distinct;
  for (const auto& [n, v] : points) {
    if (n == 0 || !(v > 0.0)) throw InvalidArgument("log-log fit needs positive n and values");
    distinct.insert(n);
  }
  if (distinct.size() < 2) throw InvalidArgument("log-log fit needs two distinct n values");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [n, v] : points) {
    mx += std::log(static_cast<double>(n));
    my += std::log(v);
  }
  const double m = static_cast<double>(points.size());
  mx /= m;
  my /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [n, v] : points) {
    const double dx = std::log(static_cast<double>(n)) - mx;
    sxy += dx * (std::log(v) - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

RateFit rate_fit(std::span<const std::pair<std::size_t, double>> points) {
  std::set<std::size_t> distinct;
  for (const auto& pt : points) distinct.insert(pt.first);
  if (distinct.size() < 3) throw InvalidArgument("rate fit needs at least three distinct n values");
  RateFit fit;
  std::tie(fit.exponent, fit.intercept) = fit_loglog(points);
  for (const auto& [n, v] : points) {
    const double rn = rate_constants(n).r_n;
    fit.ratios.push_back({n, v, rn, v / rn});
  }
  return fit;
}

}  // namespace bkgarch
