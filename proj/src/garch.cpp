#include "bkgarch/garch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "bkgarch/error.hpp"

namespace bkgarch {

double GarchParams::beta_sum() const noexcept {
  return std::accumulate(beta.begin(), beta.end(), 0.0);
}

double GarchParams::alpha_sum() const noexcept {
  return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

void GarchParams::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  if (alpha.empty()) throw InvalidArgument("at least one alpha coefficient is required");
  auto bad = [](double c) { return !(c >= 0.0) || !std::isfinite(c); };
  if (std::any_of(beta.begin(), beta.end(), bad)) {
    throw InvalidArgument("beta coefficients must be nonnegative");
  }
  if (std::any_of(alpha.begin(), alpha.end(), bad)) {
    throw InvalidArgument("alpha coefficients must be nonnegative");
  }
}

namespace {

bool all_coefficients_zero(const GarchParams& params) {
  auto zero = [](double c) { return c == 0.0; };
  return std::all_of(params.beta.begin(), params.beta.end(), zero) &&
         std::all_of(params.alpha.begin(), params.alpha.end(), zero);
}

// Sufficient for gamma < 0: finite second-order stationary solution (E eps^2 = 1).
bool second_order_stationary(const GarchParams& params) {
  return params.beta_sum() + params.alpha_sum() < 1.0;
}

void require_stationary(const GarchParams& params, const InnovationModel& model) {
  if (second_order_stationary(params)) return;
  const auto verdict = is_stationary(params, model);
  if (verdict.verdict != Stationarity::stationary) {
    throw NonStationaryError("parameters are not stationary (gamma_hat = " +
                             std::to_string(verdict.estimate.gamma_hat) + ", verdict " +
                             to_string(verdict.verdict) + ")");
  }
}

}  // namespace

PathSample simulate(const GarchParams& params, const InnovationModel& model, std::size_t n,
                    std::size_t burn_in, std::uint64_t seed, bool allow_nonstationary) {
  params.validate();
  if (n == 0) throw InvalidArgument("path length must be at least 1");
  if (!allow_nonstationary) require_stationary(params, model);

  const std::size_t p = params.p();
  const std::size_t q = params.q();
  const double persistence = params.beta_sum() + params.alpha_sum();
  const double start = persistence < 1.0 ? params.delta / (1.0 - persistence) : params.delta;

  // Ring buffers over the last `lags` values of sigma^2 and X^2.
  const std::size_t lags = std::max({p, q, std::size_t{1}});
  std::vector<double> hist_s2(lags, start);
  std::vector<double> hist_x2(lags, start);
  std::size_t head = 0;  // slot of the most recent value

  PathSample path;
  path.seed = seed;
  path.burn_in = burn_in;
  path.params = params;
  path.innovation = model;
  path.x.resize(n);
  path.sigma2.resize(n);

  Engine eng(seed);
  const std::size_t total = n + burn_in;
  for (std::size_t k = 0; k < total; ++k) {
    double s2 = params.delta;
    for (std::size_t i = 1; i <= p; ++i) {
      s2 += params.beta[i - 1] * hist_s2[(head + lags + 1 - i) % lags];
    }
    for (std::size_t j = 1; j <= q; ++j) {
      s2 += params.alpha[j - 1] * hist_x2[(head + lags + 1 - j) % lags];
    }
    if (!(s2 <= kDivergenceLimit)) {
      throw DivergenceError("sigma^2 diverged past 1e300 at step " + std::to_string(k));
    }
    const double x = std::sqrt(s2) * model.draw(eng);
    head = (head + 1) % lags;
    hist_s2[head] = s2;
    hist_x2[head] = x * x;
    if (k >= burn_in) {
      path.x[k - burn_in] = x;
      path.sigma2[k - burn_in] = s2;
    }
  }
  return path;
}

std::vector<PathSample> simulate_blocks(const GarchParams& params, const InnovationModel& model,
                                        std::size_t block_length, std::size_t blocks,
                                        std::uint64_t seed, std::size_t burn_in) {
  require_stationary(params, model);
  std::vector<PathSample> out;
  out.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    out.push_back(simulate(params, model, block_length, burn_in, mix_seed(seed, b, 0xb10c), true));
  }
  return out;
}

std::size_t companion_dimension(const GarchParams& params) {
  return std::max<std::size_t>(params.p(), 1) + std::max<std::size_t>(params.q(), 1) - 1;
}

namespace {

struct Companion {
  std::size_t ps;  // number of sigma^2 slots, max(p,1)
  std::size_t qs;  // max(q,1)
  std::vector<double> beta;   // padded to ps
  std::vector<double> alpha;  // padded to qs

  explicit Companion(const GarchParams& params)
      : ps(std::max<std::size_t>(params.p(), 1)),
        qs(std::max<std::size_t>(params.q(), 1)),
        beta(params.beta),
        alpha(params.alpha) {
    beta.resize(ps, 0.0);
    alpha.resize(qs, 0.0);
  }

  std::size_t dim() const { return ps + qs - 1; }

  // out = A(eps) * in
  void apply(double eps2, std::span<const double> in, std::span<double> out) const {
    double first = (beta[0] + alpha[0] * eps2) * in[0];
    for (std::size_t i = 1; i < ps; ++i) first += beta[i] * in[i];
    for (std::size_t j = 1; j < qs; ++j) first += alpha[j] * in[ps + j - 1];
    for (std::size_t i = ps - 1; i >= 1; --i) out[i] = in[i - 1];
    if (qs >= 2) {
      for (std::size_t j = qs - 2; j >= 1; --j) out[ps + j] = in[ps + j - 1];
      out[ps] = eps2 * in[0];
    }
    out[0] = first;
  }
};

}  // namespace

Eigen::MatrixXd companion_matrix(const GarchParams& params, double eps) {
  params.validate();
  const Companion c(params);
  const std::size_t d = c.dim();
  const double eps2 = eps * eps;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  a(0, 0) = c.beta[0] + c.alpha[0] * eps2;
  for (std::size_t i = 1; i < c.ps; ++i) a(0, i) = c.beta[i];
  for (std::size_t j = 1; j < c.qs; ++j) a(0, c.ps + j - 1) = c.alpha[j];
  for (std::size_t i = 1; i < c.ps; ++i) a(i, i - 1) = 1.0;
  if (c.qs >= 2) {
    a(c.ps, 0) = eps2;
    for (std::size_t j = 1; j + 1 < c.qs; ++j) a(c.ps + j, c.ps + j - 1) = 1.0;
  }
  return a;
}

Eigen::VectorXd companion_offset(const GarchParams& params) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(companion_dimension(params));
  b(0) = params.delta;
  return b;
}

LyapunovEstimate lyapunov_exponent(const GarchParams& params, const InnovationModel& model,
                                   std::size_t iterations, std::uint64_t seed) {
  params.validate();
  if (iterations < 1000) throw InvalidArgument("lyapunov_exponent needs at least 1000 iterations");
  if (all_coefficients_zero(params)) {
    return {-std::numeric_limits<double>::infinity(), 0.0, iterations};
  }

  constexpr std::size_t kBatches = 50;
  const std::size_t batch_len = iterations / kBatches;
  const Companion c(params);
  const std::size_t d = c.dim();

  Engine eng(seed);
  std::vector<double> v(d, 1.0 / static_cast<double>(d));
  std::vector<double> w(d);
  std::vector<double> batch_sums(kBatches, 0.0);
  double total = 0.0;

  for (std::size_t t = 0; t < iterations; ++t) {
    const double eps = model.draw(eng);
    double growth;
    if (d == 1) {
      // GARCH(1,1) and ARCH(1): scalar recursion
      growth = c.beta[0] + c.alpha[0] * eps * eps;
    } else {
      c.apply(eps * eps, v, w);
      growth = std::accumulate(w.begin(), w.end(), 0.0);  // L1 norm, entries are >= 0
      for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / growth;
    }
    const double lg = std::log(growth);
    total += lg;
    const std::size_t b = t / batch_len;
    if (b < kBatches) batch_sums[b] += lg;
  }

  LyapunovEstimate est;
  est.iterations = iterations;
  est.gamma_hat = total / static_cast<double>(iterations);
  if (!std::isfinite(est.gamma_hat)) {
    est.std_error = 0.0;
    return est;
  }
  double mean = 0.0;
  for (double s : batch_sums) mean += s / static_cast<double>(batch_len);
  mean /= kBatches;
  double ss = 0.0;
  for (double s : batch_sums) {
    const double dev = s / static_cast<double>(batch_len) - mean;
    ss += dev * dev;
  }
  est.std_error = std::sqrt(ss / (kBatches - 1) / kBatches);
  return est;
}

std::string to_string(Stationarity verdict) {
  switch (verdict) {
    case Stationarity::stationary:
      return "stationary";
    case Stationarity::non_stationary:
      return "non_stationary";
    case Stationarity::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

StationarityVerdict is_stationary(const GarchParams& params, const InnovationModel& model,
                                  std::size_t iterations, std::uint64_t seed) {
  StationarityVerdict out;
  out.estimate = lyapunov_exponent(params, model, iterations, seed);
  const double g = out.estimate.gamma_hat;
  const double se = out.estimate.std_error;
  if (g + 3.0 * se < 0.0) {
    out.verdict = Stationarity::stationary;
  } else if (g - 3.0 * se > 0.0) {
    out.verdict = Stationarity::non_stationary;
  } else {
    out.verdict = Stationarity::inconclusive;
  }
  out.margin = se > 0.0 ? std::abs(g) / se : std::numeric_limits<double>::infinity();
  return out;
}

ArchInfinity arch_infinity_coeffs(const GarchParams& params, std::size_t m) {
  params.validate();
  const double bsum = params.beta_sum();
  if (!(bsum < 1.0)) throw InvalidArgument("ARCH(inf) expansion needs sum of beta < 1");
  ArchInfinity out;
  out.a = params.delta / (1.0 - bsum);
  out.b.resize(m);
  for (std::size_t i = 1; i <= m; ++i) {
    double bi = i <= params.q() ? params.alpha[i - 1] : 0.0;
    const std::size_t kmax = std::min(i - 1, params.p());
    for (std::size_t k = 1; k <= kmax; ++k) bi += params.beta[k - 1] * out.b[i - k - 1];
    out.b[i - 1] = bi;
  }
  return out;
}

Autocovariance autocovariance_x2(const PathSample& path, std::size_t max_lag) {
  const std::size_t n = path.size();
  if (max_lag * 10 >= n) throw InvalidArgument("max_lag must be below n/10");
  std::vector<double> y(n);
  std::transform(path.x.begin(), path.x.end(), y.begin(), [](double v) { return v * v; });
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  for (auto& v : y) v -= mean;

  Autocovariance out;
  out.acov.resize(max_lag + 1);
  out.partial_sums.resize(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += y[t] * y[t + k];
    out.acov[k] = s / static_cast<double>(n);
    out.partial_sums[k] = k == 0 ? out.acov[0] : out.partial_sums[k - 1] + 2.0 * out.acov[k];
  }
  return out;
}

double inverse_sigma_variance(std::span<const PathSample> blocks) {
  if (blocks.size() < 100) throw InvalidArgument("inverse_sigma_variance needs >= 100 blocks");
  const std::size_t nb = blocks.front().size();
  if (nb == 0) throw InvalidArgument("blocks must be non-empty");
  // Welford: identical block sums give exactly zero variance.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (const auto& block : blocks) {
    if (block.size() != nb) throw InvalidArgument("blocks must have equal length");
    double s = 0.0;
    for (double s2 : block.sigma2) s += 1.0 / std::sqrt(s2);
    ++count;
    const double delta = s - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (s - mean);
  }
  return m2 / static_cast<double>(count - 1) / static_cast<double>(nb);
}

}  // namespace bkgarch

namespace bkgarch {

namespace {

std::string join_coeffs(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  return out.str();
}

std::vector<double> parse_coeffs(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw IoError("malformed coefficient list '" + s + "'");
  return out;
}

}  // namespace

void write_path_csv(const PathSample& path, const std::filesystem::path& file) {
  std::ostringstream out;
  out.precision(17);
  out << "# delta=" << path.params.delta << "; beta=" << join_coeffs(path.params.beta)
      << "; alpha=" << join_coeffs(path.params.alpha)
      << "; family=" << to_string(path.innovation.family()) << "; df=" << path.innovation.df()
      << "; seed=" << path.seed << "; burn_in=" << path.burn_in << "\n";
  out << "index,x,sigma2\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << i + 1 << ',' << path.x[i] << ',' << path.sigma2[i] << '\n';
  }
  const auto tmp = std::filesystem::path(file.string() + ".partial");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << out.str();
    if (!f) {
      std::filesystem::remove(tmp);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, file);
}

PathSample read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open path file " + file.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw IoError(file.string() + " lacks the provenance line");
  }
  std::map<std::string, std::string> meta;
  std::istringstream fields(line.substr(2));
  std::string field;
  while (std::getline(fields, field, ';')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw IoError("malformed provenance field '" + field + "'");
    auto key = field.substr(0, eq);
    key.erase(0, key.find_first_not_of(' '));
    meta[key] = field.substr(eq + 1);
  }
  PathSample path;
  try {
    path.params.delta = std::stod(meta.at("delta"));
    path.params.beta = parse_coeffs(meta.at("beta"));
    path.params.alpha = parse_coeffs(meta.at("alpha"));
    path.innovation = InnovationModel::from_spec(meta.at("family"), std::stod(meta.at("df")));
    path.seed = std::stoull(meta.at("seed"));
    path.burn_in = std::stoull(meta.at("burn_in"));
  } catch (const std::out_of_range&) {
    throw IoError(file.string() + " provenance line is incomplete");
  } catch (const std::invalid_argument&) {
    throw IoError(file.string() + " provenance line is malformed");
  }
  if (!std::getline(in, line) || line != "index,x,sigma2") {
    throw IoError(file.string() + " has an unexpected header");
  }
  std::size_t expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t index;
    double x, s2;
    char c1, c2;
    if (!(row >> index >> c1 >> x >> c2 >> s2) || c1 != ',' || c2 != ',' || index != expected) {
      throw IoError("malformed row " + std::to_string(expected) + " in " + file.string());
    }
    path.x.push_back(x);
    path.sigma2.push_back(s2);
    ++expected;
  }
  if (path.x.empty()) throw IoError(file.string() + " has no rows");
  return path;
}

}  // namespace bkgarch
