#include "bkgarch/marginal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "bkgarch/error.hpp"

namespace bkgarch {

namespace {

constexpr double kTableStep = 0.005;      // spacing of the asinh parameter
constexpr double kTableShape = 0.5;       // x = shape * scale * sinh(t)
constexpr double kTailProbability = 1e-15;
constexpr double kQuantileTolerance = 1e-10;

struct MixtureValues {
  double cdf = 0.0;
  double pdf = 0.0;
  double pdf_deriv = 0.0;
};

// Neumaier compensated sum; naive accumulation over 10^5 terms loses ~1e-10.
struct Sum {
  double s = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// Quintic Hermite table of a standardized innovation cdf on z = sinh(u), built
// from (H, h, h') at the nodes. Used for families whose cdf is costly
// (incomplete beta); interpolation error is far below 1e-14.
class StdCdfTable {
 public:
  explicit StdCdfTable(const InnovationModel& h) {
    const auto half = static_cast<std::size_t>(std::ceil(kUMax / kDu));
    const std::size_t n = 2 * half + 1;
    u0_ = -static_cast<double>(half) * kDu;
    z_.resize(n);
    F_.resize(n);
    f_.resize(n);
    fd_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double z = k == half ? 0.0 : std::sinh(u0_ + static_cast<double>(k) * kDu);
      z_[k] = z;
      F_[k] = h.cdf(z);
      f_[k] = h.pdf(z);
      fd_[k] = h.pdf_deriv(z);
    }
  }

  bool covers(double z) const { return z > z_.front() && z < z_.back(); }

  double cdf(double z) const {
    auto k = static_cast<std::size_t>((std::asinh(z) - u0_) / kDu);
    k = std::min(k, z_.size() - 2);
    if (z < z_[k]) --k;
    else if (z >= z_[k + 1]) ++k;
    const double w = z_[k + 1] - z_[k];
    const double t = (z - z_[k]) / w;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double t4 = t3 * t;
    const double t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double h3 = 0.5 * (t3 - 2 * t4 + t5);
    const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
    return h0 * F_[k] + w * h1 * f_[k] + w * w * h2 * fd_[k] + h5 * F_[k + 1] +
           w * h4 * f_[k + 1] + w * w * h3 * fd_[k + 1];
  }

 private:
  static constexpr double kDu = 0.002;
  static constexpr double kUMax = 9.9;  // asinh(1e4)
  double u0_ = 0.0;
  std::vector<double> z_, F_, f_, fd_;
};

const StdCdfTable& std_cdf_table(const InnovationModel& h) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<StdCdfTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[h.df()];
  if (!slot) slot = std::make_unique<StdCdfTable>(h);
  return *slot;
}

MixtureValues mixture(const InnovationModel& h, std::span<const double> sigma, double x,
                      bool need_cdf, bool need_pdf, bool need_deriv) {
  Sum cdf, pdf, deriv;
  if (h.family() == Family::gaussian) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (double s : sigma) {
      const double z = x / s;
      if (need_cdf) cdf.add(0.5 * std::erfc(-z / std::numbers::sqrt2));
      if (need_pdf || need_deriv) {
        const double phi = inv_sqrt_2pi * std::exp(-0.5 * z * z);
        pdf.add(phi / s);
        deriv.add(-z * phi / (s * s));
      }
    }
  } else {
    const StdCdfTable* table = need_cdf ? &std_cdf_table(h) : nullptr;
    for (double s : sigma) {
      const double z = x / s;
      if (need_cdf) cdf.add(table->covers(z) ? table->cdf(z) : h.cdf(z));
      if (need_pdf) pdf.add(h.pdf(z) / s);
      if (need_deriv) deriv.add(h.pdf_deriv(z) / (s * s));
    }
  }
  const double m = static_cast<double>(sigma.size());
  return {cdf.value() / m, pdf.value() / m, deriv.value() / m};
}

// Cubic Hermite basis on t in [0,1].
struct Hermite {
  double h00, h10, h01, h11;
  explicit Hermite(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    h00 = 2 * t3 - 3 * t2 + 1;
    h10 = t3 - 2 * t2 + t;
    h01 = -2 * t3 + 3 * t2;
    h11 = t3 - t2;
  }
};

// Fritsch-Carlson limited end slopes for a monotone segment.
std::array<double, 2> monotone_slopes(double y0, double y1, double m0, double m1, double h) {
  const double secant = (y1 - y0) / h;
  if (secant <= 0.0) return {0.0, 0.0};
  const double a = m0 / secant;
  const double b = m1 / secant;
  const double r2 = a * a + b * b;
  if (r2 > 9.0) {
    const double tau = 3.0 / std::sqrt(r2);
    return {tau * a * secant, tau * b * secant};
  }
  return {m0, m1};
}

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated marginal model file");
  return v;
}

void write_vec(std::ofstream& out, const std::vector<double>& v) {
  write_pod<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::ifstream& in, std::uint64_t limit) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > limit) throw IoError("corrupt marginal model file (length field)");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("truncated marginal model file");
  return v;
}

constexpr std::array<char, 8> kMagic = {'B', 'K', 'G', 'M', 'A', 'R', 'G', '1'};

}  // namespace

MarginalModel::MarginalModel(GarchParams params, InnovationModel innovation,
                             std::vector<double> sigma, std::uint64_t seed, std::size_t gap)
    : params_(std::move(params)),
      innovation_(innovation),
      sigma_(std::move(sigma)),
      seed_(seed),
      gap_(gap) {}

MarginalModel MarginalModel::build(const GarchParams& params, const InnovationModel& innovation,
                                   std::size_t draws, std::size_t gap, std::uint64_t seed,
                                   std::size_t burn_in) {
  if (draws < 10'000) throw InvalidArgument("marginal model needs at least 10^4 sigma draws");
  if (gap == 0) throw InvalidArgument("thinning gap must be positive");
  const PathSample path = simulate(params, innovation, draws * gap, burn_in, seed);
  std::vector<double> sigma(draws);
  for (std::size_t j = 0; j < draws; ++j) sigma[j] = std::sqrt(path.sigma2[(j + 1) * gap - 1]);
  return from_sigma_draws(params, innovation, std::move(sigma), seed, gap);
}

MarginalModel MarginalModel::from_sigma_draws(const GarchParams& params,
                                              const InnovationModel& innovation,
                                              std::vector<double> sigma_draws, std::uint64_t seed,
                                              std::size_t gap) {
  params.validate();
  if (sigma_draws.empty()) throw InvalidArgument("marginal model needs sigma draws");
  if (std::any_of(sigma_draws.begin(), sigma_draws.end(),
                  [](double s) { return !(s > 0.0) || !std::isfinite(s); })) {
    throw InvalidArgument("sigma draws must be positive and finite");
  }
  MarginalModel m(params, innovation, std::move(sigma_draws), seed, gap);
  m.build_table();
  return m;
}

void MarginalModel::build_table() {
  double mean_s2 = 0.0;
  for (double s : sigma_) mean_s2 += s * s;
  const double scale = std::sqrt(mean_s2 / static_cast<double>(sigma_.size()));
  const double sigma_max = *std::max_element(sigma_.begin(), sigma_.end());
  const double x_max = 1.05 * sigma_max * innovation_.quantile(1.0 - kTailProbability);
  const double t_max = std::asinh(x_max / (kTableShape * scale));
  const auto half = static_cast<std::size_t>(std::ceil(t_max / kTableStep));

  const std::size_t nodes = 2 * half + 1;
  node_x_.resize(nodes);
  node_F_.resize(nodes);
  node_f_.resize(nodes);
  node_fd_.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(half)) * kTableStep;
    node_x_[k] = kTableShape * scale * std::sinh(t);
  }
  node_x_[half] = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const auto v = mixture(innovation_, sigma_, node_x_[k], true, true, true);
    node_F_[k] = v.cdf;
    node_f_[k] = v.pdf;
    node_fd_[k] = v.pdf_deriv;
  }
  // Enforce monotone node values against summation noise in the far tails.
  for (std::size_t k = 1; k < nodes; ++k) node_F_[k] = std::max(node_F_[k], node_F_[k - 1]);
}

double MarginalModel::cdf(double x) const {
  return mixture(innovation_, sigma_, x, true, false, false).cdf;
}

double MarginalModel::pdf(double x) const {
  return mixture(innovation_, sigma_, x, false, true, false).pdf;
}

double MarginalModel::pdf_deriv(double x) const {
  return mixture(innovation_, sigma_, x, false, false, true).pdf_deriv;
}

std::size_t MarginalModel::segment(double x) const {
  auto it = std::upper_bound(node_x_.begin(), node_x_.end(), x);
  return static_cast<std::size_t>(it - node_x_.begin()) - 1;
}

double MarginalModel::cdf_fast(double x) const {
  if (!(x >= node_x_.front() && x < node_x_.back())) return cdf(x);
  const std::size_t i = segment(x);
  const double h = node_x_[i + 1] - node_x_[i];
  const auto [m0, m1] = monotone_slopes(node_F_[i], node_F_[i + 1], node_f_[i], node_f_[i + 1], h);
  const Hermite b((x - node_x_[i]) / h);
  return b.h00 * node_F_[i] + b.h10 * h * m0 + b.h01 * node_F_[i + 1] + b.h11 * h * m1;
}

double MarginalModel::pdf_fast(double x) const {
  if (!(x >= node_x_.front() && x < node_x_.back())) return pdf(x);
  const std::size_t i = segment(x);
  const double h = node_x_[i + 1] - node_x_[i];
  const Hermite b((x - node_x_[i]) / h);
  const double v = b.h00 * node_f_[i] + b.h10 * h * node_fd_[i] + b.h01 * node_f_[i + 1] +
                   b.h11 * h * node_fd_[i + 1];
  return std::max(v, 0.0);
}

double MarginalModel::quantile_fast(double y) const {
  if (!(y > 0.0 && y < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  if (!(y > node_F_.front() && y < node_F_.back())) return quantile(y);
  // first node with F > y; the segment [i, i+1] brackets y
  auto it = std::upper_bound(node_F_.begin(), node_F_.end(), y);
  const std::size_t i = static_cast<std::size_t>(it - node_F_.begin()) - 1;
  const double h = node_x_[i + 1] - node_x_[i];
  const double f0 = node_F_[i];
  const double f1 = node_F_[i + 1];
  const auto [m0, m1] = monotone_slopes(f0, f1, node_f_[i], node_f_[i + 1], h);
  auto value = [&](double t) {
    const Hermite b(t);
    return b.h00 * f0 + b.h10 * h * m0 + b.h01 * f1 + b.h11 * h * m1;
  };
  auto slope = [&](double t) {
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h * m0 + (-6 * t2 + 6 * t) * f1 +
           (3 * t2 - 2 * t) * h * m1;
  };
  double lo = 0.0;
  double hi = 1.0;
  double t = (y - f0) / (f1 - f0);
  for (int iter = 0; iter < 100 && hi - lo > 1e-16; ++iter) {
    const double v = value(t) - y;
    if (v == 0.0) break;
    if (v < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double d = slope(t);
    double next = d > 0.0 ? t - v / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-16) {
      t = next;
      break;
    }
    t = next;
  }
  return node_x_[i] + t * h;
}

double MarginalModel::quantile(double y) const {
  if (!(y > 0.0 && y < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  // Initial guess from the table (when inside it) or from the largest component.
  double x0;
  if (y > node_F_.front() && y < node_F_.back()) {
    x0 = quantile_fast(y);
  } else {
    x0 = *std::max_element(sigma_.begin(), sigma_.end()) * innovation_.quantile(y);
  }
  double f0 = cdf(x0);
  if (std::abs(f0 - y) <= kQuantileTolerance) return x0;

  // Bracket.
  double lo = x0;
  double hi = x0;
  double step = std::max(1e-8, 1e-6 * std::abs(x0));
  if (f0 < y) {
    double fhi = f0;
    while (fhi < y) {
      lo = hi;
      hi += step;
      step *= 2.0;
      if (!(std::abs(hi) < 1e300)) throw NumericError("quantile bracketing failed");
      fhi = cdf(hi);
    }
  } else {
    double flo = f0;
    while (flo > y) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      if (!(std::abs(lo) < 1e300)) throw NumericError("quantile bracketing failed");
      flo = cdf(lo);
    }
  }
  // Safeguarded Newton / bisection on the direct mixture.
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto v = mixture(innovation_, sigma_, x, true, true, false);
    const double r = v.cdf - y;
    if (std::abs(r) <= kQuantileTolerance) return x;
    if (r < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = v.pdf > 0.0 ? x - r / v.pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) return x;
    x = next;
  }
  return x;
}

void MarginalModel::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(innovation_.family()));
  write_pod<double>(out, innovation_.df());
  write_pod<double>(out, params_.delta);
  write_vec(out, params_.beta);
  write_vec(out, params_.alpha);
  write_pod<std::uint64_t>(out, seed_);
  write_pod<std::uint64_t>(out, gap_);
  write_vec(out, sigma_);
  write_vec(out, node_x_);
  write_vec(out, node_F_);
  write_vec(out, node_f_);
  write_vec(out, node_fd_);
  if (!out) throw IoError("failed writing " + file.string());
}

MarginalModel MarginalModel::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open marginal model " + file.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError(file.string() + " is not a marginal model file");
  constexpr std::uint64_t limit = 1ULL << 32;
  const auto family = read_pod<std::uint32_t>(in);
  const double df = read_pod<double>(in);
  if (family > static_cast<std::uint32_t>(Family::student_t)) {
    throw IoError("corrupt marginal model file (family)");
  }
  const InnovationModel innovation = static_cast<Family>(family) == Family::gaussian
                                         ? InnovationModel::gaussian()
                                         : InnovationModel::student_t(df);
  GarchParams params;
  params.delta = read_pod<double>(in);
  params.beta = read_vec(in, 1024);
  params.alpha = read_vec(in, 1024);
  const auto seed = read_pod<std::uint64_t>(in);
  const auto gap = read_pod<std::uint64_t>(in);
  auto sigma = read_vec(in, limit);
  MarginalModel m(params, innovation, std::move(sigma), seed, gap);
  m.node_x_ = read_vec(in, limit);
  m.node_F_ = read_vec(in, limit);
  m.node_f_ = read_vec(in, limit);
  m.node_fd_ = read_vec(in, limit);
  const std::size_t nodes = m.node_x_.size();
  if (nodes < 2 || m.node_F_.size() != nodes || m.node_f_.size() != nodes ||
      m.node_fd_.size() != nodes || m.sigma_.empty()) {
    throw IoError("corrupt marginal model file (table)");
  }
  return m;
}

void MarginalModel::dump_grid(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.precision(17);
  out << "x,F,f\n";
  for (std::size_t k = 0; k < node_x_.size(); ++k) {
    out << node_x_[k] << ',' << node_F_[k] << ',' << node_f_[k] << '\n';
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<double> pit(const PathSample& path, const MarginalModel& marginal) {
  if (!(path.params == marginal.params()) || !(path.innovation == marginal.innovation())) {
    throw InvalidArgument("path and marginal model come from different parameters");
  }
  if (path.seed == marginal.seed()) {
    throw InvalidArgument("path reuses the seed of the marginal model; use a fresh path");
  }
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  std::vector<double> u(path.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = std::clamp(marginal.cdf_fast(path.x[i]), lo, hi);
  }
  return u;
}

}  // namespace bkgarch
