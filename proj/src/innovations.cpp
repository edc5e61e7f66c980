#include "bkgarch/innovations.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>

#include "bkgarch/error.hpp"

namespace bkgarch {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::gaussian:
      return "gaussian";
    case Family::student_t:
      return "student_t";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "student_t") return Family::student_t;
  throw InvalidArgument("unknown innovation family '" + name + "'");
}

InnovationModel::InnovationModel(Family family, double df)
    : family_(family), df_(df), scale_(1.0) {
  if (family_ == Family::student_t) {
    if (!(df_ > 4.0) || !std::isfinite(df_)) {
      throw InvalidArgument("student_t innovations need df > 4 for a finite fourth moment");
    }
    scale_ = std::sqrt((df_ - 2.0) / df_);
    t_norm_ = std::exp(std::lgamma(0.5 * (df_ + 1.0)) - std::lgamma(0.5 * df_)) /
              std::sqrt(df_ * std::numbers::pi);
  }
}

InnovationModel InnovationModel::gaussian() { return InnovationModel(Family::gaussian, 0.0); }

InnovationModel InnovationModel::student_t(double df) {
  return InnovationModel(Family::student_t, df);
}

InnovationModel InnovationModel::from_spec(const std::string& family, double df) {
  switch (parse_family(family)) {
    case Family::gaussian:
      return gaussian();
    case Family::student_t:
      return student_t(df);
  }
  throw InvalidArgument("unknown innovation family");
}

double InnovationModel::cdf(double x) const {
  if (family_ == Family::gaussian) return std_normal_cdf(x);
  boost::math::students_t_distribution<double> t(df_);
  return boost::math::cdf(t, x / scale_);
}

double InnovationModel::pdf(double x) const {
  if (family_ == Family::gaussian) return std_normal_pdf(x);
  const double t = x / scale_;
  return t_norm_ * std::pow(1.0 + t * t / df_, -0.5 * (df_ + 1.0)) / scale_;
}

double InnovationModel::pdf_deriv(double x) const {
  if (family_ == Family::gaussian) return -x * std_normal_pdf(x);
  // g'(t) = -g(t) (df+1) t / (df + t^2) for the unscaled density g
  const double t = x / scale_;
  const double g = t_norm_ * std::pow(1.0 + t * t / df_, -0.5 * (df_ + 1.0));
  return -g * (df_ + 1.0) * t / (df_ + t * t) / (scale_ * scale_);
}

double InnovationModel::fourth_moment() const {
  if (family_ == Family::gaussian) return 3.0;
  return 3.0 * (df_ - 2.0) / (df_ - 4.0);
}

double InnovationModel::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  if (family_ == Family::gaussian) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
  }
  boost::math::students_t_distribution<double> t(df_);
  return scale_ * boost::math::quantile(t, p);
}

double InnovationModel::draw(Engine& eng) const {
  if (family_ == Family::gaussian) {
    static const boost::math::normal_distribution<double> normal;
    return boost::math::quantile(normal, uniform_open(eng));
  }
  // Bailey (1994) polar method for Student-t.
  for (;;) {
    const double u = 2.0 * uniform_open(eng) - 1.0;
    const double v = 2.0 * uniform_open(eng) - 1.0;
    const double w = u * u + v * v;
    if (w >= 1.0 || w == 0.0) continue;
    const double t = u * std::sqrt(df_ * (std::pow(w, -2.0 / df_) - 1.0) / w);
    return scale_ * t;
  }
}

std::vector<double> InnovationModel::sample(std::uint64_t seed, std::size_t n) const {
  if (n == 0) throw InvalidArgument("sample size must be at least 1");
  Engine eng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = draw(eng);
  return out;
}

}  // namespace bkgarch
