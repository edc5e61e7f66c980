#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bkgarch/rng.hpp"

namespace bkgarch {

enum class Family { gaussian, student_t };

std::string to_string(Family family);
Family parse_family(const std::string& name);

/// Law H of the innovations eps. Always mean zero and unit variance with a
/// finite fourth moment; families that cannot meet this are rejected when
/// the model is constructed.
class InnovationModel {
 public:
  static InnovationModel gaussian();
  /// Student-t with `df` > 4 degrees of freedom, rescaled by sqrt((df-2)/df).
  static InnovationModel student_t(double df);
  /// Builds from a config description (`family` is "gaussian" or "student_t").
  static InnovationModel from_spec(const std::string& family, double df);

  Family family() const noexcept { return family_; }
  /// Degrees of freedom; 0 for the Gaussian family.
  double df() const noexcept { return df_; }

  double cdf(double x) const;
  double pdf(double x) const;
  double pdf_deriv(double x) const;
  double fourth_moment() const;
  /// Quantile of H (used for range selection, not for sampling Student-t).
  double quantile(double p) const;

  /// One draw from the engine. Gaussian draws consume exactly one uniform
  /// (inversion); Student-t uses Bailey's polar method.
  double draw(Engine& eng) const;

  /// n i.i.d. draws from a fresh engine seeded with `seed`.
  std::vector<double> sample(std::uint64_t seed, std::size_t n) const;

  bool operator==(const InnovationModel&) const = default;

 private:
  InnovationModel(Family family, double df);

  Family family_;
  double df_;
  double scale_;  // sd of the unscaled law is 1/scale_
  double t_norm_ = 0.0;  // density constant of the unscaled t law
};

}  // namespace bkgarch
