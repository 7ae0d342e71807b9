#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroline/errors.hpp"

namespace neuroline::stats {

enum class Family {
  Gaussian,
  Exponential,
  Logistic,
  Cauchy,
  Gamma,
  Beta,
  Weibull,
  Pareto,
  ChiSquared,
  StudentT,
  Rayleigh,
};

inline constexpr Family kAllFamilies[] = {
    Family::Gaussian, Family::Exponential, Family::Logistic,  Family::Cauchy,
    Family::Gamma,    Family::Beta,        Family::Weibull,   Family::Pareto,
    Family::ChiSquared, Family::StudentT,  Family::Rayleigh,
};

const char* family_name(Family f);
std::optional<Family> family_from_name(const std::string& name);

/// A parametric 1-D distribution. Parameter layout per family:
///   Gaussian    {mu, sigma}        Exponential {rate}
///   Logistic    {mu, s}            Cauchy      {x0, gamma}
///   Gamma       {shape, scale}     Beta        {alpha, beta}
///   Weibull     {shape, scale}     Pareto      {x_m, alpha}
///   ChiSquared  {k}                StudentT    {mu, s, nu}
///   Rayleigh    {sigma}
struct DistFamily {
  Family family = Family::Gaussian;
  std::vector<double> params;

  DistFamily() : params{0.0, 1.0} {}
  DistFamily(Family f, std::vector<double> p);

  /// Throws Error(Config) when params violate the family's constraints.
  void validate() const;

  double log_pdf(double x) const;  // -infinity outside the support
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;  // p in (0, 1)
  bool in_support(double x) const;
  /// Support interval; open/closed endpoints are family-specific and only the
  /// numeric bounds matter to callers.
  std::pair<double, double> support() const;

  bool operator==(const DistFamily& other) const = default;
};

/// Fits `family` to the sample. Method of moments where closed forms exist;
/// 1-D/2-D numeric likelihood maximization for Weibull and Student-t; Cauchy
/// uses quartiles. Returns nullopt when the family's support excludes any
/// data point. Requires n >= 8 and a non-constant sample.
std::optional<DistFamily> fit_family(std::span<const double> x, Family family);

enum class KlMode { ClosedForm, NumericQuadrature };

/// KL(p || q) in nats, >= 0. ClosedForm is available for Gaussian pairs only.
/// Returns +infinity when q's support excludes a non-negligible part of p's
/// mass (the infinite-divergence signal; never a crash).
double kl_divergence(const DistFamily& p, const DistFamily& q, KlMode mode);

/// Closed form for Gaussian pairs, quadrature otherwise.
double kl_divergence_auto(const DistFamily& p, const DistFamily& q);

}  // namespace neuroline::stats
