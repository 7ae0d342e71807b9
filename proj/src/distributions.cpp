#include "neuroline/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "neuroline/mathutil.hpp"

namespace neuroline::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::Config, what);
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Exponential: return "exponential";
    case Family::Logistic: return "logistic";
    case Family::Cauchy: return "cauchy";
    case Family::Gamma: return "gamma";
    case Family::Beta: return "beta";
    case Family::Weibull: return "weibull";
    case Family::Pareto: return "pareto";
    case Family::ChiSquared: return "chi_squared";
    case Family::StudentT: return "student_t";
    case Family::Rayleigh: return "rayleigh";
  }
  return "unknown";
}

std::optional<Family> family_from_name(const std::string& name) {
  for (Family f : kAllFamilies) {
    if (name == family_name(f)) return f;
  }
  return std::nullopt;
}

DistFamily::DistFamily(Family f, std::vector<double> p)
    : family(f), params(std::move(p)) {
  validate();
}

void DistFamily::validate() const {
  for (double v : params) {
    require(std::isfinite(v), "DistFamily: non-finite parameter");
  }
  switch (family) {
    case Family::Gaussian:
      require(params.size() == 2 && params[1] > 0.0, "gaussian: need {mu, sigma>0}");
      break;
    case Family::Exponential:
      require(params.size() == 1 && params[0] > 0.0, "exponential: need {rate>0}");
      break;
    case Family::Logistic:
      require(params.size() == 2 && params[1] > 0.0, "logistic: need {mu, s>0}");
      break;
    case Family::Cauchy:
      require(params.size() == 2 && params[1] > 0.0, "cauchy: need {x0, gamma>0}");
      break;
    case Family::Gamma:
      require(params.size() == 2 && params[0] > 0.0 && params[1] > 0.0,
              "gamma: need {shape>0, scale>0}");
      break;
    case Family::Beta:
      require(params.size() == 2 && params[0] > 0.0 && params[1] > 0.0,
              "beta: need {alpha>0, beta>0}");
      break;
    case Family::Weibull:
      require(params.size() == 2 && params[0] > 0.0 && params[1] > 0.0,
              "weibull: need {shape>0, scale>0}");
      break;
    case Family::Pareto:
      require(params.size() == 2 && params[0] > 0.0 && params[1] > 0.0,
              "pareto: need {x_m>0, alpha>0}");
      break;
    case Family::ChiSquared:
      require(params.size() == 1 && params[0] > 0.0, "chi_squared: need {k>0}");
      break;
    case Family::StudentT:
      require(params.size() == 3 && params[1] > 0.0 && params[2] > 0.0,
              "student_t: need {mu, s>0, nu>0}");
      break;
    case Family::Rayleigh:
      require(params.size() == 1 && params[0] > 0.0, "rayleigh: need {sigma>0}");
      break;
  }
}

std::pair<double, double> DistFamily::support() const {
  switch (family) {
    case Family::Gaussian:
    case Family::Logistic:
    case Family::Cauchy:
    case Family::StudentT:
      return {-kInf, kInf};
    case Family::Exponential:
    case Family::Rayleigh:
      return {0.0, kInf};
    case Family::Gamma:
    case Family::Weibull:
    case Family::ChiSquared:
      return {0.0, kInf};
    case Family::Beta:
      return {0.0, 1.0};
    case Family::Pareto:
      return {params[0], kInf};
  }
  return {-kInf, kInf};
}

bool DistFamily::in_support(double x) const {
  switch (family) {
    case Family::Gaussian:
    case Family::Logistic:
    case Family::Cauchy:
    case Family::StudentT:
      return std::isfinite(x);
    case Family::Exponential:
      return x >= 0.0;
    case Family::Gamma:
    case Family::Weibull:
    case Family::ChiSquared:
    case Family::Rayleigh:
      return x > 0.0;
    case Family::Beta:
      return x > 0.0 && x < 1.0;
    case Family::Pareto:
      return x >= params[0];
  }
  return false;
}

double DistFamily::log_pdf(double x) const {
  if (!in_support(x)) return -kInf;
  switch (family) {
    case Family::Gaussian: {
      const double z = (x - params[0]) / params[1];
      return -0.5 * z * z - std::log(params[1]) - 0.5 * std::log(2.0 * math::kPi);
    }
    case Family::Exponential:
      return std::log(params[0]) - params[0] * x;
    case Family::Logistic: {
      const double z = std::abs((x - params[0]) / params[1]);
      return -z - 2.0 * std::log1p(std::exp(-z)) - std::log(params[1]);
    }
    case Family::Cauchy: {
      const double z = (x - params[0]) / params[1];
      return -std::log(math::kPi * params[1] * (1.0 + z * z));
    }
    case Family::Gamma: {
      const double k = params[0];
      const double theta = params[1];
      return (k - 1.0) * std::log(x) - x / theta - k * std::log(theta) -
             std::lgamma(k);
    }
    case Family::Beta: {
      const double a = params[0];
      const double b = params[1];
      return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta(a, b);
    }
    case Family::Weibull: {
      const double k = params[0];
      const double lam = params[1];
      const double z = x / lam;
      return std::log(k / lam) + (k - 1.0) * std::log(z) - std::pow(z, k);
    }
    case Family::Pareto: {
      const double xm = params[0];
      const double a = params[1];
      return std::log(a) + a * std::log(xm) - (a + 1.0) * std::log(x);
    }
    case Family::ChiSquared: {
      const double half_k = 0.5 * params[0];
      return (half_k - 1.0) * std::log(x) - 0.5 * x - half_k * std::log(2.0) -
             std::lgamma(half_k);
    }
    case Family::StudentT: {
      const double mu = params[0];
      const double s = params[1];
      const double nu = params[2];
      const double z = (x - mu) / s;
      return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
             0.5 * std::log(nu * math::kPi) - std::log(s) -
             0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    }
    case Family::Rayleigh: {
      const double s2 = params[0] * params[0];
      return std::log(x) - std::log(s2) - 0.5 * x * x / s2;
    }
  }
  return -kInf;
}

double DistFamily::pdf(double x) const { return std::exp(log_pdf(x)); }

double DistFamily::cdf(double x) const {
  const auto [lo, hi] = support();
  if (lo != -kInf && x <= lo) return 0.0;
  if (hi != kInf && x >= hi) return 1.0;
  switch (family) {
    case Family::Gaussian:
      return math::normal_cdf((x - params[0]) / params[1]);
    case Family::Exponential:
      return -std::expm1(-params[0] * x);
    case Family::Logistic:
      return 1.0 / (1.0 + std::exp(-(x - params[0]) / params[1]));
    case Family::Cauchy:
      return 0.5 + std::atan((x - params[0]) / params[1]) / math::kPi;
    case Family::Gamma:
      return boost::math::gamma_p(params[0], x / params[1]);
    case Family::Beta:
      return boost::math::ibeta(params[0], params[1], x);
    case Family::Weibull:
      return -std::expm1(-std::pow(x / params[1], params[0]));
    case Family::Pareto:
      return 1.0 - std::pow(params[0] / x, params[1]);
    case Family::ChiSquared:
      return boost::math::gamma_p(0.5 * params[0], 0.5 * x);
    case Family::StudentT: {
      const double t = (x - params[0]) / params[1];
      const double nu = params[2];
      const double ib = boost::math::ibeta(0.5 * nu, 0.5, nu / (nu + t * t));
      return t > 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
    }
    case Family::Rayleigh:
      return -std::expm1(-0.5 * x * x / (params[0] * params[0]));
  }
  return 0.0;
}

double DistFamily::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::Config, "quantile: p outside (0,1)");
  }
  switch (family) {
    case Family::Gaussian:
      return params[0] + params[1] * math::normal_quantile(p);
    case Family::Exponential:
      return -std::log1p(-p) / params[0];
    case Family::Logistic:
      return params[0] + params[1] * std::log(p / (1.0 - p));
    case Family::Cauchy:
      return params[0] + params[1] * std::tan(math::kPi * (p - 0.5));
    case Family::Weibull:
      return params[1] * std::pow(-std::log1p(-p), 1.0 / params[0]);
    case Family::Pareto:
      return params[0] * std::pow(1.0 - p, -1.0 / params[1]);
    case Family::Rayleigh:
      return params[0] * std::sqrt(-2.0 * std::log1p(-p));
    default:
      break;
  }
  // Remaining families: bisection on the CDF.
  double lo, hi;
  if (family == Family::Beta) {
    lo = 0.0;
    hi = 1.0;
  } else if (family == Family::StudentT) {
    double width = params[1];
    lo = params[0] - width;
    hi = params[0] + width;
    while (cdf(lo) > p) { width *= 2.0; lo = params[0] - width; }
    width = params[1];
    while (cdf(hi) < p) { width *= 2.0; hi = params[0] + width; }
  } else {  // Gamma, ChiSquared
    lo = 0.0;
    hi = family == Family::Gamma ? params[0] * params[1] + 1.0 : params[0] + 1.0;
    while (cdf(hi) < p) hi *= 2.0;
  }
  for (int i = 0; i < 120; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Fitting.

namespace {

struct SampleSummary {
  std::vector<double> sorted;
  double mean = 0.0;
  double var = 0.0;  // sample variance, n-1
  double min = 0.0;
  double max = 0.0;
};

SampleSummary summarize(std::span<const double> x) {
  SampleSummary s;
  s.sorted.assign(x.begin(), x.end());
  std::sort(s.sorted.begin(), s.sorted.end());
  s.mean = math::mean(x);
  s.var = math::sample_variance(x);
  s.min = s.sorted.front();
  s.max = s.sorted.back();
  return s;
}

bool all_in_open_positive(const SampleSummary& s) { return s.min > 0.0; }

// Weibull shape MLE: the profile score in k is monotone increasing, so a
// bracketed bisection is enough.
double weibull_shape_mle(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mean_log = 0.0;
  for (double v : x) mean_log += std::log(v);
  mean_log /= n;

  auto score = [&](double k) {
    double num = 0.0;
    double den = 0.0;
    for (double v : x) {
      const double p = std::pow(v, k);
      num += p * std::log(v);
      den += p;
    }
    return num / den - 1.0 / k - mean_log;
  };

  double lo = 0.02, hi = 1.0;
  while (score(hi) < 0.0 && hi < 512.0) hi *= 2.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (score(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double student_t_neg_loglik(std::span<const double> x, double mu, double s,
                            double nu) {
  DistFamily t(Family::StudentT, {mu, s, nu});
  double nll = 0.0;
  for (double v : x) nll -= t.log_pdf(v);
  return nll;
}

// Golden-section minimization over [lo, hi].
template <typename F>
double golden_min(F f, double lo, double hi, int iters = 60) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::optional<DistFamily> fit_family(std::span<const double> x, Family family) {
  // Callers are expected to provide n >= 8; anything under 4 has no usable
  // quartiles or variance structure at all.
  if (x.size() < 4) {
    throw Error(ErrorKind::Size, "fit_family: need at least 4 values");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Data, "fit_family: non-finite value");
    }
  }
  const SampleSummary s = summarize(x);
  if (s.var <= 0.0) {
    throw Error(ErrorKind::Degenerate, "fit_family: zero-variance sample");
  }

  switch (family) {
    case Family::Gaussian:
      return DistFamily(family, {s.mean, std::sqrt(s.var)});
    case Family::Exponential: {
      if (s.min < 0.0) return std::nullopt;
      if (s.mean <= 0.0) return std::nullopt;
      return DistFamily(family, {1.0 / s.mean});
    }
    case Family::Logistic:
      return DistFamily(family, {s.mean, std::sqrt(3.0 * s.var) / math::kPi});
    case Family::Cauchy: {
      const double q25 = math::quantile_sorted(s.sorted, 0.25);
      const double q75 = math::quantile_sorted(s.sorted, 0.75);
      const double gamma = 0.5 * (q75 - q25);
      if (gamma <= 0.0) return std::nullopt;
      return DistFamily(family, {math::quantile_sorted(s.sorted, 0.5), gamma});
    }
    case Family::Gamma: {
      if (!all_in_open_positive(s)) return std::nullopt;
      return DistFamily(family, {s.mean * s.mean / s.var, s.var / s.mean});
    }
    case Family::Beta: {
      if (!(s.min > 0.0 && s.max < 1.0)) return std::nullopt;
      const double c = s.mean * (1.0 - s.mean) / s.var - 1.0;
      if (c <= 0.0) return std::nullopt;
      return DistFamily(family, {s.mean * c, (1.0 - s.mean) * c});
    }
    case Family::Weibull: {
      if (!all_in_open_positive(s)) return std::nullopt;
      const double k = weibull_shape_mle(x);
      double sum_pow = 0.0;
      for (double v : x) sum_pow += std::pow(v, k);
      const double lam =
          std::pow(sum_pow / static_cast<double>(x.size()), 1.0 / k);
      return DistFamily(family, {k, lam});
    }
    case Family::Pareto: {
      // Threshold at the sample minimum, then the closed-form mean match
      // alpha = mean / (mean - x_m).
      if (!all_in_open_positive(s)) return std::nullopt;
      const double xm = s.min;
      if (s.mean <= xm) return std::nullopt;
      return DistFamily(family, {xm, s.mean / (s.mean - xm)});
    }
    case Family::ChiSquared: {
      if (!all_in_open_positive(s)) return std::nullopt;
      return DistFamily(family, {s.mean});
    }
    case Family::StudentT: {
      const double mu = math::quantile_sorted(s.sorted, 0.5);
      const double sd = std::sqrt(s.var);
      double scale = 0.85 * sd;
      double nu = 10.0;
      // Alternating 1-D likelihood maximization in log space; a few rounds
      // are plenty for ranking purposes.
      for (int round = 0; round < 3; ++round) {
        scale = std::exp(golden_min(
            [&](double ls) { return student_t_neg_loglik(x, mu, std::exp(ls), nu); },
            std::log(1e-3 * sd), std::log(10.0 * sd)));
        nu = std::exp(golden_min(
            [&](double ln) { return student_t_neg_loglik(x, mu, scale, std::exp(ln)); },
            std::log(0.5), std::log(200.0)));
      }
      return DistFamily(family, {mu, scale, nu});
    }
    case Family::Rayleigh: {
      if (!all_in_open_positive(s)) return std::nullopt;
      return DistFamily(family, {s.mean * std::sqrt(2.0 / math::kPi)});
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// KL divergence.

namespace {

double kl_gaussian_closed_form(const DistFamily& p, const DistFamily& q) {
  const double mu1 = p.params[0], s1 = p.params[1];
  const double mu2 = q.params[0], s2 = q.params[1];
  const double dmu = mu1 - mu2;
  return std::log(s2 / s1) + (s1 * s1 + dmu * dmu) / (2.0 * s2 * s2) - 0.5;
}

double kl_quadrature(const DistFamily& p, const DistFamily& q) {
  const auto [plo, phi_] = p.support();
  const auto [qlo, qhi] = q.support();

  // Mass of p escaping q's support signals infinite divergence.
  double escaped = 0.0;
  if (qlo > plo) escaped += p.cdf(qlo);
  if (qhi < phi_) escaped += 1.0 - p.cdf(qhi);
  if (escaped > 1e-12) return kInf;

  const double eps = 1e-10;
  double lo = p.quantile(eps);
  double hi = p.quantile(1.0 - eps);
  // Keep strictly inside q's support so log q stays finite.
  if (std::isfinite(qlo)) {
    lo = std::max(lo, qlo + std::max(1e-13, 1e-13 * std::abs(qlo)));
  }
  if (std::isfinite(qhi)) {
    hi = std::min(hi, qhi - std::max(1e-13, 1e-13 * std::abs(qhi)));
  }
  if (!(lo < hi)) return kInf;

  auto integrand = [&](double t) {
    const double lp = p.log_pdf(t);
    if (!(lp > -700.0)) return 0.0;
    double lq = q.log_pdf(t);
    if (!std::isfinite(lq)) lq = -750.0;
    return std::exp(lp) * (lp - lq);
  };

  // Panel the integral at p's quantiles so mass concentrations are resolved
  // even for heavy-tailed p (Cauchy effective supports span ~1e10).
  constexpr double kCuts[] = {1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5,
                              0.75, 0.9, 0.95, 0.99, 0.999};
  std::vector<double> knots;
  knots.push_back(lo);
  for (double c : kCuts) {
    const double t = p.quantile(c);
    if (t > knots.back() && t < hi) knots.push_back(t);
  }
  knots.push_back(hi);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += math::integrate(integrand, knots[i], knots[i + 1], 1e-10);
  }
  return total;
}

}  // namespace

double kl_divergence(const DistFamily& p, const DistFamily& q, KlMode mode) {
  p.validate();
  q.validate();
  double result;
  if (mode == KlMode::ClosedForm) {
    if (p.family != Family::Gaussian || q.family != Family::Gaussian) {
      throw Error(ErrorKind::Unsupported,
                  "kl_divergence: closed form available for Gaussian pairs only");
    }
    result = kl_gaussian_closed_form(p, q);
  } else {
    result = kl_quadrature(p, q);
  }
  if (result < 0.0) result = 0.0;
  return result;
}

double kl_divergence_auto(const DistFamily& p, const DistFamily& q) {
  if (p.family == Family::Gaussian && q.family == Family::Gaussian) {
    return kl_divergence(p, q, KlMode::ClosedForm);
  }
  return kl_divergence(p, q, KlMode::NumericQuadrature);
}

}  // namespace neuroline::stats
