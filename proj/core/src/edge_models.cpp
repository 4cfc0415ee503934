#include "netmoment/edge_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "netmoment/error.hpp"

namespace netmoment {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kPoissonInversionLimit = 30.0;

double checked_index(double pi) {
  if (!std::isfinite(pi)) throw DomainError("edge index must be finite");
  return std::clamp(pi, -EdgeFamily::kIndexClamp, EdgeFamily::kIndexClamp);
}

// 1/(1+e^-x) and 1/(1+e^x) without cancellation in either tail.
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logistic_complement(double x) { return logistic(-x); }

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

long long poisson_inversion(double mean, Rng& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  long long k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    // cdf stalls below 1 by rounding; the tail mass past here is < 1e-16.
    if (p < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

long long poisson_ptrs(double mean, Rng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<long long>(k);
    }
  }
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

long long sample_poisson(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  return mean <= kPoissonInversionLimit ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

EdgeFamily EdgeFamily::parse(std::string_view name) {
  if (name == "logistic") return kLogistic;
  if (name == "poisson") return kPoisson;
  if (name == "probit") return kProbit;
  throw DomainError("unknown edge family '" + std::string(name) +
                    "' (expected logistic, poisson or probit)");
}

std::string_view EdgeFamily::name() const noexcept {
  switch (kind_) {
    case FamilyKind::kLogistic: return "logistic";
    case FamilyKind::kPoisson: return "poisson";
    case FamilyKind::kProbit: return "probit";
  }
  return "unknown";
}

double EdgeFamily::mu(double pi) const {
  pi = checked_index(pi);
  switch (kind_) {
    case FamilyKind::kLogistic: return logistic(pi);
    case FamilyKind::kPoisson: return std::exp(pi);
    case FamilyKind::kProbit: return normal_cdf(pi);
  }
  return 0.0;
}

MuDerivs EdgeFamily::mu_derivs(double pi) const {
  pi = checked_index(pi);
  switch (kind_) {
    case FamilyKind::kLogistic: {
      const double p = logistic(pi);
      const double q = logistic_complement(pi);
      const double d1 = p * q;
      // e^x(1-e^x)/(1+e^x)^3 = mu'(q - p); e^x(1-4e^x+e^2x)/(1+e^x)^4 = mu'(q^2 - 4pq + p^2)
      return {d1, d1 * (q - p), d1 * (q * q - 4.0 * p * q + p * p)};
    }
    case FamilyKind::kPoisson: {
      const double e = std::exp(pi);
      return {e, e, e};
    }
    case FamilyKind::kProbit: {
      const double phi = normal_pdf(pi);
      return {phi, -pi * phi, (pi * pi - 1.0) * phi};
    }
  }
  return {0.0, 0.0, 0.0};
}

double EdgeFamily::variance(double pi) const {
  pi = checked_index(pi);
  switch (kind_) {
    case FamilyKind::kLogistic: return logistic(pi) * logistic_complement(pi);
    case FamilyKind::kPoisson: return std::exp(pi);
    case FamilyKind::kProbit: return normal_cdf(pi) * normal_cdf(-pi);
  }
  return 0.0;
}

double EdgeFamily::cumulant(double pi) const {
  pi = checked_index(pi);
  switch (kind_) {
    case FamilyKind::kLogistic: return softplus(pi);
    case FamilyKind::kPoisson: return std::exp(pi);
    case FamilyKind::kProbit: return pi * normal_cdf(pi) + normal_pdf(pi);
  }
  return 0.0;
}

double EdgeFamily::sample(double pi, Rng& rng) const {
  const double mean = mu(pi);
  if (support() == Support::kCount) return static_cast<double>(sample_poisson(mean, rng));
  return rng.uniform() < mean ? 1.0 : 0.0;
}

}  // namespace netmoment
