#pragma once

#include <string>
#include <string_view>

#include "netmoment/rng.hpp"

namespace netmoment {

enum class FamilyKind { kLogistic, kPoisson, kProbit };
enum class Support { kBinary, kCount };

/// Mean function and its first three derivatives for a single-index
/// edge model a_ij ~ f(. | pi_ij), plus the matching variance and sampler.
struct MuDerivs {
  double d1;
  double d2;
  double d3;
};

/// Edge-marginal family. Value type; every member is a pure function.
///
/// Indices are clamped to [-kIndexClamp, kIndexClamp] before any
/// exponentiation. Nothing in the estimator or the simulators gets near the
/// clamp for bounded parameters; it only keeps exp() finite.
class EdgeFamily {
 public:
  static constexpr double kIndexClamp = 700.0;

  constexpr explicit EdgeFamily(FamilyKind kind = FamilyKind::kLogistic) noexcept : kind_(kind) {}

  /// Accepts "logistic", "poisson" or "probit"; throws DomainError otherwise.
  static EdgeFamily parse(std::string_view name);

  constexpr FamilyKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  constexpr Support support() const noexcept {
    return kind_ == FamilyKind::kPoisson ? Support::kCount : Support::kBinary;
  }

  double mu(double pi) const;
  MuDerivs mu_derivs(double pi) const;
  double variance(double pi) const;

  /// Antiderivative of mu. The moment equations are the stationarity
  /// conditions of sum_i beta_i d_i + gamma' sum a_ij z_ij - sum cumulant(pi_ij),
  /// which the solvers use as a merit function.
  double cumulant(double pi) const;

  /// One edge weight with mean mu(pi).
  double sample(double pi, Rng& rng) const;

  friend constexpr bool operator==(EdgeFamily, EdgeFamily) = default;

 private:
  FamilyKind kind_;
};

inline constexpr EdgeFamily kLogistic{FamilyKind::kLogistic};
inline constexpr EdgeFamily kPoisson{FamilyKind::kPoisson};
inline constexpr EdgeFamily kProbit{FamilyKind::kProbit};

double normal_cdf(double x);
double normal_pdf(double x);

/// Poisson draw: inversion for small means, PTRS transformed rejection
/// (Hormann 1993) for mean > 30.
long long sample_poisson(double mean, Rng& rng);

}  // namespace netmoment
