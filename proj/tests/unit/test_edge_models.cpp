#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "netmoment/edge_models.hpp"
#include "netmoment/error.hpp"

using namespace netmoment;

namespace {

const EdgeFamily kAll[] = {kLogistic, kPoisson, kProbit};

// Relative difference with an absolute floor for values near zero.
double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace

TEST_CASE("mu at reference points") {
  CHECK(kLogistic.mu(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kLogistic.mu(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(kPoisson.mu(0.0) == 1.0);
  CHECK(kProbit.mu(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kProbit.mu(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("mu derivatives at reference points") {
  const MuDerivs l = kLogistic.mu_derivs(0.0);
  CHECK(l.d1 == doctest::Approx(0.25));
  CHECK(std::fabs(l.d2) < 1e-17);
  CHECK(l.d3 == doctest::Approx(-0.125));

  const MuDerivs p = kPoisson.mu_derivs(1.0);
  CHECK(p.d1 == doctest::Approx(std::numbers::e));
  CHECK(p.d2 == doctest::Approx(std::numbers::e));
  CHECK(p.d3 == doctest::Approx(std::numbers::e));

  const MuDerivs q = kProbit.mu_derivs(0.0);
  CHECK(q.d1 == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(q.d2 == 0.0);
}

TEST_CASE("logistic derivatives match the closed forms in e^x") {
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    const double e = std::exp(x);
    const MuDerivs d = kLogistic.mu_derivs(x);
    CHECK(d.d1 == doctest::Approx(e / std::pow(1 + e, 2)).epsilon(1e-12));
    CHECK(d.d2 == doctest::Approx(e * (1 - e) / std::pow(1 + e, 3)).epsilon(1e-9));
    CHECK(d.d3 == doctest::Approx(e * (1 - 4 * e + e * e) / std::pow(1 + e, 4)).epsilon(1e-9));
  }
}

TEST_CASE("logistic derivative bounds of one quarter") {
  double max1 = 0, max2 = 0, max3 = 0;
  for (int k = -10000; k <= 10000; ++k) {
    const MuDerivs d = kLogistic.mu_derivs(k * 1e-3);
    max1 = std::max(max1, std::fabs(d.d1));
    max2 = std::max(max2, std::fabs(d.d2));
    max3 = std::max(max3, std::fabs(d.d3));
  }
  CHECK(max1 <= 0.25 + 1e-12);
  CHECK(max2 <= 0.25 + 1e-12);
  CHECK(max3 <= 0.25 + 1e-12);
}

TEST_CASE("finite differences agree with analytic derivatives") {
  const double h = 1e-5;
  for (EdgeFamily f : kAll) {
    CAPTURE(f.name());
    for (double x = -4.0; x <= 4.0; x += 0.25) {
      CAPTURE(x);
      const MuDerivs d = f.mu_derivs(x);
      const MuDerivs up = f.mu_derivs(x + h);
      const MuDerivs dn = f.mu_derivs(x - h);
      CHECK(rel_diff((f.mu(x + h) - f.mu(x - h)) / (2 * h), d.d1) < 1e-4);
      CHECK(rel_diff((up.d1 - dn.d1) / (2 * h), d.d2) < 1e-4);
      CHECK(rel_diff((up.d2 - dn.d2) / (2 * h), d.d3) < 1e-4);
      // cumulant' = mu
      CHECK(rel_diff((f.cumulant(x + h) - f.cumulant(x - h)) / (2 * h), f.mu(x)) < 1e-4);
    }
  }
}

TEST_CASE("mu is strictly increasing and binary means stay inside (0,1)") {
  for (EdgeFamily f : kAll) {
    // Near pi = 8 the probit mean is within an ulp of 1 in double precision.
    double prev = -1.0;
    for (double x = -7.0; x <= 7.0; x += 0.01) {
      const double m = f.mu(x);
      CHECK(m > prev);
      CHECK(f.mu_derivs(x).d1 > 0.0);
      if (f.support() == Support::kBinary) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
      }
      prev = m;
    }
  }
}

TEST_CASE("probit second derivative has the sign of -pi") {
  CHECK(kProbit.mu_derivs(0.0).d2 == 0.0);
  for (double x = 0.05; x < 6.0; x += 0.05) {
    CHECK(kProbit.mu_derivs(x).d2 < 0.0);
    CHECK(kProbit.mu_derivs(-x).d2 > 0.0);
  }
}

TEST_CASE("edge variance") {
  CHECK(kLogistic.variance(0.0) == doctest::Approx(0.25));
  CHECK(kPoisson.variance(0.0) == doctest::Approx(1.0));
  for (double x = -10.0; x <= 10.0; x += 0.1) {
    CHECK(kLogistic.variance(x) == doctest::Approx(kLogistic.mu_derivs(x).d1).epsilon(1e-12));
    CHECK(kPoisson.variance(x) == doctest::Approx(kPoisson.mu(x)).epsilon(1e-12));
    const double m = kProbit.mu(x);
    CHECK(kProbit.variance(x) == doctest::Approx(m * (1 - m)).epsilon(1e-9));
  }
}

TEST_CASE("non-finite index is a domain error") {
  for (EdgeFamily f : kAll) {
    CHECK_THROWS_AS(f.mu(std::numeric_limits<double>::quiet_NaN()), DomainError);
    CHECK_THROWS_AS(f.mu_derivs(std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(f.variance(-std::numeric_limits<double>::infinity()), DomainError);
  }
}

TEST_CASE("extreme indices are clamped rather than overflowing") {
  CHECK(std::isfinite(kPoisson.mu(1000.0)));
  CHECK(kLogistic.mu(-50.0) < 1e-21);
  CHECK(kLogistic.mu(-50.0) > 0.0);
}

TEST_CASE("family names parse and round-trip") {
  for (EdgeFamily f : kAll) CHECK(EdgeFamily::parse(f.name()) == f);
  CHECK_THROWS_AS(EdgeFamily::parse("gamma"), DomainError);
  CHECK(kPoisson.support() == Support::kCount);
  CHECK(kProbit.support() == Support::kBinary);
}

TEST_CASE("binary sampler mean matches mu within three standard errors") {
  const int draws = 100000;
  for (EdgeFamily f : {kLogistic, kProbit}) {
    for (double pi : {-1.3, 0.0, 0.4, 2.0}) {
      Rng rng(11, static_cast<std::uint64_t>((pi + 5) * 100));
      double sum = 0.0;
      for (int i = 0; i < draws; ++i) {
        const double a = f.sample(pi, rng);
        REQUIRE((a == 0.0 || a == 1.0));
        sum += a;
      }
      const double m = f.mu(pi);
      CHECK(std::fabs(sum / draws - m) <= 3.0 * std::sqrt(m * (1 - m) / draws));
    }
  }
}

TEST_CASE("poisson sampler mean matches across the inversion and rejection branches") {
  const int draws = 100000;
  for (double pi : {0.0, std::log(5.0), std::log(29.5), std::log(45.0), std::log(400.0)}) {
    Rng rng(5, static_cast<std::uint64_t>(pi * 1000));
    const double m = kPoisson.mu(pi);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double a = kPoisson.sample(pi, rng);
      REQUIRE(a >= 0.0);
      REQUIRE(a == std::floor(a));
      sum += a;
      sum_sq += a * a;
    }
    const double mean = sum / draws;
    CAPTURE(m);
    CHECK(std::fabs(mean - m) <= 3.0 * std::sqrt(m / draws));
    const double var = sum_sq / draws - mean * mean;
    CHECK(var == doctest::Approx(m).epsilon(0.05));
  }
}

TEST_CASE("poisson small-mean probabilities match the pmf") {
  Rng rng(8);
  const double mean = 2.5;
  const int draws = 200000;
  std::vector<int> counts(12, 0);
  for (int i = 0; i < draws; ++i) {
    const long long k = sample_poisson(mean, rng);
    if (k < 12) ++counts[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < 8; ++k) {
    const double pmf = std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
    CHECK(std::fabs(counts[k] / double(draws) - pmf) <= 4.0 * std::sqrt(pmf * (1 - pmf) / draws));
  }
}

TEST_CASE("sampler is deterministic given the rng state") {
  Rng a(99, 1), b(99, 1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(kPoisson.sample(1.2, a) == kPoisson.sample(1.2, b));
    CHECK(kLogistic.sample(0.3, a) == kLogistic.sample(0.3, b));
  }
}
