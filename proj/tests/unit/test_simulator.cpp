#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "netmoment/error.hpp"
#include "netmoment/simulator.hpp"

using namespace netmoment;

namespace {

double mean_weight(const NetworkData& d) {
  double s = 0.0;
  for (double w : d.weights()) s += w;
  return s / static_cast<double>(d.pair_count());
}

GenSpec small_spec(EdgeFamily family, std::size_t n) {
  GenSpec s;
  s.n = n;
  s.family = family;
  s.beta_star = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), -0.6, 0.6);
  s.gamma_star = Eigen::VectorXd::Constant(1, 0.5);
  return s;
}

}  // namespace

TEST_CASE("generation is reproducible and streams differ") {
  GenSpec spec;
  spec.n = 40;
  spec.gamma_star = Eigen::Vector2d(0.3, -0.2);
  spec.seed = 11;
  const GeneratedNetwork a = generate_with_truth(spec);
  const GeneratedNetwork b = generate_with_truth(spec);
  CHECK(std::equal(a.data.weights().begin(), a.data.weights().end(), b.data.weights().begin()));
  CHECK(a.data.covariates() == b.data.covariates());
  CHECK(a.truth.beta == b.truth.beta);

  spec.stream = 1;
  const GeneratedNetwork c = generate_with_truth(spec);
  CHECK_FALSE(c.truth.beta == a.truth.beta);
  CHECK((a.truth.beta.array().abs() <= spec.beta_range).all());
}

TEST_CASE("logistic density at zero parameters is one half") {
  GenSpec spec;
  spec.n = 200;
  spec.beta_star = Eigen::VectorXd::Zero(200);
  spec.gamma_star = Eigen::VectorXd::Zero(1);
  spec.seed = 3;
  const NetworkData d = generate(spec);
  const double sd = 0.5 / std::sqrt(static_cast<double>(d.pair_count()));
  CHECK(std::fabs(mean_weight(d) - 0.5) < 4 * sd);
}

TEST_CASE("poisson counts have the model mean") {
  GenSpec spec;
  spec.n = 150;
  spec.family = kPoisson;
  spec.beta_star = Eigen::VectorXd::Constant(150, 0.5);
  spec.gamma_star = Eigen::VectorXd::Zero(1);
  const NetworkData d = generate(spec);
  const double lambda = std::exp(1.0);
  CHECK(std::fabs(mean_weight(d) - lambda) < 4 * std::sqrt(lambda / static_cast<double>(d.pair_count())));
  for (double w : d.weights()) CHECK(w == std::floor(w));
}

TEST_CASE("per-pair edge frequencies match the marginal mean") {
  const int reps = 10000;
  struct Case {
    EdgeFamily family;
    Dependence dep;
    double rho;
  };
  for (const Case& cs : {Case{kLogistic, Dependence::kIndependent, 0.0}, Case{kProbit, Dependence::kIndependent, 0.0},
                         Case{kProbit, Dependence::kEquicorrelatedProbit, 0.0},
                         Case{kProbit, Dependence::kEquicorrelatedProbit, 0.5}}) {
    CAPTURE(cs.family.name());
    CAPTURE(cs.rho);
    GenSpec spec = small_spec(cs.family, 6);
    spec.dependence = cs.dep;
    spec.rho = cs.rho;
    spec.seed = 99;
    const std::size_t pairs = num_pairs(6);
    std::vector<double> hits(pairs, 0.0);
    // Covariates are redrawn each replicate; condition on them by tracking
    // the expected mean per draw.
    std::vector<double> expect(pairs, 0.0), var(pairs, 0.0);
    for (int r = 0; r < reps; ++r) {
      spec.stream = static_cast<std::uint64_t>(r);
      const GeneratedNetwork g = generate_with_truth(spec);
      const Eigen::VectorXd off = g.data.covariates() * g.truth.gamma;
      std::size_t k = 0;
      for (std::size_t i = 1; i < 6; ++i) {
        for (std::size_t j = 0; j < i; ++j, ++k) {
          const double mu = cs.family.mu(g.truth.beta[i] + g.truth.beta[j] + off[k]);
          hits[k] += g.data.weights()[k];
          expect[k] += mu;
          var[k] += mu * (1 - mu);
        }
      }
    }
    for (std::size_t k = 0; k < pairs; ++k) {
      // Under dependence, draws across replicates are still independent.
      CHECK(std::fabs(hits[k] - expect[k]) < 4 * std::sqrt(var[k]));
    }
  }
}

TEST_CASE("equicorrelated probit pairs have the orthant correlation") {
  // With pi = 0, P(a_k = a_l = 1) = 1/4 + arcsin(rho) / (2 pi).
  for (double rho : {0.0, 0.5}) {
    CAPTURE(rho);
    GenSpec spec;
    spec.n = 10;
    spec.family = kProbit;
    spec.beta_star = Eigen::VectorXd::Zero(10);
    spec.gamma_star = Eigen::VectorXd::Zero(1);
    spec.dependence = Dependence::kEquicorrelatedProbit;
    spec.rho = rho;
    spec.seed = 17;
    const int reps = 4000;
    std::vector<double> stat;
    for (int r = 0; r < reps; ++r) {
      spec.stream = static_cast<std::uint64_t>(r);
      const NetworkData d = generate(spec);
      const auto w = d.weights();
      const double s = std::accumulate(w.begin(), w.end(), 0.0);
      const double sq = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
      const double m = static_cast<double>(w.size());
      stat.push_back((s * s - sq) / (m * (m - 1)));  // mean of a_k a_l over k != l
    }
    const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / reps;
    double ss = 0.0;
    for (double x : stat) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (reps - 1) / reps);
    const double expected = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
    CHECK(std::fabs(mean - expected) < 4 * se + 1e-12);
  }
}

TEST_CASE("covariate rules") {
  GenSpec spec;
  spec.n = 30;
  spec.covariate_rule = CovariateRule::kNodeDistance;
  spec.covariate_low = -1.0;
  spec.covariate_high = 2.0;
  const NetworkData d = generate(spec);
  const RowMatrix& z = d.covariates();
  CHECK(z.cols() == 1);
  CHECK((z.array() >= 0.0).all());
  CHECK((z.array() <= 3.0 * std::sqrt(2.0)).all());
  for (std::size_t i = 2; i < 30; ++i) {
    CHECK(d.covariate(i, 0)[0] <= d.covariate(i, 1)[0] + d.covariate(1, 0)[0] + 1e-12);
  }

  spec.covariate_rule = CovariateRule::kIidUniform;
  spec.gamma_star = Eigen::Vector3d(0.1, 0.2, 0.3);
  const RowMatrix u = generate(spec).covariates();
  CHECK(u.cols() == 3);
  CHECK((u.array() >= -1.0).all());
  CHECK((u.array() <= 2.0).all());

  spec.covariate_rule = CovariateRule::kIidPm1;
  const RowMatrix s = generate(spec).covariates();
  CHECK((s.array().abs() == 1.0).all());
}

TEST_CASE("noise-free generation writes the means") {
  GenSpec spec = small_spec(kPoisson, 8);
  spec.noise_free = true;
  const GeneratedNetwork g = generate_with_truth(spec);
  const Eigen::VectorXd off = g.data.covariates() * g.truth.gamma;
  CHECK(g.data.weight(3, 1) == kPoisson.mu(g.truth.beta[3] + g.truth.beta[1] + off[pair_offset(3, 1)]));
}

TEST_CASE("GenSpec validation") {
  GenSpec s;
  s.n = 1;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = {};
  s.dependence = Dependence::kEquicorrelatedProbit;
  CHECK_THROWS_AS(s.validate(), DomainError);  // logistic
  s.family = kProbit;
  s.rho = 1.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s.rho = 0.3;
  CHECK_NOTHROW(s.validate());
  s = {};
  s.covariate_rule = CovariateRule::kNodeDistance;
  s.gamma_star = Eigen::Vector2d(1, 1);
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = {};
  s.beta_star = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = {};
  s.gamma_star.resize(0);
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("helpers") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(log_log_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isnan(log_log_slope({1}, {1})));
}

TEST_CASE("noise-free Monte Carlo recovers the truth exactly") {
  GenSpec spec;
  spec.n = 30;
  spec.gamma_star = Eigen::Vector2d(0.5, -0.5);
  spec.noise_free = true;
  McOptions opt;
  opt.replicates = 5;
  opt.threads = 1;
  const McStudyReport r = run_mc_study({spec}, opt);
  REQUIRE(r.records.size() == 5);
  CHECK_FALSE(r.coverage_defined);
  CHECK(std::isnan(r.summaries[0].coverage[0]));
  for (const McRecord& rec : r.records) {
    CHECK(rec.beta_error <= 1e-6);
    CHECK(rec.gamma_error <= 1e-6);
  }
}

TEST_CASE("report does not depend on the thread count") {
  GenSpec a;
  a.n = 20;
  a.gamma_star = Eigen::VectorXd::Constant(1, 0.4);
  GenSpec b = a;
  b.n = 25;
  McOptions opt;
  opt.replicates = 6;
  opt.threads = 1;
  const McStudyReport one = run_mc_study({a, b}, opt);
  opt.threads = 3;
  const McStudyReport three = run_mc_study({a, b}, opt);
  REQUIRE(one.records.size() == three.records.size());
  for (std::size_t k = 0; k < one.records.size(); ++k) {
    CHECK(one.records[k].n == three.records[k].n);
    CHECK(one.records[k].replicate == three.records[k].replicate);
    CHECK(one.records[k].gamma_hat == three.records[k].gamma_hat);
    CHECK(one.records[k].beta_error == three.records[k].beta_error);
  }
  CHECK(one.failures.size() == three.failures.size());
  CHECK(one.summaries.size() == 2);
  CHECK(one.summaries[0].successes + one.summaries[0].failures == 6);
}

TEST_CASE("standard errors track the Monte Carlo spread") {
  GenSpec spec;
  spec.n = 100;
  spec.gamma_star = Eigen::VectorXd::Constant(1, 0.5);
  spec.seed = 2024;
  McOptions opt;
  opt.replicates = 500;
  const McStudyReport r = run_mc_study({spec}, opt);
  const McSummary& s = r.summaries[0];
  REQUIRE(s.successes >= 450);
  const double ratio = s.median_se_gamma_first / s.sd_gamma_bc_first;
  CAPTURE(ratio);
  CHECK(ratio >= 0.75);
  CHECK(ratio <= 1.25);
}

TEST_CASE("degenerate designs are regenerated and then reported") {
  GenSpec spec;
  spec.n = 8;
  spec.beta_star = Eigen::VectorXd::Constant(8, 40.0);  // always the complete graph
  McOptions opt;
  opt.replicates = 2;
  opt.max_regenerations = 3;
  CHECK_THROWS_AS(run_mc_study({spec}, opt), Error);

  opt.replicates = 0;
  CHECK_THROWS_AS(run_mc_study({GenSpec{}}, opt), DomainError);
  opt.replicates = 1;
  opt.nominal_level = 1.0;
  CHECK_THROWS_AS(run_mc_study({GenSpec{}}, opt), DomainError);
  CHECK_THROWS_AS(run_mc_study({}, McOptions{}), DomainError);
}

TEST_CASE("thread count comes from the environment") {
  ::setenv("NETMOMENT_THREADS", "3", 1);
  CHECK(default_thread_count() == 3);
  ::setenv("NETMOMENT_THREADS", "zero", 1);
  CHECK(default_thread_count() >= 1);
  ::unsetenv("NETMOMENT_THREADS");
}
