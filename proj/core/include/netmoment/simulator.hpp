#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netmoment/edge_models.hpp"
#include "netmoment/estimator.hpp"
#include "netmoment/graph_core.hpp"

namespace netmoment {

enum class CovariateRule {
  kIidPm1,       // each entry +1 or -1 with probability 1/2
  kIidUniform,   // each entry U[low, high]
  kNodeDistance, // p = 1: Euclidean distance between U[low, high]^2 node positions
};

enum class Dependence { kIndependent, kEquicorrelatedProbit };

struct GenSpec {
  std::size_t n = 50;
  EdgeFamily family = kLogistic;
  // Explicit beta*; when empty, beta*_i ~ U[-beta_range, beta_range].
  Eigen::VectorXd beta_star;
  double beta_range = 1.0;
  Eigen::VectorXd gamma_star = Eigen::VectorXd::Zero(1);
  CovariateRule covariate_rule = CovariateRule::kIidPm1;
  double covariate_low = 0.0;
  double covariate_high = 1.0;
  Dependence dependence = Dependence::kIndependent;
  double rho = 0.0;
  // a_ij := mu(pi*_ij) instead of a draw.
  bool noise_free = false;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Throws DomainError on an inconsistent spec.
  void validate() const;
};

struct GeneratedNetwork {
  NetworkData data;
  Params truth;
};

GeneratedNetwork generate_with_truth(const GenSpec& spec);
NetworkData generate(const GenSpec& spec);

struct McRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  int attempts = 1;
  double beta_error = 0.0;      // ||beta_hat - beta*||_inf
  double gamma_error = 0.0;     // ||gamma_hat - gamma*||_inf
  double gamma_bc_error = 0.0;  // ||gamma_bc - gamma*||_inf
  std::vector<double> gamma_hat;
  std::vector<double> gamma_bc;
  std::vector<double> se_gamma;
  std::vector<bool> covered;     // per gamma component, gamma_hat +- z se
  std::vector<bool> covered_bc;  // per gamma component, gamma_bc +- z se
};

struct McFailure {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::string reason;
};

struct McSummary {
  std::size_t n = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double median_beta_error = 0.0;
  double median_gamma_error = 0.0;
  double median_gamma_bc_error = 0.0;
  // NaN when coverage is undefined (noise-free designs).
  std::vector<double> coverage;
  std::vector<double> coverage_bc;
  double median_se_gamma_first = 0.0;
  double sd_gamma_bc_first = 0.0;
};

struct McStudyReport {
  std::vector<McRecord> records;
  std::vector<McFailure> failures;
  std::vector<McSummary> summaries;
  // Least-squares log-log slopes across the n grid; NaN with fewer than two n.
  double beta_rate_slope = 0.0;      // vs sqrt(log n / n)
  double gamma_bc_rate_slope = 0.0;  // vs 1 / n
  double nominal_level = 0.95;
  bool coverage_defined = true;
};

struct McOptions {
  std::size_t replicates = 100;
  // 0 reads NETMOMENT_THREADS, falling back to hardware concurrency.
  unsigned threads = 0;
  int max_regenerations = 10;
  double nominal_level = 0.95;
};

/// Fits every generated replicate and summarizes errors and interval coverage.
/// Replicates run in parallel with per-replicate Philox streams, so the
/// report does not depend on the thread count. Throws Error if every
/// replicate at some n fails.
McStudyReport run_mc_study(const std::vector<GenSpec>& grid, const McOptions& options,
                           const SolverConfig& config = {});

/// Thread count from NETMOMENT_THREADS, else hardware concurrency (>= 1).
unsigned default_thread_count();

double median(std::vector<double> values);

/// Ordinary least-squares slope of log(y) on log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace netmoment
