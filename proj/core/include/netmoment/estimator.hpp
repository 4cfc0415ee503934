#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netmoment/edge_models.hpp"
#include "netmoment/graph_core.hpp"

namespace netmoment {

/// Degree parameters (one per node) and homophily coefficients (one per
/// covariate column).
struct Params {
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
};

enum class BetaUpdate {
  kPreconditioned,  // beta += t * S * F with an exact quadratic step length
  kLogRatio,        // logistic only: beta_i = log d_i - log sum_j 1/(e^{-beta_j - z'g} + e^{beta_i})
};

struct SolverConfig {
  double tol_f = 1e-8;  // ||F||_inf
  double tol_q = 1e-8;  // ||Q_c||_inf
  int max_outer = 200;
  int max_inner_beta = 500;
  double damping = 1.0;  // scales the beta step; in (0, 1]
  BetaUpdate beta_update = BetaUpdate::kPreconditioned;
  bool bias_correct = true;

  /// Throws DomainError on non-positive tolerances, zero caps or damping outside (0, 1].
  void validate() const;
};

struct BetaSolution {
  Eigen::VectorXd beta;
  int iterations = 0;
  double residual = 0.0;  // ||F_gamma(beta)||_inf
};

struct Diagnostics {
  double m_n = 0.0;  // min off-diagonal of -dF/dbeta'
  double M_n = 0.0;  // max off-diagonal of -dF/dbeta'
  double kappa_n = 0.0;
  // Smallest eigenvalue of -H/N. H is negative definite, so this is the
  // eigenvalue of H/N closest to zero, reported as a positive number.
  double lambda_min_hbar = 0.0;
};

struct TraceEntry {
  int iteration = 0;
  int beta_iterations = 0;
  double f_residual = 0.0;
  double q_residual = 0.0;
  double step_scale = 0.0;  // accepted fraction of the Newton step that led here
  Eigen::VectorXd gamma;
};

struct FitResult {
  EdgeFamily family;
  std::size_t n = 0;
  Params params;
  Eigen::VectorXd gamma_bc;  // equals params.gamma when bias correction is off
  bool bias_corrected = false;
  Eigen::VectorXd se_beta;
  Eigen::VectorXd se_gamma;
  Eigen::VectorXd bias_hat;
  Eigen::MatrixXd h_hat;
  bool converged = false;
  int iterations = 0;
  double f_residual = 0.0;
  double q_residual = 0.0;
  Diagnostics diagnostics;
  std::vector<TraceEntry> trace;
  std::string message;
};

struct StandardErrors {
  Eigen::VectorXd se_beta;
  Eigen::VectorXd se_gamma;
  Eigen::MatrixXd gamma_covariance;
};

/// pi_ij = beta_i + beta_j + z_ij' gamma for every pair, in pair order.
Eigen::VectorXd pair_indices(const NetworkData& data, const Params& params);

/// F_i = d_i - sum_{j != i} mu(pi_ij).
Eigen::VectorXd moment_residual_f(const NetworkData& data, EdgeFamily family, const Params& params);

/// Q = sum_{j < i} z_ij (a_ij - mu(pi_ij)).
Eigen::VectorXd moment_residual_q(const NetworkData& data, EdgeFamily family, const Params& params);

/// sum_i beta_i d_i + gamma' sum a_ij z_ij - sum cumulant(pi_ij). Its
/// gradient in (beta, gamma) is (F, Q) and it is concave, so it serves as
/// the merit function for both solver steps.
double moment_potential(const NetworkData& data, EdgeFamily family, const Params& params);

/// V = dF/d beta'. Negative of a member of the balanced class.
Eigen::MatrixXd beta_jacobian(const NetworkData& data, EdgeFamily family, const Params& params);

/// Throws DegenerateDegreesError naming every node whose degree sits on the
/// boundary (binary: d_i = 0 or n-1; count: d_i = 0).
void check_degrees(const NetworkData& data, EdgeFamily family);

/// Starting beta matching each node's mean degree under the symmetric model.
Eigen::VectorXd initial_beta(const NetworkData& data, EdgeFamily family);

/// Solves F_gamma(beta) = 0 for fixed gamma.
BetaSolution solve_beta_given_gamma(const NetworkData& data, EdgeFamily family,
                                    const Eigen::VectorXd& gamma, const SolverConfig& config,
                                    const Eigen::VectorXd& beta_init);

/// Q evaluated at (beta_hat_gamma, gamma). An empty beta_init uses initial_beta().
Eigen::VectorXd profile_q_c(const NetworkData& data, EdgeFamily family, const Eigen::VectorXd& gamma,
                            const SolverConfig& config, const Eigen::VectorXd& beta_init = {});

/// H = dQ/dgamma - dQ/dbeta [dF/dbeta]^-1 dF/dgamma, with a dense
/// factorization of dF/dbeta. Throws SingularMatrixError if that fails.
Eigen::MatrixXd profile_jacobian_h(const NetworkData& data, EdgeFamily family, const Params& params);

/// Joint moment estimator by alternating beta solves with damped Newton
/// steps on the profile function. Returns converged = false (with the
/// trace) rather than throwing when iteration caps are hit.
FitResult fit(const NetworkData& data, EdgeFamily family, const SolverConfig& config = {},
              const std::optional<Params>& init = std::nullopt);

/// B_hat = (1 / (2 sqrt(N))) sum_i [sum_{j != i} z_ij mu''_ij] / [sum_{j != i} mu'_ij], N = n(n-1).
Eigen::VectorXd bias_hat_b(const NetworkData& data, EdgeFamily family, const Params& params);

/// gamma - sqrt(N) H^-1 B.
Eigen::VectorXd bias_correct_gamma(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& h,
                                   const Eigen::VectorXd& bias, std::size_t n);
Eigen::VectorXd bias_correct_gamma(const FitResult& fit);

/// Plug-in standard errors under independent dyads.
StandardErrors standard_errors(const NetworkData& data, EdgeFamily family, const Params& params);

}  // namespace netmoment
