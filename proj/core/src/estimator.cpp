#include "netmoment/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "netmoment/error.hpp"

namespace netmoment {
namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double pair_count_total(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - 1); }

void check_params(const NetworkData& data, const Params& params) {
  if (static_cast<std::size_t>(params.beta.size()) != data.n()) {
    throw DomainError("beta has length " + std::to_string(params.beta.size()) + ", expected " +
                      std::to_string(data.n()));
  }
  if (static_cast<std::size_t>(params.gamma.size()) != data.p()) {
    throw DomainError("gamma has length " + std::to_string(params.gamma.size()) + ", expected " +
                      std::to_string(data.p()));
  }
  if (!params.beta.allFinite() || !params.gamma.allFinite()) {
    throw DomainError("parameters must be finite");
  }
}

// One pass over all pairs: F, the balanced-class diagonal v_ii = sum_j mu'_ij,
// and per-pair mu' for the curvature of a subsequent step.
struct BetaPass {
  Eigen::VectorXd f;
  Eigen::VectorXd diag;
  Eigen::VectorXd mu1;
  double potential = 0.0;
};

BetaPass beta_pass(const NetworkData& data, EdgeFamily family, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& offsets, bool with_potential) {
  const std::size_t n = data.n();
  BetaPass out;
  out.f = data.degrees();
  out.diag = Eigen::VectorXd::Zero(n);
  out.mu1.resize(static_cast<Eigen::Index>(data.pair_count()));
  double cumulant_sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double pi = beta[i] + beta[j] + offsets[k];
      const double mu = family.mu(pi);
      const double d1 = family.mu_derivs(pi).d1;
      out.f[i] -= mu;
      out.f[j] -= mu;
      out.diag[i] += d1;
      out.diag[j] += d1;
      out.mu1[k] = d1;
      if (with_potential) cumulant_sum += family.cumulant(pi);
    }
  }
  if (with_potential) {
    // gamma' sum a_ij z_ij is constant in beta and dropped here.
    out.potential = beta.dot(data.degrees()) - cumulant_sum;
  }
  return out;
}

Eigen::VectorXd covariate_offsets(const NetworkData& data, const Eigen::VectorXd& gamma) {
  return data.covariates() * gamma;
}

Eigen::VectorXd log_ratio_step(const NetworkData& data, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& offsets) {
  const std::size_t n = data.n();
  Eigen::VectorXd denom = Eigen::VectorXd::Zero(n);
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      denom[i] += 1.0 / (std::exp(-beta[j] - offsets[k]) + std::exp(beta[i]));
      denom[j] += 1.0 / (std::exp(-beta[i] - offsets[k]) + std::exp(beta[j]));
    }
  }
  const Eigen::VectorXd& d = data.degrees();
  Eigen::VectorXd next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = std::log(d[i]) - std::log(denom[i]);
  return next;
}

struct ProfileBlocks {
  Eigen::MatrixXd neg_v;   // -dF/dbeta', positive definite for n >= 3
  Eigen::MatrixXd cross;   // dQ/dbeta' (p x n), also (dF/dgamma')'
  Eigen::MatrixXd q_gamma; // dQ/dgamma'
};

ProfileBlocks profile_blocks(const NetworkData& data, EdgeFamily family, const Params& params) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  ProfileBlocks b;
  b.neg_v = Eigen::MatrixXd::Zero(n, n);
  b.cross = Eigen::MatrixXd::Zero(p, n);
  b.q_gamma = Eigen::MatrixXd::Zero(p, p);
  const Eigen::VectorXd pi = pair_indices(data, params);
  const RowMatrix& z = data.covariates();
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double d1 = family.mu_derivs(pi[k]).d1;
      b.neg_v(i, j) = b.neg_v(j, i) = d1;
      b.neg_v(i, i) += d1;
      b.neg_v(j, j) += d1;
      const auto zk = z.row(k).transpose();
      b.cross.col(i) -= d1 * zk;
      b.cross.col(j) -= d1 * zk;
      b.q_gamma.noalias() -= d1 * zk * zk.transpose();
    }
  }
  return b;
}

Eigen::LLT<Eigen::MatrixXd> factor_neg_v(const Eigen::MatrixXd& neg_v) {
  Eigen::LLT<Eigen::MatrixXd> llt(neg_v);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("dF/dbeta is singular at these parameters");
  }
  return llt;
}

// Singular if the profiled information has lost (numerically) all of the
// raw covariate information in some direction.
void check_h_invertible(const Eigen::MatrixXd& h, const Eigen::MatrixXd& q_gamma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(-h, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(-q_gamma, Eigen::EigenvaluesOnly);
  const double scale = std::max(eg.eigenvalues().maxCoeff(), std::numeric_limits<double>::min());
  if (!(eh.eigenvalues().minCoeff() > 1e-10 * scale)) {
    throw SingularMatrixError(
        "profile Jacobian H is singular: covariates are collinear with the degree effects "
        "(e.g. a constant covariate)");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol_f > 0.0) || !(tol_q > 0.0)) throw DomainError("solver tolerances must be positive");
  if (max_outer < 1 || max_inner_beta < 1) throw DomainError("iteration caps must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("damping must lie in (0, 1]");
}

Eigen::VectorXd pair_indices(const NetworkData& data, const Params& params) {
  check_params(data, params);
  Eigen::VectorXd pi = covariate_offsets(data, params.gamma);
  std::size_t k = 0;
  for (std::size_t i = 1; i < data.n(); ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) pi[k] += params.beta[i] + params.beta[j];
  }
  return pi;
}

Eigen::VectorXd moment_residual_f(const NetworkData& data, EdgeFamily family, const Params& params) {
  const Eigen::VectorXd pi = pair_indices(data, params);
  Eigen::VectorXd f = data.degrees();
  std::size_t k = 0;
  for (std::size_t i = 1; i < data.n(); ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double mu = family.mu(pi[k]);
      f[i] -= mu;
      f[j] -= mu;
    }
  }
  return f;
}

Eigen::VectorXd moment_residual_q(const NetworkData& data, EdgeFamily family, const Params& params) {
  const Eigen::VectorXd pi = pair_indices(data, params);
  const auto w = data.weights();
  Eigen::VectorXd resid(pi.size());
  for (Eigen::Index k = 0; k < pi.size(); ++k) resid[k] = w[k] - family.mu(pi[k]);
  return data.covariates().transpose() * resid;
}

double moment_potential(const NetworkData& data, EdgeFamily family, const Params& params) {
  const Eigen::VectorXd pi = pair_indices(data, params);
  const auto w = data.weights();
  double total = params.beta.dot(data.degrees());
  Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  total += params.gamma.dot(data.covariates().transpose() * weights);
  for (Eigen::Index k = 0; k < pi.size(); ++k) total -= family.cumulant(pi[k]);
  return total;
}

Eigen::MatrixXd beta_jacobian(const NetworkData& data, EdgeFamily family, const Params& params) {
  const Eigen::VectorXd pi = pair_indices(data, params);
  const std::size_t n = data.n();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double d1 = family.mu_derivs(pi[k]).d1;
      v(i, j) = v(j, i) = -d1;
      v(i, i) -= d1;
      v(j, j) -= d1;
    }
  }
  return v;
}

void check_degrees(const NetworkData& data, EdgeFamily family) {
  const Eigen::VectorXd& d = data.degrees();
  const double upper = static_cast<double>(data.n() - 1);
  const bool binary = family.support() == Support::kBinary;
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!(d[i] > 0.0) || (binary && !(d[i] < upper))) bad.push_back(i);
  }
  if (bad.empty()) return;

  std::ostringstream msg;
  msg << "no finite solution: degree on the boundary of its range at node";
  if (bad.size() > 1) msg << 's';
  for (std::size_t idx = 0; idx < bad.size() && idx < 10; ++idx) {
    msg << ' ' << bad[idx] << " (d=" << d[bad[idx]] << ')';
  }
  if (bad.size() > 10) msg << " and " << bad.size() - 10 << " more";
  msg << (binary ? "; binary degrees must satisfy 0 < d_i < n-1" : "; count degrees must be > 0");
  throw DegenerateDegreesError(msg.str(), std::move(bad));
}

Eigen::VectorXd initial_beta(const NetworkData& data, EdgeFamily family) {
  const std::size_t n = data.n();
  const double others = static_cast<double>(n - 1);
  const Eigen::VectorXd& d = data.degrees();
  Eigen::VectorXd beta(n);
  const double delta = 1.0 / (2.0 * others);
  for (std::size_t i = 0; i < n; ++i) {
    if (family.support() == Support::kCount) {
      beta[i] = 0.5 * std::log(std::max(d[i], 0.5) / others);
      continue;
    }
    const double rate = std::clamp(d[i] / others, delta, 1.0 - delta);
    const double logit = std::log(rate / (1.0 - rate));
    // logistic sd / normal sd ~ 1.7
    beta[i] = family.kind() == FamilyKind::kProbit ? 0.5 * logit / 1.7 : 0.5 * logit;
  }
  return beta;
}

BetaSolution solve_beta_given_gamma(const NetworkData& data, EdgeFamily family,
                                    const Eigen::VectorXd& gamma, const SolverConfig& config,
                                    const Eigen::VectorXd& beta_init) {
  config.validate();
  check_degrees(data, family);
  if (static_cast<std::size_t>(beta_init.size()) != data.n()) {
    throw DomainError("beta_init has the wrong length");
  }
  check_params(data, {beta_init, gamma});
  if (config.beta_update == BetaUpdate::kLogRatio && family.kind() != FamilyKind::kLogistic) {
    throw DomainError("the log-ratio beta update is only defined for the logistic family");
  }

  const Eigen::VectorXd offsets = covariate_offsets(data, gamma);
  const std::size_t n = data.n();
  const bool log_ratio = config.beta_update == BetaUpdate::kLogRatio;

  BetaSolution out;
  out.beta = beta_init;
  BetaPass cur = beta_pass(data, family, out.beta, offsets, !log_ratio);
  Eigen::VectorXd prev_sf, prev_f, prev_dir;
  for (int it = 0;; ++it) {
    out.iterations = it;
    out.residual = inf_norm(cur.f);
    if (out.residual <= config.tol_f) return out;
    if (!std::isfinite(out.residual)) {
      throw ConvergenceError("beta solver diverged", out.residual);
    }
    if (it == config.max_inner_beta) break;

    if (log_ratio) {
      out.beta = log_ratio_step(data, out.beta, offsets);
      cur = beta_pass(data, family, out.beta, offsets, false);
      continue;
    }

    // Direction S F, bent by Polak-Ribiere conjugation so small or badly
    // conditioned problems do not crawl. Step length maximizes the local
    // quadratic model of the potential, t = <d, F> / <d, (-V) d>.
    const Eigen::VectorXd sf = cur.f.cwiseQuotient(cur.diag);
    Eigen::VectorXd dir = sf;
    if (prev_dir.size() != 0 && it % static_cast<int>(n) != 0) {
      const double denom = prev_f.dot(prev_sf);
      const double pr = denom > 0.0 ? std::max(0.0, (cur.f - prev_f).dot(sf) / denom) : 0.0;
      dir += pr * prev_dir;
      if (!(dir.dot(cur.f) > 0.0)) dir = sf;
    }
    prev_sf = sf;
    prev_f = cur.f;
    double curvature = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j, ++k) {
        const double s = dir[i] + dir[j];
        curvature += cur.mu1[k] * s * s;
      }
    }
    double step = config.damping * dir.dot(cur.f) / curvature;
    if (!std::isfinite(step) || step <= 0.0) step = config.damping;

    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      Eigen::VectorXd trial = out.beta + step * dir;
      BetaPass next = beta_pass(data, family, trial, offsets, true);
      const double r = inf_norm(next.f);
      if (std::isfinite(r) && (r < out.residual || next.potential >= cur.potential)) {
        prev_dir = dir;
        out.beta = std::move(trial);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("beta solver stalled: no step reduces the residual", out.residual);
    }
  }
  throw ConvergenceError("beta solver hit max_inner_beta = " + std::to_string(config.max_inner_beta) +
                             " with ||F||_inf = " + std::to_string(out.residual),
                         out.residual);
}

Eigen::VectorXd profile_q_c(const NetworkData& data, EdgeFamily family, const Eigen::VectorXd& gamma,
                            const SolverConfig& config, const Eigen::VectorXd& beta_init) {
  const Eigen::VectorXd start = beta_init.size() == 0 ? initial_beta(data, family) : beta_init;
  const BetaSolution sol = solve_beta_given_gamma(data, family, gamma, config, start);
  return moment_residual_q(data, family, {sol.beta, gamma});
}

Eigen::MatrixXd profile_jacobian_h(const NetworkData& data, EdgeFamily family, const Params& params) {
  const ProfileBlocks b = profile_blocks(data, family, params);
  const auto llt = factor_neg_v(b.neg_v);
  // dQ/dgamma - C V^{-1} C' with V = -neg_v.
  const Eigen::MatrixXd solved = llt.solve(b.cross.transpose());
  Eigen::MatrixXd h = b.q_gamma + b.cross * solved;
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd bias_hat_b(const NetworkData& data, EdgeFamily family, const Params& params) {
  const Eigen::VectorXd pi = pair_indices(data, params);
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  Eigen::MatrixXd numer = Eigen::MatrixXd::Zero(p, n);
  Eigen::VectorXd denom = Eigen::VectorXd::Zero(n);
  const RowMatrix& z = data.covariates();
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const MuDerivs dv = family.mu_derivs(pi[k]);
      numer.col(i) += dv.d2 * z.row(k).transpose();
      numer.col(j) += dv.d2 * z.row(k).transpose();
      denom[i] += dv.d1;
      denom[j] += dv.d1;
    }
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(denom[i] > 0.0)) {
      throw DomainError("bias estimate undefined: sum of mu' is zero at node " + std::to_string(i));
    }
    b += numer.col(i) / denom[i];
  }
  return b / (2.0 * std::sqrt(pair_count_total(n)));
}

Eigen::VectorXd bias_correct_gamma(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& h,
                                   const Eigen::VectorXd& bias, std::size_t n) {
  if (h.rows() != gamma.size() || h.cols() != gamma.size() || bias.size() != gamma.size()) {
    throw DomainError("bias correction: dimension mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) throw SingularMatrixError("bias correction: H is singular");
  return gamma - std::sqrt(pair_count_total(n)) * lu.solve(bias);
}

Eigen::VectorXd bias_correct_gamma(const FitResult& fit) {
  return bias_correct_gamma(fit.params.gamma, fit.h_hat, fit.bias_hat, fit.n);
}

StandardErrors standard_errors(const NetworkData& data, EdgeFamily family, const Params& params) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const ProfileBlocks b = profile_blocks(data, family, params);
  const Eigen::VectorXd pi = pair_indices(data, params);
  const auto w = data.weights();

  StandardErrors out;
  out.se_beta.resize(n);
  Eigen::VectorXd var_sum = Eigen::VectorXd::Zero(n);
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double var = family.variance(pi[k]);
      var_sum[i] += var;
      var_sum[j] += var;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.se_beta[i] = std::sqrt(var_sum[i]) / b.neg_v(i, i);

  const auto llt = factor_neg_v(b.neg_v);
  // W = C V^{-1}; z~_ij = z_ij - W e_i - W e_j.
  const Eigen::MatrixXd w_proj = -llt.solve(b.cross.transpose()).transpose();
  Eigen::MatrixXd h = b.q_gamma + b.cross * (-w_proj.transpose());
  h = 0.5 * (h + h.transpose());
  check_h_invertible(h, b.q_gamma);

  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  const RowMatrix& z = data.covariates();
  k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double r = w[k] - family.mu(pi[k]);
      const Eigen::VectorXd zt = z.row(k).transpose() - w_proj.col(i) - w_proj.col(j);
      omega.noalias() += (r * r) * zt * zt.transpose();
    }
  }
  const Eigen::MatrixXd h_inv = h.inverse();
  out.gamma_covariance = h_inv * omega * h_inv.transpose();
  out.se_gamma = out.gamma_covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FitResult fit(const NetworkData& data, EdgeFamily family, const SolverConfig& config,
              const std::optional<Params>& init) {
  config.validate();
  if (data.n() < 3) throw DataError("estimation needs at least 3 nodes");
  check_degrees(data, family);

  FitResult result;
  result.family = family;
  result.n = data.n();
  Params params = init.value_or(Params{initial_beta(data, family), Eigen::VectorXd::Zero(data.p())});
  check_params(data, params);

  BetaSolution beta_sol;
  try {
    beta_sol = solve_beta_given_gamma(data, family, params.gamma, config, params.beta);
  } catch (const ConvergenceError& e) {
    result.params = params;
    result.message = e.what();
    result.f_residual = e.last_residual();
    return result;
  }
  params.beta = beta_sol.beta;
  Eigen::VectorXd q = moment_residual_q(data, family, params);
  double step_scale = 0.0;

  for (int outer = 0;; ++outer) {
    result.trace.push_back({outer, beta_sol.iterations, beta_sol.residual, inf_norm(q), step_scale, params.gamma});
    result.iterations = outer;
    if (beta_sol.residual <= config.tol_f && inf_norm(q) <= config.tol_q) {
      result.converged = true;
      break;
    }
    if (outer == config.max_outer) {
      result.message = "reached max_outer = " + std::to_string(config.max_outer);
      break;
    }

    const ProfileBlocks blocks = profile_blocks(data, family, params);
    const auto llt = factor_neg_v(blocks.neg_v);
    Eigen::MatrixXd h = blocks.q_gamma + blocks.cross * llt.solve(blocks.cross.transpose());
    h = 0.5 * (h + h.transpose());
    check_h_invertible(h, blocks.q_gamma);
    const Eigen::VectorXd newton = -h.ldlt().solve(q);

    const double potential = moment_potential(data, family, params);
    const double q_norm = inf_norm(q);
    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      Params trial{params.beta, params.gamma + t * newton};
      BetaSolution trial_sol;
      try {
        trial_sol = solve_beta_given_gamma(data, family, trial.gamma, config, params.beta);
      } catch (const ConvergenceError&) {
        continue;
      }
      trial.beta = trial_sol.beta;
      Eigen::VectorXd trial_q = moment_residual_q(data, family, trial);
      if (inf_norm(trial_q) < q_norm || moment_potential(data, family, trial) >= potential) {
        params = std::move(trial);
        beta_sol = std::move(trial_sol);
        q = std::move(trial_q);
        step_scale = t;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.message = "gamma line search failed to make progress";
      break;
    }
  }

  result.params = params;
  result.f_residual = beta_sol.residual;
  result.q_residual = inf_norm(q);
  result.gamma_bc = params.gamma;
  if (!result.converged) return result;

  result.h_hat = profile_jacobian_h(data, family, params);
  result.bias_hat = bias_hat_b(data, family, params);
  if (config.bias_correct) {
    result.gamma_bc = bias_correct_gamma(result);
    result.bias_corrected = true;
  }
  const StandardErrors se = standard_errors(data, family, params);
  result.se_beta = se.se_beta;
  result.se_gamma = se.se_gamma;

  const BalancedCheck cls = check_balanced_class(-beta_jacobian(data, family, params));
  result.diagnostics.m_n = cls.m_n;
  result.diagnostics.M_n = cls.M_n;
  result.diagnostics.kappa_n = kappa_n(data);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-result.h_hat / pair_count_total(data.n()),
                                                     Eigen::EigenvaluesOnly);
  result.diagnostics.lambda_min_hbar = eig.eigenvalues().minCoeff();
  return result;
}

}  // namespace netmoment
