#include "netmoment/graph_core.hpp"

#include <cmath>
#include <string>

#include "netmoment/error.hpp"

namespace netmoment {

NetworkData::NetworkData(std::size_t n, std::vector<double> weights, RowMatrix covariates)
    : n_(n), weights_(std::move(weights)), covariates_(std::move(covariates)) {
  if (n_ < 2) throw DataError("network needs at least 2 nodes");
  if (weights_.size() != num_pairs(n_)) {
    throw DataError("expected " + std::to_string(num_pairs(n_)) + " pair weights, got " +
                    std::to_string(weights_.size()));
  }
  if (static_cast<std::size_t>(covariates_.rows()) != num_pairs(n_)) {
    throw DataError("expected " + std::to_string(num_pairs(n_)) + " covariate rows, got " +
                    std::to_string(covariates_.rows()));
  }
  if (covariates_.cols() < 1) throw DataError("at least one pair covariate is required");
  for (double w : weights_) {
    if (!std::isfinite(w)) throw DataError("edge weights must be finite");
  }
  if (!covariates_.allFinite()) throw DataError("pair covariates must be finite");
  degrees_ = netmoment::degrees(*this);
}

double NetworkData::weight(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  return weights_[pair_offset(i, j)];
}

Eigen::MatrixXd NetworkData::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 1; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      a(i, j) = a(j, i) = weights_[pair_offset(i, j)];
    }
  }
  return a;
}

NetworkData NetworkData::with_weights(std::vector<double> weights) const {
  return NetworkData(n_, std::move(weights), covariates_);
}

NetworkData NetworkData::with_covariates(RowMatrix covariates) const {
  return NetworkData(n_, weights_, std::move(covariates));
}

Eigen::VectorXd degrees(const NetworkData& data) {
  const std::size_t n = data.n();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  const auto w = data.weights();
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      d[i] += w[k];
      d[j] += w[k];
    }
  }
  return d;
}

double kappa_n(const NetworkData& data) {
  if (data.p() == 0 || data.pair_count() == 0) throw DataError("kappa_n needs non-empty covariates");
  return data.covariates().cwiseAbs().maxCoeff();
}

void validate_support(const NetworkData& data, EdgeFamily family) {
  const auto w = data.weights();
  const bool binary = family.support() == Support::kBinary;
  for (std::size_t i = 1, k = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      if (w[k] < 0.0 || (binary && w[k] > 1.0)) {
        throw DataError("weight " + std::to_string(w[k]) + " on pair (" + std::to_string(i) + "," +
                        std::to_string(j) + ") is outside the support of the " +
                        std::string(family.name()) + " family");
      }
    }
  }
}

BalancedCheck check_balanced_class(const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols()) throw DomainError("balanced-class check needs a square matrix");
  const Eigen::Index n = v.rows();
  if (n < 2) throw DomainError("balanced-class check needs n >= 2");

  BalancedCheck out;
  out.m_n = std::numeric_limits<double>::infinity();
  out.M_n = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      out.m_n = std::min(out.m_n, v(i, j));
      out.M_n = std::max(out.M_n, v(i, j));
    }
  }
  if (!(out.m_n > 0.0)) return out;

  const double tol = static_cast<double>(n) * out.M_n * 1e-10;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = v.row(i).sum() - v(i, i);
    if (std::fabs(v(i, i) - off) > tol) return out;
  }
  out.is_member = true;
  return out;
}

Eigen::DiagonalMatrix<double, Eigen::Dynamic> diag_inverse_approx(const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols()) throw DomainError("diag_inverse_approx needs a square matrix");
  Eigen::VectorXd s(v.rows());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    if (!(v(i, i) > 0.0)) {
      throw DomainError("diag_inverse_approx: non-positive diagonal at row " + std::to_string(i));
    }
    s[i] = 1.0 / v(i, i);
  }
  return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(s);
}

Eigen::MatrixXd sample_balanced_matrix(std::size_t n, double lo, double hi, Rng& rng) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) v(i, j) = v(j, i) = rng.uniform(lo, hi);
  }
  for (std::size_t i = 0; i < n; ++i) v(i, i) = v.row(i).sum();
  return v;
}

}  // namespace netmoment
