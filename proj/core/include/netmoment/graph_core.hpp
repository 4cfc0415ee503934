#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netmoment/edge_models.hpp"

namespace netmoment {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unordered pair (i, j), i > j, stored at the row-major lower-triangle
/// offset i(i-1)/2 + j. Pairs are visited in that order everywhere.
constexpr std::size_t pair_offset(std::size_t i, std::size_t j) noexcept {
  if (i < j) std::swap(i, j);
  return i * (i - 1) / 2 + j;
}

constexpr std::size_t num_pairs(std::size_t n) noexcept { return n * (n - 1) / 2; }

/// Undirected network with pair covariates. Immutable after construction.
///
/// Weights and covariates are dense over all n(n-1)/2 unordered pairs; the
/// degree sequence is computed once from the weights.
class NetworkData {
 public:
  /// `weights` has one entry per pair in pair_offset order; `covariates` has
  /// one row per pair and p >= 1 columns. Throws DataError on size mismatch
  /// or non-finite entries.
  NetworkData(std::size_t n, std::vector<double> weights, RowMatrix covariates);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }
  std::size_t pair_count() const noexcept { return weights_.size(); }

  double weight(std::size_t i, std::size_t j) const;
  std::span<const double> weights() const noexcept { return weights_; }

  const RowMatrix& covariates() const noexcept { return covariates_; }
  auto covariate(std::size_t i, std::size_t j) const { return covariates_.row(pair_offset(i, j)); }

  const Eigen::VectorXd& degrees() const noexcept { return degrees_; }

  /// Dense symmetric adjacency with zero diagonal.
  Eigen::MatrixXd adjacency() const;

  /// Same covariates, different weights; used for noise-free fixtures.
  NetworkData with_weights(std::vector<double> weights) const;
  NetworkData with_covariates(RowMatrix covariates) const;

 private:
  std::size_t n_;
  std::vector<double> weights_;
  RowMatrix covariates_;
  Eigen::VectorXd degrees_;
};

/// d_i = sum_{j != i} a_ij, recomputed from the weights.
Eigen::VectorXd degrees(const NetworkData& data);

/// max over pairs of ||z_ij||_inf. Throws DataError when p == 0.
double kappa_n(const NetworkData& data);

/// Weights must lie in [0, 1] for binary families and be >= 0 for counts.
/// Fractional values are allowed so exact-moment fixtures can be fitted.
void validate_support(const NetworkData& data, EdgeFamily family);

struct BalancedCheck {
  bool is_member = false;
  double m_n = 0.0;  // min off-diagonal
  double M_n = 0.0;  // max off-diagonal
};

/// Membership in the diagonally balanced class: every off-diagonal entry
/// strictly positive and v_ii = sum_{j != i} v_ij within n * M_n * 1e-10.
BalancedCheck check_balanced_class(const Eigen::MatrixXd& v);

/// S = diag(1/v_11, ..., 1/v_nn). Throws DomainError on a non-positive diagonal.
Eigen::DiagonalMatrix<double, Eigen::Dynamic> diag_inverse_approx(const Eigen::MatrixXd& v);

/// Symmetric member of the balanced class with off-diagonals iid U[lo, hi].
Eigen::MatrixXd sample_balanced_matrix(std::size_t n, double lo, double hi, Rng& rng);

}  // namespace netmoment
