#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "netmoment/estimator.hpp"
#include "netmoment/graph_core.hpp"
#include "netmoment/simulator.hpp"

namespace netmoment {

// CSV dialect: comma separated, '.' decimal point, mandatory header row,
// 0-based node ids. All readers throw DataError with the offending line.

struct EdgeRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;
};

/// Header `i,j,weight`. Rejects self-loops and duplicate unordered pairs.
std::vector<EdgeRecord> read_edge_list_csv(std::istream& in);

struct PairCovariateTable {
  std::size_t n = 0;
  std::vector<std::string> names;
  RowMatrix z;  // pair_offset order
};

/// Header `i,j,z1,...,zp`. Every unordered pair of nodes 0..n-1 must appear
/// exactly once, where n is one more than the largest id.
PairCovariateTable read_pair_covariates_csv(std::istream& in);

/// Header `node,x1,...,xq`; nodes 0..n-1 each exactly once, any row order.
Eigen::MatrixXd read_node_attributes_csv(std::istream& in);

enum class CovariateTransform { kEuclideanDistance, kMatchIndicator };

CovariateTransform parse_transform(std::string_view name);

/// One scalar covariate per pair from node attributes: Euclidean distance
/// between attribute vectors, or 1 when they are identical and 0 otherwise.
RowMatrix derive_pair_covariates(const Eigen::MatrixXd& node_attrs, CovariateTransform transform);

/// Dense network from a sparse edge list (absent pairs have weight 0).
NetworkData assemble_network(std::size_t n, const std::vector<EdgeRecord>& edges, RowMatrix covariates);

/// Writes pairs with nonzero weight (or all pairs) as `i,j,weight`, i > j,
/// in pair order, with shortest round-trip formatting.
void write_edge_list_csv(std::ostream& out, const NetworkData& data, bool include_zero_weights = false);
void write_pair_covariates_csv(std::ostream& out, const NetworkData& data);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

std::string fit_result_to_json(const FitResult& fit);
/// One row per parameter: `parameter,index,estimate,estimate_bc,se`.
void write_fit_result_csv(std::ostream& out, const FitResult& fit);

std::string truth_to_json(const Params& truth);

/// Declarative Monte Carlo study: one GenSpec per grid value of n.
struct StudyConfig {
  std::vector<GenSpec> grid;
  McOptions options;
  SolverConfig solver;
};

/// `key = value` lines, '#' comments. Lists are comma separated.
/// Keys: family, n, replicates, beta_range, gamma, covariates
/// (iid_pm1 | iid_uniform | node_distance), covariate_low, covariate_high,
/// dependence (independent | equicorrelated_probit), rho, noise_free, seed,
/// nominal_level, max_regenerations, threads, tol_f, tol_q, max_outer,
/// max_inner_beta, damping.
StudyConfig parse_study_config(std::istream& in);

std::string mc_report_to_json(const McStudyReport& report);
/// One row per successful replicate, then one per failure.
void write_mc_report_csv(std::ostream& out, const McStudyReport& report);

}  // namespace netmoment
