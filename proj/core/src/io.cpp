#include "netmoment/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "netmoment/error.hpp"

namespace netmoment {
namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

double parse_real(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail(line_no, "cannot parse number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) fail(line_no, "non-finite number '" + std::string(field) + "'");
  return v;
}

std::size_t parse_node(std::string_view field, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail(line_no, "node id must be a non-negative integer, got '" + std::string(field) + "'");
  }
  return v;
}

// Reads the header and non-blank data lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::string>> rows;
};

CsvTable read_csv(std::istream& in, std::string_view what) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      for (auto f : split(line)) t.header.emplace_back(f);
      have_header = true;
      continue;
    }
    t.rows.emplace_back(line_no, line);
  }
  if (!have_header) throw DataError(std::string(what) + ": missing header row");
  return t;
}

void expect_header_prefix(const CsvTable& t, const std::vector<std::string>& prefix, std::string_view what) {
  bool ok = t.header.size() >= prefix.size();
  for (std::size_t c = 0; ok && c < prefix.size(); ++c) ok = t.header[c] == prefix[c];
  if (!ok) {
    std::string expected;
    for (const auto& p : prefix) expected += (expected.empty() ? "" : ",") + p;
    throw DataError(std::string(what) + ": header must start with '" + expected + "'");
  }
}

json vec_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(std::isfinite(v[i]) ? json(v[i]) : json(nullptr));
  }
  return arr;
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

std::vector<double> parse_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  for (auto f : split(value)) {
    if (f.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      throw DataError("study config: bad number '" + std::string(f) + "' for key '" + key + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw DataError("study config: key '" + key + "' has no value");
  return out;
}

double parse_scalar(const std::string& value, const std::string& key) {
  const auto list = parse_list(value, key);
  if (list.size() != 1) throw DataError("study config: key '" + key + "' takes a single value");
  return list.front();
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DataError("study config: key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

std::vector<EdgeRecord> read_edge_list_csv(std::istream& in) {
  const CsvTable t = read_csv(in, "edge list");
  expect_header_prefix(t, {"i", "j", "weight"}, "edge list");
  if (t.header.size() != 3) throw DataError("edge list: expected exactly the columns i,j,weight");
  std::vector<EdgeRecord> edges;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [line_no, line] : t.rows) {
    const auto f = split(line);
    if (f.size() != 3) fail(line_no, "expected 3 fields, got " + std::to_string(f.size()));
    EdgeRecord e{parse_node(f[0], line_no), parse_node(f[1], line_no), parse_real(f[2], line_no)};
    if (e.i == e.j) fail(line_no, "self-loop on node " + std::to_string(e.i) + " is not allowed");
    if (e.weight < 0.0) fail(line_no, "negative edge weight");
    const auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second) {
      fail(line_no, "duplicate pair (" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
    }
    edges.push_back(e);
  }
  return edges;
}

PairCovariateTable read_pair_covariates_csv(std::istream& in) {
  const CsvTable t = read_csv(in, "pair covariates");
  expect_header_prefix(t, {"i", "j"}, "pair covariates");
  if (t.header.size() < 3) throw DataError("pair covariates: need at least one covariate column after i,j");
  const std::size_t p = t.header.size() - 2;

  std::size_t max_id = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::vector<double>>> parsed;
  for (const auto& [line_no, line] : t.rows) {
    const auto f = split(line);
    if (f.size() != p + 2) fail(line_no, "expected " + std::to_string(p + 2) + " fields, got " + std::to_string(f.size()));
    const std::size_t i = parse_node(f[0], line_no);
    const std::size_t j = parse_node(f[1], line_no);
    if (i == j) fail(line_no, "covariates for a self-pair are not allowed");
    std::vector<double> row(p);
    for (std::size_t c = 0; c < p; ++c) row[c] = parse_real(f[c + 2], line_no);
    max_id = std::max({max_id, i, j});
    parsed.emplace_back(line_no, i, j, std::move(row));
  }
  if (parsed.empty()) throw DataError("pair covariates: no data rows");

  PairCovariateTable out;
  out.n = max_id + 1;
  out.names.assign(t.header.begin() + 2, t.header.end());
  out.z.resize(static_cast<Eigen::Index>(num_pairs(out.n)), static_cast<Eigen::Index>(p));
  std::vector<bool> filled(num_pairs(out.n), false);
  for (const auto& [line_no, i, j, row] : parsed) {
    const std::size_t k = pair_offset(i, j);
    if (filled[k]) fail(line_no, "duplicate pair (" + std::to_string(std::min(i, j)) + "," + std::to_string(std::max(i, j)) + ")");
    filled[k] = true;
    for (std::size_t c = 0; c < p; ++c) out.z(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = row[c];
  }
  for (std::size_t i = 1, k = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      if (!filled[k]) {
        throw DataError("pair covariates: missing pair (" + std::to_string(j) + "," + std::to_string(i) +
                        "); every pair of nodes 0.." + std::to_string(out.n - 1) + " must appear once");
      }
    }
  }
  return out;
}

Eigen::MatrixXd read_node_attributes_csv(std::istream& in) {
  const CsvTable t = read_csv(in, "node attributes");
  expect_header_prefix(t, {"node"}, "node attributes");
  if (t.header.size() < 2) throw DataError("node attributes: need at least one attribute column");
  const std::size_t q = t.header.size() - 1;
  std::map<std::size_t, std::vector<double>> rows;
  for (const auto& [line_no, line] : t.rows) {
    const auto f = split(line);
    if (f.size() != q + 1) fail(line_no, "expected " + std::to_string(q + 1) + " fields, got " + std::to_string(f.size()));
    const std::size_t node = parse_node(f[0], line_no);
    std::vector<double> row(q);
    for (std::size_t c = 0; c < q; ++c) row[c] = parse_real(f[c + 1], line_no);
    if (!rows.emplace(node, std::move(row)).second) fail(line_no, "duplicate node " + std::to_string(node));
  }
  if (rows.empty()) throw DataError("node attributes: no data rows");
  const std::size_t n = rows.rbegin()->first + 1;
  if (rows.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!rows.contains(i)) throw DataError("node attributes: missing attributes for node " + std::to_string(i));
    }
  }
  Eigen::MatrixXd attrs(n, q);
  for (const auto& [node, row] : rows) {
    for (std::size_t c = 0; c < q; ++c) attrs(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(c)) = row[c];
  }
  return attrs;
}

CovariateTransform parse_transform(std::string_view name) {
  if (name == "euclidean_distance") return CovariateTransform::kEuclideanDistance;
  if (name == "match_indicator") return CovariateTransform::kMatchIndicator;
  throw DataError("unknown covariate transform '" + std::string(name) +
                  "' (expected euclidean_distance or match_indicator)");
}

RowMatrix derive_pair_covariates(const Eigen::MatrixXd& node_attrs, CovariateTransform transform) {
  const std::size_t n = static_cast<std::size_t>(node_attrs.rows());
  if (n < 2) throw DataError("node attributes: need at least 2 nodes");
  if (node_attrs.cols() < 1) throw DataError("node attributes: need at least one attribute");
  if (!node_attrs.allFinite()) throw DataError("node attributes must be finite");
  RowMatrix z(static_cast<Eigen::Index>(num_pairs(n)), 1);
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const auto diff = node_attrs.row(i) - node_attrs.row(j);
      z(static_cast<Eigen::Index>(k), 0) = transform == CovariateTransform::kEuclideanDistance
                                               ? diff.norm()
                                               : (diff.cwiseAbs().maxCoeff() == 0.0 ? 1.0 : 0.0);
    }
  }
  return z;
}

NetworkData assemble_network(std::size_t n, const std::vector<EdgeRecord>& edges, RowMatrix covariates) {
  if (n < 2) throw DataError("network needs at least 2 nodes");
  std::vector<double> weights(num_pairs(n), 0.0);
  for (const EdgeRecord& e : edges) {
    if (e.i >= n || e.j >= n) {
      throw DataError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") references a node >= n = " +
                      std::to_string(n) + " implied by the covariates");
    }
    if (e.i == e.j) throw DataError("self-loops are not allowed");
    weights[pair_offset(e.i, e.j)] = e.weight;
  }
  return NetworkData(n, std::move(weights), std::move(covariates));
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_edge_list_csv(std::ostream& out, const NetworkData& data, bool include_zero_weights) {
  out << "i,j,weight\n";
  const auto w = data.weights();
  for (std::size_t i = 1, k = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      if (w[k] == 0.0 && !include_zero_weights) continue;
      out << i << ',' << j << ',' << format_double(w[k]) << '\n';
    }
  }
}

void write_pair_covariates_csv(std::ostream& out, const NetworkData& data) {
  out << "i,j";
  for (std::size_t c = 0; c < data.p(); ++c) out << ",z" << c + 1;
  out << '\n';
  const RowMatrix& z = data.covariates();
  for (std::size_t i = 1, k = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      out << i << ',' << j;
      for (Eigen::Index c = 0; c < z.cols(); ++c) out << ',' << format_double(z(static_cast<Eigen::Index>(k), c));
      out << '\n';
    }
  }
}

std::string fit_result_to_json(const FitResult& fit) {
  json j;
  j["family"] = std::string(fit.family.name());
  j["n"] = fit.n;
  j["p"] = fit.params.gamma.size();
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["message"] = fit.message;
  j["residuals"] = {{"f_inf", num_json(fit.f_residual)}, {"q_inf", num_json(fit.q_residual)}};
  j["beta"] = vec_json(fit.params.beta);
  j["gamma"] = vec_json(fit.params.gamma);
  j["gamma_bc"] = fit.converged && fit.bias_corrected ? vec_json(fit.gamma_bc) : json(nullptr);
  j["se_beta"] = vec_json(fit.se_beta);
  j["se_gamma"] = vec_json(fit.se_gamma);
  j["bias_hat"] = vec_json(fit.bias_hat);
  j["h_hat"] = mat_json(fit.h_hat);
  j["diagnostics"] = {{"m_n", num_json(fit.diagnostics.m_n)},
                      {"M_n", num_json(fit.diagnostics.M_n)},
                      {"kappa_n", num_json(fit.diagnostics.kappa_n)},
                      {"lambda_min_hbar", num_json(fit.diagnostics.lambda_min_hbar)}};
  json trace = json::array();
  for (const TraceEntry& t : fit.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"beta_iterations", t.beta_iterations},
                     {"f_inf", num_json(t.f_residual)},
                     {"q_inf", num_json(t.q_residual)},
                     {"step_scale", num_json(t.step_scale)},
                     {"gamma", vec_json(t.gamma)}});
  }
  j["trace"] = std::move(trace);
  return j.dump(2);
}

void write_fit_result_csv(std::ostream& out, const FitResult& fit) {
  auto at = [](const Eigen::VectorXd& v, Eigen::Index i) {
    return i < v.size() ? format_double(v[i]) : std::string();
  };
  out << "parameter,index,estimate,estimate_bc,se\n";
  for (Eigen::Index i = 0; i < fit.params.beta.size(); ++i) {
    out << "beta," << i << ',' << format_double(fit.params.beta[i]) << ",," << at(fit.se_beta, i) << '\n';
  }
  for (Eigen::Index c = 0; c < fit.params.gamma.size(); ++c) {
    out << "gamma," << c << ',' << format_double(fit.params.gamma[c]) << ','
        << (fit.bias_corrected ? at(fit.gamma_bc, c) : std::string()) << ',' << at(fit.se_gamma, c) << '\n';
  }
}

std::string truth_to_json(const Params& truth) {
  json j;
  j["beta"] = vec_json(truth.beta);
  j["gamma"] = vec_json(truth.gamma);
  return j.dump(2);
}

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig cfg;
  GenSpec base;
  std::vector<std::size_t> sizes;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");
    try {
      if (key == "family") {
        base.family = EdgeFamily::parse(value);
      } else if (key == "n") {
        for (double v : parse_list(value, key)) {
          if (v < 3 || v != std::floor(v)) fail(line_no, "n values must be integers >= 3");
          sizes.push_back(static_cast<std::size_t>(v));
        }
      } else if (key == "replicates") {
        const double v = parse_scalar(value, key);
        if (v < 1 || v != std::floor(v)) fail(line_no, "replicates must be an integer >= 1");
        cfg.options.replicates = static_cast<std::size_t>(v);
      } else if (key == "beta_range") {
        base.beta_range = parse_scalar(value, key);
      } else if (key == "gamma") {
        const auto g = parse_list(value, key);
        base.gamma_star = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
      } else if (key == "covariates") {
        if (value == "iid_pm1") base.covariate_rule = CovariateRule::kIidPm1;
        else if (value == "iid_uniform") base.covariate_rule = CovariateRule::kIidUniform;
        else if (value == "node_distance") base.covariate_rule = CovariateRule::kNodeDistance;
        else fail(line_no, "unknown covariate rule '" + value + "' (iid_pm1, iid_uniform, node_distance)");
      } else if (key == "covariate_low") {
        base.covariate_low = parse_scalar(value, key);
      } else if (key == "covariate_high") {
        base.covariate_high = parse_scalar(value, key);
      } else if (key == "dependence") {
        if (value == "independent") base.dependence = Dependence::kIndependent;
        else if (value == "equicorrelated_probit") base.dependence = Dependence::kEquicorrelatedProbit;
        else fail(line_no, "unknown dependence '" + value + "' (independent, equicorrelated_probit)");
      } else if (key == "rho") {
        base.rho = parse_scalar(value, key);
      } else if (key == "noise_free") {
        base.noise_free = parse_bool(value, key);
      } else if (key == "seed") {
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (ec != std::errc() || ptr != value.data() + value.size()) fail(line_no, "seed must be a non-negative integer");
        base.seed = seed;
      } else if (key == "nominal_level") {
        cfg.options.nominal_level = parse_scalar(value, key);
      } else if (key == "max_regenerations") {
        cfg.options.max_regenerations = static_cast<int>(parse_scalar(value, key));
      } else if (key == "threads") {
        cfg.options.threads = static_cast<unsigned>(parse_scalar(value, key));
      } else if (key == "tol_f") {
        cfg.solver.tol_f = parse_scalar(value, key);
      } else if (key == "tol_q") {
        cfg.solver.tol_q = parse_scalar(value, key);
      } else if (key == "max_outer") {
        cfg.solver.max_outer = static_cast<int>(parse_scalar(value, key));
      } else if (key == "max_inner_beta") {
        cfg.solver.max_inner_beta = static_cast<int>(parse_scalar(value, key));
      } else if (key == "damping") {
        cfg.solver.damping = parse_scalar(value, key);
      } else {
        fail(line_no, "unknown key '" + key + "'");
      }
    } catch (const DomainError& e) {
      fail(line_no, e.what());
    }
  }
  if (sizes.empty()) throw DataError("study config: key 'n' is required");
  for (std::size_t n : sizes) {
    GenSpec spec = base;
    spec.n = n;
    try {
      spec.validate();
    } catch (const DomainError& e) {
      throw DataError(std::string("study config: ") + e.what());
    }
    cfg.grid.push_back(std::move(spec));
  }
  try {
    cfg.solver.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("study config: ") + e.what());
  }
  return cfg;
}

std::string mc_report_to_json(const McStudyReport& report) {
  json j;
  j["nominal_level"] = report.nominal_level;
  j["coverage_defined"] = report.coverage_defined;
  j["beta_rate_slope"] = num_json(report.beta_rate_slope);
  j["gamma_bc_rate_slope"] = num_json(report.gamma_bc_rate_slope);
  json summaries = json::array();
  for (const McSummary& s : report.summaries) {
    json cov = json::array(), cov_bc = json::array();
    for (double c : s.coverage) cov.push_back(num_json(c));
    for (double c : s.coverage_bc) cov_bc.push_back(num_json(c));
    summaries.push_back({{"n", s.n},
                         {"successes", s.successes},
                         {"failures", s.failures},
                         {"median_beta_error", num_json(s.median_beta_error)},
                         {"median_gamma_error", num_json(s.median_gamma_error)},
                         {"median_gamma_bc_error", num_json(s.median_gamma_bc_error)},
                         {"coverage", cov},
                         {"coverage_bc", cov_bc},
                         {"median_se_gamma_first", num_json(s.median_se_gamma_first)},
                         {"sd_gamma_bc_first", num_json(s.sd_gamma_bc_first)}});
  }
  j["summaries"] = std::move(summaries);
  json records = json::array();
  for (const McRecord& r : report.records) {
    records.push_back({{"n", r.n},
                       {"replicate", r.replicate},
                       {"attempts", r.attempts},
                       {"beta_error", num_json(r.beta_error)},
                       {"gamma_error", num_json(r.gamma_error)},
                       {"gamma_bc_error", num_json(r.gamma_bc_error)},
                       {"gamma_hat", r.gamma_hat},
                       {"gamma_bc", r.gamma_bc},
                       {"se_gamma", r.se_gamma},
                       {"covered", r.covered},
                       {"covered_bc", r.covered_bc}});
  }
  j["records"] = std::move(records);
  json failures = json::array();
  for (const McFailure& f : report.failures) {
    failures.push_back({{"n", f.n}, {"replicate", f.replicate}, {"reason", f.reason}});
  }
  j["failures"] = std::move(failures);
  return j.dump(2);
}

void write_mc_report_csv(std::ostream& out, const McStudyReport& report) {
  std::size_t p = 0;
  for (const McRecord& r : report.records) p = std::max(p, r.gamma_hat.size());
  out << "n,replicate,status,attempts,beta_error,gamma_error,gamma_bc_error";
  for (std::size_t c = 0; c < p; ++c) {
    out << ",gamma_hat" << c + 1 << ",gamma_bc" << c + 1 << ",se_gamma" << c + 1 << ",covered" << c + 1
        << ",covered_bc" << c + 1;
  }
  out << '\n';
  for (const McRecord& r : report.records) {
    out << r.n << ',' << r.replicate << ",ok," << r.attempts << ',' << format_double(r.beta_error) << ','
        << format_double(r.gamma_error) << ',' << format_double(r.gamma_bc_error);
    for (std::size_t c = 0; c < p; ++c) {
      out << ',' << format_double(r.gamma_hat[c]) << ',' << format_double(r.gamma_bc[c]) << ','
          << format_double(r.se_gamma[c]) << ',' << (r.covered[c] ? 1 : 0) << ',' << (r.covered_bc[c] ? 1 : 0);
    }
    out << '\n';
  }
  for (const McFailure& f : report.failures) {
    out << f.n << ',' << f.replicate << ",failed,,,,";
    for (std::size_t c = 0; c < p; ++c) out << ",,,,,";
    out << '\n';
  }
}

}  // namespace netmoment
