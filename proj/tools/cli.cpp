#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "netmoment/netmoment.hpp"

namespace netmoment::cli {
namespace {

namespace fs = std::filesystem;

struct FitOptions {
  std::string family;
  std::string edges;
  std::string pair_covariates;
  std::string node_attrs;
  std::string transform;
  double tol_f = SolverConfig{}.tol_f;
  double tol_q = SolverConfig{}.tol_q;
  int max_outer = SolverConfig{}.max_outer;
  int max_inner_beta = SolverConfig{}.max_inner_beta;
  double damping = SolverConfig{}.damping;
  bool no_bias_correct = false;
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string format = "json";
};

struct SimulateOptions {
  std::string family;
  std::size_t nodes = 0;
  std::vector<double> gamma{0.0};
  double beta_range = 1.0;
  std::string covariates = "iid_pm1";
  double covariate_low = 0.0;
  double covariate_high = 1.0;
  std::string dependence = "independent";
  double rho = 0.0;
  bool noise_free = false;
  std::uint64_t seed = 0;
  std::string out;
};

struct StudyOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = "-";
  std::string format = "json";
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

// Writes to `path`, or to `out` when path is "-".
template <typename Writer>
void emit(const std::string& path, std::ostream& out, Writer&& write) {
  if (path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw DataError("cannot open '" + path + "' for writing");
  write(file);
  if (!file) throw DataError("failed writing '" + path + "'");
}

int run_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const EdgeFamily family = EdgeFamily::parse(o.family);
  SolverConfig config;
  config.tol_f = o.tol_f;
  config.tol_q = o.tol_q;
  config.max_outer = o.max_outer;
  config.max_inner_beta = o.max_inner_beta;
  config.damping = o.damping;
  config.bias_correct = !o.no_bias_correct;
  config.validate();

  std::size_t n = 0;
  RowMatrix z;
  if (!o.pair_covariates.empty()) {
    auto in = open_input(o.pair_covariates);
    PairCovariateTable table = read_pair_covariates_csv(in);
    n = table.n;
    z = std::move(table.z);
  } else {
    auto in = open_input(o.node_attrs);
    const Eigen::MatrixXd attrs = read_node_attributes_csv(in);
    n = static_cast<std::size_t>(attrs.rows());
    z = derive_pair_covariates(attrs, parse_transform(o.transform));
  }
  auto edges_in = open_input(o.edges);
  const NetworkData data = assemble_network(n, read_edge_list_csv(edges_in), std::move(z));
  validate_support(data, family);

  const FitResult result = fit(data, family, config);
  emit(o.out, out, [&](std::ostream& s) {
    if (o.format == "csv") {
      write_fit_result_csv(s, result);
    } else {
      s << fit_result_to_json(result) << '\n';
    }
  });
  if (!result.converged) {
    err << "error: fit did not converge (" << result.message << "; ||F||_inf=" << result.f_residual
        << ", ||Q||_inf=" << result.q_residual << "); the trace is in the output\n";
    return kNotConverged;
  }
  return kOk;
}

int run_simulate(const SimulateOptions& o, std::ostream& out) {
  GenSpec spec;
  spec.n = o.nodes;
  spec.family = EdgeFamily::parse(o.family);
  spec.gamma_star = Eigen::Map<const Eigen::VectorXd>(o.gamma.data(), static_cast<Eigen::Index>(o.gamma.size()));
  spec.beta_range = o.beta_range;
  if (o.covariates == "iid_pm1") spec.covariate_rule = CovariateRule::kIidPm1;
  else if (o.covariates == "iid_uniform") spec.covariate_rule = CovariateRule::kIidUniform;
  else spec.covariate_rule = CovariateRule::kNodeDistance;
  spec.covariate_low = o.covariate_low;
  spec.covariate_high = o.covariate_high;
  spec.dependence = o.dependence == "independent" ? Dependence::kIndependent : Dependence::kEquicorrelatedProbit;
  spec.rho = o.rho;
  spec.noise_free = o.noise_free;
  spec.seed = o.seed;

  const GeneratedNetwork gen = generate_with_truth(spec);
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + o.out + "': " + ec.message());
  emit((dir / "edges.csv").string(), out, [&](std::ostream& s) { write_edge_list_csv(s, gen.data); });
  emit((dir / "covariates.csv").string(), out, [&](std::ostream& s) { write_pair_covariates_csv(s, gen.data); });
  emit((dir / "truth.json").string(), out, [&](std::ostream& s) { s << truth_to_json(gen.truth) << '\n'; });
  return kOk;
}

int run_study(const StudyOptions& o, std::ostream& out) {
  auto in = open_input(o.config);
  StudyConfig cfg = parse_study_config(in);
  if (o.seed) {
    for (GenSpec& spec : cfg.grid) spec.seed = *o.seed;
  }
  if (o.threads) cfg.options.threads = *o.threads;
  const McStudyReport report = run_mc_study(cfg.grid, cfg.options, cfg.solver);
  emit(o.out, out, [&](std::ostream& s) {
    if (o.format == "csv") {
      write_mc_report_csv(s, report);
    } else {
      s << mc_report_to_json(report) << '\n';
    }
  });
  return kOk;
}

const std::vector<std::string> kFamilies{"logistic", "poisson", "probit"};
const std::vector<std::string> kFormats{"json", "csv"};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moment estimation of degree heterogeneity and homophily in undirected networks", "netmoment"};
  app.require_subcommand(1);

  FitOptions fo;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate beta and gamma from an edge list and covariates");
  fit_cmd->add_option("--family", fo.family, "Edge family")->required()->check(CLI::IsMember(kFamilies));
  fit_cmd->add_option("--edges", fo.edges, "Edge list CSV (i,j,weight)")->required();
  auto* pair_opt = fit_cmd->add_option("--pair-covariates", fo.pair_covariates, "Pair covariate CSV (i,j,z1,...)");
  auto* attr_opt = fit_cmd->add_option("--node-attrs", fo.node_attrs, "Node attribute CSV (node,x1,...)");
  auto* transform_opt = fit_cmd->add_option("--transform", fo.transform, "Covariate transform for --node-attrs")
                            ->check(CLI::IsMember({"euclidean_distance", "match_indicator"}));
  pair_opt->excludes(attr_opt);
  attr_opt->needs(transform_opt);
  transform_opt->needs(attr_opt);
  fit_cmd->add_option("--tol-f", fo.tol_f, "Tolerance on ||F||_inf");
  fit_cmd->add_option("--tol-q", fo.tol_q, "Tolerance on ||Q_c||_inf");
  fit_cmd->add_option("--max-outer", fo.max_outer, "Maximum outer (gamma) iterations");
  fit_cmd->add_option("--max-inner-beta", fo.max_inner_beta, "Maximum beta iterations per gamma");
  fit_cmd->add_option("--damping", fo.damping, "Scale on the beta step, in (0, 1]");
  fit_cmd->add_flag("--no-bias-correct", fo.no_bias_correct, "Skip the analytical bias correction");
  fit_cmd->add_option("--seed", fo.seed, "Accepted for symmetry with other subcommands; fitting is deterministic");
  fit_cmd->add_option("--out", fo.out, "Output path ('-' for stdout)");
  fit_cmd->add_option("--format", fo.format, "Output format")->check(CLI::IsMember(kFormats));

  SimulateOptions so;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a network with known parameters");
  sim_cmd->add_option("--family", so.family, "Edge family")->required()->check(CLI::IsMember(kFamilies));
  sim_cmd->add_option("--nodes", so.nodes, "Number of nodes")->required()->check(CLI::Range(2, 1 << 20));
  sim_cmd->add_option("--gamma", so.gamma, "True homophily coefficients")->delimiter(',');
  sim_cmd->add_option("--beta-range", so.beta_range, "beta*_i ~ U[-L, L]");
  sim_cmd->add_option("--covariates", so.covariates, "Covariate rule")
      ->check(CLI::IsMember({"iid_pm1", "iid_uniform", "node_distance"}));
  sim_cmd->add_option("--covariate-low", so.covariate_low, "Lower bound for uniform covariates/positions");
  sim_cmd->add_option("--covariate-high", so.covariate_high, "Upper bound for uniform covariates/positions");
  sim_cmd->add_option("--dependence", so.dependence, "Dyad dependence")
      ->check(CLI::IsMember({"independent", "equicorrelated_probit"}));
  sim_cmd->add_option("--rho", so.rho, "Latent correlation for equicorrelated_probit");
  sim_cmd->add_flag("--noise-free", so.noise_free, "Write a_ij = mu(pi*_ij) instead of a draw");
  sim_cmd->add_option("--seed", so.seed, "Generator seed");
  sim_cmd->add_option("--out", so.out, "Output directory for edges.csv, covariates.csv, truth.json")->required();

  StudyOptions mo;
  CLI::App* mc_cmd = app.add_subcommand("mc-study", "Run a Monte Carlo study from a config file");
  mc_cmd->add_option("--config", mo.config, "Study config (key = value)")->required();
  mc_cmd->add_option("--seed", mo.seed, "Override the config seed");
  mc_cmd->add_option("--threads", mo.threads, "Override NETMOMENT_THREADS");
  mc_cmd->add_option("--out", mo.out, "Output path ('-' for stdout)");
  mc_cmd->add_option("--format", mo.format, "Output format")->check(CLI::IsMember(kFormats));

  std::vector<const char*> argv{"netmoment"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << " (run with --help for usage)\n";
    return kDataError;
  }

  try {
    if (fit_cmd->parsed()) {
      if (fo.pair_covariates.empty() && fo.node_attrs.empty()) {
        err << "error: fit needs --pair-covariates PATH or --node-attrs PATH --transform NAME\n";
        return kDataError;
      }
      return run_fit(fo, out, err);
    }
    if (sim_cmd->parsed()) return run_simulate(so, out);
    if (mc_cmd->parsed()) return run_study(mo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kDataError;
}

}  // namespace netmoment::cli
