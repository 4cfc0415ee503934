#include "netmoment/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "netmoment/error.hpp"

namespace netmoment {
namespace {

constexpr std::uint64_t kReplicateTag = 0x6E65746D6F6D656Eull;  // "netmomen"

RowMatrix draw_covariates(const GenSpec& spec, Rng& rng) {
  const std::size_t n = spec.n;
  const std::size_t pairs = num_pairs(n);
  const auto p = spec.gamma_star.size();
  RowMatrix z(static_cast<Eigen::Index>(pairs), p);
  switch (spec.covariate_rule) {
    case CovariateRule::kIidPm1:
      for (Eigen::Index k = 0; k < z.rows(); ++k) {
        for (Eigen::Index c = 0; c < p; ++c) z(k, c) = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
      break;
    case CovariateRule::kIidUniform:
      for (Eigen::Index k = 0; k < z.rows(); ++k) {
        for (Eigen::Index c = 0; c < p; ++c) z(k, c) = rng.uniform(spec.covariate_low, spec.covariate_high);
      }
      break;
    case CovariateRule::kNodeDistance: {
      Eigen::MatrixXd pos(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        pos(i, 0) = rng.uniform(spec.covariate_low, spec.covariate_high);
        pos(i, 1) = rng.uniform(spec.covariate_low, spec.covariate_high);
      }
      std::size_t k = 0;
      for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j, ++k) z(k, 0) = (pos.row(i) - pos.row(j)).norm();
      }
      break;
    }
  }
  return z;
}

double normal_quantile(double prob) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct ReplicateOutcome {
  std::optional<McRecord> record;
  std::optional<McFailure> failure;
};

ReplicateOutcome run_replicate(const GenSpec& base, std::size_t replicate, const McOptions& options,
                               const SolverConfig& config, double z_crit) {
  ReplicateOutcome out;
  std::string last_reason;
  for (int attempt = 0; attempt <= options.max_regenerations; ++attempt) {
    GenSpec spec = base;
    spec.stream = derive_stream(kReplicateTag ^ base.stream ^ base.n, replicate,
                                static_cast<std::uint64_t>(attempt));
    const GeneratedNetwork gen = generate_with_truth(spec);
    FitResult result;
    try {
      result = fit(gen.data, spec.family, config);
    } catch (const DegenerateDegreesError& e) {
      last_reason = e.what();
      continue;
    } catch (const Error& e) {
      out.failure = McFailure{base.n, replicate, e.what()};
      return out;
    }
    if (!result.converged) {
      out.failure = McFailure{base.n, replicate, "not converged: " + result.message};
      return out;
    }

    McRecord rec;
    rec.n = base.n;
    rec.replicate = replicate;
    rec.attempts = attempt + 1;
    rec.beta_error = (result.params.beta - gen.truth.beta).lpNorm<Eigen::Infinity>();
    rec.gamma_error = (result.params.gamma - gen.truth.gamma).lpNorm<Eigen::Infinity>();
    rec.gamma_bc_error = (result.gamma_bc - gen.truth.gamma).lpNorm<Eigen::Infinity>();
    for (Eigen::Index c = 0; c < gen.truth.gamma.size(); ++c) {
      const double se = result.se_gamma[c];
      const double truth = gen.truth.gamma[c];
      rec.gamma_hat.push_back(result.params.gamma[c]);
      rec.gamma_bc.push_back(result.gamma_bc[c]);
      rec.se_gamma.push_back(se);
      rec.covered.push_back(std::fabs(result.params.gamma[c] - truth) <= z_crit * se);
      rec.covered_bc.push_back(std::fabs(result.gamma_bc[c] - truth) <= z_crit * se);
    }
    out.record = std::move(rec);
    return out;
  }
  out.failure = McFailure{base.n, replicate,
                          "degenerate degrees after " + std::to_string(options.max_regenerations) +
                              " regenerations: " + last_reason};
  return out;
}

}  // namespace

void GenSpec::validate() const {
  if (n < 2) throw DomainError("generator needs n >= 2");
  if (gamma_star.size() < 1) throw DomainError("gamma_star must have at least one entry");
  if (!gamma_star.allFinite()) throw DomainError("gamma_star must be finite");
  if (beta_star.size() != 0) {
    if (static_cast<std::size_t>(beta_star.size()) != n) throw DomainError("beta_star must have length n");
    if (!beta_star.allFinite()) throw DomainError("beta_star must be finite");
  } else if (!std::isfinite(beta_range) || beta_range < 0.0) {
    throw DomainError("beta_range must be finite and >= 0");
  }
  if (covariate_rule == CovariateRule::kNodeDistance && gamma_star.size() != 1) {
    throw DomainError("node_distance covariates are scalar: gamma_star must have length 1");
  }
  if (covariate_rule != CovariateRule::kIidPm1 && !(covariate_low <= covariate_high)) {
    throw DomainError("covariate range must satisfy low <= high");
  }
  if (dependence == Dependence::kEquicorrelatedProbit) {
    if (family.kind() != FamilyKind::kProbit) {
      throw DomainError("equicorrelated dependence is only defined for the probit family");
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
    if (noise_free) throw DomainError("noise-free generation has no dependence structure");
  }
}

GeneratedNetwork generate_with_truth(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, spec.stream);
  const std::size_t n = spec.n;

  Params truth;
  if (spec.beta_star.size() != 0) {
    truth.beta = spec.beta_star;
  } else {
    truth.beta.resize(n);
    for (std::size_t i = 0; i < n; ++i) truth.beta[i] = rng.uniform(-spec.beta_range, spec.beta_range);
  }
  truth.gamma = spec.gamma_star;
  RowMatrix z = draw_covariates(spec, rng);

  const Eigen::VectorXd offsets = z * truth.gamma;
  std::vector<double> weights(num_pairs(n));
  const double common = spec.dependence == Dependence::kEquicorrelatedProbit ? rng.normal() : 0.0;
  const double load = std::sqrt(spec.rho);
  const double idio = std::sqrt(1.0 - spec.rho);
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      const double pi = truth.beta[i] + truth.beta[j] + offsets[k];
      if (spec.noise_free) {
        weights[k] = spec.family.mu(pi);
      } else if (spec.dependence == Dependence::kEquicorrelatedProbit) {
        const double latent = load * common + idio * rng.normal();
        weights[k] = pi > latent ? 1.0 : 0.0;
      } else {
        weights[k] = spec.family.sample(pi, rng);
      }
    }
  }
  return {NetworkData(n, std::move(weights), std::move(z)), std::move(truth)};
}

NetworkData generate(const GenSpec& spec) { return generate_with_truth(spec).data; }

unsigned default_thread_count() {
  if (const char* env = std::getenv("NETMOMENT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

McStudyReport run_mc_study(const std::vector<GenSpec>& grid, const McOptions& options,
                           const SolverConfig& config) {
  if (options.replicates < 1) throw DomainError("replicates must be >= 1");
  if (grid.empty()) throw DomainError("study grid is empty");
  if (!(options.nominal_level > 0.0 && options.nominal_level < 1.0)) {
    throw DomainError("nominal level must lie in (0, 1)");
  }
  for (const GenSpec& spec : grid) spec.validate();
  config.validate();

  const double z_crit = normal_quantile(0.5 + 0.5 * options.nominal_level);
  const std::size_t total = grid.size() * options.replicates;
  std::vector<ReplicateOutcome> outcomes(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t g = task / options.replicates;
      const std::size_t r = task % options.replicates;
      outcomes[task] = run_replicate(grid[g], r, options, config, z_crit);
    }
  };
  const unsigned threads = std::min<std::size_t>(
      options.threads == 0 ? default_thread_count() : options.threads, total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  McStudyReport report;
  report.nominal_level = options.nominal_level;
  report.coverage_defined = std::none_of(grid.begin(), grid.end(), [](const GenSpec& s) { return s.noise_free; });
  for (ReplicateOutcome& o : outcomes) {
    if (o.record) report.records.push_back(std::move(*o.record));
    if (o.failure) report.failures.push_back(std::move(*o.failure));
  }
  auto by_key = [](const auto& a, const auto& b) {
    return std::tie(a.n, a.replicate) < std::tie(b.n, b.replicate);
  };
  std::sort(report.records.begin(), report.records.end(), by_key);
  std::sort(report.failures.begin(), report.failures.end(), by_key);

  std::vector<double> rate_x_beta, rate_x_gamma, med_beta, med_gamma_bc;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GenSpec& spec = grid[g];
    const std::size_t p = static_cast<std::size_t>(spec.gamma_star.size());
    McSummary s;
    s.n = spec.n;
    std::vector<double> be, ge, gbe, se_first, gbc_first;
    std::vector<double> cover(p, 0.0), cover_bc(p, 0.0);
    for (const McRecord& r : report.records) {
      if (r.n != spec.n) continue;
      be.push_back(r.beta_error);
      ge.push_back(r.gamma_error);
      gbe.push_back(r.gamma_bc_error);
      se_first.push_back(r.se_gamma[0]);
      gbc_first.push_back(r.gamma_bc[0]);
      for (std::size_t c = 0; c < p; ++c) {
        cover[c] += r.covered[c] ? 1.0 : 0.0;
        cover_bc[c] += r.covered_bc[c] ? 1.0 : 0.0;
      }
    }
    s.successes = be.size();
    s.failures = static_cast<std::size_t>(std::count_if(report.failures.begin(), report.failures.end(),
                                                        [&](const McFailure& f) { return f.n == spec.n; }));
    if (s.successes == 0) {
      throw Error("every replicate failed at n = " + std::to_string(spec.n) +
                  (report.failures.empty() ? std::string() : ": " + report.failures.back().reason));
    }
    s.median_beta_error = median(be);
    s.median_gamma_error = median(ge);
    s.median_gamma_bc_error = median(gbe);
    s.median_se_gamma_first = median(se_first);
    s.sd_gamma_bc_first = sample_sd(gbc_first);
    for (std::size_t c = 0; c < p; ++c) {
      const double denom = static_cast<double>(s.successes);
      s.coverage.push_back(report.coverage_defined ? cover[c] / denom : std::numeric_limits<double>::quiet_NaN());
      s.coverage_bc.push_back(report.coverage_defined ? cover_bc[c] / denom
                                                      : std::numeric_limits<double>::quiet_NaN());
    }
    const double n = static_cast<double>(spec.n);
    rate_x_beta.push_back(std::sqrt(std::log(n) / n));
    rate_x_gamma.push_back(1.0 / n);
    med_beta.push_back(s.median_beta_error);
    med_gamma_bc.push_back(s.median_gamma_bc_error);
    report.summaries.push_back(std::move(s));
  }
  report.beta_rate_slope = log_log_slope(rate_x_beta, med_beta);
  report.gamma_bc_rate_slope = log_log_slope(rate_x_gamma, med_gamma_bc);
  return report;
}

}  // namespace netmoment
