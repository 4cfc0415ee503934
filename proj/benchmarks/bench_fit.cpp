#include <benchmark/benchmark.h>

#include "netmoment/netmoment.hpp"

using namespace netmoment;

namespace {

NetworkData make_network(std::size_t n, EdgeFamily family) {
  GenSpec spec;
  spec.n = n;
  spec.family = family;
  spec.gamma_star = Eigen::Vector2d(0.5, -0.5);
  spec.seed = 7;
  return generate(spec);
}

void BM_FitLogistic(benchmark::State& state) {
  const NetworkData data = make_network(static_cast<std::size_t>(state.range(0)), kLogistic);
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, kLogistic));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitLogistic)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FitPoisson(benchmark::State& state) {
  const NetworkData data = make_network(static_cast<std::size_t>(state.range(0)), kPoisson);
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, kPoisson));
}
BENCHMARK(BM_FitPoisson)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_BetaSolve(benchmark::State& state) {
  const NetworkData data = make_network(static_cast<std::size_t>(state.range(0)), kLogistic);
  const Eigen::VectorXd gamma = Eigen::Vector2d(0.5, -0.5);
  const Eigen::VectorXd init = initial_beta(data, kLogistic);
  for (auto _ : state) benchmark::DoNotOptimize(solve_beta_given_gamma(data, kLogistic, gamma, {}, init));
}
BENCHMARK(BM_BetaSolve)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ProfileJacobian(benchmark::State& state) {
  const NetworkData data = make_network(static_cast<std::size_t>(state.range(0)), kLogistic);
  const Params params{Eigen::VectorXd::Zero(data.n()), Eigen::Vector2d(0.5, -0.5)};
  for (auto _ : state) benchmark::DoNotOptimize(profile_jacobian_h(data, kLogistic, params));
}
BENCHMARK(BM_ProfileJacobian)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  GenSpec spec;
  spec.n = static_cast<std::size_t>(state.range(0));
  spec.gamma_star = Eigen::Vector2d(0.5, -0.5);
  for (auto _ : state) {
    ++spec.seed;
    benchmark::DoNotOptimize(generate(spec));
  }
}
BENCHMARK(BM_Generate)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
