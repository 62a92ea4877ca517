#include <benchmark/benchmark.h>

#include <memory>
#include <numeric>

#include "cdlab/cd.hpp"
#include "cdlab/kernels.hpp"

using namespace cdlab;

namespace {

void BM_GibbsStepGaussian(benchmark::State& state) {
  const MarkovKernel k(std::make_shared<GaussianMeanModel>(2, 0.5), KernelKind::kGibbs);
  Vector psi(2);
  psi << 0.3, -0.2;
  Rng rng(1);
  Point x = Point::Zero(2);
  for (auto _ : state) {
    x = k.step(psi, x, rng);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_GibbsStepGaussian);

void BM_GibbsRunBoltzmann(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const auto model = std::make_shared<BoltzmannModel>(d);
  const MarkovKernel k(model, KernelKind::kGibbs);
  const Vector psi = Vector::Constant(static_cast<Eigen::Index>(model->dim()), 0.1);
  Rng rng(2);
  Point x = Point::Zero(static_cast<Eigen::Index>(d));
  for (auto _ : state) {
    x = k.run(psi, x, 10, rng);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_GibbsRunBoltzmann)->Arg(3)->Arg(8)->Arg(12);

void BM_MetropolisErgm(benchmark::State& state) {
  const auto model = std::make_shared<ErgmModel>(static_cast<std::size_t>(state.range(0)));
  const MarkovKernel k(model, KernelKind::kMetropolisToggle);
  Vector psi(2);
  psi << -0.5, 0.2;
  Rng rng(3);
  Point g = Point::Zero(static_cast<Eigen::Index>(model->point_size()));
  for (auto _ : state) {
    g = k.run(psi, g, 10, rng);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_MetropolisErgm)->Arg(5)->Arg(10);

void BM_TransitionMatrix(benchmark::State& state) {
  const auto model = std::make_shared<BoltzmannModel>(static_cast<std::size_t>(state.range(0)));
  const MarkovKernel k(model, KernelKind::kGibbs);
  const Vector psi = Vector::Constant(static_cast<Eigen::Index>(model->dim()), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(k.transition_matrix(psi).matrix.data());
}
BENCHMARK(BM_TransitionMatrix)->Arg(3)->Arg(6)->Arg(8);

void BM_CdGradientFullBatch(benchmark::State& state) {
  const auto model = std::make_shared<BoltzmannModel>(3);
  const MarkovKernel k(model, KernelKind::kGibbs);
  Rng rng(4);
  const auto data = model->sample_n(Vector::Zero(6), static_cast<std::size_t>(state.range(0)), rng);
  const VectorData view(data);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Vector psi = Vector::Constant(6, 0.1);
  const auto workers = static_cast<std::size_t>(state.range(1));
  std::uint64_t update = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cd_gradient(k, view, idx, psi, 16, 5, ++update, workers).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CdGradientFullBatch)->Args({1024, 1})->Args({1024, 4});

void BM_OnlineCd(benchmark::State& state) {
  const auto model = std::make_shared<GaussianMeanModel>(2, 0.5);
  const MarkovKernel k(model, KernelKind::kGibbs);
  Rng rng(5);
  Vector star(2);
  star << 0.3, -0.2;
  const auto data = model->sample_n(star, static_cast<std::size_t>(state.range(0)), rng);
  CdConfig cfg(ParamDomain(Vector::Zero(2), 2.0), Vector::Zero(2));
  cfg.m = 19;
  cfg.schedule = {6.6, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(online_cd(data, k, cfg).final.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OnlineCd)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
