#include <random>

#include <benchmark/benchmark.h>

#include "regmod/critical_set.hpp"
#include "regmod/estimators.hpp"
#include "regmod/function_model.hpp"
#include "regmod/prox.hpp"

using namespace regmod;

namespace {

Matrix zq3_matrix() {
  Matrix m(3, 3);
  m << 1, -1, 0, -1, 1, 0, 0, 0, 1;
  return m;
}

FunctionInstance bilinear() {
  Matrix a(4, 4);
  a << 1, -1, .5, .3, 1, -1, .5, .3, .4, -.4, 1.2, -.7, -.6, .6, .2, .9;
  return make_bilinear("bilinear-4x4", a, 2, 2);
}

void BM_ProjectSparse(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Vector z(p);
  for (auto& v : z) v = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_sparse(z, static_cast<std::size_t>(p / 4)));
}
BENCHMARK(BM_ProjectSparse)->Arg(16)->Arg(256)->Arg(4096);

void BM_EnumerateBilinear(benchmark::State& state) {
  const auto f = bilinear();
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_critical_set(f));
}
BENCHMARK(BM_EnumerateBilinear);

void BM_CloudAndEstimates(benchmark::State& state) {
  Vector base(3);
  base << 1, 1, 0;
  const auto f = make_zero_norm_quadratic("zq3", zq3_matrix(), 2, false);
  const auto cs = enumerate_critical_set(f);
  CloudRequest req;
  req.base = base;
  req.radii = {0.2, 0.1, 0.05};
  req.per_radius = static_cast<std::size_t>(state.range(0));
  req.seed = 7;
  for (auto _ : state) {
    const auto cloud = sample_cloud(f, cs, req);
    benchmark::DoNotOptimize(estimate_kl(cloud));
    benchmark::DoNotOptimize(estimate_subregularity(cloud));
    benchmark::DoNotOptimize(estimate_quadratic_growth(cloud));
    benchmark::DoNotOptimize(check_luo_tseng(cloud));
  }
}
BENCHMARK(BM_CloudAndEstimates)->Arg(128)->Arg(512);

}  // namespace
BENCHMARK_MAIN();
