#include <benchmark/benchmark.h>

#include "varprune/datasets.hpp"
#include "varprune/pruner.hpp"
#include "varprune/rng.hpp"
#include "varprune/trainer.hpp"
#include "varprune/var_reg.hpp"

using namespace varprune;

namespace {

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngState rng(1);
  const Tensor a({n, n}, rng.draw_normal(n * n, 0.0, 1.0));
  const Tensor b({n, n}, rng.draw_normal(n * n, 0.0, 1.0));
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity();

static void BM_PsiGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngState rng(2);
  ParamSet p;
  p.add("w.weight", Tensor::vector(rng.draw_normal(n, 0.0, 1.0)), true);
  const RegConfig cfg{};
  for (auto _ : state) {
    auto g = psi_grad(p, cfg);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_PsiGrad)->RangeMultiplier(4)->Range(64, 16384);

static void BM_GlobalMask(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngState rng(3);
  ParamSet p;
  p.add("w.weight", Tensor::vector(rng.draw_normal(n, 0.0, 1.0)), true);
  for (auto _ : state) {
    Mask m = magnitude_mask_global(p, 0.9);
    benchmark::DoNotOptimize(m.entries.data());
  }
}
BENCHMARK(BM_GlobalMask)->RangeMultiplier(4)->Range(1024, 65536);

static void BM_TrainEpoch(benchmark::State& state) {
  RngState data_rng(4);
  const Dataset data = gen_two_moons(512, 0.15, data_rng);
  const Net net = {LayerSpec::dense(2, 32), LayerSpec::act(Activation::relu),
                   LayerSpec::dense(32, 32), LayerSpec::act(Activation::relu),
                   LayerSpec::dense(32, 2)};
  OptimConfig cfg;
  cfg.eta0 = 0.1;
  cfg.momentum = 0.9;
  cfg.lambda = 1e-4;
  cfg.batch_size = 64;
  cfg.epochs = 1;
  for (auto _ : state) {
    auto result = train(net, data, cfg, RegConfig{});
    benchmark::DoNotOptimize(result.params.entries.data());
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
