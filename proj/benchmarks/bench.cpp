#include <benchmark/benchmark.h>

#include "painreg/data.hpp"
#include "painreg/model.hpp"
#include "painreg/sampler.hpp"

using namespace painreg;

namespace {

Dataset bench_dataset() {
  SyntheticConfig cfg;
  cfg.num_subjects = 4;
  cfg.frames_per_subject = 250;
  cfg.feature_dim = 512;
  cfg.noise_sigma = 0.25;
  cfg.seed = 1;
  return generate_synthetic(cfg);
}

void bm_forward_eval(benchmark::State& state) {
  Rng rng(1);
  const RegressionHead head = RegressionHead::init(512, 50, rng);
  std::vector<double> input(512);
  for (auto& v : input) v = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_eval(head, input).pred);
  }
}
BENCHMARK(bm_forward_eval);

void bm_forward_backward(benchmark::State& state) {
  Rng rng(1);
  RegressionHead head = RegressionHead::init(512, 50, rng);
  const Centers centers = Centers::zeros(6, 50);
  const LossConfig config;
  std::vector<double> input(512);
  for (auto& v : input) v = rng.normal();
  for (auto _ : state) {
    const auto cache = forward_train(head, input, rng);
    benchmark::DoNotOptimize(backward(head, cache, 3, centers, config));
  }
}
BENCHMARK(bm_forward_backward);

void bm_balanced_batch(benchmark::State& state) {
  const Dataset ds = bench_dataset();
  const ClassIndex index = build_class_index(ds);
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(next_balanced_batch(index, 36, rng));
  }
}
BENCHMARK(bm_balanced_batch);

void bm_train_100_iters(benchmark::State& state) {
  const Dataset ds = bench_dataset();
  TrainConfig config;
  config.iterations = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(ds, config));
  }
}
BENCHMARK(bm_train_100_iters)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
