#include <benchmark/benchmark.h>

#include "dissl/latentlab.hpp"
#include "dissl/objectives.hpp"
#include "dissl/rng.hpp"
#include "dissl/spriteworld.hpp"

namespace obj = dissl::objectives;
namespace lab = dissl::latentlab;
namespace sw = dissl::spriteworld;
using dissl::RngStream;

namespace {

obj::EmbeddingBatch make_batch(Eigen::Index n, Eigen::Index d) {
  RngStream rng(1);
  return {rng.normal_matrix(n, d), rng.normal_matrix(n, d)};
}

void BM_SimclrEntropy(benchmark::State& state) {
  const auto b = make_batch(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(obj::simclr_entropy(b));
}
BENCHMARK(BM_SimclrEntropy)->Arg(128)->Arg(512);

void BM_SimclrEntropyGrad(benchmark::State& state) {
  const auto b = make_batch(state.range(0), 64);
  Eigen::MatrixXd gz, gzp;
  for (auto _ : state)
    benchmark::DoNotOptimize(obj::simclr_entropy_grad(b, gz, gzp));
}
BENCHMARK(BM_SimclrEntropyGrad)->Arg(128)->Arg(512);

void BM_VicregEntropy(benchmark::State& state) {
  const auto b = make_batch(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(obj::vicreg_entropy(b));
}
BENCHMARK(BM_VicregEntropy)->Arg(128)->Arg(512);

void BM_BarlowEntropy(benchmark::State& state) {
  const auto b = make_batch(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(obj::barlow_entropy(b));
}
BENCHMARK(BM_BarlowEntropy)->Arg(128)->Arg(512);

void BM_SpriteRender(benchmark::State& state) {
  RngStream rng(2);
  const auto f = sw::sample_factors(rng);
  for (auto _ : state) benchmark::DoNotOptimize(sw::render(f));
}
BENCHMARK(BM_SpriteRender);

void BM_StructuredPair(benchmark::State& state) {
  RngStream rng(3);
  const auto f = sw::sample_factors(rng);
  const auto groups = sw::default_groups_m2();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        sw::make_structured_pair(f, 1, groups, sw::Strength::kMedium, rng));
}
BENCHMARK(BM_StructuredPair);

void BM_MixingApply(benchmark::State& state) {
  RngStream rng(4);
  const auto mix = lab::build_mixing(10, 3, rng);
  const Eigen::MatrixXd z = rng.normal_matrix(256, 10);
  for (auto _ : state) benchmark::DoNotOptimize(mix.apply(z));
}
BENCHMARK(BM_MixingApply);

void BM_MixingInvert(benchmark::State& state) {
  RngStream rng(5);
  const auto mix = lab::build_mixing(10, 3, rng);
  const Eigen::MatrixXd x = mix.apply(rng.normal_matrix(256, 10));
  for (auto _ : state) benchmark::DoNotOptimize(mix.invert(x));
}
BENCHMARK(BM_MixingInvert);

}  // namespace

BENCHMARK_MAIN();
