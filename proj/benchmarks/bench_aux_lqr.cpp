#include <benchmark/benchmark.h>

#include <l2c/instances.hpp>
#include <l2c/shapes.hpp>

namespace {

// Building the multilift instances takes a few seconds; do it once.
const std::vector<l2c::AuxInstance>& shapes() {
  static const std::vector<l2c::AuxInstance> s = l2c::standard_shape_instances(100);
  return s;
}

void BM_Reuse(benchmark::State& st) {
  const auto& inst = shapes()[st.range(0)];
  st.SetLabel(inst.name);
  for (auto _ : st) benchmark::DoNotOptimize(l2c::aux_lqr_reuse(inst.aux, inst.workspace));
}

void BM_Pmp(benchmark::State& st) {
  const auto& inst = shapes()[st.range(0)];
  st.SetLabel(inst.name);
  for (auto _ : st) benchmark::DoNotOptimize(l2c::aux_lqr_pmp_oracle(inst.aux));
}

void BM_Augmented(benchmark::State& st) {
  const auto& inst = shapes()[st.range(0)];
  st.SetLabel(inst.name);
  for (auto _ : st) benchmark::DoNotOptimize(l2c::aux_lqr_augmented_oracle(inst.aux));
}

void BM_ToyGradientPipeline(benchmark::State& st) {
  const l2c::Problem pb = l2c::make_consensus_toy();
  const l2c::HyperParams hp = l2c::consensus_toy_theta(pb);
  const l2c::AdmmResult fwd = l2c::admm_run(pb, hp, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(l2c::gradsolver_run(pb, hp, fwd));
}

}  // namespace

BENCHMARK(BM_Reuse)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pmp)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Augmented)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToyGradientPipeline)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
