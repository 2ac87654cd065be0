#include <benchmark/benchmark.h>

#include "ztcsense/engine.hpp"

using namespace ztcsense;

namespace {

Circuit diode_chain() {
  return parse_netlist(
      ".MODEL nch NMOS (VTO=0.45 KP=300u LAMBDA=0.05 TCV=2m BEX=1.8 CGS=2f CGD=1f)\n"
      "V1 vdd 0 DC 1.8 PWL(0 1.8 1n 1.8 1.01n 0.8 1.09n 0.8 1.1n 1.8)\n"
      "R1 vdd a 20k\n"
      "M1 a a b 0 nch W=2u L=1u\n"
      "M2 b b 0 0 nch W=2u L=1u\n"
      "C1 a 0 10f\n");
}

}  // namespace

static void BM_DcOperatingPoint(benchmark::State& state) {
  const auto c = diode_chain();
  for (auto _ : state) benchmark::DoNotOptimize(dc_operating_point(c, 300.15));
}
BENCHMARK(BM_DcOperatingPoint);

static void BM_Transient(benchmark::State& state) {
  const auto c = diode_chain();
  for (auto _ : state) benchmark::DoNotOptimize(transient(c, 3e-9, 10e-12, 300.15));
}
BENCHMARK(BM_Transient);

static void BM_TemperatureSweep(benchmark::State& state) {
  const auto c = diode_chain();
  const auto grid = linear_grid(233.15, 398.15, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(dc_sweep(c, SweepKnob::temperature(), grid, 0.0));
}
BENCHMARK(BM_TemperatureSweep);
BENCHMARK_MAIN();
