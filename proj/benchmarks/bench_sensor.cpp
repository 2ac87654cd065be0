#include <benchmark/benchmark.h>

#include "ztcsense/faults.hpp"
#include "ztcsense/monitor.hpp"
#include "ztcsense/sensor.hpp"

using namespace ztcsense;

static void BM_DefaultCalibration(benchmark::State& state) {
  const auto p = SensorParams::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(default_calibration(p));
}
BENCHMARK(BM_DefaultCalibration)->Unit(benchmark::kMillisecond);

static void BM_GlitchTransient(benchmark::State& state) {
  const auto p = SensorParams::defaults();
  const auto c = apply_underpower(build_sensor(p, default_calibration(p)), Branch::Ptat, GlitchSpec{});
  const auto probes = sensor_probes();
  for (auto _ : state) benchmark::DoNotOptimize(transient(c, 5e-9, 1e-12, kNominalTemperature, probes));
}
BENCHMARK(BM_GlitchTransient)->Unit(benchmark::kMillisecond);

static void BM_CornerTable(benchmark::State& state) {
  const auto p = SensorParams::defaults();
  const auto b = default_calibration(p);
  for (auto _ : state) benchmark::DoNotOptimize(corner_table(p, b));
}
BENCHMARK(BM_CornerTable)->Unit(benchmark::kMillisecond);
