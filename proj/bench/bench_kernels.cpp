// Serial reference kernels against their OpenMP versions. The second argument
// of every benchmark selects the path: 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "clebsch/diagnostics.hpp"
#include "clebsch/field.hpp"
#include "clebsch/pde.hpp"

using namespace clebsch;

namespace {

const SurfaceFamily kFamily = surface::DisplacedEllipse{1.0, 1.6, 0.3, 2};
const std::vector<double> kLevels = {0.07, 0.075, 0.08, 0.085, 0.09};

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& s) {
  s.SetLabel(s.range(1) ? "parallel, " + std::to_string(max_threads()) + " threads" : "serial");
}

const FieldStack& stack() {
  static const FieldStack st = build_stack(kFamily, kLevels, PeriodicGrid::square(32), {}, Exec::parallel);
  return st;
}

void BM_AssembleCoefficients(benchmark::State& s) {
  const PeriodicGrid g = PeriodicGrid::square(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(assemble_coefficients(kFamily, 0.08, g, exec_of(s)));
  label(s);
}
BENCHMARK(BM_AssembleCoefficients)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_BuildStack(benchmark::State& s) {
  const PeriodicGrid g = PeriodicGrid::square(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(build_stack(kFamily, kLevels, g, {}, exec_of(s)));
  label(s);
}
BENCHMARK(BM_BuildStack)->ArgsProduct({{32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_SampleStack(benchmark::State& s) {
  const FieldStack& st = stack();
  const auto pts = sample_interior(kFamily, st.curl_psi_min(), st.curl_psi_max(), static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(sample_stack_points(st, pts, true, exec_of(s)));
  s.SetItemsProcessed(s.iterations() * s.range(0));
  label(s);
}
BENCHMARK(BM_SampleStack)->ArgsProduct({{1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_VolumeEnergyQmc(benchmark::State& s) {
  const FieldStack& st = stack();
  for (auto _ : s) benchmark::DoNotOptimize(volume_energy_qmc(st, static_cast<int>(s.range(0)), exec_of(s)));
  label(s);
}
BENCHMARK(BM_VolumeEnergyQmc)->ArgsProduct({{1 << 14}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_IsometryNullspace(benchmark::State& s) {
  const auto pts = sample_interior(kFamily, 0.06, 0.1, static_cast<int>(s.range(0)));
  const GradientField g = [](const Vec3& p) { return grad_psi(kFamily, p); };
  for (auto _ : s) benchmark::DoNotOptimize(isometry_nullspace(g, pts, kNullspaceTau, exec_of(s)));
  label(s);
}
BENCHMARK(BM_IsometryNullspace)->ArgsProduct({{5000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
