// Serial reference vs OpenMP kernels. The first argument of every benchmark
// is the number of time samples N; the backend is 0 (serial) or 1 (OpenMP).

#include <benchmark/benchmark.h>

#include <random>

#include "hbm/kernels.hpp"
#include "hbm/model_io.hpp"
#include "hbm/solver.hpp"

using namespace hbm;

namespace {

const SystemModel& nes() {
  static const SystemModel model = load_model(HBM_SOURCE_DIR "/models/nes.json");
  return model;
}

Mat random_samples(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(g);
  return m;
}

kernels::Backend backend_of(const benchmark::State& s) {
  return s.range(1) == 0 ? kernels::Backend::serial : kernels::Backend::openmp;
}

void BM_sample_forces(benchmark::State& s) {
  const Index n = nes().dofs();
  const Mat x = random_samples(s.range(0), n, 1), v = random_samples(s.range(0), n, 2);
  Mat f;
  for (auto _ : s) {
    kernels::sample_forces(backend_of(s), nes(), x, v, f);
    benchmark::DoNotOptimize(f.data());
  }
}

void BM_sample_jacobians(benchmark::State& s) {
  const Index n = nes().dofs();
  const Mat x = random_samples(s.range(0), n, 3), v = random_samples(s.range(0), n, 4);
  Mat jx, jv;
  for (auto _ : s) {
    kernels::sample_jacobians(backend_of(s), nes(), x, v, jx, jv);
    benchmark::DoNotOptimize(jx.data());
  }
}

void BM_project_weighted(benchmark::State& s) {
  const Mat basis = random_samples(s.range(0), 19, 5);
  const Vec w = random_samples(s.range(0), 1, 6);
  Mat out;
  for (auto _ : s) {
    kernels::project_weighted(backend_of(s), basis, w, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_probe_bilinear(benchmark::State& s) {
  const Index n = nes().dofs(), N = s.range(0);
  const Mat x = random_samples(N, n, 7), v = random_samples(N, n, 8);
  const Mat basis = random_samples(N, 19, 9);
  kernels::BilinearOperands ops;
  ops.left = random_samples(N, n, 10).cast<Complex>();
  ops.right = random_samples(N, n, 11).cast<Complex>();
  ops.right_velocity = random_samples(N, n, 12).cast<Complex>();
  std::vector<kernels::CoefficientProbe> probes;
  for (Index col = 0; col < 19; ++col)
    for (Index dof = 0; dof < n; ++dof) probes.push_back({col, dof, 1e-6});
  CVec out;
  for (auto _ : s) {
    kernels::probe_bilinear(backend_of(s), nes(), x, v, basis, basis, ops, probes, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// whole residual Jacobian at N_H = 9
void BM_jacobian(benchmark::State& s) {
  const ResidualWorkspace ws(nes(), HarmonicGrid(9, nes().dofs(), static_cast<int>(s.range(0))), backend_of(s));
  const Vec z = random_samples(ws.size(), 1, 13) * 0.1;
  for (auto _ : s) benchmark::DoNotOptimize(ws.jacobian_z(z, 1.0).data());
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {256, 1024, 4096})
    for (int backend : {0, 1}) b->Args({n, backend});
  b->ArgNames({"N", "omp"});
}

}  // namespace

BENCHMARK(BM_sample_forces)->Apply(sizes);
BENCHMARK(BM_sample_jacobians)->Apply(sizes);
BENCHMARK(BM_project_weighted)->Apply(sizes);
BENCHMARK(BM_probe_bilinear)->Apply(sizes);
BENCHMARK(BM_jacobian)->Apply(sizes);

BENCHMARK_MAIN();
