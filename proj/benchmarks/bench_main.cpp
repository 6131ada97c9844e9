#include <benchmark/benchmark.h>

#include "spikekit/fullsolve.hpp"

using namespace spikekit;

namespace {

Mesh disk_mesh(int nr) { return build_mesh(DomainSpec::disk(Vec2::Zero(), 3.0, Vec2::Zero()), nr, 2 * nr, 4.0); }

AnisotropyField bump() { return AnisotropyField::gaussian(0.3, 0.5, Vec2::Zero()); }

SpikeConfig one_spike(double eps) {
  SpikeConfig c;
  c.eps = eps;
  c.alpha = 0.5;
  c.m = 1;
  c.l = 1;
  c.xi = {Vec2(0.1, 0)};
  c.b = {1, -1};
  c.d = 0.15;
  return c;
}

}  // namespace

static void BM_OperatorFactorization(benchmark::State& state) {
  const Mesh mesh = disk_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    EllipticOperator op(mesh, bump());
    benchmark::DoNotOptimize(op.matrix().nonZeros());
  }
  state.SetLabel(std::to_string(mesh.num_nodes()) + " nodes");
}
BENCHMARK(BM_OperatorFactorization)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_GreenSolve(benchmark::State& state) {
  const Mesh mesh = disk_mesh(static_cast<int>(state.range(0)));
  const EllipticOperator op(mesh, bump());
  for (auto _ : state) benchmark::DoNotOptimize(solve_green(op, Vec2(0.1, 0.05), SourceLocation::Interior).robin);
}
BENCHMARK(BM_GreenSolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_AnsatzAssembly(benchmark::State& state) {
  const Mesh mesh = disk_mesh(static_cast<int>(state.range(0)));
  const EllipticOperator op(mesh, bump());
  for (auto _ : state) {
    GreenTable t(op);
    const Ansatz an = build_ansatz(t, one_spike(1e-3), NormParams::defaults(0.5));
    benchmark::DoNotOptimize(an.field.U().sum());
  }
}
BENCHMARK(BM_AnsatzAssembly)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_NewtonStep(benchmark::State& state) {
  const Mesh mesh = disk_mesh(static_cast<int>(state.range(0)));
  const EllipticOperator op(mesh, bump());
  GreenTable t(op);
  const Ansatz an = build_ansatz(t, one_spike(1e-2), NormParams::defaults(0.5));
  NewtonOptions opt;
  opt.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(newton_solve(op, an.cfg, an.field.U(), opt).history.back());
}
BENCHMARK(BM_NewtonStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
