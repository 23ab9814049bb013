#include <benchmark/benchmark.h>

#include <random>

#include "chns/assembly.hpp"
#include "chns/driver.hpp"
#include "chns/precond.hpp"

using namespace chns;

namespace {

struct Fixture {
    Mesh2D mesh;
    DofMap dof;
    PhysParams par = PhysParams::benchmark1();
    History hist;
    State state;
    AssemblyOutputs ops;
    NewtonSystem sys;
    std::vector<double> rhs;

    explicit Fixture(int nx) {
        mesh = build_rect_mesh(1.0, 2.0, nx, 2 * nx);
        dof = build_dofmap(mesh, BoundaryConditions::benchmark());
        const std::vector<double> phi0 = initial_phase_profile(mesh, {0.5, 0.5}, 0.25, par.eps);
        hist = init_two_step(mesh, dof, par, phi0);
        state.v.assign(dof.n2, 0.0);
        state.p.assign(dof.n1, 0.0);
        state.phi = hist.phi_km1;
        state.mu = hist.mu_km1;
        ops = assemble_step_operators(mesh, dof, hist, par);
        sys = build_newton_system(mesh, dof, ops, state.phi, par);
        rhs = stack_rhs(assemble_residuals(mesh, dof, state, hist, par));
    }
};

Fixture& fixture16() {
    static Fixture f(16);
    return f;
}

}  // namespace

static void BM_AssembleStepOperators(benchmark::State& state) {
    Fixture& f = fixture16();
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_step_operators(f.mesh, f.dof, f.hist, f.par));
    }
}
BENCHMARK(BM_AssembleStepOperators)->Unit(benchmark::kMillisecond);

static void BM_AssembleResiduals(benchmark::State& state) {
    Fixture& f = fixture16();
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_residuals(f.mesh, f.dof, f.state, f.hist, f.par));
    }
}
BENCHMARK(BM_AssembleResiduals)->Unit(benchmark::kMillisecond);

static void BM_BlockMatVec(benchmark::State& state) {
    Fixture& f = fixture16();
    std::vector<double> x(f.sys.size(), 1.0), y(f.sys.size());
    for (auto _ : state) {
        f.sys.multiply(x, y);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_BlockMatVec)->Unit(benchmark::kMicrosecond);

static void BM_OuterPrecondSetup(benchmark::State& state) {
    Fixture& f = fixture16();
    for (auto _ : state) {
        OuterPreconditioner p(f.sys, PrecondConfig::desk_direct());
        benchmark::DoNotOptimize(&p);
    }
}
BENCHMARK(BM_OuterPrecondSetup)->Unit(benchmark::kMillisecond);

static void BM_OuterPrecondApply(benchmark::State& state) {
    Fixture& f = fixture16();
    OuterPreconditioner p(f.sys, PrecondConfig::desk_direct());
    std::vector<double> out(f.sys.size());
    for (auto _ : state) {
        p.apply(f.rhs, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_OuterPrecondApply)->Unit(benchmark::kMillisecond);

static void BM_NewtonSolveDirect(benchmark::State& state) {
    Fixture& f = fixture16();
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_block_direct(f.sys, f.rhs));
    }
}
BENCHMARK(BM_NewtonSolveDirect)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
