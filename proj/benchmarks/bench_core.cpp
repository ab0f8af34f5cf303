#include <benchmark/benchmark.h>

#include "iongate/crystal.hpp"
#include "iongate/effective.hpp"
#include "iongate/experiments.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/noise.hpp"
#include "iongate/operators.hpp"
#include "iongate/propagate.hpp"

using namespace iongate;

static void bm_transverse_modes(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto m = transverse_modes(n, 4.0e6, 1.0e6);
        benchmark::DoNotOptimize(m.omega.data());
    }
}
BENCHMARK(bm_transverse_modes)->Arg(2)->Arg(5)->Arg(8);

static void bm_boson_op(benchmark::State& state) {
    const SpaceLayout l{2, 2, static_cast<int>(state.range(0))};
    for (auto _ : state) {
        auto a = boson_op(l, 0, Ladder::annihilate);
        benchmark::DoNotOptimize(a.valuePtr());
    }
}
BENCHMARK(bm_boson_op)->Arg(10)->Arg(20);

// cost of one integrator step on the driven system; the wall time of every
// pipeline is (steps = t_f/dt) times this number
static void bm_propagator_step(benchmark::State& state) {
    const LabParams params;
    const GateSystem sys =
        make_gate_system(params, static_cast<int>(state.range(0)), Frame::dressed);
    const Real dt = 7.0e-9;
    BlockPropagator prop(sys, dt);
    MatXc block = MatXc::Zero(sys.layout.dim(), 1);
    block(0, 0) = 1.0;
    Real t = 0.0;
    for (auto _ : state) {
        prop.advance(block, t, t + dt);
        t += dt;
        benchmark::DoNotOptimize(block.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_propagator_step)->Arg(2)->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);

// same step driven on a four-column basis block (channel reconstruction)
static void bm_propagator_block_step(benchmark::State& state) {
    const LabParams params;
    const GateSystem sys = make_gate_system(params, 6, Frame::dressed);
    const Real dt = 7.0e-9;
    BlockPropagator prop(sys, dt);
    MatXc block = MatXc::Zero(sys.layout.dim(), 4);
    for (int a = 0; a < 4; ++a) block(a, a) = 1.0;
    Real t = 0.0;
    for (auto _ : state) {
        prop.advance(block, t, t + dt);
        t += dt;
        benchmark::DoNotOptimize(block.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_propagator_block_step)->Unit(benchmark::kMicrosecond);

static void bm_ou_step(benchmark::State& state) {
    OUTrajectory traj(ou_from_T2(5.0e-3, 0.1, 1), 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(traj.step(7.0e-9));
    }
}
BENCHMARK(bm_ou_step);

static void bm_haar_average(benchmark::State& state) {
    const ChannelTensor channel = unitary_channel(ideal_gate(0.3));
    const MatXc u = ideal_gate(0.3);
    for (auto _ : state) {
        auto est = haar_average_fidelity(channel, u, 100, 1);
        benchmark::DoNotOptimize(est.mean);
    }
}
BENCHMARK(bm_haar_average);

// one full echoed gate evaluation at a reduced cutoff (end-to-end scale)
static void bm_echoed_gate_eval(benchmark::State& state) {
    const LabParams params;
    const GateSystem sys = make_gate_system(params, 1, Frame::dressed);
    const ChainModes modes = transverse_modes(params.num_ions, params.omega_x, params.omega_z);
    const Real t_gate = compute_j_eff(sideband_couplings(params, modes)).t_gate;
    for (auto _ : state) {
        const Real err = echoed_bell_error(sys, ThermalSpec{0.0}, BellKind::psi_minus,
                                           t_gate, 7.0e-9, nullptr, 1, 1);
        benchmark::DoNotOptimize(err);
    }
}
BENCHMARK(bm_echoed_gate_eval)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
