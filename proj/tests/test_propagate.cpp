#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "iongate/effective.hpp"
#include "iongate/propagate.hpp"

using namespace iongate;

namespace {

LabParams table_params() { return LabParams{}; }

VecXc spin_basis(int index) {
  VecXc spin = VecXc::Zero(4);
  spin[index] = 1.0;
  return spin;
}

// F(Psi-) = <Psi-|rho|Psi->, |Psi-> = (|10> - i|01>)/sqrt(2), spin index 1 = |10>.
Real psi_minus_fidelity(const MatXc& rho) {
  VecXc target = VecXc::Zero(4);
  target[1] = 1.0 / std::sqrt(2.0);
  target[2] = Complex(0.0, -1.0) / std::sqrt(2.0);
  return (target.adjoint() * rho * target)(0, 0).real();
}

Real gate_time(const LabParams& params) {
  const ChainModes modes = transverse_modes(params.num_ions, params.omega_x, params.omega_z);
  return compute_j_eff(sideband_couplings(params, modes)).t_gate;
}

} // namespace

TEST_SUITE("propagate") {

TEST_CASE("gate system assembly and step size guard") {
  const GateSystem sys = make_gate_system(table_params(), 2, Frame::dressed);
  CHECK(sys.layout.dim() == 36);
  CHECK(sys.couplings.F.rows() == 2);
  CHECK(sys.ham.terms.size() > 0);
  CHECK(sys.ham.noise_terms.size() > 0);

  // Fastest dressed-frame scale: carrier Rabi + com detuning, 2*pi*6 MHz.
  const Real rate = generator_rate(sys);
  CHECK(rate > rad_from_hz(6.0e6));
  CHECK(rate < rad_from_hz(9.0e6));
  const Real dt = suggested_dt(sys);
  CHECK(dt > 0.8e-9);
  CHECK(dt < 2.0e-9);

  CHECK_THROWS_AS(BlockPropagator(sys, 1.0e-6), std::invalid_argument);
  CHECK_THROWS_AS(BlockPropagator(sys, 0.0), std::invalid_argument);
  CHECK_NOTHROW(BlockPropagator(sys, dt));

  // Free system: nothing to resolve, suggested step is unbounded.
  LabParams off = table_params();
  off.Omega_L = 0.0;
  off.Omega_d = 0.0;
  const GateSystem free_sys = make_gate_system(off, 1, Frame::bare);
  CHECK(generator_rate(free_sys) == 0.0);
  CHECK(std::isinf(suggested_dt(free_sys)));
  CHECK_THROWS_AS(generator_rate(free_sys, -1.0), std::invalid_argument);
}

TEST_CASE("state constant without couplings") {
  LabParams params = table_params();
  params.Omega_L = 0.0;
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 2, Frame::bare);

  VecXc spin = VecXc::Zero(4);
  spin[0] = 1.0 / std::sqrt(2.0);
  spin[3] = Complex(0.0, 1.0) / std::sqrt(2.0);
  const VecXc initial = composite_state(sys.layout, spin, sys.layout.with_occupation(0, 0, 1));

  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, nullptr, 0, 1.0e-3, 1.0e-4, {5.0e-4, 1.0e-3});
  REQUIRE(traj.bare_states.size() == 2);
  CHECK((traj.bare_states[0] - initial).norm() == 0.0);
  CHECK((traj.bare_states[1] - initial).norm() == 0.0);
  // The defect is the roundoff of computing the initial norm itself.
  CHECK(traj.final_norm_defect < 1e-15);
}

TEST_CASE("carrier pi pulse flips both qubits") {
  LabParams params = table_params();
  params.Omega_L = 0.0;
  const Real t_pi = pi / params.Omega_d;

  for (const Frame frame : {Frame::bare, Frame::dressed}) {
    const GateSystem sys = make_gate_system(params, 1, frame);
    const VecXc initial = composite_state(sys.layout, spin_basis(0), 0);
    const TrajectoryResult traj = evolve_trajectory(
        initial, sys, PulseSchedule{}, nullptr, 0, t_pi, 0.2e-9, {t_pi});
    // exp(-i (Omega_d/2) t sigma_x) at t_pi = -i sigma_x per qubit.
    const VecXc target = -composite_state(sys.layout, spin_basis(3), 0);
    CHECK((traj.bare_states[0] - target).norm() < 1e-8);
  }

  // phi_d = pi/2 drives along sigma_y: |0> -> i sigma_y |0> = -|1>, so the
  // two-qubit flip lands on +|11>.
  params.phi_d = pi / 2.0;
  const GateSystem sys = make_gate_system(params, 1, Frame::bare);
  const VecXc initial = composite_state(sys.layout, spin_basis(0), 0);
  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, nullptr, 0, t_pi, 0.2e-9, {t_pi});
  const VecXc target = composite_state(sys.layout, spin_basis(3), 0);
  CHECK((traj.bare_states[0] - target).norm() < 1e-8);
}

TEST_CASE("bare and dressed frames agree on the driven dynamics") {
  const LabParams params = table_params();
  const Real t_final = 4.2e-6;
  std::vector<VecXc> finals;
  for (const Frame frame : {Frame::bare, Frame::dressed}) {
    const GateSystem sys = make_gate_system(params, 2, frame);
    const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
    const TrajectoryResult traj = evolve_trajectory(
        initial, sys, PulseSchedule{}, nullptr, 0, t_final, 0.35e-9, {t_final});
    finals.push_back(traj.bare_states[0]);
  }
  CHECK((finals[0] - finals[1]).norm() < 1e-7);
}

TEST_CASE("undriven flip-flop matches the frozen reference") {
  LabParams params = table_params();
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 2, Frame::bare);
  const Real tg = gate_time(params);
  CHECK(tg == doctest::Approx(7.026111361021e-4).epsilon(1e-9));

  const std::vector<Real> samples = {0.25 * tg, 0.5 * tg, tg};
  const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, nullptr, 0, tg, 7.0e-9, samples);
  CHECK(traj.final_norm_defect < 1e-9);

  // Frozen reference populations (independent dense integration, dt = 7 ns).
  const Real P10_ref[3] = {0.8424443424, 0.5079563578, 0.0005379485};
  const Real P01_ref[3] = {0.1399803897, 0.4875084767, 0.9878019888};
  const Real P00_ref[3] = {0.0175752682, 0.0045351660, 0.0116600636};
  const EffectiveCouplings eff = compute_j_eff(sys.couplings);
  for (int k = 0; k < 3; ++k) {
    const MatXc rho = spin_density(sys.layout, traj.bare_states[k]);
    const VecX pop = rho.diagonal().real();
    CHECK(pop[1] == doctest::Approx(P10_ref[k]).epsilon(0.0).scale(0.0).epsilon(1e-6));
    CHECK(pop[2] == doctest::Approx(P01_ref[k]).epsilon(0.0).scale(0.0).epsilon(1e-6));
    CHECK(pop[0] == doctest::Approx(P00_ref[k]).epsilon(0.0).scale(0.0).epsilon(1e-6));
    // One shared spin excitation: |11> needs two, so it stays empty.
    CHECK(pop[3] < 1e-12);
    // Effective XY model within its (F/delta)^2 error budget.
    const Real sin2 = std::pow(std::sin(eff.J(0, 1) * samples[k]), 2);
    CHECK(std::abs(pop[2] - sin2) < 1.5e-2);
  }
}

TEST_CASE("echoed driven gate matches the frozen reference") {
  const LabParams params = table_params();
  const GateSystem sys = make_gate_system(params, 2, Frame::dressed);
  const Real tg = gate_time(params);

  auto echoed_error = [&](Real tf) {
    PulseSchedule schedule;
    schedule.pulses.push_back(Pulse{0.5 * tf, "ZZ"});
    const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
    const TrajectoryResult traj =
        evolve_trajectory(initial, sys, schedule, nullptr, 0, tf, 7.0e-9, {tf});
    return 1.0 - psi_minus_fidelity(spin_density(sys.layout, traj.bare_states[0]));
  };

  // Frozen references from an independent dense integration (n_max = 2,
  // dt = 7 ns, echo at tf/2, drive 2*pi*5.2 MHz).
  CHECK(echoed_error(0.2 * tg) == doctest::Approx(3.5390987433e-1).epsilon(0.0).scale(0.0).epsilon(1e-6));
  CHECK(echoed_error(tg) == doctest::Approx(2.0809365779e-2).epsilon(0.0).scale(0.0).epsilon(1e-6));
}

TEST_CASE("phonon number conserved without sideband coupling") {
  LabParams params = table_params();
  params.Omega_L = 0.0;
  const GateSystem sys = make_gate_system(params, 2, Frame::bare);

  const SpMat n_total = boson_op(sys.layout, 0, Ladder::number) +
                        boson_op(sys.layout, 1, Ladder::number);
  VecXc spin = VecXc::Zero(4);
  spin[0] = std::sqrt(0.5);
  spin[1] = std::sqrt(0.5);
  const std::int64_t ph = sys.layout.with_occupation(0, 0, 1);
  const VecXc initial = composite_state(sys.layout, spin, ph);

  const OUParams ou = ou_from_T2(5.0e-3, 0.1, 11);
  const std::vector<Real> samples = {2.0e-7, 4.0e-7, 6.0e-7};
  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, &ou, 0, 6.0e-7, 0.4e-9, samples);
  for (const VecXc& state : traj.bare_states) {
    const Real n_mean = (state.adjoint() * (n_total * state))(0, 0).real();
    CHECK(std::abs(n_mean - 1.0) < 1e-10);
  }
}

TEST_CASE("zero magnetization coherence survives any dephasing path") {
  LabParams params = table_params();
  params.Omega_L = 0.0;
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 1, Frame::bare);

  VecXc spin = VecXc::Zero(4);
  spin[0] = 1.0 / std::sqrt(3.0);
  spin[1] = 1.0 / std::sqrt(3.0);
  spin[2] = 1.0 / std::sqrt(3.0);
  const VecXc initial = composite_state(sys.layout, spin, 0);

  const OUParams ou = ou_from_T2(1.0e-4, 0.1, 5);  // strong global dephasing
  const std::vector<Real> samples = {5.0e-4, 1.0e-3, 2.0e-3};
  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, &ou, 3, 2.0e-3, 1.0e-6, samples);

  for (const VecXc& state : traj.bare_states) {
    const MatXc rho = spin_density(sys.layout, state);
    // |01><10| coherence lives in the zero-magnetization subspace.
    CHECK(std::abs(rho(2, 1) - Complex(1.0 / 3.0, 0.0)) < 1e-10);
  }
  // The same path does rotate coherences outside that subspace.
  const MatXc rho_end = spin_density(sys.layout, traj.bare_states.back());
  CHECK(std::abs(rho_end(1, 0) - Complex(1.0 / 3.0, 0.0)) > 1e-3);
}

TEST_CASE("echo identity and exact pulse algebra") {
  const LabParams params = table_params();
  const GateSystem sys = make_gate_system(params, 1, Frame::dressed);
  const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
  const Real tf = 2.0e-6;

  PulseSchedule twice;
  twice.pulses.push_back(Pulse{0.4 * tf, "ZZ"});
  twice.pulses.push_back(Pulse{0.4 * tf, "ZZ"});
  const TrajectoryResult a =
      evolve_trajectory(initial, sys, twice, nullptr, 0, tf, 1.0e-9, {tf});
  const TrajectoryResult b =
      evolve_trajectory(initial, sys, PulseSchedule{}, nullptr, 0, tf, 1.0e-9, {tf});
  // The paired pulses cancel to roundoff (the dressed-frame ZZ carries
  // e^{+-i Omega_d t} phases, so the product is identity only analytically).
  CHECK((a.frame_states[0] - b.frame_states[0]).norm() < 1e-14);

  // X(x)X at t = 0 acts as the exact spin flip on the initial product state.
  PulseSchedule flip;
  flip.pulses.push_back(Pulse{0.0, "XX"});
  LabParams off = params;
  off.Omega_L = 0.0;
  off.Omega_d = 0.0;
  const GateSystem free_sys = make_gate_system(off, 1, Frame::bare);
  const TrajectoryResult c = evolve_trajectory(
      initial, free_sys, flip, nullptr, 0, tf, tf, {tf});
  CHECK((c.bare_states[0] - composite_state(free_sys.layout, spin_basis(2), 0)).norm() <
        1e-12);
}

TEST_CASE("scheduled pulse equals manual segment chaining") {
  const LabParams params = table_params();
  const GateSystem sys = make_gate_system(params, 1, Frame::bare);
  const Real tf = 2.0e-6;
  const Real tau = 0.37 * tf;
  const Real dt = 1.0e-9;
  const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);

  PulseSchedule schedule;
  schedule.pulses.push_back(Pulse{tau, "XI"});
  const TrajectoryResult scheduled =
      evolve_trajectory(initial, sys, schedule, nullptr, 0, tf, dt, {tf});

  BlockPropagator prop(sys, dt);
  MatXc block = initial;
  prop.advance(block, 0.0, tau);
  prop.apply_pulse(block, "XI", tau);
  prop.advance(block, tau, tf);
  CHECK((scheduled.frame_states[0] - block.col(0)).norm() < 1e-12);
}

TEST_CASE("thermal weights and enumeration") {
  CHECK(thermal_weight(2.0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(thermal_weight(2.0, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(thermal_weight(0.0, 0) == 1.0);
  CHECK(thermal_weight(0.0, 3) == 0.0);
  CHECK_THROWS_AS(thermal_weight(-0.1, 0), std::invalid_argument);

  const SpaceLayout layout{2, 2, 10};

  SUBCASE("vacuum") {
    const ThermalEnsemble e = enumerate_thermal(ThermalSpec{0.0, 1e-6}, layout);
    REQUIRE(e.branches.size() == 1);
    CHECK(e.branches[0].ph_index == 0);
    CHECK(e.branches[0].weight == 1.0);
    CHECK(e.retained_mass == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("weights descend, ties break on phonon index, and sum to one") {
    const ThermalEnsemble e = enumerate_thermal(ThermalSpec{1.0, 1e-4}, layout);
    CHECK(e.branches[0].ph_index == 0);
    REQUIRE(e.branches.size() >= 3);
    // (1,0) and (0,1) tie; the smaller layout index comes first.
    CHECK(e.branches[1].occupations == std::vector<int>{1, 0});
    CHECK(e.branches[2].occupations == std::vector<int>{0, 1});
    Real sum = 0.0;
    Real prev = 2.0;
    for (const auto& b : e.branches) {
      CHECK(b.weight <= prev + 1e-15);
      prev = b.weight;
      sum += b.weight;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("cold chain needs seven states per mode at 1e-6 mass") {
    const SpaceLayout wide{2, 2, 20};
    const ThermalEnsemble e = enumerate_thermal(ThermalSpec{0.1, 1e-6}, wide);
    CHECK(e.retained_mass >= 1.0 - 2e-6);
    int max_occ = 0;
    for (const auto& b : e.branches)
      for (const int n : b.occupations) max_occ = std::max(max_occ, n);
    CHECK(max_occ == 6);
  }

  SUBCASE("hot chain at a short Fock range loses mass") {
    const SpaceLayout narrow{2, 2, 2};
    const ThermalEnsemble e = enumerate_thermal(ThermalSpec{4.0, 1e-6}, narrow);
    // Per-mode retained mass 1-(4/5)^3 = 0.488, squared for two modes.
    CHECK(e.retained_mass == doctest::Approx(0.488 * 0.488).epsilon(1e-3));
    Real sum = 0.0;
    for (const auto& b : e.branches) sum += b.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(enumerate_thermal(ThermalSpec{-1.0, 1e-6}, layout),
                  std::invalid_argument);
  CHECK_THROWS_AS(enumerate_thermal(ThermalSpec{1.0, 0.0}, layout),
                  std::invalid_argument);
}

TEST_CASE("thermal evolution is deterministic across runs and thread counts") {
  LabParams params = table_params();
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 2, Frame::bare);
  const Real tg = gate_time(params);
  const OUParams ou = ou_from_T2(5.0e-3, 0.1, 42);

  ThermalRunOptions opt;
  opt.t_final = 0.05 * tg;
  opt.dt = 7.0e-9;
  opt.sample_times = {0.025 * tg, 0.05 * tg};
  opt.ou = &ou;
  opt.noise_trajectories = 3;
  opt.keep_per_seed = true;

  auto run = [&](int threads) {
    ThermalRunOptions o = opt;
    o.threads = threads;
    return evolve_thermal(spin_basis(1), ThermalSpec{1.0, 1e-3}, sys, PulseSchedule{}, o);
  };
  const SimResult r1 = run(1);
  const SimResult r2 = run(3);
  const SimResult r3 = run(1);

  REQUIRE(r1.spin_rho.size() == 2);
  REQUIRE(r2.spin_rho.size() == 2);
  for (std::size_t ti = 0; ti < r1.spin_rho.size(); ++ti) {
    CHECK((r1.spin_rho[ti] - r2.spin_rho[ti]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r1.spin_rho[ti] - r3.spin_rho[ti]).cwiseAbs().maxCoeff() == 0.0);
  }

  CHECK(r1.meta.noise_trajectories == 3);
  CHECK(r1.meta.num_branches == static_cast<int>(
      enumerate_thermal(ThermalSpec{1.0, 1e-3}, sys.layout).branches.size()));
  REQUIRE(r1.per_seed.size() == 3);

  // The seed-resolved densities average to the reported mixture.
  MatXc mean = MatXc::Zero(4, 4);
  for (const auto& seed_rho : r1.per_seed) mean += seed_rho[1] / 3.0;
  CHECK((mean - r1.spin_rho[1]).cwiseAbs().maxCoeff() < 1e-15);

  // Populations are a probability vector at every sample.
  for (std::size_t ti = 0; ti < r1.times.size(); ++ti) {
    const VecX pop = r1.populations(ti);
    CHECK(std::abs(pop.sum() - 1.0) < 1e-8);
    CHECK(pop.minCoeff() > -1e-12);
  }
}

TEST_CASE("thermal mixture with free spins keeps the initial populations") {
  LabParams params = table_params();
  params.Omega_L = 0.0;
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 3, Frame::bare);

  VecXc spin = VecXc::Zero(4);
  spin[0] = std::sqrt(0.3);
  spin[3] = std::sqrt(0.7);

  ThermalRunOptions opt;
  opt.t_final = 1.0e-3;
  opt.dt = 1.0e-4;
  opt.sample_times = {1.0e-3};
  const SimResult r = evolve_thermal(spin, ThermalSpec{2.0, 1e-3}, sys, PulseSchedule{}, opt);
  const VecX pop = r.populations(0);
  CHECK(pop[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pop[3] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.meta.noise_trajectories == 0);

  // n_max = 3 truncates nbar = 2 hard enough to warrant the mass warning.
  REQUIRE(!r.meta.warnings.empty());
  CHECK(r.meta.retained_mass < 0.999);
}

TEST_CASE("dephasing ensemble tracks the analytic envelope") {
  LabParams params = table_params();
  params.num_ions = 1;
  params.Omega_L = 0.0;
  params.Omega_d = 0.0;
  const GateSystem sys = make_gate_system(params, 1, Frame::bare);
  REQUIRE(sys.layout.spin_dim() == 2);

  VecXc spin(2);
  spin << std::sqrt(0.5), std::sqrt(0.5);

  const OUParams ou = ou_from_T2(5.0e-3, 0.1, 77);
  ThermalRunOptions opt;
  opt.t_final = 2.0e-3;
  opt.dt = 2.0e-5;
  opt.sample_times = {0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3};
  opt.ou = &ou;
  opt.noise_trajectories = 400;
  opt.keep_per_seed = true;
  const SimResult r = evolve_thermal(spin, ThermalSpec{0.0, 1e-6}, sys, PulseSchedule{}, opt);

  for (std::size_t ti = 0; ti < r.times.size(); ++ti) {
    // <sigma_x> per seed; the ensemble mean must match the analytic envelope
    // within its own standard error.
    Real mean = 0.0;
    std::vector<Real> values;
    values.reserve(r.per_seed.size());
    for (const auto& seed_rho : r.per_seed) {
      values.push_back(2.0 * seed_rho[ti](0, 1).real());
      mean += values.back();
    }
    mean /= static_cast<Real>(values.size());
    Real var = 0.0;
    for (const Real v : values) var += (v - mean) * (v - mean);
    const Real stderr_mean =
        std::sqrt(var / (static_cast<Real>(values.size()) *
                         (static_cast<Real>(values.size()) - 1.0)));
    const Real envelope = analytic_coherence(r.times[ti], ou);
    CHECK(std::abs(mean - envelope) < 3.5 * stderr_mean + 1e-12);
  }
}

TEST_CASE("norm preserved at the production step size") {
  const LabParams params = table_params();
  const GateSystem sys = make_gate_system(params, 2, Frame::dressed);
  const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
  const Real tf = 3.0e-5;
  const TrajectoryResult traj = evolve_trajectory(
      initial, sys, PulseSchedule{}, nullptr, 0, tf, 1.5e-9, {tf});
  CHECK(traj.final_norm_defect < 1e-9);
}

TEST_CASE("convergence probe reruns the observable on refined settings") {
  std::vector<std::pair<Real, int>> calls;
  const ConvergenceReport free_report = convergence_probe(
      [&](Real dt, int n_max) {
        calls.emplace_back(dt, n_max);
        LabParams params = table_params();
        params.Omega_L = 0.0;
        params.Omega_d = 0.0;
        const GateSystem sys = make_gate_system(params, n_max, Frame::bare);
        const VecXc initial = composite_state(sys.layout, spin_basis(1), 0);
        const TrajectoryResult traj = evolve_trajectory(
            initial, sys, PulseSchedule{}, nullptr, 0, 1.0e-4, dt, {1.0e-4});
        return spin_density(sys.layout, traj.bare_states[0])(1, 1).real();
      },
      1.0e-5, 2);
  REQUIRE(calls.size() == 3);
  CHECK(calls[0] == std::pair<Real, int>{1.0e-5, 2});
  CHECK(calls[1] == std::pair<Real, int>{0.5e-5, 2});
  CHECK(calls[2] == std::pair<Real, int>{1.0e-5, 6});
  CHECK(free_report.base == 1.0);
  CHECK(free_report.dt_drift() == 0.0);
  CHECK(free_report.space_drift() == 0.0);

  CHECK_THROWS_AS(convergence_probe(nullptr, 1e-9, 2), std::invalid_argument);
  CHECK_THROWS_AS(convergence_probe([](Real, int) { return 0.0; }, 0.0, 2),
                  std::invalid_argument);
}

TEST_CASE("input validation") {
  const LabParams params = table_params();
  const GateSystem sys = make_gate_system(params, 1, Frame::bare);
  const VecXc initial = composite_state(sys.layout, spin_basis(0), 0);
  const Real tf = 1.0e-6;
  const Real dt = 1.0e-9;

  SUBCASE("pulse schedules") {
    PulseSchedule unsorted;
    unsorted.pulses.push_back(Pulse{0.8 * tf, "XI"});
    unsorted.pulses.push_back(Pulse{0.2 * tf, "XI"});
    CHECK_THROWS_AS(
        evolve_trajectory(initial, sys, unsorted, nullptr, 0, tf, dt, {tf}),
        std::invalid_argument);

    PulseSchedule late;
    late.pulses.push_back(Pulse{2.0 * tf, "XI"});
    CHECK_THROWS_AS(evolve_trajectory(initial, sys, late, nullptr, 0, tf, dt, {tf}),
                    std::invalid_argument);

    PulseSchedule bad_label;
    bad_label.pulses.push_back(Pulse{0.5 * tf, "XQ"});
    CHECK_THROWS_AS(
        evolve_trajectory(initial, sys, bad_label, nullptr, 0, tf, dt, {tf}),
        std::invalid_argument);

    PulseSchedule bad_length;
    bad_length.pulses.push_back(Pulse{0.5 * tf, "X"});
    CHECK_THROWS_AS(
        evolve_trajectory(initial, sys, bad_length, nullptr, 0, tf, dt, {tf}),
        std::invalid_argument);
  }

  SUBCASE("states and samples") {
    CHECK_THROWS_AS(evolve_trajectory(initial, sys, PulseSchedule{}, nullptr, 0, tf, dt,
                                      {0.5 * tf, 0.2 * tf}),
                    std::invalid_argument);
    CHECK_THROWS_AS(evolve_trajectory(initial, sys, PulseSchedule{}, nullptr, 0, tf, dt,
                                      {2.0 * tf}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        evolve_trajectory(2.0 * initial, sys, PulseSchedule{}, nullptr, 0, tf, dt, {tf}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        evolve_trajectory(initial.head(4), sys, PulseSchedule{}, nullptr, 0, tf, dt, {tf}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        evolve_trajectory(initial, sys, PulseSchedule{}, nullptr, 0, 0.0, dt, {}),
        std::invalid_argument);
  }

  SUBCASE("noise bindings") {
    BlockPropagator prop(sys, dt);
    MatXc block(sys.layout.dim(), 2);
    block.col(0) = initial;
    block.col(1) = initial;
    CHECK_THROWS_AS(prop.advance(block, 0.0, tf, {nullptr}), std::invalid_argument);
    OUParams ou = ou_from_T2(5.0e-3, 0.1, 1);
    OUTrajectory a(ou, 0), b(ou, 1), c(ou, 2);
    std::vector<OUTrajectory*> three = {&a, &b, &c};
    CHECK_THROWS_AS(prop.advance(block, 0.0, tf, three), std::invalid_argument);
    CHECK_THROWS_AS(prop.advance(block, tf, 0.0, {}), std::invalid_argument);
  }

  SUBCASE("thermal runs") {
    ThermalRunOptions opt;
    opt.t_final = tf;
    opt.dt = dt;
    VecXc bad_spin = VecXc::Ones(3);
    CHECK_THROWS_AS(
        evolve_thermal(bad_spin, ThermalSpec{}, sys, PulseSchedule{}, opt),
        std::invalid_argument);
    VecXc unnormalized = VecXc::Ones(4);
    CHECK_THROWS_AS(
        evolve_thermal(unnormalized, ThermalSpec{}, sys, PulseSchedule{}, opt),
        std::invalid_argument);
  }
}

} // TEST_SUITE
