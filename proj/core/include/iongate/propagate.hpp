#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iongate/hamiltonian.hpp"
#include "iongate/noise.hpp"
#include "iongate/operators.hpp"

namespace iongate {

// Everything needed to propagate one configuration: the index layout, the
// lab parameters, the derived mode couplings, the propagation frame and the
// rotating term table built from them. Constructing the bundle once keeps
// all consumers (integrator, pulses, sampling) on the same convention.
struct GateSystem {
  SpaceLayout layout;
  LabParams params;
  ChainModes modes;
  SidebandCouplings couplings;
  Frame frame = Frame::bare;
  RotatingHamiltonian ham;
};

GateSystem make_gate_system(const LabParams& params, int n_max, Frame frame,
                            bool include_counter_rotating = false);

// Instantaneous Pauli-string pulse: one char from "IXYZ" per qubit, applied
// exactly at `time` (the integrator places a step boundary there).
struct Pulse {
  Real time = 0.0;
  std::string pauli;
};

struct PulseSchedule {
  std::vector<Pulse> pulses;

  // Sorted times within [0, t_final], labels valid for num_qubits.
  // Throws std::invalid_argument on violation.
  void validate(int num_qubits, Real t_final) const;
};

// Thermal phonon preparation: every mode at the same mean occupation nbar.
// Per-mode weights p_n = nbar^n / (1+nbar)^{n+1} are renormalized over the
// retained Fock range 0..n_max; joint products are enumerated exactly and
// kept (largest first) until the requested mass is reached.
struct ThermalSpec {
  Real nbar = 0.0;
  Real mass_tolerance = 1e-6;
};

// Raw geometric weight p_n = nbar^n / (1+nbar)^{n+1} before truncation.
Real thermal_weight(Real nbar, int n);

struct ThermalBranch {
  std::vector<int> occupations;  // one per mode
  std::int64_t ph_index = 0;     // layout phonon index of |occupations>
  Real weight = 0.0;             // renormalized over the retained set
};

struct ThermalEnsemble {
  std::vector<ThermalBranch> branches;
  Real retained_mass = 1.0;  // raw probability mass of the retained set
};

ThermalEnsemble enumerate_thermal(const ThermalSpec& spec, const SpaceLayout& layout);

// |spin> (x) |ph_index>; spin must have length layout.spin_dim().
VecXc composite_state(const SpaceLayout& layout, const VecXc& spin, std::int64_t ph_index);

// Largest generator rate the integrator must resolve: deterministic norm
// bound + fastest rotating coefficient + noise bound at |F| = noise_amp.
Real generator_rate(const GateSystem& sys, Real noise_amp = 0.0);

// Step size meeting the accuracy target rate*dt = 0.05 (refusal is at 0.5).
Real suggested_dt(const GateSystem& sys, Real noise_amp = 0.0, Real target = 0.05);

// Classical 4th-order stepper over the rotating term table. The term table
// is assembled into one fixed-pattern sparse matrix per stage time, so a
// whole block of columns shares each assembly. Noise bindings: empty = no
// noise, one trajectory = shared by all columns, one per column = column-
// resolved dephasing paths. F is held constant across each step and advanced
// by the exact OU update afterwards.
class BlockPropagator {
 public:
  // noise_amp enters only the step-size refusal check; pass the amplitude
  // scale of the dephasing field (e.g. 4 stationary sigmas).
  BlockPropagator(const GateSystem& sys, Real dt, Real noise_amp = 0.0);
  ~BlockPropagator();
  BlockPropagator(BlockPropagator&&) noexcept;
  BlockPropagator& operator=(BlockPropagator&&) noexcept;

  // Advance all columns of `block` from t0 to t1 with uniform steps of at
  // most dt (boundaries land exactly on t1). Advances each bound OU
  // trajectory once per step.
  void advance(MatXc& block, Real t0, Real t1,
               const std::vector<OUTrajectory*>& noise = {});

  // Apply the instantaneous Pauli-string pulse at time t (frame-conjugated).
  void apply_pulse(MatXc& block, const std::string& pauli, Real t);

  const SpaceLayout& layout() const;
  Real dt() const { return dt_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Real dt_ = 0.0;
};

// Drive a block of columns through [0, t_final]: advance between the sorted
// union of pulse and sample times, apply each pulse exactly at its scheduled
// instant, and hand the block (still in the propagation frame) to on_sample
// after any pulse sharing that time. This is the one segmentation path every
// higher-level evolve call goes through.
void run_schedule(MatXc& block, BlockPropagator& prop, const PulseSchedule& schedule,
                  const std::vector<OUTrajectory*>& noise, Real t_final,
                  const std::vector<Real>& sample_times,
                  const std::function<void(std::size_t, Real, const MatXc&)>& on_sample);

struct TrajectoryResult {
  std::vector<Real> times;
  std::vector<VecXc> frame_states;  // in the propagation frame
  std::vector<VecXc> bare_states;   // back-rotated to the bare rotating frame
  Real final_norm_defect = 0.0;     // | ||psi(t_final)|| - 1 |
};

// Integrate one pure-state trajectory from t = 0 to t_final, recording the
// state at every sample time (sorted, within [0, t_final]; a sample that
// coincides with a pulse records the post-pulse state). Noise, when ou is
// non-null, is one OU path seeded from (ou->seed, noise_stream).
// Throws std::invalid_argument when the schedule or samples are malformed or
// dt fails the rate*dt <= 0.5 refusal check; throws std::runtime_error if
// the final norm defect exceeds 1e-3 (diverged integration).
TrajectoryResult evolve_trajectory(const VecXc& initial, const GateSystem& sys,
                                   const PulseSchedule& schedule, const OUParams* ou,
                                   std::uint64_t noise_stream, Real t_final, Real dt,
                                   const std::vector<Real>& sample_times);

struct SimMeta {
  Real dt = 0.0;
  Real t_final = 0.0;
  int n_max = 0;
  int num_branches = 0;
  int noise_trajectories = 0;
  std::uint64_t noise_seed = 0;
  Real retained_mass = 1.0;
  Real max_norm_defect = 0.0;
  std::vector<std::string> warnings;
};

struct SimResult {
  std::vector<Real> times;
  std::vector<MatXc> spin_rho;  // phonon-traced, branch- and noise-averaged
  // Seed-resolved spin density matrices [seed][time], kept on request.
  std::vector<std::vector<MatXc>> per_seed;
  SimMeta meta;

  VecX populations(std::size_t time_index) const;
};

struct ThermalRunOptions {
  Real t_final = 0.0;
  Real dt = 0.0;
  std::vector<Real> sample_times;
  const OUParams* ou = nullptr;  // nullptr = deterministic
  int noise_trajectories = 1;    // OU paths averaged (streams 0..n-1)
  bool keep_per_seed = false;
  int threads = 1;
};

// Deterministic thermal mixture: evolve every retained Fock branch (times
// every OU stream when noise is enabled; the same stream replays the same
// field across branches) and weight-average the phonon-traced spin density
// matrix. Work items are reduced in a fixed order, so results are
// bit-identical for any thread count. Populations must sum to 1 within 1e-8
// at every sample time or the run is rejected (std::runtime_error).
SimResult evolve_thermal(const VecXc& spin_state, const ThermalSpec& thermal,
                         const GateSystem& sys, const PulseSchedule& schedule,
                         const ThermalRunOptions& opt);

struct ConvergenceReport {
  Real base = 0.0;          // observable at (dt, n_max)
  Real half_dt = 0.0;       // at (dt/2, n_max)
  Real larger_space = 0.0;  // at (dt, n_max + 4)

  Real dt_drift() const;
  Real space_drift() const;
};

// Re-runs a caller-supplied scalar observable at (dt/2, n_max) and
// (dt, n_max + 4) to certify production settings.
ConvergenceReport convergence_probe(const std::function<Real(Real, int)>& observable,
                                    Real dt, int n_max);

} // namespace iongate
