#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "iongate/common.hpp"
#include "iongate/effective.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/noise.hpp"
#include "iongate/propagate.hpp"

namespace iongate {

// Dephasing-noise section of an experiment: paths are generated per
// (T2, trajectory index) from the master seed, so grids are reproducible.
struct OUBlock {
  std::vector<Real> T2_list = {1.0e-3, 2.0e-3, 5.0e-3};  // seconds
  Real tau_ratio = 0.1;
  int trajectories = 200;
  std::uint64_t seed = 2026;
};

struct NumericsBlock {
  Real dt = 0.0;              // integrator step [s]; 0 derives it from the generator rate
  int n_max = 10;             // Fock cutoff per mode for production evaluations
  int scan_n_max = 2;         // reduced cutoff used while scanning for the gate time
  int scan_points = 9;        // coarse grid size across the gate-time window
  Real scan_halfwidth = 0.10; // window half-width as a fraction of the predicted gate time
  int haar_states = 100;
  std::uint64_t haar_seed = 1;
  int ramsey_trajectories = 5000;
  int threads = 1;
};

struct ExperimentConfig {
  std::string experiment = "custom";
  LabParams params;
  std::vector<Real> nbar_list = {0.0, 1.0, 2.0};
  Real thermal_mass_tolerance = 1.0e-2;   // desk-scale truncation budget
  std::vector<Real> drives_hz = {0.0, 2.0e6, 3.8e6, 5.2e6};  // carrier Rabi sweep
  OUBlock ou;
  NumericsBlock numerics;
  std::string out_dir = ".";
  bool full_scale = false;
};

// Strict JSON ingestion: unknown keys throw, frequencies are plain Hz,
// times are seconds, phases are radians. Missing keys keep the defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Full-scale settings: n_max = 20, 5e3 noise trajectories, 1e3 Haar states,
// tight thermal truncation, and the full fig2a occupation list.
void apply_full_scale(ExperimentConfig& config);

// CSV emission: '#'-prefixed "key = value" metadata lines, then a header
// row and numeric rows. Metadata always carries every physical parameter,
// the seeds, dt, n_max, and the code version.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Real>> rows;
};
void write_csv(const CsvTable& table, const std::string& path);
std::vector<std::pair<std::string, std::string>> config_metadata(const ExperimentConfig& config);

// Integrator step for a system: the configured dt, or the guard-derived one.
Real pick_dt(const ExperimentConfig& config, const GateSystem& sys, Real noise_amp = 0.0);

// Gate-time search for the echoed protocol. The error landscape oscillates
// on the phonon-closure scale (microseconds), so a plain coarse grid misses
// the dips: the candidate set is the coarse grid plus every common-loop
// closure time 4 pi k / delta_com inside the window, followed by a local
// sweep and a parabolic polish around the best sample.
struct GateTimeScan {
  Real t_best = 0.0;
  Real error_best = 1.0;
  std::vector<Real> times;   // every evaluated candidate, ascending
  std::vector<Real> errors;  // matching errors
};
std::vector<Real> gate_time_candidates(Real t_gate, Real delta_com, Real halfwidth,
                                       int coarse_points);
GateTimeScan scan_gate_time(const std::function<Real(Real)>& error_at,
                            const std::vector<Real>& candidates,
                            Real refine_halfwidth = 0.6e-6, Real refine_step = 0.1e-6);

// Bell-state preparation error of the echoed, driven gate: evolve the
// source basis state of `kind` through [0, t_f] with a ZZ echo at t_f/2,
// then project on the Bell target. Thermal branches and OU trajectories
// average as configured; stderr_out (optional) receives the per-trajectory
// standard error when noise is on.
Real echoed_bell_error(const GateSystem& sys, const ThermalSpec& thermal, BellKind kind,
                       Real t_f, Real dt, const OUParams* ou, int trajectories, int threads,
                       Real* stderr_out = nullptr);

// Named pipelines. Each writes its CSVs under config.out_dir and returns
// the numbers the CLI and acceptance checks consume.

struct SwapCurve {
  Real nbar = 0.0;
  std::vector<Real> times;
  std::vector<Real> p10_exact, p01_exact, p10_eff, p01_eff;
  Real first_swap_time = 0.0;  // refined peak location of the exact P01
  Real p01_amp_at_swap = 0.0;  // refined peak height
};
struct SwapResult {
  Real effective_swap_time = 0.0;  // pi / (2 J12)
  std::vector<SwapCurve> curves;
  std::vector<std::string> csv_paths;
};
SwapResult run_fig2a(const ExperimentConfig& config);

struct BellPoint {
  Real nbar = 0.0;
  Real omega_d = 0.0;  // rad/s
  Real bell_error = 1.0;
  Real t_f = 0.0;
};
struct BellResult {
  std::vector<BellPoint> points;  // drive-major, nbar-minor
  std::string csv_path;
};
BellResult run_fig2b(const ExperimentConfig& config);

struct CoherenceResult {
  Real configured_T2 = 0.0;
  Real fitted_T2 = 0.0;
  std::vector<Real> times, coherence, analytic;
  std::string csv_path;
};
CoherenceResult run_fig4a(const ExperimentConfig& config);

struct NoiseGatePoint {
  Real T2 = 0.0;  // infinity encodes the noiseless reference
  Real bell_error = 1.0;
  Real stderr_error = 0.0;
  int trajectories = 0;
};
struct NoiseGateResult {
  Real t_f = 0.0;
  std::vector<NoiseGatePoint> points;
  std::string csv_path;
};
NoiseGateResult run_fig4b(const ExperimentConfig& config);

struct ChannelErrorPoint {
  Real T2 = 0.0;  // infinity encodes the noiseless channel
  Real f_e = 0.0;
  Real eps_aa = 0.0;       // 1 - (4 f_e + 1)/5
  Real eps_hm = 0.0;       // 1 - Haar-mean fidelity
  Real stderr_haar = 0.0;
};
struct ChannelErrorResult {
  Real t_f = 0.0;
  std::vector<ChannelErrorPoint> points;
  std::string error_csv_path;     // (T2, eps_AA, eps_HM, stderr)
  std::string fidelity_csv_path;  // (T2, F_e, F_channel, haar_estimate, stderr)
};
ChannelErrorResult run_channel_error(const ExperimentConfig& config);

// Small emission tables for the structural subcommands.
CsvTable modes_table(const ExperimentConfig& config);
CsvTable jeff_table(const ExperimentConfig& config);

struct ConvergenceResult {
  Real t_f = 0.0;
  Real base_error = 0.0;
  Real dt_drift = 0.0;     // |error(dt) - error(dt/2)|
  Real space_drift = 0.0;  // |error(n_max) - error(n_max + 1)|
  std::string csv_path;
};
ConvergenceResult run_convergence(const ExperimentConfig& config);

} // namespace iongate
