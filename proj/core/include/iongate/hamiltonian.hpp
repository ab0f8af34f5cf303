#pragma once

#include <string>
#include <vector>

#include "iongate/common.hpp"
#include "iongate/crystal.hpp"
#include "iongate/operators.hpp"

namespace iongate {

// Laboratory parameters for the driven sideband gate.
// All frequencies are angular (rad/s); configs supply ordinary Hz values
// which are converted on ingestion (rad_from_hz).
struct LabParams {
  int num_ions = 2;

  Real omega0 = rad_from_hz(1.8e9);  // qubit splitting; bookkeeping only in the rotating frame
  Real omega_x = rad_from_hz(4.0e6); // radial trap frequency
  Real omega_z = rad_from_hz(1.0e6); // axial trap frequency
  Real eta = 0.2;                    // Lamb-Dicke parameter referenced to omega_x
  Real B0 = 0.0;                     // static field; bookkeeping only

  // Signed detuning of the Raman beatnote from the red sideband of the
  // highest (center-of-mass) transverse mode. The positive default places
  // the beatnote above every red-sideband resonance, which gives a
  // predicted gate time of 0.70 ms at the default parameters; flipping the
  // sign weakens the coupling (1.47 ms) because the two mode contributions
  // then partially cancel.
  Real delta_L = rad_from_hz(800.0e3);

  Real Omega_L = rad_from_hz(500.0e3); // two-photon sideband Rabi frequency
  Real Omega_d = rad_from_hz(5.2e6);   // resonant carrier drive Rabi frequency
  Real phi_L = 0.0;                    // laser phase
  Real phi_d = 0.0;                    // carrier drive phase
};

// Mode-resolved sideband couplings: F(i, n) couples qubit i to mode n via
// sigma^+_i a_n exp(-i delta(n) t). F(i, n) = (i/2) Omega_L e^{i phi_L} eta_n(n) M(i, n),
// eta_n(n) = eta sqrt(omega_x / omega_n), delta(n) = delta_L + (omega_n - omega_x).
struct SidebandCouplings {
  MatXc F;    // num_ions x num_modes, rad/s
  VecX delta; // per-mode detuning, rad/s
  VecX eta_n; // mode-resolved Lamb-Dicke factors

  // Largest |F(i,n)| / |delta(n)|; the perturbative regime needs this << 1.
  Real force_to_detuning_ratio() const;
};

SidebandCouplings sideband_couplings(const LabParams& params, const ChainModes& modes);

// Instantaneous Hermitian pieces of the rotating-frame Hamiltonian.
// build_carrier: (Omega_d/2) sum_i (e^{i phi_d} sigma_i^+ + h.c.); the
// counter-rotating flag adds the e^{-+i 2 omega0 t} partner terms.
SpMat build_carrier(const SpaceLayout& layout, const LabParams& params, Real t,
                    bool include_counter_rotating = false);
// build_red_sideband: sum_in F(i,n) sigma_i^+ a_n e^{-i delta(n) t} + h.c.
SpMat build_red_sideband(const SpaceLayout& layout, const SidebandCouplings& c, Real t);
// build_noise_term: (F_value/2) sum_i sigma_i^z (global dephasing field).
SpMat build_noise_term(const SpaceLayout& layout, Real F_value);

// Propagation frame. `bare` keeps the carrier as a static term; `dressed`
// works in the carrier interaction picture, where the drive is absorbed
// exactly into oscillating coefficients and a final per-qubit back-rotation.
// The two frames describe identical physics; `dressed` removes the largest
// operator norm from the integrated generator. With Omega_d = 0 both frames
// produce the same term table.
enum class Frame { bare, dressed };

// One rotating term: coeff * exp(i freq t) * op. Terms always appear in
// Hermitian-conjugate pairs so the assembled H(t) is Hermitian.
struct RotatingTerm {
  Complex coeff;
  Real freq = 0.0;
  SpMat op;
};

// H(t) = sum_k terms[k] + F(t) * sum_k noise_terms[k], with F(t) the
// dephasing-field amplitude supplied by the propagator per step.
struct RotatingHamiltonian {
  SpaceLayout layout;
  std::vector<RotatingTerm> terms;
  std::vector<RotatingTerm> noise_terms;

  Real max_frequency() const;     // largest |freq| over both lists
  Real norm_bound() const;        // sum_k |coeff_k| * ||op_k||, spectral upper bound
  Real noise_norm_bound() const;  // same bound for the noise terms at F = 1
  MatXc dense_at(Real t, Real noise_value = 0.0) const;
};

RotatingHamiltonian rotating_hamiltonian(const SpaceLayout& layout, const LabParams& params,
                                         const SidebandCouplings& c, Frame frame,
                                         bool include_counter_rotating = false);

// Exact unitary that maps a state propagated in `frame` back to the bare
// rotating frame at time t (identity for Frame::bare or Omega_d = 0).
SpMat frame_backrotation(const SpaceLayout& layout, const LabParams& params, Frame frame, Real t);

// Single-qubit Pauli axis ('x','y','z') expressed in the propagation frame
// at time t; applying a lab pulse mid-evolution requires this conjugated form.
Mat2 framed_pauli(const LabParams& params, Frame frame, char axis, Real t);

// Unitary for an instantaneous Pauli-string pulse (one char in "IXYZ" per
// qubit, e.g. "ZZ"), expressed in the propagation frame at time t.
SpMat pulse_operator(const SpaceLayout& layout, const LabParams& params, Frame frame,
                     const std::string& pauli, Real t);

} // namespace iongate
