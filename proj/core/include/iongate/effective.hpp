#pragma once

#include <string>
#include <vector>

#include "iongate/common.hpp"
#include "iongate/hamiltonian.hpp"
#include "iongate/operators.hpp"

namespace iongate {

// Second-order effective couplings of the sideband interaction.
//   J(i,j)    = -sum_n F(i,n) F*(j,n) / delta(n)     (real symmetric, rad/s)
//   J_tilde   = J/4, the rate surviving under strong carrier driving
//   B[i](n,m) = -(1/2) F(i,n) F*(i,m) (1/delta(n) + 1/delta(m))
// J(i,j) is the full two-ion flip-flop rate: both ordered pairs (i,j) and
// (j,i) of the pair sum contribute, so P01(t) = sin^2(J12 t) with J12 = J(0,1).
struct EffectiveCouplings {
  MatX J;
  MatX J_tilde;
  std::vector<MatXc> B;
  // pi/(8 |J_tilde(0,1)|) = pi/(2 |J(0,1)|): the driven entangling-gate time
  // (and the XY model's full SWAP time) for the first ion pair.
  Real t_gate = 0.0;
};

// Throws std::domain_error if any mode is resonant (delta(n) == 0).
EffectiveCouplings compute_j_eff(const SidebandCouplings& c);

// Two-ion XY dynamics from |10>: returns (P10, P01) = (cos^2, sin^2)(J12 t).
std::pair<Real, Real> xy_swap_probabilities(const EffectiveCouplings& eff, Real t);

// Ideal entangling gate U_eff = exp(-i (pi/4) sigma^d sigma^d) on two qubits,
// spin index = b0 + 2 b1 (qubit 0 is bit 0), sigma^d = e^{i phi_d} sigma^+ + h.c.
MatXc ideal_gate(Real phi_d = 0.0);

// U_eff applied to a computational basis state given as a two-character
// label "b0 b1" ("00", "10", "01", "11"); e.g. "10" -> (|10> - i|01>)/sqrt(2).
VecXc ideal_gate_action(const std::string& input, Real phi_d = 0.0);

// Numerical verification of the phonon-displacing (polaron) transformation
// U = exp(S), S = sum_in (F*(i,n)/(2 delta(n))) sigma_i^x a_n^dag - h.c. on a
// small dense space. Residuals are max-norm matrix-element defects of
//   U a_n U^dag   = a_n - sum_j (F*(j,n)/(2 delta(n))) sigma_j^x
//   U s_i^y U^dag = cosh(Theta_i) s_i^y - i sinh(Theta_i) s_i^z,
//   Theta_i = sum_n (F(i,n) a_n - F*(i,n) a_n^dag) / delta(n)
// evaluated on the truncation interior (all mode occupations <= n_max - 2).
// The exponentials are built on a Fock space padded by four extra levels so
// boundary truncation cannot contaminate the compared elements. Throws
// std::invalid_argument when the padded dense construction would be too
// large (dim > 4096) or n_max < 3.
struct PolaronCheck {
  Real displacement_residual = 0.0;
  Real rotation_residual = 0.0;
};
PolaronCheck polaron_transform_check(const SidebandCouplings& c, const SpaceLayout& layout);

// Phase-space demonstrator for spin-dependent forces on one ion and one mode,
// H_axis(t) = (f/2) sigma^axis (a e^{-i delta t} + a^dag e^{+i delta t}).
// A single force ('x' or 'y') drives each sigma^axis branch around a closed
// circle of radius |f/(2 delta)| with period 2 pi/delta, picking up a
// motion-independent area phase; concatenating both forces in a Trotter
// product ('b') spoils the closure and leaves residual spin-motion
// entanglement. alpha_plus/minus hold <a> per branch (initial |+axis>/|-axis>
// spin for 'b'); the phase fields apply to the single-force case only.
struct ForceDemoResult {
  std::vector<Real> times;
  std::vector<Complex> alpha_plus;
  std::vector<Complex> alpha_minus;
  Real closure_error = 0.0;  // |alpha_plus(T) - alpha_plus(0)|
  Real area_phase = 0.0;     // accumulated Im(conj(alpha) d alpha) for the + branch
  Real endpoint_norm = 0.0;  // |<a>(T)| of the + branch
};
ForceDemoResult trotter_force_demo(char force, int steps, Real f, Real delta, int n_max = 8);

} // namespace iongate
