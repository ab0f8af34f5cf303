#pragma once

#include "iongate/common.hpp"

namespace iongate {

// Transverse (radial) normal modes of a linear chain in a harmonic trap.
// Modes are sorted by descending frequency, so column 0 of M is the
// center-of-mass mode at exactly omega_x with uniform amplitudes 1/sqrt(N).
// Columns of M are orthonormal; the first entry of magnitude > 1e-9 in each
// column is kept nonnegative so outputs are reproducible.
struct ChainModes {
    VecX positions;  // equilibrium coordinates, dimensionless, ascending
    VecX omega;      // mode angular frequencies [rad/s], descending
    MatX M;          // M(i,n): amplitude of ion i in mode n
    MatX V;          // dimensionless coupling matrix, omega_n^2 = omega_x^2 (1 + xi V_n)
};

// Equilibrium positions of n_ions in the axial well, in units of the Coulomb
// length (e^2 / 4 pi eps0 m omega_z^2)^{1/3}. Damped Newton from the
// uniform-spacing ansatz; the dimensionless potential is strictly convex on
// the ordered cone, so the iteration is globally convergent. Exit residual
// below 1e-12; positions exactly antisymmetric about the origin.
// Throws std::runtime_error (with the last residual) on non-convergence.
VecX equilibrium_positions(int n_ions);

// Residual of the dimensionless equilibrium system at u; infinity norm.
Real equilibrium_residual(const VecX& u);

// Transverse eigensystem for trap frequencies omega_x, omega_z (rad/s),
// omega_x > omega_z > 0. Throws std::runtime_error if any squared mode
// frequency is nonpositive (chain past the zigzag threshold; at
// omega_x = 4 omega_z this first happens at N = 9).
ChainModes transverse_modes(int n_ions, Real omega_x, Real omega_z);

} // namespace iongate
