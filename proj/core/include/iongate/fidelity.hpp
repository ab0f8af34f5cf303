#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iongate/propagate.hpp"

namespace iongate {

// Bell targets as the ideal-gate images of the computational basis states,
// so each carries the drive-phase rotation exactly where the gate puts it:
//   psi_minus <- |10>  : (|10> - i|01>)/sqrt(2)
//   psi_plus  <- |01>  : (|01> - i|10>)/sqrt(2)
//   phi_minus <- |11>  : (|11> - i e^{-2i phi_d}|00>)/sqrt(2)
//   phi_plus  <- |00>  : (|00> - i e^{+2i phi_d}|11>)/sqrt(2)
enum class BellKind { psi_minus, psi_plus, phi_minus, phi_plus };

VecXc bell_target(BellKind kind, Real phi_d = 0.0);

// The 4-component spin basis state the ideal gate turns into the target.
int bell_source_index(BellKind kind);

struct FidelityReport {
  Real bell_fidelity = 0.0;  // max over the scanned gate times
  Real t_f_at_max = 0.0;
  Real error = 0.0;  // 1 - bell_fidelity
};

// Maximum of <target|rho(t)|target> over the scanned samples with 3-point
// parabolic refinement around an interior peak (vertex clamped to the
// bracketing interval; non-concave or boundary peaks fall back to the grid
// value). times must be sorted ascending and match rho; target must be a
// normalized spin_dim vector.
FidelityReport bell_fidelity(const std::vector<Real>& times,
                             const std::vector<MatXc>& spin_rho, const VecXc& target);
FidelityReport bell_fidelity(const SimResult& result, const VecXc& target);

// Two-qubit channel tensor E_ab = Tr_ph{ U (rho_ph (x) |a><b|) U^dag },
// averaged over thermal branches and noise paths. Only the d^2 cross
// densities of the evolved basis columns are stored; every fidelity
// functional below is linear in them.
struct ChannelTensor {
  int d = 0;
  std::vector<MatXc> elements;  // (a*d + b) -> d x d matrix E_ab
  Real weight = 0.0;            // accumulated mixture weight

  MatXc& at(int a, int b) { return elements[static_cast<std::size_t>(a) * d + b]; }
  const MatXc& at(int a, int b) const {
    return elements[static_cast<std::size_t>(a) * d + b];
  }
  // Channel action on a spin density matrix: sum_ab rho(a,b) E_ab.
  MatXc apply(const MatXc& rho_spin) const;
};

ChannelTensor empty_channel(int d);

// E_ab = u |a><b| u^dag: the tensor of an exactly unitary spin channel.
ChannelTensor unitary_channel(const MatXc& u);

// E_ab = delta_ab I/d: the fully depolarizing channel.
ChannelTensor depolarizing_channel(int d);

// Accumulate w * Tr_ph |col_a><col_b| for all basis-column pairs of one
// propagated block (columns ordered by spin basis index, bare frame).
void accumulate_channel(ChannelTensor& tensor, const SpaceLayout& layout,
                        const MatXc& basis_block, Real weight);

// F_e = (1/d^2) sum_ab <a| u_eff^dag E_ab u_eff |b>. Throws
// std::runtime_error when the value leaves [-1e-9, 1+1e-9] or keeps an
// imaginary part above 1e-9 (numerical-consistency guard); the returned
// value is clamped to [0, 1].
Real entanglement_fidelity(const ChannelTensor& tensor, const MatXc& u_eff);

// Average-fidelity relation for dimension d: F = (d F_e + 1)/(d + 1).
Real channel_fidelity_from_entanglement(Real f_e, int d = 4);

struct HaarEstimate {
  Real mean = 0.0;
  Real stderr_mean = 0.0;
  int samples = 0;
};

// Monte-Carlo average of <psi|u_eff^dag E(|psi><psi|) u_eff|psi> over Haar
// states (normalized complex-normal vectors, mt19937_64 stream from seed).
HaarEstimate haar_average_fidelity(const ChannelTensor& tensor, const MatXc& u_eff,
                                   int n_samples, std::uint64_t seed);

struct ChannelRun {
  ChannelTensor tensor;
  int branches = 0;
  int seeds = 0;
  Real retained_mass = 1.0;
  Real max_norm_defect = 0.0;
  std::vector<std::string> warnings;
};

// Evolve the spin_dim computational basis columns through the scheduled
// protocol for every (thermal branch x noise seed) work item (one shared
// dephasing path per seed) and average the channel tensor in a fixed item
// order, so the result is bit-identical for any thread count.
ChannelRun run_channel(const GateSystem& sys, const PulseSchedule& schedule,
                       const ThermalSpec& thermal, const OUParams* ou,
                       int noise_trajectories, Real t_f, Real dt, int threads = 1);

} // namespace iongate
