#pragma once

#include <limits>
#include <random>

#include "iongate/common.hpp"

namespace iongate {

// Ornstein-Uhlenbeck parameters for the global dephasing field F(t) [rad/s]:
//   dF = -(F/tau) dt + sqrt(c) dW
// Stationary distribution N(0, c tau / 2); coherence decay time T2 = 2/(c tau^2).
struct OUParams {
    Real c = 0.0;           // diffusion constant [rad^2/s^3]
    Real tau = 1.0;         // correlation time [s]
    std::uint64_t seed = 0; // master seed; trajectories derive per-stream seeds

    Real T2() const {
        if (c <= 0.0) return std::numeric_limits<Real>::infinity();
        return 2.0 / (c * tau * tau);
    }
};

// Builds OUParams from a target coherence time: tau = tau_ratio * T2,
// c = 2/(T2 tau^2). Requires T2 > 0 and tau_ratio in (0, 1).
OUParams ou_from_T2(Real T2, Real tau_ratio, std::uint64_t seed);

// One stochastic path of the OU field. The start value is drawn from the
// stationary distribution, so ensemble statistics are time-translation
// invariant. Identical (params, stream) always reproduces the same path for
// the same step sequence, independent of any other stream.
class OUTrajectory {
public:
    OUTrajectory(const OUParams& params, std::uint64_t stream);

    Real value() const { return f_; }
    Real time() const { return t_; }

    // Advances the path by dt > 0 with the exact one-step update
    //   F(t+dt) = F(t) e^{-dt/tau} + sqrt(c tau/2 (1 - e^{-2 dt/tau})) n,
    // n ~ N(0,1); returns the new value. Exact for any dt.
    Real step(Real dt);

private:
    OUParams p_;
    Real f_ = 0.0;
    Real t_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<Real> gauss_{0.0, 1.0};
};

// One stochastic path of the pair (F, phi = integral of F), sampled jointly
// from the exact bivariate Gaussian one-step law of the OU process and its
// integral. Used by the single-qubit Ramsey fast path, where only the
// accumulated phase matters; exact for any dt.
class OUPhaseTrajectory {
public:
    OUPhaseTrajectory(const OUParams& params, std::uint64_t stream);

    Real value() const { return f_; }
    Real phase() const { return phi_; }
    Real time() const { return t_; }

    // Advances (F, phi) by dt > 0; draws two normals per step, so the
    // consumption pattern is deterministic. Returns the new phase.
    Real step(Real dt);

private:
    OUParams p_;
    Real f_ = 0.0;
    Real phi_ = 0.0;
    Real t_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<Real> gauss_{0.0, 1.0};
};

// Analytic coherence envelope |<e^{i phi(t)}>| for the stationary OU phase
// phi(t) = integral of F, using the Gaussian identity exp(-<phi^2>/2) with
//   <phi^2>(t) = c tau^2 (t - tau (1 - e^{-t/tau})).
// Tends to exp(-t/T2) for t >> tau.
Real analytic_coherence(Real t, const OUParams& params);

} // namespace iongate
