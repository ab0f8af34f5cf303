#include "iongate/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace iongate {

OUParams ou_from_T2(Real T2, Real tau_ratio, std::uint64_t seed) {
    if (!(T2 > 0.0)) throw std::invalid_argument("ou_from_T2: T2 > 0 required");
    if (!(tau_ratio > 0.0 && tau_ratio < 1.0))
        throw std::invalid_argument("ou_from_T2: tau_ratio in (0,1) required");
    OUParams p;
    p.tau = tau_ratio * T2;
    p.c = 2.0 / (T2 * p.tau * p.tau);
    p.seed = seed;
    return p;
}

OUTrajectory::OUTrajectory(const OUParams& params, std::uint64_t stream)
    : p_(params), rng_(stream_seed(params.seed, stream)) {
    if (!(p_.tau > 0.0)) throw std::invalid_argument("OUTrajectory: tau > 0 required");
    if (p_.c < 0.0) throw std::invalid_argument("OUTrajectory: c >= 0 required");
    f_ = std::sqrt(p_.c * p_.tau / 2.0) * gauss_(rng_);
}

Real OUTrajectory::step(Real dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("OUTrajectory::step: dt > 0 required");
    const Real decay = std::exp(-dt / p_.tau);
    const Real sigma = std::sqrt(p_.c * p_.tau / 2.0 * (1.0 - decay * decay));
    f_ = f_ * decay + sigma * gauss_(rng_);
    t_ += dt;
    return f_;
}

OUPhaseTrajectory::OUPhaseTrajectory(const OUParams& params, std::uint64_t stream)
    : p_(params), rng_(stream_seed(params.seed, stream)) {
    if (!(p_.tau > 0.0)) throw std::invalid_argument("OUPhaseTrajectory: tau > 0 required");
    if (p_.c < 0.0) throw std::invalid_argument("OUPhaseTrajectory: c >= 0 required");
    f_ = std::sqrt(p_.c * p_.tau / 2.0) * gauss_(rng_);
}

Real OUPhaseTrajectory::step(Real dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("OUPhaseTrajectory::step: dt > 0 required");
    const Real tau = p_.tau;
    const Real x = dt / tau;
    const Real em1 = -std::expm1(-x);  // 1 - e^{-x}, no cancellation

    // Exact joint law of the increments (xi_F, xi_phi):
    //   var_F   = (c tau / 2) (1 - e^{-2x})
    //   var_phi = c tau^3 (x - 2(1 - e^{-x}) + (1 - e^{-2x})/2)
    //   cov     = (c tau^2 / 2) (1 - e^{-x})^2
    const Real var_f = p_.c * tau / 2.0 * -std::expm1(-2.0 * x);
    Real var_phi;
    if (x < 1.0e-3) {
        // series: the direct formula cancels to O(x^3)
        var_phi = p_.c * tau * tau * tau * x * x * x * (1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0);
    } else {
        var_phi = p_.c * tau * tau * tau * (x - 2.0 * em1 + 0.5 * -std::expm1(-2.0 * x));
    }
    const Real cov = p_.c * tau * tau / 2.0 * em1 * em1;

    const Real n1 = gauss_(rng_);
    const Real n2 = gauss_(rng_);
    const Real xi_f = std::sqrt(var_f) * n1;
    Real xi_phi = 0.0;
    if (var_f > 0.0) {
        const Real residual = std::max(var_phi - cov * cov / var_f, 0.0);
        xi_phi = cov / std::sqrt(var_f) * n1 + std::sqrt(residual) * n2;
    }
    phi_ += f_ * tau * em1 + xi_phi;
    f_ = f_ * std::exp(-x) + xi_f;
    t_ += dt;
    return phi_;
}

Real analytic_coherence(Real t, const OUParams& params) {
    if (t < 0.0) throw std::invalid_argument("analytic_coherence: t >= 0 required");
    const Real tau = params.tau;
    const Real var = params.c * tau * tau * (t - tau * (1.0 - std::exp(-t / tau)));
    return std::exp(-0.5 * var);
}

} // namespace iongate
