#include "iongate/effective.hpp"

#include <cmath>
#include <stdexcept>

namespace iongate {

EffectiveCouplings compute_j_eff(const SidebandCouplings& c) {
    const auto n_ions = c.F.rows();
    const auto n_modes = c.F.cols();
    for (Eigen::Index n = 0; n < n_modes; ++n)
        if (c.delta[n] == 0.0)
            throw std::domain_error("compute_j_eff: mode " + std::to_string(n) +
                                    " is resonant (delta = 0)");

    EffectiveCouplings eff;
    eff.J = MatX::Zero(n_ions, n_ions);
    for (Eigen::Index i = 0; i < n_ions; ++i)
        for (Eigen::Index j = 0; j < n_ions; ++j) {
            Complex s = 0.0;
            for (Eigen::Index n = 0; n < n_modes; ++n)
                s += c.F(i, n) * std::conj(c.F(j, n)) / c.delta[n];
            // the laser phase cancels in F F*, the sum is real by construction
            eff.J(i, j) = -s.real();
        }
    eff.J_tilde = eff.J / 4.0;

    eff.B.resize(n_ions);
    for (Eigen::Index i = 0; i < n_ions; ++i) {
        eff.B[i] = MatXc::Zero(n_modes, n_modes);
        for (Eigen::Index n = 0; n < n_modes; ++n)
            for (Eigen::Index m = 0; m < n_modes; ++m)
                eff.B[i](n, m) = -0.5 * c.F(i, n) * std::conj(c.F(i, m)) *
                                 (1.0 / c.delta[n] + 1.0 / c.delta[m]);
    }

    if (n_ions >= 2 && eff.J(0, 1) != 0.0) eff.t_gate = pi / (2.0 * std::abs(eff.J(0, 1)));
    return eff;
}

std::pair<Real, Real> xy_swap_probabilities(const EffectiveCouplings& eff, Real t) {
    if (eff.J.rows() != 2)
        throw std::invalid_argument("xy_swap_probabilities: two-ion case only");
    const Real c = std::cos(eff.J(0, 1) * t);
    const Real s = std::sin(eff.J(0, 1) * t);
    return {c * c, s * s};
}

MatXc ideal_gate(Real phi_d) {
    const Mat2 sd = std::exp(Complex(0.0, phi_d)) * pauli2('+') +
                    std::exp(Complex(0.0, -phi_d)) * pauli2('-');
    MatXc sdsd = MatXc::Zero(4, 4);
    for (int s = 0; s < 4; ++s)
        for (int sp = 0; sp < 4; ++sp)
            sdsd(s, sp) = sd(s & 1, sp & 1) * sd((s >> 1) & 1, (sp >> 1) & 1);
    return std::cos(pi / 4.0) * MatXc::Identity(4, 4) -
           Complex(0.0, std::sin(pi / 4.0)) * sdsd;
}

VecXc ideal_gate_action(const std::string& input, Real phi_d) {
    if (input.size() != 2 || (input[0] != '0' && input[0] != '1') ||
        (input[1] != '0' && input[1] != '1'))
        throw std::invalid_argument("ideal_gate_action: input must be one of 00,01,10,11");
    const int spin = (input[0] - '0') + 2 * (input[1] - '0');
    VecXc v = VecXc::Zero(4);
    v[spin] = 1.0;
    return ideal_gate(phi_d) * v;
}

PolaronCheck polaron_transform_check(const SidebandCouplings& c, const SpaceLayout& layout) {
    if (layout.n_max < 3)
        throw std::invalid_argument("polaron_transform_check: n_max >= 3 required");
    if (c.F.rows() != layout.num_qubits || c.F.cols() != layout.num_modes)
        throw std::invalid_argument("polaron_transform_check: couplings do not match layout");

    // The exponential is evaluated on a padded Fock space so that ladder
    // truncation at the boundary does not leak into the compared elements;
    // the identities are then checked on the requested layout's interior.
    const SpaceLayout padded{layout.num_qubits, layout.num_modes, layout.n_max + 4};
    if (padded.dim() > 4096)
        throw std::invalid_argument("polaron_transform_check: space too large for dense check");

    const auto dim = padded.dim();

    // interior = global indices with every mode occupation <= n_max - 2
    std::vector<bool> interior(dim, true);
    for (std::int64_t g = 0; g < dim; ++g) {
        const auto ph = padded.ph_part(g);
        for (int m = 0; m < padded.num_modes; ++m)
            if (padded.occupation(ph, m) > layout.n_max - 2) interior[g] = false;
    }
    const auto interior_max = [&](const MatXc& a) {
        Real worst = 0.0;
        for (std::int64_t r = 0; r < dim; ++r)
            for (std::int64_t col = 0; col < dim; ++col)
                if (interior[r] && interior[col]) worst = std::max(worst, std::abs(a(r, col)));
        return worst;
    };

    MatXc s = MatXc::Zero(dim, dim);
    for (int i = 0; i < padded.num_qubits; ++i) {
        const MatXc sx = dense(qubit_op(padded, i, pauli2('x')));
        for (int n = 0; n < padded.num_modes; ++n) {
            const MatXc ad = dense(boson_op(padded, n, Ladder::create));
            const Complex g = std::conj(c.F(i, n)) / (2.0 * c.delta[n]);
            s += g * sx * ad - std::conj(g) * sx * ad.adjoint();
        }
    }
    const MatXc u = mat_exp(s);
    const MatXc ud = u.adjoint();

    PolaronCheck report;
    for (int n = 0; n < padded.num_modes; ++n) {
        const MatXc a = dense(boson_op(padded, n, Ladder::annihilate));
        MatXc rhs = a;
        for (int j = 0; j < padded.num_qubits; ++j)
            rhs -= (std::conj(c.F(j, n)) / (2.0 * c.delta[n])) *
                   dense(qubit_op(padded, j, pauli2('x')));
        report.displacement_residual =
            std::max(report.displacement_residual, interior_max(u * a * ud - rhs));
    }

    for (int i = 0; i < padded.num_qubits; ++i) {
        MatXc theta = MatXc::Zero(dim, dim);
        for (int n = 0; n < padded.num_modes; ++n) {
            const MatXc a = dense(boson_op(padded, n, Ladder::annihilate));
            theta += (c.F(i, n) / c.delta[n]) * a -
                     (std::conj(c.F(i, n)) / c.delta[n]) * a.adjoint();
        }
        const MatXc sy = dense(qubit_op(padded, i, pauli2('y')));
        const MatXc sz = dense(qubit_op(padded, i, pauli2('z')));
        const MatXc rhs = mat_cosh(theta) * sy - Complex(0.0, 1.0) * mat_sinh(theta) * sz;
        report.rotation_residual =
            std::max(report.rotation_residual, interior_max(u * sy * ud - rhs));
    }
    return report;
}

ForceDemoResult trotter_force_demo(char force, int steps, Real f, Real delta, int n_max) {
    if (force != 'x' && force != 'y' && force != 'b')
        throw std::invalid_argument("trotter_force_demo: force must be 'x', 'y' or 'b'");
    if (steps < 8) throw std::invalid_argument("trotter_force_demo: steps >= 8 required");
    if (delta == 0.0) throw std::invalid_argument("trotter_force_demo: resonant force (delta = 0)");

    const Real period = two_pi / std::abs(delta);
    const Real dt = period / steps;
    ForceDemoResult out;
    out.times.reserve(steps + 1);

    if (force != 'b') {
        // exact displaced-oscillator branches: d<a>/dt = -i s (f/2) e^{+i delta t};
        // the y force acts on the orthogonal quadrature, rotating the loop by -90 deg
        const Complex quad = (force == 'y') ? Complex(0.0, -1.0) : Complex(1.0, 0.0);
        Complex ap = 0.0, am = 0.0;
        Real phase = 0.0;
        out.alpha_plus.push_back(ap);
        out.alpha_minus.push_back(am);
        out.times.push_back(0.0);
        for (int k = 0; k < steps; ++k) {
            const Real t0 = k * dt, t1 = (k + 1) * dt;
            // closed-form increment over [t0, t1]
            const Complex inc = -quad * (f / (2.0 * delta)) *
                                (std::exp(Complex(0.0, delta * t1)) - std::exp(Complex(0.0, delta * t0)));
            phase += (std::conj(ap) * inc).imag();
            ap += inc;
            am -= inc;
            out.alpha_plus.push_back(ap);
            out.alpha_minus.push_back(am);
            out.times.push_back(t1);
        }
        out.closure_error = std::abs(out.alpha_plus.back() - out.alpha_plus.front());
        out.area_phase = phase;
        out.endpoint_norm = std::abs(out.alpha_plus.back());
        return out;
    }

    // Trotter concatenation of the two non-commuting forces on a dense
    // single-ion, single-mode space.  The two forces act on orthogonal
    // motional quadratures; together they recompose the full sideband term,
    // which is why the concatenated trajectory fails to close.
    const SpaceLayout layout{1, 1, n_max};
    const MatXc a = dense(boson_op(layout, 0, Ladder::annihilate));
    const MatXc sx = dense(qubit_op(layout, 0, pauli2('x')));
    const MatXc sy = dense(qubit_op(layout, 0, pauli2('y')));

    const auto half = [&](const MatXc& spin, Complex quad, Real t) {
        const MatXc m = (quad * 0.5 * f * std::exp(Complex(0.0, -delta * t))) * a;
        return MatXc(spin * (m + m.adjoint()));
    };

    // spin |+x>/|-x> times vacuum
    VecXc plus = VecXc::Zero(layout.dim());
    VecXc minus = VecXc::Zero(layout.dim());
    plus[layout.index(0, 0)] = 1.0 / std::sqrt(2.0);
    plus[layout.index(1, 0)] = 1.0 / std::sqrt(2.0);
    minus[layout.index(0, 0)] = 1.0 / std::sqrt(2.0);
    minus[layout.index(1, 0)] = -1.0 / std::sqrt(2.0);

    const auto record = [&](Real t) {
        out.times.push_back(t);
        out.alpha_plus.push_back(plus.dot(a * plus));
        out.alpha_minus.push_back(minus.dot(a * minus));
    };
    record(0.0);
    for (int k = 0; k < steps; ++k) {
        const Real t = k * dt;
        const MatXc ux = mat_exp(MatXc(Complex(0.0, -dt) * half(sx, Complex(1.0, 0.0), t)));
        const MatXc uy = mat_exp(MatXc(Complex(0.0, -dt) * half(sy, Complex(0.0, 1.0), t)));
        plus = uy * (ux * plus);
        minus = uy * (ux * minus);
        record(t + dt);
    }
    out.closure_error = std::abs(out.alpha_plus.back() - out.alpha_plus.front());
    out.endpoint_norm = std::abs(out.alpha_plus.back());
    return out;
}

} // namespace iongate
