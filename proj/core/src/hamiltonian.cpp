#include "iongate/hamiltonian.hpp"

#include <cctype>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace iongate {

namespace {

void check_layout(const SpaceLayout& layout, const LabParams& params) {
    if (layout.num_qubits != params.num_ions)
        throw std::invalid_argument("hamiltonian: layout qubit count != num_ions");
}

void check_couplings(const SpaceLayout& layout, const SidebandCouplings& c) {
    if (c.F.rows() != layout.num_qubits || c.F.cols() != layout.num_modes)
        throw std::invalid_argument("hamiltonian: coupling matrix does not match layout");
}

// Dressed-basis projectors for the drive axis sigma^d = e^{i phi_d} sigma^+ + h.c.
// |+> = (|1> + e^{-i phi_d}|0>)/sqrt(2), |-> = (|1> - e^{-i phi_d}|0>)/sqrt(2).
struct DressedBlocks {
    Mat2 pp, mm, pm, mp;
    Mat2 d0() const { return pp - mm; }
};

DressedBlocks dressed_blocks(Real phi_d) {
    Eigen::Vector2cd plus, minus;
    const Complex ph = std::exp(Complex(0.0, -phi_d));
    plus << ph / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    minus << -ph / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    DressedBlocks b;
    b.pp = plus * plus.adjoint();
    b.mm = minus * minus.adjoint();
    b.pm = plus * minus.adjoint();
    b.mp = minus * plus.adjoint();
    return b;
}

Mat2 drive_axis(Real phi_d) {
    const Complex ph = std::exp(Complex(0.0, phi_d));
    return ph * pauli2('+') + std::conj(ph) * pauli2('-');
}

// Spectral-norm upper bound sqrt(||A||_1 ||A||_inf) from absolute row/column sums.
Real spectral_bound(const SpMat& a) {
    VecX col = VecX::Zero(a.cols());
    VecX row = VecX::Zero(a.rows());
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) {
            col[it.col()] += std::abs(it.value());
            row[it.row()] += std::abs(it.value());
        }
    const Real c = col.size() ? col.maxCoeff() : 0.0;
    const Real r = row.size() ? row.maxCoeff() : 0.0;
    return std::sqrt(c * r);
}

// Appends coeff * e^{i freq t} * block_i(2x2) * tail + h.c. In the dressed
// frame a bare sigma^+ block splits into the three dressed pieces with
// coefficient phases e^{-i phi_d}/2 * {+1 on D0, -1 on P+- at +Omega_d,
// +1 on P-+ at -Omega_d}; any other block is passed through unchanged.
void append_pair(std::vector<RotatingTerm>& out, const SpaceLayout& layout, int qubit,
                 const Mat2& block, const SpMat* tail, Complex coeff, Real freq) {
    if (coeff == Complex(0.0, 0.0)) return;  // switched-off couplings leave no term
    SpMat op = qubit_op(layout, qubit, block);
    if (tail) op = (op * *tail).eval();
    SpMat opd = SpMat(op.adjoint());
    out.push_back({coeff, freq, std::move(op)});
    out.push_back({std::conj(coeff), -freq, std::move(opd)});
}

void append_sigma_plus(std::vector<RotatingTerm>& out, const SpaceLayout& layout,
                       const LabParams& params, Frame frame, int qubit, const SpMat* tail,
                       Complex coeff, Real freq) {
    if (frame == Frame::bare || params.Omega_d == 0.0) {
        append_pair(out, layout, qubit, pauli2('+'), tail, coeff, freq);
        return;
    }
    const DressedBlocks b = dressed_blocks(params.phi_d);
    const Complex base = coeff * std::exp(Complex(0.0, -params.phi_d)) * 0.5;
    append_pair(out, layout, qubit, b.d0(), tail, base, freq);
    append_pair(out, layout, qubit, b.pm, tail, -base, freq + params.Omega_d);
    append_pair(out, layout, qubit, b.mp, tail, base, freq - params.Omega_d);
}

} // namespace

Real SidebandCouplings::force_to_detuning_ratio() const {
    Real worst = 0.0;
    for (Eigen::Index i = 0; i < F.rows(); ++i)
        for (Eigen::Index n = 0; n < F.cols(); ++n) {
            if (delta[n] == 0.0) return std::numeric_limits<Real>::infinity();
            worst = std::max(worst, std::abs(F(i, n)) / std::abs(delta[n]));
        }
    return worst;
}

SidebandCouplings sideband_couplings(const LabParams& params, const ChainModes& modes) {
    const int n_ions = static_cast<int>(modes.M.rows());
    if (n_ions != params.num_ions)
        throw std::invalid_argument("sideband_couplings: mode data does not match num_ions");
    SidebandCouplings c;
    c.eta_n = params.eta * (params.omega_x * modes.omega.cwiseInverse()).cwiseSqrt();
    c.delta = modes.omega.array() - params.omega_x + params.delta_L;
    const Complex prefactor = Complex(0.0, 0.5) * params.Omega_L * std::exp(Complex(0.0, params.phi_L));
    c.F = prefactor * (modes.M.array().rowwise() * c.eta_n.transpose().array()).matrix();
    return c;
}

SpMat build_carrier(const SpaceLayout& layout, const LabParams& params, Real t,
                    bool include_counter_rotating) {
    check_layout(layout, params);
    Complex amp = 0.5 * params.Omega_d * std::exp(Complex(0.0, params.phi_d));
    if (include_counter_rotating)
        amp += 0.5 * params.Omega_d * std::exp(Complex(0.0, 2.0 * params.omega0 * t - params.phi_d));
    SpMat h(layout.dim(), layout.dim());
    for (int i = 0; i < layout.num_qubits; ++i) {
        const SpMat sp = qubit_op(layout, i, pauli2('+'));
        h += amp * sp + std::conj(amp) * SpMat(sp.adjoint());
    }
    return h;
}

SpMat build_red_sideband(const SpaceLayout& layout, const SidebandCouplings& c, Real t) {
    check_couplings(layout, c);
    SpMat h(layout.dim(), layout.dim());
    for (int n = 0; n < layout.num_modes; ++n) {
        const SpMat an = boson_op(layout, n, Ladder::annihilate);
        const Complex phase = std::exp(Complex(0.0, -c.delta[n] * t));
        for (int i = 0; i < layout.num_qubits; ++i) {
            const SpMat op = qubit_op(layout, i, pauli2('+')) * an;
            const Complex amp = c.F(i, n) * phase;
            h += amp * op + std::conj(amp) * SpMat(op.adjoint());
        }
    }
    return h;
}

SpMat build_noise_term(const SpaceLayout& layout, Real F_value) {
    SpMat h(layout.dim(), layout.dim());
    for (int i = 0; i < layout.num_qubits; ++i)
        h += Complex(0.5 * F_value, 0.0) * qubit_op(layout, i, pauli2('z'));
    return h;
}

Real RotatingHamiltonian::max_frequency() const {
    Real f = 0.0;
    for (const auto& t : terms) f = std::max(f, std::abs(t.freq));
    for (const auto& t : noise_terms) f = std::max(f, std::abs(t.freq));
    return f;
}

Real RotatingHamiltonian::norm_bound() const {
    Real b = 0.0;
    for (const auto& t : terms) b += std::abs(t.coeff) * spectral_bound(t.op);
    return b;
}

Real RotatingHamiltonian::noise_norm_bound() const {
    Real b = 0.0;
    for (const auto& t : noise_terms) b += std::abs(t.coeff) * spectral_bound(t.op);
    return b;
}

MatXc RotatingHamiltonian::dense_at(Real t, Real noise_value) const {
    MatXc h = MatXc::Zero(layout.dim(), layout.dim());
    for (const auto& term : terms)
        h += (term.coeff * std::exp(Complex(0.0, term.freq * t))) * MatXc(term.op);
    for (const auto& term : noise_terms)
        h += (noise_value * term.coeff * std::exp(Complex(0.0, term.freq * t))) * MatXc(term.op);
    return h;
}

RotatingHamiltonian rotating_hamiltonian(const SpaceLayout& layout, const LabParams& params,
                                         const SidebandCouplings& c, Frame frame,
                                         bool include_counter_rotating) {
    check_layout(layout, params);
    check_couplings(layout, c);
    RotatingHamiltonian h;
    h.layout = layout;

    // Carrier drive. In the dressed frame the resonant part is absorbed by
    // the frame itself and contributes no term.
    if (params.Omega_d != 0.0) {
        const Complex amp = 0.5 * params.Omega_d * std::exp(Complex(0.0, params.phi_d));
        const Complex camp = 0.5 * params.Omega_d * std::exp(Complex(0.0, -params.phi_d));
        for (int i = 0; i < layout.num_qubits; ++i) {
            if (frame == Frame::bare)
                append_pair(h.terms, layout, i, pauli2('+'), nullptr, amp, 0.0);
            if (include_counter_rotating)
                append_sigma_plus(h.terms, layout, params, frame, i, nullptr, camp,
                                  2.0 * params.omega0);
        }
    }

    // Red sideband: F(i,n) sigma_i^+ a_n e^{-i delta_n t} + h.c.
    for (int n = 0; n < layout.num_modes; ++n) {
        const SpMat an = boson_op(layout, n, Ladder::annihilate);
        for (int i = 0; i < layout.num_qubits; ++i)
            append_sigma_plus(h.terms, layout, params, frame, i, &an, c.F(i, n), -c.delta[n]);
    }

    // Global dephasing field (F(t)/2) sum_i sigma_i^z. In the dressed frame
    // sigma^z = P+- + P-+ picks up e^{+-i Omega_d t}.
    for (int i = 0; i < layout.num_qubits; ++i) {
        if (frame == Frame::bare || params.Omega_d == 0.0) {
            h.noise_terms.push_back({Complex(0.5, 0.0), 0.0, qubit_op(layout, i, pauli2('z'))});
        } else {
            const DressedBlocks b = dressed_blocks(params.phi_d);
            h.noise_terms.push_back(
                {Complex(0.5, 0.0), params.Omega_d, qubit_op(layout, i, b.pm)});
            h.noise_terms.push_back(
                {Complex(0.5, 0.0), -params.Omega_d, qubit_op(layout, i, b.mp)});
        }
    }
    return h;
}

SpMat frame_backrotation(const SpaceLayout& layout, const LabParams& params, Frame frame, Real t) {
    check_layout(layout, params);
    if (frame == Frame::bare || params.Omega_d == 0.0) return identity_op(layout);
    const Real angle = 0.5 * params.Omega_d * t;
    const Mat2 v = std::cos(angle) * Mat2::Identity() -
                   Complex(0.0, 1.0) * std::sin(angle) * drive_axis(params.phi_d);
    SpMat u = qubit_op(layout, 0, v);
    for (int i = 1; i < layout.num_qubits; ++i) u = (u * qubit_op(layout, i, v)).eval();
    return u;
}

Mat2 framed_pauli(const LabParams& params, Frame frame, char axis, Real t) {
    const Mat2 p = pauli2(axis);
    if (frame == Frame::bare || params.Omega_d == 0.0) return p;
    const Real angle = 0.5 * params.Omega_d * t;
    const Mat2 v = std::cos(angle) * Mat2::Identity() -
                   Complex(0.0, 1.0) * std::sin(angle) * drive_axis(params.phi_d);
    return v.adjoint() * p * v;
}

SpMat pulse_operator(const SpaceLayout& layout, const LabParams& params, Frame frame,
                     const std::string& pauli, Real t) {
    if (static_cast<int>(pauli.size()) != layout.num_qubits)
        throw std::invalid_argument("pulse_operator: pauli string length != num_qubits");
    SpMat u = identity_op(layout);
    for (int i = 0; i < layout.num_qubits; ++i) {
        const char ch = pauli[i];
        if (ch == 'I' || ch == 'i') continue;
        if (ch != 'X' && ch != 'Y' && ch != 'Z' && ch != 'x' && ch != 'y' && ch != 'z')
            throw std::invalid_argument("pulse_operator: pauli characters must be in IXYZ");
        const char axis = static_cast<char>(std::tolower(ch));
        u = (u * qubit_op(layout, i, framed_pauli(params, frame, axis, t))).eval();
    }
    return u;
}

} // namespace iongate
