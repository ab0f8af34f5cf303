#include "iongate/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace iongate {

Mat2 pauli2(char axis) {
    Mat2 m = Mat2::Zero();
    switch (axis) {
        case 'x': m(0, 1) = 1; m(1, 0) = 1; break;
        case 'y': m(0, 1) = im; m(1, 0) = -im; break;
        case 'z': m(0, 0) = -1; m(1, 1) = 1; break;
        case '+': m(1, 0) = 1; break;
        case '-': m(0, 1) = 1; break;
        default: throw std::invalid_argument("pauli2: axis must be one of x y z + -");
    }
    return m;
}

SpMat qubit_op(const SpaceLayout& layout, int qubit, const Mat2& op) {
    if (qubit < 0 || qubit >= layout.num_qubits)
        throw std::out_of_range("qubit_op: qubit index out of range");
    const std::int64_t dim = layout.dim();
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(static_cast<std::size_t>(2 * dim));
    for (std::int64_t col = 0; col < dim; ++col) {
        const std::int64_t spin = layout.spin_part(col);
        const int b = layout.bit(spin, qubit);
        for (int bp = 0; bp < 2; ++bp) {
            const Complex v = op(bp, b);
            if (v == Complex{0, 0}) continue;
            const std::int64_t row = col + (static_cast<std::int64_t>(bp - b) << qubit);
            trips.emplace_back(row, col, v);
        }
    }
    SpMat out(dim, dim);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

SpMat boson_op(const SpaceLayout& layout, int mode, Ladder kind) {
    if (mode < 0 || mode >= layout.num_modes)
        throw std::out_of_range("boson_op: mode index out of range");
    const std::int64_t dim = layout.dim();
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(static_cast<std::size_t>(dim));
    for (std::int64_t col = 0; col < dim; ++col) {
        const std::int64_t ph = layout.ph_part(col);
        const std::int64_t spin = layout.spin_part(col);
        const int n = layout.occupation(ph, mode);
        switch (kind) {
            case Ladder::annihilate:
                if (n >= 1)
                    trips.emplace_back(layout.index(spin, layout.with_occupation(ph, mode, n - 1)),
                                       col, std::sqrt(static_cast<Real>(n)));
                break;
            case Ladder::create:
                if (n < layout.n_max)
                    trips.emplace_back(layout.index(spin, layout.with_occupation(ph, mode, n + 1)),
                                       col, std::sqrt(static_cast<Real>(n + 1)));
                break;
            case Ladder::number:
                if (n > 0) trips.emplace_back(col, col, static_cast<Real>(n));
                break;
        }
    }
    SpMat out(dim, dim);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

SpMat identity_op(const SpaceLayout& layout) {
    SpMat out(layout.dim(), layout.dim());
    out.setIdentity();
    return out;
}

MatXc dense(const SpMat& a) { return MatXc(a); }

Real hermitian_defect(const SpMat& a) {
    MatXc d = MatXc(a) - MatXc(a).adjoint();
    return d.cwiseAbs().maxCoeff();
}

MatXc spin_density(const SpaceLayout& layout, const VecXc& psi) {
    const std::int64_t sd = layout.spin_dim();
    const std::int64_t pd = layout.ph_dim();
    MatXc rho = MatXc::Zero(sd, sd);
    for (std::int64_t ph = 0; ph < pd; ++ph) {
        const auto block = psi.segment(ph * sd, sd);
        rho.noalias() += block * block.adjoint();
    }
    return rho;
}

namespace {
void check_exp_norm(const MatXc& a) {
    const Real n = a.cwiseAbs().maxCoeff() * static_cast<Real>(a.rows());
    if (!(n < 690.0))
        throw std::overflow_error("mat_exp: generator norm too large, e^A would overflow");
}
} // namespace

MatXc mat_exp(const MatXc& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("mat_exp: square matrix required");
    check_exp_norm(a);
    return a.exp();
}

MatXc mat_cosh(const MatXc& a) {
    const MatXc ep = mat_exp(a);
    const MatXc em = mat_exp(MatXc(-a));
    return 0.5 * (ep + em);
}

MatXc mat_sinh(const MatXc& a) {
    const MatXc ep = mat_exp(a);
    const MatXc em = mat_exp(MatXc(-a));
    return 0.5 * (ep - em);
}

} // namespace iongate
