#include "iongate/crystal.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iongate {

namespace {

// Coulomb curvature matrix at positions u: W_ij = -1/|u_i-u_j|^3 off the
// diagonal, W_ii = sum_{j != i} 1/|u_i-u_j|^3. Row sums vanish, so the
// uniform vector is always an exact null vector (this is what makes the
// center-of-mass frequency exactly omega_x).
MatX coulomb_curvature(const VecX& u) {
    const int n = static_cast<int>(u.size());
    MatX w = MatX::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Real d = std::abs(u[i] - u[j]);
            const Real c = 1.0 / (d * d * d);
            w(i, j) = -c;
            w(i, i) += c;
        }
    }
    return w;
}

VecX equilibrium_gradient(const VecX& u) {
    const int n = static_cast<int>(u.size());
    VecX f = u;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Real d = u[i] - u[j];
            f[i] -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    }
    return f;
}

bool ordered(const VecX& u) {
    for (int i = 1; i < u.size(); ++i)
        if (u[i] <= u[i - 1]) return false;
    return true;
}

} // namespace

Real equilibrium_residual(const VecX& u) {
    return equilibrium_gradient(u).cwiseAbs().maxCoeff();
}

VecX equilibrium_positions(int n_ions) {
    if (n_ions < 1) throw std::invalid_argument("equilibrium_positions: n_ions must be >= 1");
    if (n_ions == 1) return VecX::Zero(1);

    // uniform ansatz with the standard minimum-spacing estimate
    const Real spacing = 2.018 / std::pow(static_cast<Real>(n_ions), 0.559);
    VecX u(n_ions);
    for (int i = 0; i < n_ions; ++i) u[i] = (i - 0.5 * (n_ions - 1)) * spacing;

    Real res = equilibrium_residual(u);
    for (int iter = 0; iter < 200 && res > 1e-13; ++iter) {
        VecX f = equilibrium_gradient(u);
        MatX jac = 2.0 * coulomb_curvature(u);
        jac.diagonal().array() += 1.0;  // J = I + 2W, symmetric positive definite
        VecX du = jac.ldlt().solve(-f);

        Real step = 1.0;
        VecX trial = u + du;
        while ((!ordered(trial) || equilibrium_residual(trial) > (1.0 - 0.25 * step) * res) &&
               step > 1e-6) {
            step *= 0.5;
            trial = u + step * du;
        }
        u = trial;
        res = equilibrium_residual(u);
    }
    if (res > 1e-12) {
        std::ostringstream msg;
        msg << "equilibrium_positions: Newton failed to converge, residual " << res;
        throw std::runtime_error(msg.str());
    }
    // the solution is antisymmetric; enforce it exactly to kill roundoff skew
    VecX sym(n_ions);
    for (int i = 0; i < n_ions; ++i) sym[i] = 0.5 * (u[i] - u[n_ions - 1 - i]);
    return sym;
}

ChainModes transverse_modes(int n_ions, Real omega_x, Real omega_z) {
    if (!(omega_x > omega_z && omega_z > 0))
        throw std::invalid_argument("transverse_modes: need omega_x > omega_z > 0");

    ChainModes out;
    out.positions = equilibrium_positions(n_ions);

    const MatX w = coulomb_curvature(out.positions);
    out.V = -w;  // omega_n^2 = omega_x^2 + omega_z^2 V_n with V_n <= 0

    MatX k = -(omega_z * omega_z) * w;
    k.diagonal().array() += omega_x * omega_x;

    Eigen::SelfAdjointEigenSolver<MatX> es(k);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("transverse_modes: eigensolver failed");

    if (es.eigenvalues()[0] <= 0) {
        std::ostringstream msg;
        msg << "transverse_modes: linear chain unstable at N=" << n_ions
            << ", omega_x/omega_z=" << omega_x / omega_z
            << " (zigzag threshold); smallest squared frequency "
            << es.eigenvalues()[0];
        throw std::runtime_error(msg.str());
    }

    // descending frequency order, COM first
    out.omega.resize(n_ions);
    out.M.resize(n_ions, n_ions);
    for (int n = 0; n < n_ions; ++n) {
        const int src = n_ions - 1 - n;
        out.omega[n] = std::sqrt(es.eigenvalues()[src]);
        VecX col = es.eigenvectors().col(src);
        for (int i = 0; i < n_ions; ++i) {
            if (std::abs(col[i]) > 1e-9) {
                if (col[i] < 0) col = -col;
                break;
            }
        }
        out.M.col(n) = col;
    }
    return out;
}

} // namespace iongate
