#pragma once

#include <Eigen/SparseCore>

#include "iongate/common.hpp"

namespace iongate {

using SpMat = Eigen::SparseMatrix<Complex>;
using Mat2 = Eigen::Matrix2cd;

// Index layout of the composite space (num_qubits qubits) x (num_modes
// truncated oscillators, Fock states 0..n_max each). The map is fixed and
// little-endian in both factors:
//   global = spin + 2^num_qubits * ph
//   spin   = sum_i b_i 2^i          (qubit 0 is the fastest bit)
//   ph     = sum_m n_m (n_max+1)^m  (mode 0 is the fastest digit)
// Golden files and CSV layouts depend on this ordering; it is not configurable.
struct SpaceLayout {
    int num_qubits = 0;
    int num_modes = 0;
    int n_max = 0;

    std::int64_t spin_dim() const { return std::int64_t{1} << num_qubits; }
    std::int64_t ph_dim() const {
        std::int64_t d = 1;
        for (int m = 0; m < num_modes; ++m) d *= n_max + 1;
        return d;
    }
    std::int64_t dim() const { return spin_dim() * ph_dim(); }

    std::int64_t index(std::int64_t spin, std::int64_t ph) const {
        return spin + spin_dim() * ph;
    }
    std::int64_t spin_part(std::int64_t global) const { return global % spin_dim(); }
    std::int64_t ph_part(std::int64_t global) const { return global / spin_dim(); }

    int bit(std::int64_t spin, int qubit) const {
        return static_cast<int>((spin >> qubit) & 1);
    }
    int occupation(std::int64_t ph, int mode) const {
        std::int64_t p = ph;
        for (int m = 0; m < mode; ++m) p /= n_max + 1;
        return static_cast<int>(p % (n_max + 1));
    }
    // ph with mode's occupation replaced by n (0 <= n <= n_max)
    std::int64_t with_occupation(std::int64_t ph, int mode, int n) const {
        std::int64_t stride = 1;
        for (int m = 0; m < mode; ++m) stride *= n_max + 1;
        return ph + (n - occupation(ph, mode)) * stride;
    }
};

// 2x2 qubit operators in the basis (|0>, |1>), sigma_z = |1><1| - |0><0|,
// sigma_plus = |1><0|. axis is one of 'x','y','z','+','-'.
Mat2 pauli2(char axis);

enum class Ladder { annihilate, create, number };

// Embeddings into the full space (identity on all other factors).
SpMat qubit_op(const SpaceLayout& layout, int qubit, const Mat2& op);
SpMat boson_op(const SpaceLayout& layout, int mode, Ladder kind);
SpMat identity_op(const SpaceLayout& layout);

MatXc dense(const SpMat& a);
Real hermitian_defect(const SpMat& a);  // max-norm of A - A^dagger

// Spin reduced density matrix: rho(s,s') = sum_ph psi[s,ph] conj(psi[s',ph]).
MatXc spin_density(const SpaceLayout& layout, const VecXc& psi);

// Dense matrix functions. exp uses scaling-and-squaring; cosh and sinh are
// assembled as (e^A +- e^-A)/2. Throws std::overflow_error if the max-norm of
// A is large enough that e^A would overflow (no silent inaccuracy).
MatXc mat_exp(const MatXc& a);
MatXc mat_cosh(const MatXc& a);
MatXc mat_sinh(const MatXc& a);

} // namespace iongate
