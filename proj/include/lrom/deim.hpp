#pragma once

#include "lrom/extension.hpp"
#include "lrom/pod.hpp"
#include "lrom/types.hpp"

#include <vector>

namespace lrom::deim {

enum class OperatorKind { Vector, Matrix };

/// Affine-term basis plus greedy magic indices. For the matrix kind the
/// basis rows live on the flat positions of a shared sparsity pattern and
/// reconstruction scatters through it.
struct DeimModel {
    OperatorKind kind = OperatorKind::Vector;
    Matrix basis;                   // p x Q
    std::vector<Index> magic;       // Q distinct flat indices
    Matrix interp;                  // Q x Q, basis rows at the magic indices
    Eigen::PartialPivLU<Matrix> interp_lu;
    Vector singular_values;         // operator POD spectrum
    double interp_condition = 0.0;  // 2-norm condition of interp
    extension::SparsityPattern pattern;  // matrix kind only

    Index term_count() const { return basis.cols(); }
};

/// POD of the operator snapshots at tolerance eps_d followed by the greedy
/// residual-argmax selection of interpolation indices (ties -> lowest
/// index).
DeimModel build_deim(const pod::SnapshotMatrix& op_snapshots, double eps_d,
                     OperatorKind kind,
                     extension::SparsityPattern pattern = {});

/// Coefficients solving interp * theta = probe, where probe holds the true
/// operator entries at the magic indices.
Vector theta_exact(const DeimModel& model, const Vector& probe);

/// Affine reconstruction sum_q theta_q * basis_q as a flat vector.
Vector reconstruct_flat(const DeimModel& model, const Vector& theta);

/// Matrix-kind reconstruction scattered through the pattern.
SparseMatrix reconstruct_matrix(const DeimModel& model, const Vector& theta);

/// Relative max-norm error between two flat operator representations.
double operator_error(const Vector& exact_op, const Vector& approx_op);

}  // namespace lrom::deim
