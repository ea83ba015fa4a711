#include "lrom/pod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lrom::pod {

SnapshotMatrix make_snapshots(Matrix data,
                              std::vector<Index> column_to_sample) {
    if (!data.allFinite()) {
        throw numeric_error("snapshots: non-finite entries");
    }
    if (!column_to_sample.empty() &&
        static_cast<Index>(column_to_sample.size()) != data.cols()) {
        throw config_error("snapshots: column map length mismatch");
    }
    return SnapshotMatrix{std::move(data), std::move(column_to_sample)};
}

Index energy_truncation(const Vector& singular_values, double eps) {
    const Index r = singular_values.size();
    double total = 0.0;
    for (Index i = 0; i < r; ++i) {
        total += singular_values[i] * singular_values[i];
    }
    if (total == 0.0) {
        throw numeric_error("pod: rank-0 snapshot matrix");
    }
    double acc = 0.0;
    for (Index p = 1; p <= r; ++p) {
        acc += singular_values[p - 1] * singular_values[p - 1];
        if (1.0 - acc / total <= eps) return p;
    }
    return r;
}

namespace {

// Deterministic sign: the entry of largest magnitude in each mode is
// positive. First index wins among ties in magnitude.
void fix_signs(Matrix& modes) {
    for (Index j = 0; j < modes.cols(); ++j) {
        Index imax = 0;
        double vmax = 0.0;
        for (Index i = 0; i < modes.rows(); ++i) {
            if (std::abs(modes(i, j)) > vmax) {
                vmax = std::abs(modes(i, j));
                imax = i;
            }
        }
        if (modes(imax, j) < 0.0) modes.col(j) = -modes.col(j);
    }
}

Index clamp_to_rank(const Vector& sv, Index p, double rel_tol) {
    // Modes past the numerical rank are noise; never return them.
    const double tol = sv.size() > 0 ? sv[0] * rel_tol : 0.0;
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol) ++rank;
    }
    return std::max<Index>(1, std::min(p, rank));
}

PodBasis pod_core_gram(const Matrix& s, const PodOptions& opts) {
    const Matrix gram = s.transpose() * s;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw numeric_error("pod: eigen solve of the correlation matrix failed");
    }
    const Index n = s.cols();
    Vector sv(n);
    for (Index i = 0; i < n; ++i) {
        // ascending eigenvalues -> descending singular values
        sv[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[n - 1 - i]));
    }
    // The squared spectrum cannot resolve singular values below
    // sqrt(machine eps) relative; clamp the rank accordingly.
    const double rel_tol = std::sqrt(
        std::numeric_limits<double>::epsilon() *
        static_cast<double>(std::max(s.rows(), s.cols())));
    Index p = opts.explicit_p ? *opts.explicit_p : energy_truncation(sv, opts.eps);
    p = clamp_to_rank(sv, p, rel_tol);

    Matrix modes(s.rows(), p);
    for (Index j = 0; j < p; ++j) {
        modes.col(j) = s * eig.eigenvectors().col(n - 1 - j) / sv[j];
        modes.col(j).normalize();  // guards the 1/sigma scaling
    }
    // Squaring the spectrum costs the trailing modes orthogonality; a thin
    // QR polish restores it without leaving the span.
    Eigen::HouseholderQR<Matrix> qr(modes);
    Matrix q = qr.householderQ() * Matrix::Identity(s.rows(), p);
    const Matrix r =
        qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    for (Index j = 0; j < p; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    modes = std::move(q);
    fix_signs(modes);
    PodBasis basis;
    basis.modes = std::move(modes);
    basis.singular_values = std::move(sv);
    basis.retained = p;
    basis.energy_tolerance = opts.eps;
    basis.weight_id = opts.weight_id;
    return basis;
}

PodBasis pod_core_svd(const Matrix& s, const PodOptions& opts) {
    Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU);
    Vector sv = svd.singularValues();
    const double rel_tol = std::numeric_limits<double>::epsilon() *
                           static_cast<double>(std::max(s.rows(), s.cols()));
    Index p = opts.explicit_p ? *opts.explicit_p : energy_truncation(sv, opts.eps);
    p = clamp_to_rank(sv, p, rel_tol);
    Matrix modes = svd.matrixU().leftCols(p);
    fix_signs(modes);
    PodBasis basis;
    basis.modes = std::move(modes);
    basis.singular_values = std::move(sv);
    basis.retained = p;
    basis.energy_tolerance = opts.eps;
    basis.weight_id = opts.weight_id;
    return basis;
}

using CoreFn = PodBasis (*)(const Matrix&, const PodOptions&);

PodBasis pod_dispatch(const SnapshotMatrix& snapshots, const PodOptions& opts,
                      CoreFn core) {
    const Matrix& s = snapshots.data;
    if (s.size() == 0) throw numeric_error("pod: empty snapshot matrix");

    if (opts.weight == nullptr) {
        return core(s, opts);
    }

    // Weighted POD: factor X = P^T L L^T P, run on L^T P S, map back.
    Eigen::SimplicialLLT<SparseMatrix> llt(*opts.weight);
    if (llt.info() != Eigen::Success) {
        throw numeric_error("pod: weight matrix is not SPD");
    }
    const Matrix ps = llt.permutationP() * s;
    const Matrix b = llt.matrixL().transpose() * ps;
    PodBasis inner = core(b, opts);
    Matrix back =
        llt.matrixL().transpose().solve(inner.modes);
    inner.modes = llt.permutationPinv() * back;
    fix_signs(inner.modes);
    return inner;
}

}  // namespace

PodBasis pod_gram(const SnapshotMatrix& snapshots, const PodOptions& opts) {
    return pod_dispatch(snapshots, opts, &pod_core_gram);
}

PodBasis pod_svd(const SnapshotMatrix& snapshots, const PodOptions& opts) {
    return pod_dispatch(snapshots, opts, &pod_core_svd);
}

PodBasis pod(const SnapshotMatrix& snapshots, const PodOptions& opts) {
    // Correlation-matrix route when it is the cheap one.
    if (snapshots.data.cols() <= snapshots.data.rows()) {
        return pod_gram(snapshots, opts);
    }
    return pod_svd(snapshots, opts);
}

Vector project(const PodBasis& basis, const Vector& x,
               const SparseMatrix* weight) {
    if (x.size() != basis.modes.rows()) {
        throw config_error("pod project: dimension mismatch");
    }
    if (weight != nullptr) {
        return basis.modes.transpose() * (*weight * x);
    }
    return basis.modes.transpose() * x;
}

Vector lift(const PodBasis& basis, const Vector& coeffs) {
    if (coeffs.size() != basis.retained) {
        throw config_error("pod lift: dimension mismatch");
    }
    return basis.modes * coeffs;
}

}  // namespace lrom::pod
