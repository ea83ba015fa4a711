#include "lrom/deim.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lrom::deim {

namespace {

Index argmax_abs(const Vector& v) {
    Index best = 0;
    double vmax = -1.0;
    for (Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > vmax) {  // strict: ties keep the lowest index
            vmax = a;
            best = i;
        }
    }
    return best;
}

}  // namespace

DeimModel build_deim(const pod::SnapshotMatrix& op_snapshots, double eps_d,
                     OperatorKind kind, extension::SparsityPattern pattern) {
    if (op_snapshots.data.size() == 0 ||
        op_snapshots.data.colwise().norm().maxCoeff() == 0.0) {
        throw numeric_error("build_deim: degenerate (zero) operator snapshots");
    }
    if (kind == OperatorKind::Matrix &&
        pattern.size() != op_snapshots.data.rows()) {
        throw config_error("build_deim: pattern size does not match snapshots");
    }

    pod::PodOptions opts;
    opts.eps = eps_d;
    pod::PodBasis basis = pod::pod(op_snapshots, opts);

    DeimModel model;
    model.kind = kind;
    model.basis = std::move(basis.modes);
    model.singular_values = std::move(basis.singular_values);
    model.pattern = std::move(pattern);

    const Index q_total = model.basis.cols();
    model.magic.reserve(q_total);
    model.magic.push_back(argmax_abs(model.basis.col(0)));
    for (Index q = 1; q < q_total; ++q) {
        // Interpolate column q on the current indices, then pick the
        // largest residual entry.
        Matrix sub(q, q);
        Vector rhs(q);
        for (Index i = 0; i < q; ++i) {
            for (Index j = 0; j < q; ++j) {
                sub(i, j) = model.basis(model.magic[i], j);
            }
            rhs[i] = model.basis(model.magic[i], q);
        }
        const Vector c = sub.partialPivLu().solve(rhs);
        const Vector residual =
            model.basis.col(q) - model.basis.leftCols(q) * c;
        model.magic.push_back(argmax_abs(residual));
    }

    model.interp.resize(q_total, q_total);
    for (Index i = 0; i < q_total; ++i) {
        model.interp.row(i) = model.basis.row(model.magic[i]);
    }
    model.interp_lu = Eigen::PartialPivLU<Matrix>(model.interp);

    const Eigen::JacobiSVD<Matrix> svd(model.interp);
    const double smin = svd.singularValues()(q_total - 1);
    model.interp_condition =
        smin > 0.0 ? svd.singularValues()(0) / smin
                   : std::numeric_limits<double>::infinity();
    if (!(smin > 0.0)) {
        throw numeric_error("build_deim: singular interpolation matrix");
    }
    return model;
}

Vector theta_exact(const DeimModel& model, const Vector& probe) {
    if (probe.size() != model.term_count()) {
        throw config_error("theta_exact: probe length mismatch");
    }
    if (!std::isfinite(model.interp_condition)) {
        throw numeric_error("theta_exact: singular interpolation matrix");
    }
    return model.interp_lu.solve(probe);
}

Vector reconstruct_flat(const DeimModel& model, const Vector& theta) {
    if (theta.size() != model.term_count()) {
        throw config_error("reconstruct: theta length mismatch");
    }
    return model.basis * theta;
}

SparseMatrix reconstruct_matrix(const DeimModel& model, const Vector& theta) {
    if (model.kind != OperatorKind::Matrix) {
        throw config_error("reconstruct_matrix: vector-kind model");
    }
    return model.pattern.scatter(reconstruct_flat(model, theta));
}

double operator_error(const Vector& exact_op, const Vector& approx_op) {
    if (exact_op.size() != approx_op.size()) {
        throw config_error("operator_error: length mismatch");
    }
    const double denom = exact_op.cwiseAbs().maxCoeff();
    if (denom == 0.0) {
        throw numeric_error("operator_error: zero exact operator");
    }
    return (exact_op - approx_op).cwiseAbs().maxCoeff() / denom;
}

}  // namespace lrom::deim
