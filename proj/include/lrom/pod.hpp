#pragma once

#include "lrom/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lrom::pod {

/// Column-stacked snapshots with their sample indices.
struct SnapshotMatrix {
    Matrix data;
    std::vector<Index> column_to_sample;
};

SnapshotMatrix make_snapshots(Matrix data, std::vector<Index> column_to_sample);

/// Orthonormal POD modes with the full singular value record and the
/// energy-based truncation count.
struct PodBasis {
    Matrix modes;            // m x retained
    Vector singular_values;  // all min(m, n) values, descending
    Index retained = 0;
    double energy_tolerance = 0.0;
    std::string weight_id = "identity";

    Index dim() const { return modes.rows(); }
};

struct PodOptions {
    double eps = 0.0;                  // energy tolerance, Eq.-(19) style
    std::optional<Index> explicit_p;   // overrides eps when set
    const SparseMatrix* weight = nullptr;  // SPD norm matrix, optional
    std::string weight_id = "identity";
};

/// POD with energy truncation: the retained count is the smallest P with
/// 1 - sum_{i<=P} s_i^2 / sum_i s_i^2 <= eps. Uses the Gram (correlation
/// matrix) eigen route when n <= m and a thin SVD otherwise; in the
/// weighted case the snapshots are transformed through a Cholesky factor
/// of the weight so that modes come out weight-orthonormal.
PodBasis pod(const SnapshotMatrix& snapshots, const PodOptions& opts);

/// Force one route or the other (route agreement is part of the contract).
PodBasis pod_gram(const SnapshotMatrix& snapshots, const PodOptions& opts);
PodBasis pod_svd(const SnapshotMatrix& snapshots, const PodOptions& opts);

/// V^T x, or V^T X x in the weighted case.
Vector project(const PodBasis& basis, const Vector& x,
               const SparseMatrix* weight = nullptr);

/// V * coefficients.
Vector lift(const PodBasis& basis, const Vector& coeffs);

/// Smallest P satisfying the energy criterion for the given spectrum.
Index energy_truncation(const Vector& singular_values, double eps);

}  // namespace lrom::pod
