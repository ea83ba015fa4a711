#pragma once

#include "lrom/geometry.hpp"
#include "lrom/types.hpp"

#include <vector>

namespace lrom::rbf {

/// Cubic radial basis interpolant with a linear polynomial tail, fitted
/// simultaneously for Q target components. The tail makes the saddle
/// system uniquely solvable (the cubic kernel alone is only conditionally
/// positive definite of order 2).
struct RbfInterpolant {
    std::vector<geometry::ParameterVector> centers;
    Matrix weights;      // n_centers x Q
    Matrix poly_coeffs;  // (M + 1) x Q, rows: constant then mu components
    // Distances are normalized by the center-set diameter before cubing.
    // The cubic kernel is scale-homogeneous, so this changes only the
    // conditioning of the fit, not the interpolant.
    double kernel_scale = 1.0;
    double fit_condition = 0.0;
    bool condition_warning = false;  // condition above 1e12

    Index center_count() const { return static_cast<Index>(centers.size()); }
    Index component_count() const { return weights.cols(); }
};

/// Solves the symmetric saddle system [Phi P; P^T 0] for all Q right-hand
/// sides at once. Requires n_centers >= M + 2 pairwise distinct centers;
/// throws numeric_error with a condition report if the fit residual stays
/// above 1e-10 relative.
RbfInterpolant rbf_fit(const std::vector<geometry::ParameterVector>& centers,
                       const Matrix& targets);

/// theta(mu): one value per fitted component.
Vector rbf_eval(const RbfInterpolant& interp,
                const geometry::ParameterVector& mu);

}  // namespace lrom::rbf
