#include "lrom/rbf.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace lrom::rbf {

namespace {

double cubic(double r) { return r * r * r; }

}  // namespace

RbfInterpolant rbf_fit(const std::vector<geometry::ParameterVector>& centers,
                       const Matrix& targets) {
    const Index n = static_cast<Index>(centers.size());
    if (n == 0) throw config_error("rbf_fit: no centers");
    const Index m = centers.front().size();
    if (n < m + 2) {
        throw config_error("rbf_fit: need at least M+2 = " +
                           std::to_string(m + 2) + " centers, got " +
                           std::to_string(n));
    }
    if (targets.rows() != n) {
        throw config_error("rbf_fit: targets row count mismatch");
    }
    double diameter = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double d = (centers[i] - centers[j]).norm();
            if (d < 1e-14) {
                throw config_error("rbf_fit: coincident centers " +
                                   std::to_string(i) + " and " +
                                   std::to_string(j));
            }
            diameter = std::max(diameter, d);
        }
    }

    const Index q = targets.cols();
    const Index dim = n + m + 1;
    Matrix sys = Matrix::Zero(dim, dim);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            sys(i, j) = cubic((centers[i] - centers[j]).norm() / diameter);
        }
        sys(i, n) = 1.0;
        sys(n, i) = 1.0;
        for (Index d = 0; d < m; ++d) {
            sys(i, n + 1 + d) = centers[i][d];
            sys(n + 1 + d, i) = centers[i][d];
        }
    }

    Matrix rhs = Matrix::Zero(dim, q);
    rhs.topRows(n) = targets;

    const Eigen::PartialPivLU<Matrix> lu(sys);
    Matrix sol = lu.solve(rhs);
    // One refinement sweep keeps the backward error near machine precision
    // even when the kernel matrix is poorly conditioned.
    sol += lu.solve(rhs - sys * sol);

    // Backward-error normalization: |r| / (|A| |x| + |b|).
    const double residual =
        (sys * sol - rhs).cwiseAbs().maxCoeff() /
        (sys.cwiseAbs().rowwise().sum().maxCoeff() *
             sol.cwiseAbs().maxCoeff() +
         rhs.cwiseAbs().maxCoeff() + 1e-300);

    RbfInterpolant out;
    out.centers = centers;
    out.weights = sol.topRows(n);
    out.poly_coeffs = sol.bottomRows(m + 1);
    out.kernel_scale = diameter;

    const Eigen::JacobiSVD<Matrix> svd(sys);
    const double smin = svd.singularValues()(dim - 1);
    out.fit_condition = smin > 0.0 ? svd.singularValues()(0) / smin
                                   : std::numeric_limits<double>::infinity();
    out.condition_warning = !(out.fit_condition < 1e12);

    if (residual > 1e-10) {
        std::ostringstream os;
        os << "rbf_fit: saddle system backward error " << residual
           << " (condition " << out.fit_condition
           << "); centers may be degenerate";
        throw numeric_error(os.str());
    }
    return out;
}

Vector rbf_eval(const RbfInterpolant& interp,
                const geometry::ParameterVector& mu) {
    const Index n = interp.center_count();
    const Index m = interp.centers.front().size();
    if (mu.size() != m) throw config_error("rbf_eval: mu dimension mismatch");
    Vector phi(n);
    for (Index j = 0; j < n; ++j) {
        phi[j] = cubic((mu - interp.centers[j]).norm() / interp.kernel_scale);
    }
    Vector tail(m + 1);
    tail[0] = 1.0;
    tail.tail(m) = mu;
    return interp.weights.transpose() * phi +
           interp.poly_coeffs.transpose() * tail;
}

}  // namespace lrom::rbf
