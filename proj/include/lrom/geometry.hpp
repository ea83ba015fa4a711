#pragma once

#include "lrom/types.hpp"

#include <vector>

namespace lrom::geometry {

/// Geometric parameter vector mu with entries bounded by a ParameterDomain.
using ParameterVector = Vector;

struct ParameterDomain {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }
    bool contains(const ParameterVector& mu, double tol = 0.0) const;
    ParameterVector midpoint() const { return 0.5 * (lower + upper); }
};

/// Validates lower[i] < upper[i]; throws config_error otherwise.
ParameterDomain make_domain(Vector lower, Vector upper);

struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
};

/// Affine expression in the parameter components: c0 + sum_i c[i] * mu[i].
struct AffineExpr {
    double constant = 0.0;
    Vector coeffs;  // length M, may be empty for pure constants

    double eval(const ParameterVector& mu) const {
        return coeffs.size() == 0 ? constant : constant + coeffs.dot(mu);
    }
};

/// A circular hole whose center and radius are affine in mu.
struct HoleRule {
    AffineExpr center_x;
    AffineExpr center_y;
    AffineExpr radius;
};

struct Circle {
    Eigen::Vector2d center;
    double radius = 0.0;
};

struct ResolvedHoles {
    std::vector<Circle> circles;
};

/// Background box, parameter domain and the mu -> holes rules. The physical
/// domain is box minus the union of the resolved circles.
struct GeometrySpec {
    Rect box;
    ParameterDomain domain;
    std::vector<HoleRule> holes;
};

/// Validates that every hole stays strictly inside the box with positive
/// radius over the whole parameter domain (checked at the domain vertices,
/// exact for affine rules). Throws config_error on violation.
GeometrySpec make_geometry(Rect box, ParameterDomain domain,
                           std::vector<HoleRule> holes);

enum class ElementClass { FullyInside, FullyOutside, Cut };

/// Evaluates every hole rule at mu. Throws config_error if mu is outside
/// the parameter domain or has the wrong length.
ResolvedHoles resolve_holes(const GeometrySpec& spec,
                            const ParameterVector& mu);

/// Exact classification of an axis-aligned rectangle against the resolved
/// holes, via closed-form circle/rectangle distances. FullyOutside means
/// the element lies entirely inside some hole.
ElementClass classify_element(const Rect& elem, const ResolvedHoles& holes);

/// True iff x belongs to the physical domain. Points exactly on a circle
/// boundary count as inside the domain (closed-domain convention).
bool point_in_domain(const Eigen::Vector2d& x, const ResolvedHoles& holes);

/// Max over holes of the Hausdorff distance between the hole boundaries at
/// mu_a and mu_b, in closed form for circles. Diagnostic only: clustering
/// operates purely in parameter space.
double hole_boundary_distance(const ParameterVector& mu_a,
                              const ParameterVector& mu_b,
                              const GeometrySpec& spec);

/// Hausdorff distance between two circle boundaries.
double circle_hausdorff(const Circle& a, const Circle& b);

}  // namespace lrom::geometry
