#include "lrom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace lrom::geometry {

bool ParameterDomain::contains(const ParameterVector& mu, double tol) const {
    if (mu.size() != lower.size()) return false;
    for (Index i = 0; i < mu.size(); ++i) {
        if (mu[i] < lower[i] - tol || mu[i] > upper[i] + tol) return false;
    }
    return true;
}

ParameterDomain make_domain(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) {
        throw config_error("parameter domain: lower/upper length mismatch");
    }
    for (Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i])) {
            std::ostringstream os;
            os << "parameter domain: lower[" << i << "]=" << lower[i]
               << " must be < upper[" << i << "]=" << upper[i];
            throw config_error(os.str());
        }
    }
    return ParameterDomain{std::move(lower), std::move(upper)};
}

namespace {

// Enumerate the 2^M vertices of the parameter box. Affine center/radius
// rules attain their extremes there, so checking vertices is exact.
void for_each_vertex(const ParameterDomain& dom,
                     const std::function<void(const ParameterVector&)>& fn) {
    const Index m = dom.dim();
    ParameterVector mu(m);
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        for (Index i = 0; i < m; ++i) {
            mu[i] = (mask >> i) & 1 ? dom.upper[i] : dom.lower[i];
        }
        fn(mu);
    }
}

Circle eval_rule(const HoleRule& rule, const ParameterVector& mu) {
    Circle c;
    c.center = {rule.center_x.eval(mu), rule.center_y.eval(mu)};
    c.radius = rule.radius.eval(mu);
    return c;
}

}  // namespace

GeometrySpec make_geometry(Rect box, ParameterDomain domain,
                           std::vector<HoleRule> holes) {
    if (!(box.xmin < box.xmax && box.ymin < box.ymax)) {
        throw config_error("geometry: degenerate background box");
    }
    for (std::size_t h = 0; h < holes.size(); ++h) {
        for_each_vertex(domain, [&](const ParameterVector& mu) {
            const Circle c = eval_rule(holes[h], mu);
            if (!(c.radius > 0.0)) {
                throw config_error("geometry: hole " + std::to_string(h) +
                                   " has nonpositive radius somewhere in the "
                                   "parameter domain");
            }
            const bool inside = c.center.x() - c.radius > box.xmin &&
                                c.center.x() + c.radius < box.xmax &&
                                c.center.y() - c.radius > box.ymin &&
                                c.center.y() + c.radius < box.ymax;
            if (!inside) {
                throw config_error("geometry: hole " + std::to_string(h) +
                                   " touches or leaves the background box "
                                   "somewhere in the parameter domain");
            }
        });
    }
    return GeometrySpec{box, std::move(domain), std::move(holes)};
}

ResolvedHoles resolve_holes(const GeometrySpec& spec,
                            const ParameterVector& mu) {
    if (mu.size() != spec.domain.dim()) {
        throw config_error("resolve_holes: mu has length " +
                           std::to_string(mu.size()) + ", expected " +
                           std::to_string(spec.domain.dim()));
    }
    if (!spec.domain.contains(mu)) {
        throw config_error("resolve_holes: mu outside the parameter domain");
    }
    ResolvedHoles out;
    out.circles.reserve(spec.holes.size());
    for (const HoleRule& rule : spec.holes) {
        out.circles.push_back(eval_rule(rule, mu));
    }
    return out;
}

ElementClass classify_element(const Rect& elem, const ResolvedHoles& holes) {
    bool cut = false;
    for (const Circle& c : holes.circles) {
        // Nearest point of the rectangle to the circle center.
        const double dx = std::max({elem.xmin - c.center.x(), 0.0,
                                    c.center.x() - elem.xmax});
        const double dy = std::max({elem.ymin - c.center.y(), 0.0,
                                    c.center.y() - elem.ymax});
        const double dmin = std::hypot(dx, dy);
        if (dmin >= c.radius) continue;  // circle does not reach the element

        // Farthest corner from the circle center.
        const double fx = std::max(c.center.x() - elem.xmin,
                                   elem.xmax - c.center.x());
        const double fy = std::max(c.center.y() - elem.ymin,
                                   elem.ymax - c.center.y());
        const double dmax = std::hypot(fx, fy);
        if (dmax <= c.radius) return ElementClass::FullyOutside;
        cut = true;
    }
    return cut ? ElementClass::Cut : ElementClass::FullyInside;
}

bool point_in_domain(const Eigen::Vector2d& x, const ResolvedHoles& holes) {
    for (const Circle& c : holes.circles) {
        if ((x - c.center).norm() < c.radius) return false;
    }
    return true;
}

double circle_hausdorff(const Circle& a, const Circle& b) {
    const double d = (a.center - b.center).norm();
    // Directed distance from circle A is extremal at the points of A nearest
    // to / farthest from the other center; same for B.
    const double h_ab = std::max(std::abs(std::abs(d - a.radius) - b.radius),
                                 std::abs(d + a.radius - b.radius));
    const double h_ba = std::max(std::abs(std::abs(d - b.radius) - a.radius),
                                 std::abs(d + b.radius - a.radius));
    return std::max(h_ab, h_ba);
}

double hole_boundary_distance(const ParameterVector& mu_a,
                              const ParameterVector& mu_b,
                              const GeometrySpec& spec) {
    const ResolvedHoles ha = resolve_holes(spec, mu_a);
    const ResolvedHoles hb = resolve_holes(spec, mu_b);
    double dist = 0.0;
    for (std::size_t i = 0; i < ha.circles.size(); ++i) {
        dist = std::max(dist, circle_hausdorff(ha.circles[i], hb.circles[i]));
    }
    return dist;
}

}  // namespace lrom::geometry
