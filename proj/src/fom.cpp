#include "lrom/fom.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace lrom::fom {

BackgroundMesh build_mesh(const geometry::Rect& box, Index nx, Index ny) {
    if (nx < 2 || ny < 2) {
        throw config_error("build_mesh: nx and ny must be >= 2");
    }
    if (!(box.xmin < box.xmax && box.ymin < box.ymax)) {
        throw config_error("build_mesh: degenerate box");
    }
    return BackgroundMesh{box, nx, ny};
}

FeSpace make_space(const BackgroundMesh& mesh, SpaceKind kind) {
    return FeSpace{mesh, kind};
}

MaterialParams make_material(double young_E, double poisson_nu) {
    if (!(young_E > 0.0)) {
        throw config_error("material: Young modulus must be positive");
    }
    if (!(poisson_nu > 0.0 && poisson_nu < 0.5)) {
        throw config_error("material: Poisson ratio must lie in (0, 0.5)");
    }
    return MaterialParams{young_E, poisson_nu};
}

ProblemKind poisson_problem(std::function<double(double, double)> source) {
    ProblemKind p;
    p.kind = ProblemKind::Kind::Poisson;
    p.source = std::move(source);
    return p;
}

ProblemKind elasticity_problem(
    std::function<Eigen::Vector2d(double, double)> body_force,
    MaterialParams material) {
    ProblemKind p;
    p.kind = ProblemKind::Kind::Elasticity;
    p.body_force = std::move(body_force);
    p.material = material;
    return p;
}

namespace {

constexpr double kGaussOffset = 0.28867513459481287;  // 1/(2*sqrt(3))

// Minimum in-domain fraction of a basis function's support for the DOF to
// count as active.
constexpr double kActivityFraction = 1e-3;

// Plain 2x2 Gauss rule on a rectangle.
void append_gauss(const geometry::Rect& r, std::vector<WeightedPoint>& out) {
    const double w = r.area() / 4.0;
    const double xs[2] = {r.xmin + r.width() * (0.5 - kGaussOffset),
                          r.xmin + r.width() * (0.5 + kGaussOffset)};
    const double ys[2] = {r.ymin + r.height() * (0.5 - kGaussOffset),
                          r.ymin + r.height() * (0.5 + kGaussOffset)};
    for (double x : xs) {
        for (double y : ys) {
            out.push_back({{x, y}, w});
        }
    }
}

void subdivide(const geometry::Rect& r, const geometry::ResolvedHoles& holes,
               Index level, Index depth, std::vector<WeightedPoint>& out) {
    const geometry::ElementClass cls = geometry::classify_element(r, holes);
    if (cls == geometry::ElementClass::FullyOutside) return;
    if (cls == geometry::ElementClass::FullyInside) {
        append_gauss(r, out);
        return;
    }
    if (level == depth) {
        const double w = r.area() / 4.0;
        const double xs[2] = {r.xmin + r.width() * (0.5 - kGaussOffset),
                              r.xmin + r.width() * (0.5 + kGaussOffset)};
        const double ys[2] = {r.ymin + r.height() * (0.5 - kGaussOffset),
                              r.ymin + r.height() * (0.5 + kGaussOffset)};
        for (double x : xs) {
            for (double y : ys) {
                if (geometry::point_in_domain({x, y}, holes)) {
                    out.push_back({{x, y}, w});
                }
            }
        }
        return;
    }
    const double mx = 0.5 * (r.xmin + r.xmax);
    const double my = 0.5 * (r.ymin + r.ymax);
    subdivide({r.xmin, r.ymin, mx, my}, holes, level + 1, depth, out);
    subdivide({mx, r.ymin, r.xmax, my}, holes, level + 1, depth, out);
    subdivide({r.xmin, my, mx, r.ymax}, holes, level + 1, depth, out);
    subdivide({mx, my, r.xmax, r.ymax}, holes, level + 1, depth, out);
}

struct ShapeEval {
    std::array<double, 4> n;
    std::array<double, 4> dx;
    std::array<double, 4> dy;
};

ShapeEval eval_shapes(const geometry::Rect& elem, const Eigen::Vector2d& x) {
    const double hx = elem.width();
    const double hy = elem.height();
    const double xi = (x.x() - elem.xmin) / hx;
    const double eta = (x.y() - elem.ymin) / hy;
    ShapeEval s;
    s.n = {(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta,
           xi * eta};
    s.dx = {-(1.0 - eta) / hx, (1.0 - eta) / hx, -eta / hx, eta / hx};
    s.dy = {-(1.0 - xi) / hy, -xi / hy, (1.0 - xi) / hy, xi / hy};
    return s;
}

bool node_on_edge(const BackgroundMesh& mesh, Index node, Edge edge) {
    const Index i = node % (mesh.nx + 1);
    const Index j = node / (mesh.nx + 1);
    switch (edge) {
        case Edge::Left: return i == 0;
        case Edge::Right: return i == mesh.nx;
        case Edge::Bottom: return j == 0;
        case Edge::Top: return j == mesh.ny;
    }
    return false;
}

}  // namespace

std::vector<WeightedPoint> cut_quadrature(const geometry::Rect& elem,
                                          const geometry::ResolvedHoles& holes,
                                          Index depth) {
    if (depth < 1) throw config_error("cut_quadrature: depth must be >= 1");
    std::vector<WeightedPoint> out;
    subdivide(elem, holes, 0, depth, out);
    return out;
}

std::vector<bool> active_nodes(const BackgroundMesh& mesh,
                               const geometry::ResolvedHoles& holes) {
    return active_nodes(mesh, holes, 6);
}

std::vector<bool> active_nodes(const BackgroundMesh& mesh,
                               const geometry::ResolvedHoles& holes,
                               Index quadrature_depth) {
    // Activity at quadrature resolution: a node stays active only if the
    // quadrature assigns its support a nonneglectable measure inside the
    // domain. A bare supp-intersects test would keep sliver DOFs whose
    // rows are below the quadrature's own resolution, which makes the
    // extended systems arbitrarily ill-conditioned.
    std::vector<double> measure(mesh.n_nodes(), 0.0);
    std::vector<double> support(mesh.n_nodes(), 0.0);
    for (Index e = 0; e < mesh.n_elements(); ++e) {
        const geometry::Rect er = mesh.element_rect(e);
        const geometry::ElementClass cls = geometry::classify_element(er, holes);
        double inside = 0.0;
        if (cls == geometry::ElementClass::FullyInside) {
            inside = er.area();
        } else if (cls == geometry::ElementClass::Cut) {
            for (const WeightedPoint& qp :
                 cut_quadrature(er, holes, quadrature_depth)) {
                inside += qp.w;
            }
        }
        for (Index n : mesh.element_nodes(e)) {
            measure[n] += inside;
            support[n] += er.area();
        }
    }
    std::vector<bool> active(mesh.n_nodes(), false);
    for (Index n = 0; n < mesh.n_nodes(); ++n) {
        active[n] = measure[n] >= kActivityFraction * support[n];
    }
    return active;
}

extension::ActiveDofMap build_active_map(const geometry::GeometrySpec& spec,
                                         const geometry::ParameterVector& mu,
                                         const FeSpace& space,
                                         Index quadrature_depth,
                                         const BoundaryConditions& bc) {
    const BackgroundMesh& mesh = space.mesh;
    const Index dpn = space.dofs_per_node();
    const Index total = space.total_dofs();
    const std::vector<bool> node_active = active_nodes(
        mesh, geometry::resolve_holes(spec, mu), quadrature_depth);
    std::vector<bool> active(total, false);
    std::vector<bool> dirichlet(total, false);
    for (Index n = 0; n < mesh.n_nodes(); ++n) {
        bool dir = false;
        for (Edge e : bc.dirichlet_edges) dir = dir || node_on_edge(mesh, n, e);
        for (Index c = 0; c < dpn; ++c) {
            active[space.dof(n, c)] = node_active[n];
            dirichlet[space.dof(n, c)] = dir;
        }
    }
    return extension::make_active_dof_map(total, active, dirichlet);
}

FomSystem assemble(const ProblemKind& problem,
                   const geometry::GeometrySpec& spec,
                   const geometry::ParameterVector& mu, const FeSpace& space,
                   Index quadrature_depth, const BoundaryConditions& bc) {
    const BackgroundMesh& mesh = space.mesh;
    const bool scalar = space.kind == SpaceKind::Scalar;
    if (scalar != (problem.kind == ProblemKind::Kind::Poisson)) {
        throw config_error("assemble: space kind does not match problem kind");
    }
    const geometry::ResolvedHoles holes = geometry::resolve_holes(spec, mu);

    const Index dpn = space.dofs_per_node();
    const Index total = space.total_dofs();

    extension::ActiveDofMap map =
        build_active_map(spec, mu, space, quadrature_depth, bc);
    if (map.active_count() == 0 || map.free_count() == 0) {
        throw config_error("assemble: degenerate geometry, no free DOFs");
    }

    const double lm = problem.material.lame_mu();
    const double ll = problem.material.lame_lambda();

    QuadratureStats stats;
    stats.depth = quadrature_depth;

    const Index edofs = 4 * dpn;
    std::vector<Triplet> raw_trips, mass_trips;
    Vector raw_rhs = Vector::Zero(total);
    std::vector<WeightedPoint> qps;
    qps.reserve(64);

    for (Index e = 0; e < mesh.n_elements(); ++e) {
        const geometry::Rect er = mesh.element_rect(e);
        const geometry::ElementClass cls = geometry::classify_element(er, holes);
        if (cls == geometry::ElementClass::FullyOutside) continue;

        qps.clear();
        if (cls == geometry::ElementClass::FullyInside) {
            append_gauss(er, qps);
        } else {
            ++stats.cut_elements;
            qps = cut_quadrature(er, holes, quadrature_depth);
        }

        Matrix ke = Matrix::Zero(edofs, edofs);
        Matrix me = Matrix::Zero(edofs, edofs);
        Vector fe = Vector::Zero(edofs);

        for (const WeightedPoint& qp : qps) {
            stats.weight_sum += qp.w;
            const ShapeEval s = eval_shapes(er, qp.x);
            if (scalar) {
                const double f = problem.source(qp.x.x(), qp.x.y());
                for (Index a = 0; a < 4; ++a) {
                    fe[a] += qp.w * f * s.n[a];
                    for (Index b = 0; b < 4; ++b) {
                        ke(a, b) +=
                            qp.w * (s.dx[a] * s.dx[b] + s.dy[a] * s.dy[b]);
                        me(a, b) += qp.w * s.n[a] * s.n[b];
                    }
                }
            } else {
                const Eigen::Vector2d f =
                    problem.body_force(qp.x.x(), qp.x.y());
                for (Index a = 0; a < 4; ++a) {
                    fe[2 * a] += qp.w * f.x() * s.n[a];
                    fe[2 * a + 1] += qp.w * f.y() * s.n[a];
                    for (Index b = 0; b < 4; ++b) {
                        const double gax = s.dx[a], gay = s.dy[a];
                        const double gbx = s.dx[b], gby = s.dy[b];
                        // 2*mu eps(u):eps(v) + lambda div(u) div(v)
                        ke(2 * a, 2 * b) +=
                            qp.w * (2.0 * lm * (gax * gbx + 0.5 * gay * gby) +
                                    ll * gax * gbx);
                        ke(2 * a, 2 * b + 1) +=
                            qp.w * (lm * gay * gbx + ll * gax * gby);
                        ke(2 * a + 1, 2 * b) +=
                            qp.w * (lm * gax * gby + ll * gay * gbx);
                        ke(2 * a + 1, 2 * b + 1) +=
                            qp.w * (2.0 * lm * (gay * gby + 0.5 * gax * gbx) +
                                    ll * gay * gby);
                        const double mm = qp.w * s.n[a] * s.n[b];
                        me(2 * a, 2 * b) += mm;
                        me(2 * a + 1, 2 * b + 1) += mm;
                    }
                }
            }
        }

        std::array<Index, 4> nodes = mesh.element_nodes(e);
        for (Index a = 0; a < edofs; ++a) {
            const Index ga = space.dof(nodes[a / dpn], a % dpn);
            raw_rhs[ga] += fe[a];
            for (Index b = 0; b < edofs; ++b) {
                const Index gb = space.dof(nodes[b / dpn], b % dpn);
                raw_trips.emplace_back(ga, gb, ke(a, b));
                mass_trips.emplace_back(ga, gb, me(a, b));
            }
        }
    }

    FomSystem sys;
    sys.map = std::move(map);
    sys.quad_stats = stats;

    sys.raw_matrix.resize(total, total);
    sys.raw_matrix.setFromTriplets(raw_trips.begin(), raw_trips.end());
    sys.mass_matrix.resize(total, total);
    sys.mass_matrix.setFromTriplets(mass_trips.begin(), mass_trips.end());
    sys.raw_rhs = raw_rhs;
    sys.h1_matrix = sys.raw_matrix + sys.mass_matrix;

    // Eliminated forms: free x free entries (zero extension), plus the
    // solvable variant with unit diagonals at the remaining DOFs.
    // Homogeneous Dirichlet data means the column elimination adds nothing
    // to the right-hand side.
    std::vector<Triplet> trips;
    trips.reserve(raw_trips.size() + total);
    for (Index k = 0; k < sys.raw_matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.raw_matrix, k); it; ++it) {
            if (sys.map.free[it.row()] && sys.map.free[it.col()] &&
                it.value() != 0.0) {
                trips.emplace_back(it.row(), it.col(), it.value());
            }
        }
    }
    sys.zero_matrix.resize(total, total);
    sys.zero_matrix.setFromTriplets(trips.begin(), trips.end());
    for (Index i = 0; i < total; ++i) {
        if (!sys.map.free[i]) trips.emplace_back(i, i, 1.0);
    }
    sys.matrix.resize(total, total);
    sys.matrix.setFromTriplets(trips.begin(), trips.end());

    sys.rhs = Vector::Zero(total);
    for (Index i = 0; i < total; ++i) {
        if (sys.map.free[i]) sys.rhs[i] = raw_rhs[i];
    }
    return sys;
}

namespace {

double relative_residual(const SparseMatrix& a, const Vector& x,
                         const Vector& b) {
    const double nb = b.norm();
    if (nb == 0.0) return (a * x).norm();
    return (a * x - b).norm() / nb;
}

}  // namespace

Vector solve_fom(const FomSystem& system) {
    if (system.rhs.norm() == 0.0) {
        return Vector::Zero(system.rhs.size());
    }
    Vector u;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
    if (ldlt.info() == Eigen::Success) {
        u = ldlt.solve(system.rhs);
    }
    if (ldlt.info() != Eigen::Success ||
        relative_residual(system.matrix, u, system.rhs) > 1e-10) {
        // Diagonally preconditioned CG fallback for matrices the direct
        // factorization cannot handle.
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg(system.matrix);
        cg.setTolerance(1e-13);
        cg.setMaxIterations(20 * system.matrix.rows());
        u = cg.solve(system.rhs);
    }
    for (Index i = 0; i < u.size(); ++i) {
        if (!system.map.free[i]) u[i] = 0.0;
    }
    const double res = relative_residual(system.matrix, u, system.rhs);
    if (res > 1e-10) {
        throw numeric_error("solve_fom: relative residual " +
                            std::to_string(res) + " exceeds 1e-10");
    }
    return u;
}

Vector solve_restricted(const FomSystem& system) {
    const extension::ActiveDofMap& map = system.map;
    const Index nf = map.free_count();
    std::vector<Index> free_index(map.total_dofs, -1);
    Index k = 0;
    for (Index i = 0; i < map.total_dofs; ++i) {
        if (map.free[i]) free_index[i] = k++;
    }
    std::vector<Triplet> trips;
    for (Index c = 0; c < system.matrix.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(system.matrix, c); it; ++it) {
            if (free_index[it.row()] >= 0 && free_index[it.col()] >= 0) {
                trips.emplace_back(free_index[it.row()], free_index[it.col()],
                                   it.value());
            }
        }
    }
    SparseMatrix a(nf, nf);
    a.setFromTriplets(trips.begin(), trips.end());
    Vector b(nf);
    for (Index i = 0; i < map.total_dofs; ++i) {
        if (free_index[i] >= 0) b[free_index[i]] = system.rhs[i];
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw numeric_error("solve_restricted: factorization failed");
    }
    const Vector uf = ldlt.solve(b);
    Vector out = Vector::Zero(map.total_dofs);
    for (Index i = 0; i < map.total_dofs; ++i) {
        if (free_index[i] >= 0) out[i] = uf[free_index[i]];
    }
    return out;
}

ErrorNorms error_norms(const Vector& u, const Vector& v,
                       const FomSystem& system_ref) {
    if (u.size() != v.size() || u.size() != system_ref.map.total_dofs) {
        throw config_error("error_norms: length mismatch");
    }
    Vector d = Vector::Zero(u.size());
    Vector vf = Vector::Zero(u.size());
    for (Index i = 0; i < u.size(); ++i) {
        if (system_ref.map.free[i]) {
            d[i] = u[i] - v[i];
            vf[i] = v[i];
        }
    }
    const double denom_l2 = vf.norm();
    const double denom_h1 = std::sqrt(vf.dot(system_ref.h1_matrix * vf));
    if (denom_l2 == 0.0 || denom_h1 == 0.0) {
        throw numeric_error("error_norms: zero reference norm");
    }
    ErrorNorms norms;
    norms.rel_l2 = d.norm() / denom_l2;
    norms.rel_h1 = std::sqrt(d.dot(system_ref.h1_matrix * d)) / denom_h1;
    return norms;
}

}  // namespace lrom::fom
