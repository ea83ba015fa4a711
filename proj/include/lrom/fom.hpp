#pragma once

#include "lrom/extension.hpp"
#include "lrom/geometry.hpp"
#include "lrom/types.hpp"

#include <array>
#include <functional>
#include <vector>

namespace lrom::fom {

struct BackgroundMesh {
    geometry::Rect box;
    Index nx = 0;
    Index ny = 0;

    Index n_elements() const { return nx * ny; }
    Index n_nodes() const { return (nx + 1) * (ny + 1); }
    double hx() const { return box.width() / static_cast<double>(nx); }
    double hy() const { return box.height() / static_cast<double>(ny); }

    geometry::Rect element_rect(Index e) const {
        const Index ex = e % nx;
        const Index ey = e / nx;
        geometry::Rect r;
        r.xmin = box.xmin + ex * hx();
        r.ymin = box.ymin + ey * hy();
        r.xmax = box.xmin + (ex + 1) * hx();
        r.ymax = box.ymin + (ey + 1) * hy();
        return r;
    }

    Eigen::Vector2d node_coord(Index n) const {
        const Index i = n % (nx + 1);
        const Index j = n / (nx + 1);
        return {box.xmin + i * hx(), box.ymin + j * hy()};
    }

    /// Local order (0,0), (1,0), (0,1), (1,1).
    std::array<Index, 4> element_nodes(Index e) const {
        const Index ex = e % nx;
        const Index ey = e / nx;
        const Index n00 = ey * (nx + 1) + ex;
        return {n00, n00 + 1, n00 + nx + 1, n00 + nx + 2};
    }
};

BackgroundMesh build_mesh(const geometry::Rect& box, Index nx, Index ny);

enum class SpaceKind { Scalar, Vector2 };

/// Bilinear Q1 space on the background mesh, one or two DOFs per node.
struct FeSpace {
    BackgroundMesh mesh;
    SpaceKind kind = SpaceKind::Scalar;

    Index dofs_per_node() const { return kind == SpaceKind::Scalar ? 1 : 2; }
    Index total_dofs() const { return mesh.n_nodes() * dofs_per_node(); }

    /// Global DOF of (node, component).
    Index dof(Index node, Index comp) const {
        return node * dofs_per_node() + comp;
    }
};

FeSpace make_space(const BackgroundMesh& mesh, SpaceKind kind);

struct MaterialParams {
    double young_E = 0.0;
    double poisson_nu = 0.0;

    double lame_mu() const { return young_E / (2.0 * (1.0 + poisson_nu)); }
    double lame_lambda() const {
        return young_E * poisson_nu /
               ((1.0 + poisson_nu) * (1.0 - 2.0 * poisson_nu));
    }
};

/// Validates E > 0 and nu in (0, 0.5).
MaterialParams make_material(double young_E, double poisson_nu);

struct ProblemKind {
    enum class Kind { Poisson, Elasticity };
    Kind kind = Kind::Poisson;
    std::function<double(double, double)> source;  // Poisson
    std::function<Eigen::Vector2d(double, double)> body_force;  // Elasticity
    MaterialParams material;
};

ProblemKind poisson_problem(std::function<double(double, double)> source);
ProblemKind elasticity_problem(
    std::function<Eigen::Vector2d(double, double)> body_force,
    MaterialParams material);

enum class Edge { Left, Right, Bottom, Top };

/// Homogeneous Dirichlet is imposed only on fitted edges of the background
/// box; everything else (including the unfitted hole boundaries) is
/// homogeneous Neumann.
struct BoundaryConditions {
    std::vector<Edge> dirichlet_edges = {Edge::Left};
};

struct WeightedPoint {
    Eigen::Vector2d x;
    double w = 0.0;
};

struct QuadratureStats {
    Index cut_elements = 0;
    Index depth = 0;
    double weight_sum = 0.0;  // approximates |Omega(mu)|
};

/// Extended full-order system. `matrix`/`rhs` carry the solvable form with
/// unit diagonal rows at non-free DOFs; `zero_matrix` is the same operator
/// extended by zero instead (free-block entries only), which is the form
/// the hyper-reduction trains on: its entries fade continuously as cut
/// supports shrink, where the unit diagonal would jump. The raw
/// (pre-elimination) arrays and the H1 matrix back the norm computations.
struct FomSystem {
    SparseMatrix matrix;
    SparseMatrix zero_matrix;
    Vector rhs;
    SparseMatrix raw_matrix;
    Vector raw_rhs;
    SparseMatrix mass_matrix;
    SparseMatrix h1_matrix;
    extension::ActiveDofMap map;
    QuadratureStats quad_stats;
};

/// Quadtree rule on a cut element: interior leaves carry plain 2x2 Gauss,
/// cut leaves at max depth carry 2x2 Gauss filtered by point_in_domain,
/// exterior leaves are dropped.
std::vector<WeightedPoint> cut_quadrature(const geometry::Rect& elem,
                                          const geometry::ResolvedHoles& holes,
                                          Index depth);

/// Node activity flags: a node is active iff the quadrature sees a
/// nonneglectable part of its support inside the domain (the activity rule
/// at quadrature resolution). Overload without depth uses depth 6.
std::vector<bool> active_nodes(const BackgroundMesh& mesh,
                               const geometry::ResolvedHoles& holes);
std::vector<bool> active_nodes(const BackgroundMesh& mesh,
                               const geometry::ResolvedHoles& holes,
                               Index quadrature_depth);

/// Active/free DOF bookkeeping for a parameter value without assembling.
/// Uses only geometry and quadrature, no operator evaluation.
extension::ActiveDofMap build_active_map(
    const geometry::GeometrySpec& spec, const geometry::ParameterVector& mu,
    const FeSpace& space, Index quadrature_depth,
    const BoundaryConditions& bc = BoundaryConditions{});

FomSystem assemble(const ProblemKind& problem, const geometry::GeometrySpec& spec,
                   const geometry::ParameterVector& mu, const FeSpace& space,
                   Index quadrature_depth,
                   const BoundaryConditions& bc = BoundaryConditions{});

/// Solves the extended system; entries at non-free DOFs are exactly zero.
/// Sparse direct (LDLT) with a diagonally preconditioned CG fallback;
/// throws numeric_error if the relative residual stays above 1e-10.
Vector solve_fom(const FomSystem& system);

/// Solves the system restricted to its free DOFs and zero-extends; used to
/// cross-check the unit-diagonal extended form.
Vector solve_restricted(const FomSystem& system);

struct ErrorNorms {
    double rel_l2 = 0.0;
    double rel_h1 = 0.0;
};

/// Relative discrete errors of u against the reference v, over the free
/// DOFs of the reference system. rel_h1 uses the stiffness-plus-mass matrix.
ErrorNorms error_norms(const Vector& u, const Vector& v,
                       const FomSystem& system_ref);

}  // namespace lrom::fom
