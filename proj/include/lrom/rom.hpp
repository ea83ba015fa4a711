#pragma once

#include "lrom/clustering.hpp"
#include "lrom/config.hpp"
#include "lrom/deim.hpp"
#include "lrom/extension.hpp"
#include "lrom/fom.hpp"
#include "lrom/pod.hpp"
#include "lrom/rbf.hpp"
#include "lrom/sampling.hpp"
#include "lrom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lrom::rom {

using RomConfig = config::ExperimentConfig;

/// One parameter cluster of the localized DEIM training: affine bases for
/// the matrix and right-hand side plus the coefficient surrogates.
struct DeimCluster {
    geometry::ParameterVector centroid;
    deim::DeimModel matrix_model;
    deim::DeimModel rhs_model;
    rbf::RbfInterpolant theta_a;
    rbf::RbfInterpolant theta_f;
    std::vector<Index> members;  // training sample indices
};

struct LocalDeimArtifact {
    sampling::SampleSet train;
    clustering::ClusterModel clusters;
    extension::SparsityPattern pattern;  // shared by all clusters
    std::vector<DeimCluster> local;
    double max_area_rel_error = 0.0;  // cut-quadrature diagnostic
    geometry::ParameterDomain domain;
    // The affine terms approximate the zero-extended operator; turning it
    // into the solvable extended form needs the mu-dependent non-free set,
    // which is a pure geometry query on this experiment definition.
    geometry::GeometrySpec spec;
    Index nx = 0;
    Index ny = 0;
    Index quad_depth = 6;
    fom::SpaceKind space_kind = fom::SpaceKind::Scalar;
    fom::BoundaryConditions bc;

    Index cluster_count() const { return static_cast<Index>(local.size()); }
    fom::FeSpace space() const {
        return fom::make_space(fom::build_mesh(spec.box, nx, ny), space_kind);
    }
};

/// Reduced operators of one DEIM cluster projected onto one RB basis.
struct ProjectedOperators {
    std::vector<Matrix> matrix_terms;  // Q_a blocks, N x N
    Matrix rhs_terms;                  // N x Q_f
};

struct RbCluster {
    geometry::ParameterVector centroid;
    pod::PodBasis basis;
    std::vector<ProjectedOperators> per_deim_cluster;  // all combinations
};

struct LocalRomStore {
    sampling::SampleSet train;
    clustering::ClusterModel clusters;
    std::vector<RbCluster> local;
    std::string weight_id = "identity";
    // Training solves that fell back to exact assembly because the
    // DEIM-reconstructed system was near-singular.
    Index snapshot_fallbacks = 0;

    Index cluster_count() const { return static_cast<Index>(local.size()); }
};

struct RomSolution {
    Vector reduced;
    Vector extended;
    Index deim_cluster = 0;
    Index rb_cluster = 0;
    double theta_ms = 0.0;
    double assemble_ms = 0.0;
    double solve_ms = 0.0;
    double total_ms = 0.0;
    double rcond = 0.0;
    bool condition_warning = false;
};

/// Worker threads for the embarrassingly parallel snapshot loops; results
/// are gathered in sample order so artifacts stay deterministic.
void set_threads(Index n);
Index threads();

/// Algorithm: sample the DEIM training set, cluster it, assemble the
/// full-order operators per member, build the per-cluster affine bases and
/// magic points, and fit the RBF coefficient surrogates on the exact
/// interpolation targets.
LocalDeimArtifact offline_deim(const RomConfig& cfg);

/// Algorithm: sample the RB training set, cluster it, produce snapshots by
/// solving the extended system with DEIM-approximated operators (or exact
/// ones under the ablation flag), build per-cluster POD bases, and project
/// every DEIM cluster's terms onto every basis.
LocalRomStore offline_rb(const RomConfig& cfg, const LocalDeimArtifact& deim);

/// Nearest-centroid switching, RBF coefficients, reduced assembly from the
/// stored blocks, dense solve and reconstruction; all stages timed.
RomSolution online_solve(const LocalRomStore& store,
                         const LocalDeimArtifact& deim,
                         const geometry::ParameterVector& mu);

struct EvaluationRow {
    geometry::ParameterVector mu;
    double rel_l2 = 0.0;
    double rel_h1 = 0.0;
    double op_err_a = 0.0;
    double op_err_f = 0.0;
    double fom_ms = 0.0;
    double rom_ms = 0.0;
    double speedup = 0.0;
    Index deim_cluster = 0;
    Index rb_cluster = 0;
};

struct EvaluationReport {
    std::vector<EvaluationRow> rows;
    double mean_rel_l2 = 0.0, max_rel_l2 = 0.0;
    double mean_rel_h1 = 0.0, max_rel_h1 = 0.0;
    double mean_op_err_a = 0.0, mean_op_err_f = 0.0;
    double median_fom_ms = 0.0, median_rom_ms = 0.0, median_speedup = 0.0;
    Index max_q_a = 0, max_q_f = 0, max_n = 0;
    std::int64_t out_of_pattern_entries = 0;
};

/// Per test point: FOM oracle solve, ROM solve, relative errors over the
/// free DOFs, operator errors in the max norm, and the speedup.
EvaluationReport evaluate(const LocalRomStore& store,
                          const LocalDeimArtifact& deim,
                          const sampling::SampleSet& test,
                          const RomConfig& cfg);

/// Convenience wrappers around the fom module for a configured experiment.
fom::FeSpace make_space(const RomConfig& cfg);
fom::FomSystem assemble_at(const RomConfig& cfg,
                           const geometry::ParameterVector& mu);

/// Builds the full-background SPD weight for H1-weighted POD: the
/// stiffness-plus-mass matrix at the domain midpoint on its free DOFs,
/// unit diagonal elsewhere.
SparseMatrix h1_weight_matrix(const RomConfig& cfg);

/// Model directory: manifest.json plus per-cluster raw arrays. Loadable
/// standalone for online-only deployment.
void save_model(const std::filesystem::path& dir, const RomConfig& cfg,
                const LocalDeimArtifact& deim, const LocalRomStore& store);

struct LoadedModel {
    RomConfig cfg;
    LocalDeimArtifact deim;
    LocalRomStore store;
    config::json manifest;
};

LoadedModel load_model(const std::filesystem::path& dir);

}  // namespace lrom::rom
