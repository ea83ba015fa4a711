#include "lrom/rom.hpp"
#include "lrom/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace lrom;
using namespace lrom::rom;
namespace fs = std::filesystem;

namespace {

config::json base_config_json() {
    return config::json{
        {"geometry",
         {{"box", {{"xmin", 0.0}, {"ymin", 0.0}, {"xmax", 2.0}, {"ymax", 2.0}}},
          {"parameters", {{"lower", {0.5}}, {"upper", {1.5}}}},
          {"holes",
           {{{"center", {"mu0", "mu0"}}, {"radius", 0.3}}}}}},
        {"problem", {{"kind", "poisson"}, {"source", 1.0}}},
        {"mesh", {{"nx", 12}, {"ny", 12}, {"quadrature_depth", 4}}},
        {"sampling",
         {{"n_train_rb", 12},
          {"n_train_deim", 24},
          {"n_test", 5},
          {"seed_rb", 101},
          {"seed_deim", 202},
          {"seed_test", 303}}},
        {"tolerances", {{"eps_pod", 1e-4}, {"eps_pod_deim", 1e-6}}},
        {"clustering",
         {{"n_clusters_rb", 2}, {"n_clusters_deim", 2}, {"seed", 404}}}};
}

RomConfig reproduction_config(Index n_clusters_rb) {
    config::json doc = base_config_json();
    doc["sampling"]["n_train_rb"] = 5;
    doc["sampling"]["n_train_deim"] = 5;
    doc["sampling"]["seed_rb"] = 77;    // identical training sets: DEIM is
    doc["sampling"]["seed_deim"] = 77;  // exact at every RB snapshot
    doc["tolerances"]["eps_pod"] = 0.0;
    doc["tolerances"]["eps_pod_deim"] = 0.0;
    doc["clustering"]["n_clusters_rb"] = n_clusters_rb;
    doc["clustering"]["n_clusters_deim"] = 1;
    return config::parse_config(doc);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.rows() == 0 || (a - b).cwiseAbs().maxCoeff() == 0.0);
}

}  // namespace

TEST_CASE("eps = 0 models reproduce the FOM at training points") {
    const RomConfig cfg = reproduction_config(1);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    for (const geometry::ParameterVector& mu : store.train.points) {
        const fom::FomSystem sys = assemble_at(cfg, mu);
        const Vector u_fom = fom::solve_fom(sys);
        const RomSolution sol = online_solve(store, deim_art, mu);
        const double err =
            extension::restrict_free(sol.extended - u_fom, sys.map).norm() /
            extension::restrict_free(u_fom, sys.map).norm();
        CHECK(err <= 1e-8);
    }
}

TEST_CASE("singleton RB clusters reproduce snapshots at their centroids") {
    const RomConfig cfg = reproduction_config(5);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);
    REQUIRE(store.cluster_count() == 5);

    for (Index k = 0; k < store.cluster_count(); ++k) {
        const geometry::ParameterVector mu = store.local[k].centroid;
        const fom::FomSystem sys = assemble_at(cfg, mu);
        const Vector u_fom = fom::solve_fom(sys);
        const RomSolution sol = online_solve(store, deim_art, mu);
        CHECK(sol.rb_cluster == k);
        const double err =
            extension::restrict_free(sol.extended - u_fom, sys.map).norm() /
            extension::restrict_free(u_fom, sys.map).norm();
        CHECK(err <= 1e-8);
    }
}

TEST_CASE("store holds every cluster combination") {
    config::json doc = base_config_json();
    doc["clustering"]["n_clusters_rb"] = 2;
    doc["clustering"]["n_clusters_deim"] = 3;
    const RomConfig cfg = config::parse_config(doc);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    REQUIRE(deim_art.cluster_count() == 3);
    REQUIRE(store.cluster_count() == 2);
    for (const RbCluster& rc : store.local) {
        REQUIRE(rc.per_deim_cluster.size() == 3);
        for (Index l = 0; l < 3; ++l) {
            const ProjectedOperators& ops = rc.per_deim_cluster[l];
            CHECK(static_cast<Index>(ops.matrix_terms.size()) ==
                  deim_art.local[l].matrix_model.term_count());
            for (const Matrix& term : ops.matrix_terms) {
                CHECK(term.rows() == rc.basis.retained);
                CHECK(term.cols() == rc.basis.retained);
            }
            CHECK(ops.rhs_terms.rows() == rc.basis.retained);
            CHECK(ops.rhs_terms.cols() ==
                  deim_art.local[l].rhs_model.term_count());
        }
    }
}

TEST_CASE("galerkin residual is orthogonal to the reduced space") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    SplitMix64 rng(1);
    for (int t = 0; t < 5; ++t) {
        const Vector mu = Vector::Constant(1, 0.5 + rng.next_double());
        const RomSolution sol = online_solve(store, deim_art, mu);
        const DeimCluster& dc = deim_art.local[sol.deim_cluster];
        const Matrix& v = store.local[sol.rb_cluster].basis.modes;
        // full reconstructed operator: affine part plus the unit diagonals
        // that make the extended system solvable
        SparseMatrix a_deim = deim::reconstruct_matrix(
            dc.matrix_model, rbf::rbf_eval(dc.theta_a, mu));
        const extension::ActiveDofMap map = fom::build_active_map(
            deim_art.spec, mu, deim_art.space(), deim_art.quad_depth,
            deim_art.bc);
        std::vector<Triplet> diag;
        for (Index d = 0; d < map.total_dofs; ++d) {
            if (!map.free[d]) diag.emplace_back(d, d, 1.0);
        }
        SparseMatrix stab(map.total_dofs, map.total_dofs);
        stab.setFromTriplets(diag.begin(), diag.end());
        a_deim = a_deim + stab;
        const Vector f_deim = deim::reconstruct_flat(
            dc.rhs_model, rbf::rbf_eval(dc.theta_f, mu));
        const Vector residual =
            v.transpose() * (a_deim * sol.extended - f_deim);
        const Vector f_n = v.transpose() * f_deim;
        CHECK(residual.norm() <= 1e-9 * f_n.norm());
    }
}

TEST_CASE("stored projections equal the directly projected operators") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    SplitMix64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const Vector mu = Vector::Constant(1, 0.5 + rng.next_double());
        std::vector<geometry::ParameterVector> cd;
        for (const DeimCluster& c : deim_art.local) cd.push_back(c.centroid);
        const Index l = clustering::nearest_centroid(cd, mu);
        const DeimCluster& dc = deim_art.local[l];
        const Vector theta_a = rbf::rbf_eval(dc.theta_a, mu);

        for (Index m = 0; m < store.cluster_count(); ++m) {
            const Matrix& v = store.local[m].basis.modes;
            Matrix from_blocks = Matrix::Zero(v.cols(), v.cols());
            const ProjectedOperators& ops =
                store.local[m].per_deim_cluster[l];
            for (Index q = 0; q < theta_a.size(); ++q) {
                from_blocks += theta_a[q] * ops.matrix_terms[q];
            }
            const SparseMatrix a_deim =
                deim::reconstruct_matrix(dc.matrix_model, theta_a);
            const Matrix direct = v.transpose() * (a_deim * v);
            CHECK((from_blocks - direct).cwiseAbs().maxCoeff() <=
                  1e-12 * direct.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("cluster switching follows the nearest centroid along a path") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    std::vector<geometry::ParameterVector> cd, cr;
    for (const DeimCluster& c : deim_art.local) cd.push_back(c.centroid);
    for (const RbCluster& c : store.local) cr.push_back(c.centroid);

    Index switches = 0;
    Index previous_m = -1;
    for (int i = 0; i < 50; ++i) {
        const Vector mu = Vector::Constant(1, 0.5 + i / 49.0);
        const RomSolution sol = online_solve(store, deim_art, mu);
        CHECK(sol.deim_cluster == clustering::nearest_centroid(cd, mu));
        CHECK(sol.rb_cluster == clustering::nearest_centroid(cr, mu));
        if (previous_m >= 0 && sol.rb_cluster != previous_m) ++switches;
        previous_m = sol.rb_cluster;
    }
    // two RB clusters over a monotone path: exactly one Voronoi crossing
    CHECK(switches == 1);
}

TEST_CASE("offline training is deterministic") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact d1 = offline_deim(cfg);
    const LocalDeimArtifact d2 = offline_deim(cfg);
    CHECK(d1.pattern.checksum() == d2.pattern.checksum());
    REQUIRE(d1.cluster_count() == d2.cluster_count());
    for (Index k = 0; k < d1.cluster_count(); ++k) {
        CHECK(bitwise_equal(d1.local[k].matrix_model.basis,
                            d2.local[k].matrix_model.basis));
        CHECK(d1.local[k].matrix_model.magic == d2.local[k].matrix_model.magic);
        CHECK(bitwise_equal(d1.local[k].theta_a.weights,
                            d2.local[k].theta_a.weights));
    }
    const LocalRomStore s1 = offline_rb(cfg, d1);
    const LocalRomStore s2 = offline_rb(cfg, d2);
    REQUIRE(s1.cluster_count() == s2.cluster_count());
    for (Index k = 0; k < s1.cluster_count(); ++k) {
        CHECK(bitwise_equal(s1.local[k].basis.modes, s2.local[k].basis.modes));
        for (Index l = 0; l < d1.cluster_count(); ++l) {
            CHECK(bitwise_equal(s1.local[k].per_deim_cluster[l].rhs_terms,
                                s2.local[k].per_deim_cluster[l].rhs_terms));
        }
    }
}

TEST_CASE("threaded snapshot loops produce the serial artifacts") {
    const RomConfig cfg = config::parse_config(base_config_json());
    set_threads(1);
    const LocalDeimArtifact d1 = offline_deim(cfg);
    set_threads(4);
    const LocalDeimArtifact d2 = offline_deim(cfg);
    set_threads(1);
    CHECK(d1.pattern.checksum() == d2.pattern.checksum());
    for (Index k = 0; k < d1.cluster_count(); ++k) {
        CHECK(bitwise_equal(d1.local[k].matrix_model.basis,
                            d2.local[k].matrix_model.basis));
    }
}

TEST_CASE("model directory round trip") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    const fs::path dir = fs::temp_directory_path() / "lrom_test_model";
    fs::remove_all(dir);
    save_model(dir, cfg, deim_art, store);
    const LoadedModel loaded = load_model(dir);

    CHECK(loaded.deim.pattern.checksum() == deim_art.pattern.checksum());
    SplitMix64 rng(3);
    for (int t = 0; t < 5; ++t) {
        const Vector mu = Vector::Constant(1, 0.5 + rng.next_double());
        const RomSolution a = online_solve(store, deim_art, mu);
        const RomSolution b = online_solve(loaded.store, loaded.deim, mu);
        CHECK(a.deim_cluster == b.deim_cluster);
        CHECK(a.rb_cluster == b.rb_cluster);
        CHECK((a.extended - b.extended).cwiseAbs().maxCoeff() <=
              1e-14 * a.extended.cwiseAbs().maxCoeff());
    }

    // corrupting the pattern trips the checksum verification
    {
        std::fstream f(dir / "pattern_cols.i64",
                       std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        char byte = 1;
        f.write(&byte, 1);
    }
    CHECK_THROWS_AS(load_model(dir), io_error);
    fs::remove_all(dir);
}

TEST_CASE("evaluate on the reproduction model") {
    const RomConfig cfg = reproduction_config(1);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);

    sampling::SampleSet test;
    test.kind = sampling::SampleKind::UniformRandom;
    test.points = deim_art.train.points;
    const EvaluationReport report = evaluate(store, deim_art, test, cfg);
    REQUIRE(report.rows.size() == test.points.size());
    CHECK(report.mean_rel_l2 <= 1e-8);
    CHECK(report.max_rel_l2 <= 1e-8);
    CHECK(report.mean_op_err_a <= 1e-9);
    CHECK(report.mean_op_err_f <= 1e-9);
    CHECK(report.out_of_pattern_entries == 0);
    CHECK(report.max_q_a == deim_art.local[0].matrix_model.term_count());
    for (const EvaluationRow& row : report.rows) {
        CHECK(row.fom_ms > 0.0);
        CHECK(row.rom_ms > 0.0);
        CHECK(row.speedup > 0.0);
    }
}

TEST_CASE("online rejects out-of-domain parameters") {
    const RomConfig cfg = reproduction_config(1);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);
    CHECK_THROWS_AS(online_solve(store, deim_art, Vector::Constant(1, 0.2)),
                    config_error);
    CHECK_THROWS_AS(online_solve(store, deim_art, Vector::Constant(2, 1.0)),
                    config_error);
}

TEST_CASE("exact-operator snapshot ablation runs") {
    config::json doc = base_config_json();
    doc["clustering"]["exact_operator_snapshots"] = true;
    const RomConfig cfg = config::parse_config(doc);
    CHECK(cfg.exact_operator_snapshots);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);
    const RomSolution sol =
        online_solve(store, deim_art, Vector::Constant(1, 1.0));
    CHECK(sol.extended.allFinite());
}

TEST_CASE("h1-weighted POD bases are weight-orthonormal") {
    config::json doc = base_config_json();
    doc["clustering"]["pod_weight"] = "h1_mid";
    const RomConfig cfg = config::parse_config(doc);
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);
    CHECK(store.weight_id == "h1_mid");

    const SparseMatrix w = h1_weight_matrix(cfg);
    for (const RbCluster& c : store.local) {
        const Matrix gram =
            c.basis.modes.transpose() * (w * c.basis.modes) -
            Matrix::Identity(c.basis.retained, c.basis.retained);
        CHECK(gram.cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("clusters too small for the RBF tail are rejected with advice") {
    config::json doc = base_config_json();
    doc["sampling"]["n_train_deim"] = 6;
    doc["clustering"]["n_clusters_deim"] = 3;
    const RomConfig cfg = config::parse_config(doc);
    CHECK_THROWS_WITH_AS(offline_deim(cfg),
                         doctest::Contains("n_train_deim"), config_error);
}

TEST_CASE("timings are populated and nonnegative") {
    const RomConfig cfg = config::parse_config(base_config_json());
    const LocalDeimArtifact deim_art = offline_deim(cfg);
    const LocalRomStore store = offline_rb(cfg, deim_art);
    const RomSolution sol =
        online_solve(store, deim_art, Vector::Constant(1, 0.75));
    CHECK(sol.theta_ms >= 0.0);
    CHECK(sol.assemble_ms >= 0.0);
    CHECK(sol.solve_ms >= 0.0);
    CHECK(sol.total_ms >=
          sol.theta_ms + sol.assemble_ms + sol.solve_ms - 1e-9);
    CHECK(sol.rcond > 0.0);
}
