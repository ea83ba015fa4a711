#include "lrom/rom.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

namespace lrom::rom {

namespace {

std::atomic<Index> g_threads{1};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0)
        .count();
}

/// Index-sharded loop; fn(i) must only touch slot i of its outputs.
void parallel_for(Index n, const std::function<void(Index)>& fn) {
    const Index nt = std::min<Index>(g_threads.load(), n);
    if (nt <= 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (Index t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const Index i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// All DOF pairs that can ever receive an assembled entry: pairs sharing an
/// element. Every per-mu nonzero pattern is a subset.
extension::SparsityPattern structural_pattern(const fom::FeSpace& space) {
    const Index dpn = space.dofs_per_node();
    std::vector<std::pair<Index, Index>> entries;
    entries.reserve(space.mesh.n_elements() * 16 * dpn * dpn);
    for (Index e = 0; e < space.mesh.n_elements(); ++e) {
        const auto nodes = space.mesh.element_nodes(e);
        for (Index a = 0; a < 4; ++a) {
            for (Index ca = 0; ca < dpn; ++ca) {
                for (Index b = 0; b < 4; ++b) {
                    for (Index cb = 0; cb < dpn; ++cb) {
                        entries.emplace_back(space.dof(nodes[a], ca),
                                             space.dof(nodes[b], cb));
                    }
                }
            }
        }
    }
    return extension::SparsityPattern(space.total_dofs(), std::move(entries));
}

double exact_domain_area(const RomConfig& cfg,
                         const geometry::ParameterVector& mu) {
    // Holes are validated to lie inside the box; overlap between holes is
    // not subtracted (diagnostic only, benchmarks use disjoint holes).
    double area = cfg.spec.box.area();
    for (const geometry::Circle& c :
         geometry::resolve_holes(cfg.spec, mu).circles) {
        area -= std::numbers::pi * c.radius * c.radius;
    }
    return area;
}

/// Direct solve of an extended system that may deviate slightly from the
/// exact unit-diagonal form (DEIM-reconstructed operators). Returns false
/// when the reconstructed system is unusable: factorization failure, bad
/// residual, or a near-zero smallest eigenvalue. The DEIM approximation
/// error can swamp the smallest eigenvalue of a system with small cut
/// elements, so the estimate guards the snapshot quality.
bool solve_extended(const SparseMatrix& a, const Vector& b, Vector& x) {
    if (b.norm() == 0.0) {
        x = Vector::Zero(b.size());
        return true;
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    x = ldlt.solve(b);
    if ((a * x - b).norm() > 1e-10 * b.norm()) return false;

    // inverse-power estimate of the smallest eigenvalue magnitude
    Vector v = Vector::Constant(
        b.size(), 1.0 / std::sqrt(static_cast<double>(b.size())));
    double smin = 0.0;
    for (int it = 0; it < 6; ++it) {
        Vector w = ldlt.solve(v);
        const double norm = w.norm();
        if (!(norm > 0.0) || !w.allFinite()) return false;
        smin = 1.0 / norm;
        v = w * smin;
    }
    double scale = 0.0;
    for (Index k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            scale = std::max(scale, std::abs(it.value()));
        }
    }
    return smin > 1e-9 * scale;
}

}  // namespace

void set_threads(Index n) { g_threads.store(std::max<Index>(1, n)); }
Index threads() { return g_threads.load(); }

fom::FeSpace make_space(const RomConfig& cfg) {
    return fom::make_space(
        fom::build_mesh(cfg.spec.box, cfg.nx, cfg.ny), cfg.space_kind);
}

fom::FomSystem assemble_at(const RomConfig& cfg,
                           const geometry::ParameterVector& mu) {
    return fom::assemble(cfg.problem, cfg.spec, mu, make_space(cfg),
                         cfg.quadrature_depth, cfg.bc);
}

SparseMatrix h1_weight_matrix(const RomConfig& cfg) {
    const geometry::ParameterVector mid = cfg.spec.domain.midpoint();
    const fom::FomSystem sys = assemble_at(cfg, mid);
    std::vector<Triplet> trips;
    for (Index k = 0; k < sys.h1_matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.h1_matrix, k); it; ++it) {
            if (sys.map.free[it.row()] && sys.map.free[it.col()] &&
                it.value() != 0.0) {
                trips.emplace_back(it.row(), it.col(), it.value());
            }
        }
    }
    for (Index i = 0; i < sys.map.total_dofs; ++i) {
        if (!sys.map.free[i]) trips.emplace_back(i, i, 1.0);
    }
    SparseMatrix w(sys.map.total_dofs, sys.map.total_dofs);
    w.setFromTriplets(trips.begin(), trips.end());
    return w;
}

LocalDeimArtifact offline_deim(const RomConfig& cfg) {
    const Index m = cfg.spec.domain.dim();
    LocalDeimArtifact art;
    art.domain = cfg.spec.domain;
    art.spec = cfg.spec;
    art.nx = cfg.nx;
    art.ny = cfg.ny;
    art.quad_depth = cfg.quadrature_depth;
    art.space_kind = cfg.space_kind;
    art.bc = cfg.bc;
    art.train = sampling::latin_hypercube(cfg.n_train_deim, cfg.spec.domain,
                                          cfg.seed_deim);
    art.clusters =
        clustering::kmeans(art.train, cfg.n_clusters_deim, cfg.seed_cluster);

    const auto members = art.clusters.members();
    for (Index k = 0; k < cfg.n_clusters_deim; ++k) {
        if (static_cast<Index>(members[k].size()) < m + 2) {
            throw config_error(
                "offline_deim: cluster " + std::to_string(k) + " has only " +
                std::to_string(members[k].size()) +
                " training points; RBF fitting needs at least M+2 = " +
                std::to_string(m + 2) +
                ". Increase n_train_deim or decrease n_clusters_deim.");
        }
    }

    const fom::FeSpace space = make_space(cfg);
    const extension::SparsityPattern structural = structural_pattern(space);
    const Index n = art.train.size();

    // One assembly pass; matrices are kept sparse until the union pattern
    // is known, then vectorized and released.
    std::vector<SparseMatrix> mats(n);
    std::vector<Vector> rhss(n);
    std::vector<double> area_errors(n, 0.0);
    parallel_for(n, [&](Index i) {
        fom::FomSystem sys = fom::assemble(cfg.problem, cfg.spec,
                                           art.train.points[i], space,
                                           cfg.quadrature_depth, cfg.bc);
        const double exact = exact_domain_area(cfg, art.train.points[i]);
        area_errors[i] = std::abs(sys.quad_stats.weight_sum - exact) / exact;
        mats[i] = std::move(sys.zero_matrix);
        rhss[i] = std::move(sys.rhs);
    });
    art.max_area_rel_error =
        *std::max_element(area_errors.begin(), area_errors.end());

    std::vector<char> mask(structural.size(), 0);
    for (const SparseMatrix& a : mats) {
        for (Index k = 0; k < a.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
                if (it.value() == 0.0) continue;
                const Index flat = structural.find(it.row(), it.col());
                if (flat < 0) {
                    throw numeric_error(
                        "offline_deim: assembled entry outside the "
                        "structural pattern");
                }
                mask[flat] = 1;
            }
        }
    }
    // Diagonal positions are kept unconditionally so the flat indexing of
    // the diagonal never depends on which DOFs happened to be active in
    // training.
    std::vector<std::pair<Index, Index>> union_entries;
    for (Index i = 0; i < space.total_dofs(); ++i) {
        union_entries.emplace_back(i, i);
    }
    for (Index f = 0; f < structural.size(); ++f) {
        if (mask[f]) union_entries.push_back(structural.entry(f));
    }
    art.pattern = extension::SparsityPattern(space.total_dofs(),
                                             std::move(union_entries));

    std::vector<Vector> vec_cols(n);
    parallel_for(n, [&](Index i) {
        vec_cols[i] = art.pattern.vectorize(mats[i]);
        mats[i] = SparseMatrix();
    });

    for (Index k = 0; k < cfg.n_clusters_deim; ++k) {
        const std::vector<Index>& mem = members[k];
        const Index nk = static_cast<Index>(mem.size());

        Matrix s_a(art.pattern.size(), nk);
        Matrix s_f(space.total_dofs(), nk);
        std::vector<geometry::ParameterVector> centers(nk);
        for (Index j = 0; j < nk; ++j) {
            s_a.col(j) = vec_cols[mem[j]];
            s_f.col(j) = rhss[mem[j]];
            centers[j] = art.train.points[mem[j]];
        }

        DeimCluster cluster;
        cluster.centroid = art.clusters.centroids[k];
        cluster.members = mem;
        cluster.matrix_model = deim::build_deim(
            pod::make_snapshots(s_a, mem), cfg.eps_pod_deim,
            deim::OperatorKind::Matrix, art.pattern);
        cluster.rhs_model =
            deim::build_deim(pod::make_snapshots(s_f, mem), cfg.eps_pod_deim,
                             deim::OperatorKind::Vector);

        // Exact coefficients at the training points are the RBF targets.
        const Index qa = cluster.matrix_model.term_count();
        const Index qf = cluster.rhs_model.term_count();
        Matrix targets_a(nk, qa), targets_f(nk, qf);
        for (Index j = 0; j < nk; ++j) {
            Vector probe_a(qa), probe_f(qf);
            for (Index q = 0; q < qa; ++q) {
                probe_a[q] = s_a(cluster.matrix_model.magic[q], j);
            }
            for (Index q = 0; q < qf; ++q) {
                probe_f[q] = s_f(cluster.rhs_model.magic[q], j);
            }
            targets_a.row(j) =
                deim::theta_exact(cluster.matrix_model, probe_a).transpose();
            targets_f.row(j) =
                deim::theta_exact(cluster.rhs_model, probe_f).transpose();
        }
        cluster.theta_a = rbf::rbf_fit(centers, targets_a);
        cluster.theta_f = rbf::rbf_fit(centers, targets_f);
        art.local.push_back(std::move(cluster));
    }
    return art;
}

namespace {

struct DeimOperators {
    SparseMatrix matrix;
    Vector rhs;
    Vector theta_a;
    Vector theta_f;
    Index cluster = 0;
};

DeimOperators reconstruct_operators(const LocalDeimArtifact& deim_art,
                                    const geometry::ParameterVector& mu) {
    DeimOperators ops;
    std::vector<geometry::ParameterVector> centroids;
    centroids.reserve(deim_art.local.size());
    for (const DeimCluster& c : deim_art.local) centroids.push_back(c.centroid);
    ops.cluster = clustering::nearest_centroid(centroids, mu);
    const DeimCluster& c = deim_art.local[ops.cluster];
    ops.theta_a = rbf::rbf_eval(c.theta_a, mu);
    ops.theta_f = rbf::rbf_eval(c.theta_f, mu);
    ops.matrix = deim::reconstruct_matrix(c.matrix_model, ops.theta_a);
    ops.rhs = deim::reconstruct_flat(c.rhs_model, ops.theta_f);
    return ops;
}

}  // namespace

LocalRomStore offline_rb(const RomConfig& cfg,
                         const LocalDeimArtifact& deim_art) {
    LocalRomStore store;
    store.train = sampling::latin_hypercube(cfg.n_train_rb, cfg.spec.domain,
                                            cfg.seed_rb);
    store.clusters =
        clustering::kmeans(store.train, cfg.n_clusters_rb,
                           cfg.seed_cluster + 1);
    store.weight_id = cfg.pod_weight == "h1_mid" ? "h1_mid" : "identity";

    const fom::FeSpace space = make_space(cfg);
    const Index n = store.train.size();

    // Snapshots through the DEIM-approximated operators (the offline flow).
    // The reconstruction approximates the zero-extended operator; the
    // offline geometry supplies the active set, so the solvable form adds
    // unit diagonals at the non-free DOFs exactly as the FOM does. Exact
    // assembly is available as an ablation, and is the per-snapshot
    // fallback when a reconstructed system turns out near-singular.
    Matrix snapshots(space.total_dofs(), n);
    std::atomic<Index> fallbacks{0};
    parallel_for(n, [&](Index i) {
        const geometry::ParameterVector& mu = store.train.points[i];
        bool solved = false;
        if (!cfg.exact_operator_snapshots) {
            const DeimOperators ops = reconstruct_operators(deim_art, mu);
            const extension::ActiveDofMap map =
                fom::build_active_map(cfg.spec, mu, space,
                                      cfg.quadrature_depth, cfg.bc);
            std::vector<Triplet> diag;
            Vector rhs = ops.rhs;
            for (Index d = 0; d < map.total_dofs; ++d) {
                if (!map.free[d]) {
                    diag.emplace_back(d, d, 1.0);
                    rhs[d] = 0.0;
                }
            }
            SparseMatrix stabilizer(map.total_dofs, map.total_dofs);
            stabilizer.setFromTriplets(diag.begin(), diag.end());
            const SparseMatrix system = ops.matrix + stabilizer;
            Vector u;
            solved = solve_extended(system, rhs, u);
            if (solved) {
                for (Index d = 0; d < map.total_dofs; ++d) {
                    if (!map.free[d]) u[d] = 0.0;
                }
                snapshots.col(i) = u;
            }
        }
        if (!solved) {
            if (!cfg.exact_operator_snapshots) fallbacks.fetch_add(1);
            snapshots.col(i) = fom::solve_fom(
                fom::assemble(cfg.problem, cfg.spec, mu, space,
                              cfg.quadrature_depth, cfg.bc));
        }
    });
    store.snapshot_fallbacks = fallbacks.load();

    SparseMatrix weight;
    if (store.weight_id == "h1_mid") weight = h1_weight_matrix(cfg);

    const auto members = store.clusters.members();
    for (Index k = 0; k < cfg.n_clusters_rb; ++k) {
        const std::vector<Index>& mem = members[k];
        Matrix s_u(space.total_dofs(), static_cast<Index>(mem.size()));
        for (std::size_t j = 0; j < mem.size(); ++j) {
            s_u.col(static_cast<Index>(j)) = snapshots.col(mem[j]);
        }
        pod::PodOptions opts;
        opts.eps = cfg.eps_pod;
        opts.weight_id = store.weight_id;
        if (store.weight_id == "h1_mid") opts.weight = &weight;

        RbCluster cluster;
        cluster.centroid = store.clusters.centroids[k];
        cluster.basis = pod::pod(pod::make_snapshots(s_u, mem), opts);
        cluster.per_deim_cluster.resize(deim_art.cluster_count());
        store.local.push_back(std::move(cluster));
    }

    // Project every DEIM cluster's affine terms onto every RB basis: the
    // scatter is done once per term, the projections reuse it.
    for (Index l = 0; l < deim_art.cluster_count(); ++l) {
        const DeimCluster& dc = deim_art.local[l];
        const Index qa = dc.matrix_model.term_count();
        const Index qf = dc.rhs_model.term_count();
        for (Index k = 0; k < store.cluster_count(); ++k) {
            store.local[k].per_deim_cluster[l].matrix_terms.resize(qa);
        }
        for (Index q = 0; q < qa; ++q) {
            const SparseMatrix a_q = deim_art.pattern.scatter(
                dc.matrix_model.basis.col(q));
            for (Index k = 0; k < store.cluster_count(); ++k) {
                const Matrix& v = store.local[k].basis.modes;
                store.local[k].per_deim_cluster[l].matrix_terms[q] =
                    v.transpose() * (a_q * v);
            }
        }
        for (Index k = 0; k < store.cluster_count(); ++k) {
            const Matrix& v = store.local[k].basis.modes;
            store.local[k].per_deim_cluster[l].rhs_terms =
                v.transpose() * dc.rhs_model.basis.leftCols(qf);
        }
    }
    return store;
}

RomSolution online_solve(const LocalRomStore& store,
                         const LocalDeimArtifact& deim_art,
                         const geometry::ParameterVector& mu) {
    if (!deim_art.domain.contains(mu)) {
        throw config_error("online_solve: mu outside the parameter domain");
    }
    RomSolution sol;
    const auto t_total = Clock::now();

    std::vector<geometry::ParameterVector> cd, cr;
    for (const DeimCluster& c : deim_art.local) cd.push_back(c.centroid);
    for (const RbCluster& c : store.local) cr.push_back(c.centroid);
    sol.deim_cluster = clustering::nearest_centroid(cd, mu);
    sol.rb_cluster = clustering::nearest_centroid(cr, mu);

    const DeimCluster& dc = deim_art.local[sol.deim_cluster];
    const RbCluster& rc = store.local[sol.rb_cluster];
    const ProjectedOperators& ops =
        rc.per_deim_cluster[sol.deim_cluster];

    const auto t_theta = Clock::now();
    const Vector theta_a = rbf::rbf_eval(dc.theta_a, mu);
    const Vector theta_f = rbf::rbf_eval(dc.theta_f, mu);
    sol.theta_ms = ms_since(t_theta);

    const auto t_asm = Clock::now();
    const Index nred = rc.basis.retained;
    Matrix a_n = Matrix::Zero(nred, nred);
    for (Index q = 0; q < theta_a.size(); ++q) {
        a_n.noalias() += theta_a[q] * ops.matrix_terms[q];
    }
    // Galerkin term of the unit diagonals at this mu's non-free DOFs: the
    // affine part approximates the zero-extended operator, and the
    // stabilization that makes the extended system solvable is known
    // exactly from the geometry (no assembly involved).
    const extension::ActiveDofMap map =
        fom::build_active_map(deim_art.spec, mu, deim_art.space(),
                              deim_art.quad_depth, deim_art.bc);
    Index n_nonfree = 0;
    for (Index d = 0; d < map.total_dofs; ++d) {
        if (!map.free[d]) ++n_nonfree;
    }
    Matrix v_nonfree(n_nonfree, nred);
    Index row = 0;
    for (Index d = 0; d < map.total_dofs; ++d) {
        if (!map.free[d]) v_nonfree.row(row++) = rc.basis.modes.row(d);
    }
    a_n.noalias() += v_nonfree.transpose() * v_nonfree;
    const Vector f_n = ops.rhs_terms * theta_f;
    sol.assemble_ms = ms_since(t_asm);

    const auto t_solve = Clock::now();
    const Eigen::PartialPivLU<Matrix> lu(a_n);
    sol.rcond = lu.rcond();
    sol.condition_warning = !(sol.rcond > 1e-12);
    sol.reduced = lu.solve(f_n);
    sol.solve_ms = ms_since(t_solve);

    sol.extended = rc.basis.modes * sol.reduced;
    sol.total_ms = ms_since(t_total);
    return sol;
}

EvaluationReport evaluate(const LocalRomStore& store,
                          const LocalDeimArtifact& deim_art,
                          const sampling::SampleSet& test,
                          const RomConfig& cfg) {
    EvaluationReport report;
    const Index n = test.size();
    report.rows.resize(n);
    const fom::FeSpace space = make_space(cfg);
    std::atomic<std::int64_t> out_of_pattern{0};

    parallel_for(n, [&](Index i) {
        EvaluationRow row;
        row.mu = test.points[i];

        const auto t_fom = Clock::now();
        const fom::FomSystem sys =
            fom::assemble(cfg.problem, cfg.spec, row.mu, space,
                          cfg.quadrature_depth, cfg.bc);
        const Vector u_fom = fom::solve_fom(sys);
        row.fom_ms = ms_since(t_fom);

        const RomSolution sol = online_solve(store, deim_art, row.mu);
        row.rom_ms = sol.total_ms;
        row.speedup = row.fom_ms / std::max(row.rom_ms, 1e-9);
        row.deim_cluster = sol.deim_cluster;
        row.rb_cluster = sol.rb_cluster;

        const fom::ErrorNorms norms =
            fom::error_norms(sol.extended, u_fom, sys);
        row.rel_l2 = norms.rel_l2;
        row.rel_h1 = norms.rel_h1;

        // DEIM operator errors in the max norm over the union pattern.
        std::int64_t misses = 0;
        const Vector exact_a =
            deim_art.pattern.vectorize(sys.zero_matrix, &misses);
        out_of_pattern.fetch_add(misses);
        const DeimCluster& dc = deim_art.local[sol.deim_cluster];
        const Vector theta_a = rbf::rbf_eval(dc.theta_a, row.mu);
        const Vector theta_f = rbf::rbf_eval(dc.theta_f, row.mu);
        row.op_err_a = deim::operator_error(
            exact_a, deim::reconstruct_flat(dc.matrix_model, theta_a));
        row.op_err_f = deim::operator_error(
            sys.rhs, deim::reconstruct_flat(dc.rhs_model, theta_f));

        report.rows[i] = std::move(row);
    });

    report.out_of_pattern_entries = out_of_pattern.load();

    std::vector<double> fom_ms, rom_ms, speedups;
    for (const EvaluationRow& row : report.rows) {
        report.mean_rel_l2 += row.rel_l2;
        report.max_rel_l2 = std::max(report.max_rel_l2, row.rel_l2);
        report.mean_rel_h1 += row.rel_h1;
        report.max_rel_h1 = std::max(report.max_rel_h1, row.rel_h1);
        report.mean_op_err_a += row.op_err_a;
        report.mean_op_err_f += row.op_err_f;
        fom_ms.push_back(row.fom_ms);
        rom_ms.push_back(row.rom_ms);
        speedups.push_back(row.speedup);
    }
    const double dn = static_cast<double>(n);
    report.mean_rel_l2 /= dn;
    report.mean_rel_h1 /= dn;
    report.mean_op_err_a /= dn;
    report.mean_op_err_f /= dn;

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };
    report.median_fom_ms = median(fom_ms);
    report.median_rom_ms = median(rom_ms);
    report.median_speedup = median(speedups);

    for (const DeimCluster& c : deim_art.local) {
        report.max_q_a = std::max(report.max_q_a,
                                  c.matrix_model.term_count());
        report.max_q_f = std::max(report.max_q_f, c.rhs_model.term_count());
    }
    for (const RbCluster& c : store.local) {
        report.max_n = std::max(report.max_n, c.basis.retained);
    }
    return report;
}

}  // namespace lrom::rom
