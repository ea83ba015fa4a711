#include "lrom/io.hpp"
#include "lrom/rng.hpp"
#include "lrom/rom.hpp"

#include <Eigen/SVD>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>

namespace lrom::rom {

namespace fs = std::filesystem;
using config::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, v);
    return buf;
}

std::string cluster_dir(const char* prefix, Index k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_c%03lld", prefix,
                  static_cast<long long>(k));
    return buf;
}

void write_points(const fs::path& path,
                  const std::vector<geometry::ParameterVector>& pts) {
    if (pts.empty()) {
        io::write_f64(path, nullptr, 0);
        return;
    }
    const Index m = pts.front().size();
    std::vector<double> flat;
    flat.reserve(pts.size() * m);
    for (const auto& p : pts) {
        for (Index d = 0; d < m; ++d) flat.push_back(p[d]);
    }
    io::write_f64(path, flat.data(), flat.size());
}

std::vector<geometry::ParameterVector> read_points(const fs::path& path,
                                                   Index n, Index m) {
    const std::vector<double> flat = io::read_f64(path);
    if (static_cast<Index>(flat.size()) != n * m) {
        throw io_error("point array shape mismatch in " + path.string());
    }
    std::vector<geometry::ParameterVector> pts(n);
    for (Index i = 0; i < n; ++i) {
        pts[i] = Eigen::Map<const Vector>(flat.data() + i * m, m);
    }
    return pts;
}

void write_i64_of(const fs::path& path, const std::vector<Index>& v) {
    std::vector<std::int64_t> tmp(v.begin(), v.end());
    io::write_i64(path, tmp);
}

std::vector<Index> read_index_vec(const fs::path& path) {
    const auto tmp = io::read_i64(path);
    return std::vector<Index>(tmp.begin(), tmp.end());
}

json rbf_meta(const rbf::RbfInterpolant& interp) {
    return json{{"components", interp.component_count()},
                {"kernel_scale", interp.kernel_scale},
                {"condition", interp.fit_condition},
                {"condition_warning", interp.condition_warning}};
}

}  // namespace

void save_model(const fs::path& dir, const RomConfig& cfg,
                const LocalDeimArtifact& deim_art,
                const LocalRomStore& store) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create model directory " + dir.string());

    json manifest;
    manifest["format"] = "lrom-model";
    manifest["version"] = 1;
    manifest["generator"] = SplitMix64::kGeneratorId;
    manifest["config"] = cfg.echo;
    manifest["warnings"] = cfg.warnings;
    manifest["pattern_checksum"] = hex64(deim_art.pattern.checksum());
    manifest["pattern_size"] = deim_art.pattern.size();
    manifest["total_dofs"] = deim_art.pattern.order();
    manifest["param_dim"] = deim_art.domain.dim();
    manifest["max_area_rel_error"] = deim_art.max_area_rel_error;

    std::vector<std::int64_t> rows, cols;
    rows.reserve(deim_art.pattern.size());
    cols.reserve(deim_art.pattern.size());
    for (const auto& [r, c] : deim_art.pattern.entries()) {
        rows.push_back(r);
        cols.push_back(c);
    }
    io::write_i64(dir / "pattern_rows.i64", rows);
    io::write_i64(dir / "pattern_cols.i64", cols);

    // DEIM side
    json deim_meta;
    deim_meta["n_train"] = deim_art.train.size();
    deim_meta["n_clusters"] = deim_art.cluster_count();
    deim_meta["kmeans_variance"] = deim_art.clusters.variance;
    deim_meta["kmeans_seed"] = deim_art.clusters.seed;
    write_points(dir / "deim_points.f64", deim_art.train.points);
    write_points(dir / "deim_centroids.f64", deim_art.clusters.centroids);
    write_i64_of(dir / "deim_assign.i64", deim_art.clusters.assignment);

    json deim_clusters = json::array();
    for (Index k = 0; k < deim_art.cluster_count(); ++k) {
        const DeimCluster& c = deim_art.local[k];
        const fs::path cdir = dir / cluster_dir("deim", k);
        fs::create_directories(cdir);
        io::write_f64(cdir / "a_basis.f64", c.matrix_model.basis);
        io::write_f64(cdir / "a_sv.f64", c.matrix_model.singular_values);
        write_i64_of(cdir / "a_magic.i64", c.matrix_model.magic);
        io::write_f64(cdir / "f_basis.f64", c.rhs_model.basis);
        io::write_f64(cdir / "f_sv.f64", c.rhs_model.singular_values);
        write_i64_of(cdir / "f_magic.i64", c.rhs_model.magic);
        io::write_f64(cdir / "rbf_a_w.f64", c.theta_a.weights);
        io::write_f64(cdir / "rbf_a_p.f64", c.theta_a.poly_coeffs);
        io::write_f64(cdir / "rbf_f_w.f64", c.theta_f.weights);
        io::write_f64(cdir / "rbf_f_p.f64", c.theta_f.poly_coeffs);

        json meta;
        meta["q_a"] = c.matrix_model.term_count();
        meta["q_f"] = c.rhs_model.term_count();
        meta["n_members"] = static_cast<Index>(c.members.size());
        meta["sv_count_a"] = c.matrix_model.singular_values.size();
        meta["sv_count_f"] = c.rhs_model.singular_values.size();
        meta["cond_interp_a"] = c.matrix_model.interp_condition;
        meta["cond_interp_f"] = c.rhs_model.interp_condition;
        meta["rbf_a"] = rbf_meta(c.theta_a);
        meta["rbf_f"] = rbf_meta(c.theta_f);
        deim_clusters.push_back(meta);
    }
    deim_meta["clusters"] = deim_clusters;
    manifest["deim"] = deim_meta;

    // RB side
    json rb_meta;
    rb_meta["n_train"] = store.train.size();
    rb_meta["n_clusters"] = store.cluster_count();
    rb_meta["kmeans_variance"] = store.clusters.variance;
    rb_meta["weight_id"] = store.weight_id;
    rb_meta["snapshot_fallbacks"] = store.snapshot_fallbacks;
    write_points(dir / "rb_points.f64", store.train.points);
    write_points(dir / "rb_centroids.f64", store.clusters.centroids);
    write_i64_of(dir / "rb_assign.i64", store.clusters.assignment);

    json rb_clusters = json::array();
    for (Index k = 0; k < store.cluster_count(); ++k) {
        const RbCluster& c = store.local[k];
        const fs::path cdir = dir / cluster_dir("rb", k);
        fs::create_directories(cdir);
        io::write_f64(cdir / "v.f64", c.basis.modes);
        io::write_f64(cdir / "sv.f64", c.basis.singular_values);
        for (Index l = 0; l < deim_art.cluster_count(); ++l) {
            const ProjectedOperators& ops = c.per_deim_cluster[l];
            const Index nred = c.basis.retained;
            std::vector<double> blocks;
            blocks.reserve(ops.matrix_terms.size() * nred * nred);
            for (const Matrix& term : ops.matrix_terms) {
                blocks.insert(blocks.end(), term.data(),
                              term.data() + term.size());
            }
            char aname[32], fname[32];
            std::snprintf(aname, sizeof(aname), "d%03lld_a.f64",
                          static_cast<long long>(l));
            std::snprintf(fname, sizeof(fname), "d%03lld_f.f64",
                          static_cast<long long>(l));
            io::write_f64(cdir / aname, blocks.data(), blocks.size());
            io::write_f64(cdir / fname, ops.rhs_terms);
        }
        json meta;
        meta["n"] = c.basis.retained;
        meta["sv_count"] = c.basis.singular_values.size();
        rb_clusters.push_back(meta);
    }
    rb_meta["clusters"] = rb_clusters;
    manifest["rb"] = rb_meta;

    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedModel load_model(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) {
        throw io_error("no manifest.json in " + dir.string());
    }
    json manifest;
    try {
        manifest = json::parse(io::read_text(dir / "manifest.json"));
    } catch (const json::parse_error& e) {
        throw io_error("corrupt manifest in " + dir.string() + ": " +
                       e.what());
    }
    if (manifest.value("format", "") != "lrom-model") {
        throw io_error("not a model directory: " + dir.string());
    }

    LoadedModel model;
    model.manifest = manifest;
    model.cfg = config::parse_config(manifest.at("config"));

    const Index total = manifest.at("total_dofs").get<Index>();
    const Index m = manifest.at("param_dim").get<Index>();

    // pattern + checksum verification
    const auto rows = io::read_i64(dir / "pattern_rows.i64");
    const auto cols = io::read_i64(dir / "pattern_cols.i64");
    if (rows.size() != cols.size()) {
        throw io_error("pattern row/col arrays disagree");
    }
    std::vector<std::pair<Index, Index>> entries(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        entries[i] = {static_cast<Index>(rows[i]),
                      static_cast<Index>(cols[i])};
    }
    LocalDeimArtifact& art = model.deim;
    art.pattern = extension::SparsityPattern(total, std::move(entries));
    art.domain = model.cfg.spec.domain;
    art.spec = model.cfg.spec;
    art.nx = model.cfg.nx;
    art.ny = model.cfg.ny;
    art.quad_depth = model.cfg.quadrature_depth;
    art.space_kind = model.cfg.space_kind;
    art.bc = model.cfg.bc;
    art.max_area_rel_error = manifest.value("max_area_rel_error", 0.0);
    if (hex64(art.pattern.checksum()) !=
        manifest.at("pattern_checksum").get<std::string>()) {
        throw io_error("pattern checksum mismatch in " + dir.string() +
                       "; the model files are inconsistent");
    }

    const json& dm = manifest.at("deim");
    const Index n_train_d = dm.at("n_train").get<Index>();
    const Index n_clusters_d = dm.at("n_clusters").get<Index>();
    art.train.kind = sampling::SampleKind::LatinHypercube;
    art.train.seed = model.cfg.seed_deim;
    art.train.points = read_points(dir / "deim_points.f64", n_train_d, m);
    art.clusters.centroids =
        read_points(dir / "deim_centroids.f64", n_clusters_d, m);
    art.clusters.assignment = read_index_vec(dir / "deim_assign.i64");
    art.clusters.variance = dm.at("kmeans_variance").get<double>();
    art.clusters.seed = dm.at("kmeans_seed").get<std::uint64_t>();

    const auto members = art.clusters.members();
    for (Index k = 0; k < n_clusters_d; ++k) {
        const json& meta = dm.at("clusters").at(k);
        const fs::path cdir = dir / cluster_dir("deim", k);
        const Index qa = meta.at("q_a").get<Index>();
        const Index qf = meta.at("q_f").get<Index>();
        const Index nk = meta.at("n_members").get<Index>();

        DeimCluster c;
        c.centroid = art.clusters.centroids[k];
        c.members = members[k];
        if (static_cast<Index>(c.members.size()) != nk) {
            throw io_error("cluster membership mismatch in manifest");
        }

        auto load_deim = [&](const char* prefix, Index q, Index p,
                             deim::OperatorKind kind) {
            deim::DeimModel dmodel;
            dmodel.kind = kind;
            dmodel.basis =
                io::read_matrix(cdir / (std::string(prefix) + "_basis.f64"),
                                p, q);
            dmodel.singular_values = io::read_vector(
                cdir / (std::string(prefix) + "_sv.f64"),
                meta.at(std::string("sv_count_") + prefix).get<Index>());
            dmodel.magic =
                read_index_vec(cdir / (std::string(prefix) + "_magic.i64"));
            if (static_cast<Index>(dmodel.magic.size()) != q) {
                throw io_error("magic index count mismatch");
            }
            dmodel.interp.resize(q, q);
            for (Index i = 0; i < q; ++i) {
                dmodel.interp.row(i) = dmodel.basis.row(dmodel.magic[i]);
            }
            dmodel.interp_lu = Eigen::PartialPivLU<Matrix>(dmodel.interp);
            if (kind == deim::OperatorKind::Matrix) {
                dmodel.pattern = art.pattern;
            }
            return dmodel;
        };
        c.matrix_model =
            load_deim("a", qa, art.pattern.size(), deim::OperatorKind::Matrix);
        c.matrix_model.interp_condition = meta.at("cond_interp_a").get<double>();
        c.rhs_model = load_deim("f", qf, total, deim::OperatorKind::Vector);
        c.rhs_model.interp_condition = meta.at("cond_interp_f").get<double>();

        std::vector<geometry::ParameterVector> centers(c.members.size());
        for (std::size_t j = 0; j < c.members.size(); ++j) {
            centers[j] = art.train.points[c.members[j]];
        }
        auto load_rbf = [&](const char* w, const char* p, Index q,
                            const json& rmeta) {
            rbf::RbfInterpolant interp;
            interp.centers = centers;
            interp.weights = io::read_matrix(cdir / w, nk, q);
            interp.poly_coeffs = io::read_matrix(cdir / p, m + 1, q);
            interp.kernel_scale = rmeta.at("kernel_scale").get<double>();
            interp.fit_condition = rmeta.at("condition").get<double>();
            interp.condition_warning = rmeta.at("condition_warning").get<bool>();
            return interp;
        };
        c.theta_a = load_rbf("rbf_a_w.f64", "rbf_a_p.f64", qa, meta.at("rbf_a"));
        c.theta_f = load_rbf("rbf_f_w.f64", "rbf_f_p.f64", qf, meta.at("rbf_f"));
        art.local.push_back(std::move(c));
    }

    const json& rm = manifest.at("rb");
    const Index n_train_rb = rm.at("n_train").get<Index>();
    const Index n_clusters_rb = rm.at("n_clusters").get<Index>();
    LocalRomStore& store = model.store;
    store.weight_id = rm.at("weight_id").get<std::string>();
    store.snapshot_fallbacks = rm.value("snapshot_fallbacks", Index{0});
    store.train.kind = sampling::SampleKind::LatinHypercube;
    store.train.seed = model.cfg.seed_rb;
    store.train.points = read_points(dir / "rb_points.f64", n_train_rb, m);
    store.clusters.centroids =
        read_points(dir / "rb_centroids.f64", n_clusters_rb, m);
    store.clusters.assignment = read_index_vec(dir / "rb_assign.i64");
    store.clusters.variance = rm.at("kmeans_variance").get<double>();

    for (Index k = 0; k < n_clusters_rb; ++k) {
        const json& meta = rm.at("clusters").at(k);
        const fs::path cdir = dir / cluster_dir("rb", k);
        const Index nred = meta.at("n").get<Index>();

        RbCluster c;
        c.centroid = store.clusters.centroids[k];
        c.basis.modes = io::read_matrix(cdir / "v.f64", total, nred);
        c.basis.singular_values = io::read_vector(
            cdir / "sv.f64", meta.at("sv_count").get<Index>());
        c.basis.retained = nred;
        c.basis.energy_tolerance = model.cfg.eps_pod;
        c.basis.weight_id = store.weight_id;

        c.per_deim_cluster.resize(n_clusters_d);
        for (Index l = 0; l < n_clusters_d; ++l) {
            const Index qa =
                dm.at("clusters").at(l).at("q_a").get<Index>();
            const Index qf =
                dm.at("clusters").at(l).at("q_f").get<Index>();
            char aname[32], fname[32];
            std::snprintf(aname, sizeof(aname), "d%03lld_a.f64",
                          static_cast<long long>(l));
            std::snprintf(fname, sizeof(fname), "d%03lld_f.f64",
                          static_cast<long long>(l));
            const std::vector<double> blocks = io::read_f64(cdir / aname);
            if (static_cast<Index>(blocks.size()) != qa * nred * nred) {
                throw io_error("projected block shape mismatch");
            }
            ProjectedOperators ops;
            ops.matrix_terms.resize(qa);
            for (Index q = 0; q < qa; ++q) {
                ops.matrix_terms[q] = Eigen::Map<const Matrix>(
                    blocks.data() + q * nred * nred, nred, nred);
            }
            ops.rhs_terms = io::read_matrix(cdir / fname, nred, qf);
            c.per_deim_cluster[l] = std::move(ops);
        }
        store.local.push_back(std::move(c));
    }
    return model;
}

}  // namespace lrom::rom
