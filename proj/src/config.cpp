#include "lrom/config.hpp"

#include "lrom/expr.hpp"
#include "lrom/io.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace lrom::config {

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        throw config_error("config: '" + where + "' must be an object");
    }
    for (const auto& item : obj.items()) {
        if (allowed.find(item.key()) == allowed.end()) {
            throw config_error("config: unknown key '" + where + "." +
                               item.key() + "'");
        }
    }
}

const json& require(const json& obj, const std::string& where,
                    const std::string& key) {
    if (!obj.contains(key)) {
        throw config_error("config: missing key '" + where + "." + key + "'");
    }
    return obj.at(key);
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw config_error("config: '" + where + "' must be a number");
    }
    return v.get<double>();
}

Index as_index(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw config_error("config: '" + where + "' must be an integer");
    }
    return v.get<Index>();
}

std::uint64_t as_seed(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw config_error("config: '" + where + "' must be an integer seed");
    }
    return v.get<std::uint64_t>();
}

geometry::AffineExpr parse_mu_expr(const json& v, Index m,
                                   const std::string& where) {
    if (v.is_number()) {
        geometry::AffineExpr e;
        e.constant = v.get<double>();
        e.coeffs = Vector::Zero(m);
        return e;
    }
    if (v.is_string()) {
        return expr::parse_affine(v.get<std::string>(), m);
    }
    throw config_error("config: '" + where + "' must be a number or "
                       "an expression string");
}

std::function<double(double, double)> parse_source(const json& v,
                                                   const std::string& where) {
    if (v.is_number()) {
        const double c = v.get<double>();
        return [c](double, double) { return c; };
    }
    if (v.is_string()) {
        return expr::parse_xy_poly(v.get<std::string>());
    }
    throw config_error("config: '" + where + "' must be a number or "
                       "a polynomial string");
}

fom::Edge parse_edge(const std::string& name) {
    if (name == "left") return fom::Edge::Left;
    if (name == "right") return fom::Edge::Right;
    if (name == "bottom") return fom::Edge::Bottom;
    if (name == "top") return fom::Edge::Top;
    throw config_error("config: unknown edge '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "", {"geometry", "problem", "mesh", "sampling",
                         "tolerances", "clustering", "output"});
    ExperimentConfig cfg;
    cfg.echo = doc;

    // geometry
    const json& geo = require(doc, "", "geometry");
    check_keys(geo, "geometry",
               {"box", "parameters", "holes", "dirichlet_edges"});
    const json& box = require(geo, "geometry", "box");
    check_keys(box, "geometry.box", {"xmin", "ymin", "xmax", "ymax"});
    geometry::Rect rect;
    rect.xmin = as_number(require(box, "geometry.box", "xmin"), "xmin");
    rect.ymin = as_number(require(box, "geometry.box", "ymin"), "ymin");
    rect.xmax = as_number(require(box, "geometry.box", "xmax"), "xmax");
    rect.ymax = as_number(require(box, "geometry.box", "ymax"), "ymax");

    const json& params = require(geo, "geometry", "parameters");
    check_keys(params, "geometry.parameters", {"lower", "upper"});
    const json& lo = require(params, "geometry.parameters", "lower");
    const json& hi = require(params, "geometry.parameters", "upper");
    if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size() ||
        lo.empty()) {
        throw config_error(
            "config: geometry.parameters lower/upper must be equal-length "
            "nonempty arrays");
    }
    const Index m = static_cast<Index>(lo.size());
    Vector lower(m), upper(m);
    for (Index i = 0; i < m; ++i) {
        lower[i] = as_number(lo.at(i), "parameters.lower");
        upper[i] = as_number(hi.at(i), "parameters.upper");
    }

    std::vector<geometry::HoleRule> rules;
    if (geo.contains("holes")) {
        const json& holes = geo.at("holes");
        if (!holes.is_array()) {
            throw config_error("config: geometry.holes must be an array");
        }
        for (std::size_t h = 0; h < holes.size(); ++h) {
            const std::string where = "geometry.holes[" + std::to_string(h) +
                                      "]";
            check_keys(holes.at(h), where, {"center", "radius"});
            const json& center = require(holes.at(h), where, "center");
            if (!center.is_array() || center.size() != 2) {
                throw config_error("config: " + where +
                                   ".center must be a 2-element array");
            }
            geometry::HoleRule rule;
            rule.center_x = parse_mu_expr(center.at(0), m, where + ".center");
            rule.center_y = parse_mu_expr(center.at(1), m, where + ".center");
            rule.radius =
                parse_mu_expr(require(holes.at(h), where, "radius"), m,
                              where + ".radius");
            rules.push_back(std::move(rule));
        }
    }
    cfg.spec = geometry::make_geometry(rect, geometry::make_domain(lower, upper),
                                       std::move(rules));

    if (geo.contains("dirichlet_edges")) {
        const json& edges = geo.at("dirichlet_edges");
        if (!edges.is_array() || edges.empty()) {
            throw config_error(
                "config: geometry.dirichlet_edges must be a nonempty array");
        }
        cfg.bc.dirichlet_edges.clear();
        for (const auto& e : edges) {
            cfg.bc.dirichlet_edges.push_back(parse_edge(e.get<std::string>()));
        }
    }

    // problem
    const json& prob = require(doc, "", "problem");
    check_keys(prob, "problem",
               {"kind", "source", "body_force", "young", "poisson"});
    const std::string kind = require(prob, "problem", "kind").get<std::string>();
    if (kind == "poisson") {
        cfg.problem = fom::poisson_problem(
            parse_source(require(prob, "problem", "source"), "problem.source"));
        cfg.space_kind = fom::SpaceKind::Scalar;
    } else if (kind == "elasticity") {
        const json& bf = require(prob, "problem", "body_force");
        if (!bf.is_array() || bf.size() != 2) {
            throw config_error(
                "config: problem.body_force must be a 2-element array");
        }
        auto fx = parse_source(bf.at(0), "problem.body_force[0]");
        auto fy = parse_source(bf.at(1), "problem.body_force[1]");
        const fom::MaterialParams mat = fom::make_material(
            as_number(require(prob, "problem", "young"), "problem.young"),
            as_number(require(prob, "problem", "poisson"), "problem.poisson"));
        cfg.problem = fom::elasticity_problem(
            [fx = std::move(fx), fy = std::move(fy)](double x, double y) {
                return Eigen::Vector2d(fx(x, y), fy(x, y));
            },
            mat);
        cfg.space_kind = fom::SpaceKind::Vector2;
    } else {
        throw config_error("config: problem.kind must be 'poisson' or "
                           "'elasticity'");
    }

    // mesh
    const json& mesh = require(doc, "", "mesh");
    check_keys(mesh, "mesh", {"nx", "ny", "quadrature_depth"});
    cfg.nx = as_index(require(mesh, "mesh", "nx"), "mesh.nx");
    cfg.ny = as_index(require(mesh, "mesh", "ny"), "mesh.ny");
    if (mesh.contains("quadrature_depth")) {
        cfg.quadrature_depth =
            as_index(mesh.at("quadrature_depth"), "mesh.quadrature_depth");
    }
    if (cfg.nx < 2 || cfg.ny < 2 || cfg.quadrature_depth < 1) {
        throw config_error("config: mesh sizes must be >= 2 and "
                           "quadrature_depth >= 1");
    }

    // sampling
    const json& sam = require(doc, "", "sampling");
    check_keys(sam, "sampling",
               {"n_train_rb", "n_train_deim", "n_test", "seed_rb", "seed_deim",
                "seed_test"});
    cfg.n_train_rb = as_index(require(sam, "sampling", "n_train_rb"),
                              "sampling.n_train_rb");
    cfg.n_train_deim = as_index(require(sam, "sampling", "n_train_deim"),
                                "sampling.n_train_deim");
    if (sam.contains("n_test")) {
        cfg.n_test = as_index(sam.at("n_test"), "sampling.n_test");
    }
    if (sam.contains("seed_rb")) cfg.seed_rb = as_seed(sam.at("seed_rb"), "");
    if (sam.contains("seed_deim")) {
        cfg.seed_deim = as_seed(sam.at("seed_deim"), "");
    }
    if (sam.contains("seed_test")) {
        cfg.seed_test = as_seed(sam.at("seed_test"), "");
    }
    if (cfg.n_train_rb < 1 || cfg.n_train_deim < 1) {
        throw config_error("config: training set sizes must be positive");
    }

    // tolerances
    const json& tol = require(doc, "", "tolerances");
    check_keys(tol, "tolerances", {"eps_pod", "eps_pod_deim"});
    cfg.eps_pod = as_number(require(tol, "tolerances", "eps_pod"),
                            "tolerances.eps_pod");
    cfg.eps_pod_deim = as_number(require(tol, "tolerances", "eps_pod_deim"),
                                 "tolerances.eps_pod_deim");
    if (cfg.eps_pod < 0.0 || cfg.eps_pod >= 1.0 || cfg.eps_pod_deim < 0.0 ||
        cfg.eps_pod_deim >= 1.0) {
        throw config_error("config: tolerances must lie in [0, 1)");
    }
    if (cfg.eps_pod_deim > cfg.eps_pod) {
        cfg.warnings.push_back(
            "warning: eps_pod_deim > eps_pod; hyper-reduction usually needs "
            "the stricter tolerance");
    }

    // clustering
    const json& clu = require(doc, "", "clustering");
    check_keys(clu, "clustering",
               {"n_clusters_rb", "n_clusters_deim", "seed", "elbow_ks",
                "elbow_set", "pod_weight", "exact_operator_snapshots"});
    cfg.n_clusters_rb = as_index(require(clu, "clustering", "n_clusters_rb"),
                                 "clustering.n_clusters_rb");
    cfg.n_clusters_deim =
        as_index(require(clu, "clustering", "n_clusters_deim"),
                 "clustering.n_clusters_deim");
    if (cfg.n_clusters_rb < 1 || cfg.n_clusters_deim < 1) {
        throw config_error("config: cluster counts must be >= 1");
    }
    if (clu.contains("seed")) cfg.seed_cluster = as_seed(clu.at("seed"), "");
    if (clu.contains("elbow_ks")) {
        for (const auto& k : clu.at("elbow_ks")) {
            cfg.elbow_ks.push_back(as_index(k, "clustering.elbow_ks"));
        }
    }
    if (clu.contains("elbow_set")) {
        cfg.elbow_set = clu.at("elbow_set").get<std::string>();
        if (cfg.elbow_set != "deim" && cfg.elbow_set != "rb") {
            throw config_error("config: elbow_set must be 'deim' or 'rb'");
        }
    }
    if (clu.contains("pod_weight")) {
        cfg.pod_weight = clu.at("pod_weight").get<std::string>();
        if (cfg.pod_weight != "identity" && cfg.pod_weight != "h1_mid") {
            throw config_error(
                "config: pod_weight must be 'identity' or 'h1_mid'");
        }
    }
    if (clu.contains("exact_operator_snapshots")) {
        cfg.exact_operator_snapshots =
            clu.at("exact_operator_snapshots").get<bool>();
    }

    if (doc.contains("output")) {
        check_keys(doc.at("output"), "output", {"directory"});
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw config_error("config: cannot parse " + path.string() + ": " +
                           e.what());
    }
    return parse_config(doc);
}

}  // namespace lrom::config
