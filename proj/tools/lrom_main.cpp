#include "lrom/io.hpp"
#include "lrom/rom.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lrom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct GlobalArgs {
    std::string config_path;
    std::string model_dir;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    Index threads = 0;  // 0 -> env or 1
};

void apply_threads(const GlobalArgs& args) {
    Index n = args.threads;
    if (n <= 0) {
        if (const char* env = std::getenv("LROM_THREADS")) {
            n = std::strtoll(env, nullptr, 10);
        }
    }
    rom::set_threads(n > 0 ? n : 1);
}

config::ExperimentConfig load_config_with_overrides(const GlobalArgs& args) {
    if (args.config_path.empty()) {
        throw config_error("--config is required for this subcommand");
    }
    config::ExperimentConfig cfg = config::load_config(args.config_path);
    if (args.seed_override) {
        const std::uint64_t s = *args.seed_override;
        cfg.seed_rb = s;
        cfg.seed_deim = s + 1;
        cfg.seed_test = s + 2;
        cfg.seed_cluster = s + 3;
        // The manifest echoes the config; keep it consistent with the
        // effective seeds.
        cfg.echo["sampling"]["seed_rb"] = cfg.seed_rb;
        cfg.echo["sampling"]["seed_deim"] = cfg.seed_deim;
        cfg.echo["sampling"]["seed_test"] = cfg.seed_test;
        cfg.echo["clustering"]["seed"] = cfg.seed_cluster;
    }
    for (const std::string& w : cfg.warnings) std::cerr << w << "\n";
    return cfg;
}

geometry::ParameterVector parse_mu_arg(const std::string& text) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string part = text.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        const double v = std::strtod(part.c_str(), &end);
        if (end == part.c_str()) {
            throw config_error("--mu: cannot parse component '" + part + "'");
        }
        vals.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return Eigen::Map<const Vector>(vals.data(),
                                    static_cast<Index>(vals.size()));
}

fs::path out_dir_or(const GlobalArgs& args, const char* fallback) {
    return args.out_dir.empty() ? fs::path(fallback) : fs::path(args.out_dir);
}

void write_offline_report(const fs::path& dir,
                          const rom::LocalDeimArtifact& deim_art,
                          const rom::LocalRomStore& store) {
    fs::create_directories(dir);
    io::CsvTable sizes;
    sizes.header = {"side", "cluster", "size"};
    const auto dmem = deim_art.clusters.members();
    for (Index k = 0; k < deim_art.cluster_count(); ++k) {
        sizes.rows.push_back({0.0, static_cast<double>(k),
                              static_cast<double>(dmem[k].size())});
    }
    const auto rmem = store.clusters.members();
    for (Index k = 0; k < store.cluster_count(); ++k) {
        sizes.rows.push_back({1.0, static_cast<double>(k),
                              static_cast<double>(rmem[k].size())});
    }
    io::write_csv(dir / "cluster_sizes.csv", sizes);

    io::CsvTable deim_table;
    deim_table.header = {"cluster", "q_a", "q_f", "cond_interp_a",
                         "cond_interp_f", "cond_rbf_a", "cond_rbf_f"};
    for (Index k = 0; k < deim_art.cluster_count(); ++k) {
        const rom::DeimCluster& c = deim_art.local[k];
        deim_table.rows.push_back(
            {static_cast<double>(k),
             static_cast<double>(c.matrix_model.term_count()),
             static_cast<double>(c.rhs_model.term_count()),
             c.matrix_model.interp_condition, c.rhs_model.interp_condition,
             c.theta_a.fit_condition, c.theta_f.fit_condition});
    }
    io::write_csv(dir / "deim_table.csv", deim_table);

    io::CsvTable rb_table;
    rb_table.header = {"cluster", "n"};
    for (Index k = 0; k < store.cluster_count(); ++k) {
        rb_table.rows.push_back(
            {static_cast<double>(k),
             static_cast<double>(store.local[k].basis.retained)});
    }
    io::write_csv(dir / "rb_table.csv", rb_table);

    auto write_decay = [&](const fs::path& path, const Vector& sv) {
        io::CsvTable t;
        t.header = {"index", "sigma"};
        for (Index i = 0; i < sv.size(); ++i) {
            t.rows.push_back({static_cast<double>(i), sv[i]});
        }
        io::write_csv(path, t);
    };
    char name[48];
    for (Index k = 0; k < deim_art.cluster_count(); ++k) {
        std::snprintf(name, sizeof(name), "sv_deim_a_c%03lld.csv",
                      static_cast<long long>(k));
        write_decay(dir / name, deim_art.local[k].matrix_model.singular_values);
        std::snprintf(name, sizeof(name), "sv_deim_f_c%03lld.csv",
                      static_cast<long long>(k));
        write_decay(dir / name, deim_art.local[k].rhs_model.singular_values);
    }
    for (Index k = 0; k < store.cluster_count(); ++k) {
        std::snprintf(name, sizeof(name), "sv_rb_c%03lld.csv",
                      static_cast<long long>(k));
        write_decay(dir / name, store.local[k].basis.singular_values);
    }
}

int cmd_offline(const GlobalArgs& args) {
    const config::ExperimentConfig cfg = load_config_with_overrides(args);
    const fs::path out = out_dir_or(args, "model");
    const rom::LocalDeimArtifact deim_art = rom::offline_deim(cfg);
    const rom::LocalRomStore store = rom::offline_rb(cfg, deim_art);
    rom::save_model(out, cfg, deim_art, store);
    write_offline_report(out / "report", deim_art, store);
    std::cout << "model written to " << out.string() << "\n";
    return kExitOk;
}

int cmd_online(const GlobalArgs& args,
               const std::vector<std::string>& mu_args, Index sample_n,
               std::uint64_t sample_seed, bool sample_seed_set) {
    if (args.model_dir.empty()) {
        throw config_error("--model is required for 'online'");
    }
    const rom::LoadedModel model = rom::load_model(args.model_dir);
    const Index m = model.cfg.spec.domain.dim();

    std::vector<geometry::ParameterVector> queries;
    for (const std::string& text : mu_args) {
        geometry::ParameterVector mu = parse_mu_arg(text);
        if (mu.size() != m) {
            throw config_error("--mu needs " + std::to_string(m) +
                               " comma-separated components");
        }
        queries.push_back(std::move(mu));
    }
    if (sample_n > 0) {
        const sampling::SampleSet set = sampling::uniform_random(
            sample_n, model.cfg.spec.domain,
            sample_seed_set ? sample_seed : model.cfg.seed_test);
        queries.insert(queries.end(), set.points.begin(), set.points.end());
    }
    if (queries.empty()) {
        throw config_error("'online' needs --mu values or --sample-n");
    }

    const fs::path out = out_dir_or(args, "online_out");
    fs::create_directories(out);

    io::CsvTable timings;
    timings.header = {"index"};
    for (Index d = 0; d < m; ++d) {
        timings.header.push_back("mu" + std::to_string(d));
    }
    for (const char* c : {"deim_cluster", "rb_cluster", "theta_ms",
                          "assemble_ms", "solve_ms", "total_ms", "rcond"}) {
        timings.header.push_back(c);
    }

    Matrix solutions(model.deim.pattern.order(),
                     static_cast<Index>(queries.size()));
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const rom::RomSolution sol =
            rom::online_solve(model.store, model.deim, queries[i]);
        std::vector<double> row = {static_cast<double>(i)};
        for (Index d = 0; d < m; ++d) row.push_back(queries[i][d]);
        row.insert(row.end(),
                   {static_cast<double>(sol.deim_cluster),
                    static_cast<double>(sol.rb_cluster), sol.theta_ms,
                    sol.assemble_ms, sol.solve_ms, sol.total_ms, sol.rcond});
        timings.rows.push_back(std::move(row));
        solutions.col(static_cast<Index>(i)) = sol.extended;
        if (sol.condition_warning) {
            std::cerr << "warning: reduced system poorly conditioned at query "
                      << i << " (rcond " << sol.rcond << ")\n";
        }
    }
    io::write_csv(out / "timings.csv", timings);
    io::write_f64(out / "solutions.f64", solutions);
    std::cout << timings.rows.size() << " queries written to " << out.string()
              << "\n";
    return kExitOk;
}

int cmd_evaluate(const GlobalArgs& args, Index test_n,
                 std::uint64_t test_seed, bool test_seed_set) {
    if (args.model_dir.empty()) {
        throw config_error("--model is required for 'evaluate'");
    }
    const rom::LoadedModel model = rom::load_model(args.model_dir);
    const config::ExperimentConfig& cfg = model.cfg;

    const Index n = test_n > 0 ? test_n : cfg.n_test;
    if (n <= 0) {
        throw config_error("evaluate: set --test-n or sampling.n_test");
    }
    const sampling::SampleSet test = sampling::uniform_random(
        n, cfg.spec.domain, test_seed_set ? test_seed : cfg.seed_test);

    const rom::EvaluationReport report =
        rom::evaluate(model.store, model.deim, test, cfg);

    const fs::path out = out_dir_or(args, "evaluate_out");
    fs::create_directories(out);
    const Index m = cfg.spec.domain.dim();

    io::CsvTable errors;
    errors.header = {"index"};
    for (Index d = 0; d < m; ++d) {
        errors.header.push_back("mu" + std::to_string(d));
    }
    for (const char* c :
         {"rel_l2", "rel_h1", "op_err_a", "op_err_f", "fom_ms", "rom_ms",
          "speedup", "deim_cluster", "rb_cluster"}) {
        errors.header.push_back(c);
    }
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const rom::EvaluationRow& r = report.rows[i];
        std::vector<double> row = {static_cast<double>(i)};
        for (Index d = 0; d < m; ++d) row.push_back(r.mu[d]);
        row.insert(row.end(),
                   {r.rel_l2, r.rel_h1, r.op_err_a, r.op_err_f, r.fom_ms,
                    r.rom_ms, r.speedup, static_cast<double>(r.deim_cluster),
                    static_cast<double>(r.rb_cluster)});
        errors.rows.push_back(std::move(row));
    }
    io::write_csv(out / "errors.csv", errors);

    io::CsvTable summary;
    summary.header = {"max_q_a",        "max_q_f",       "max_n",
                      "median_fom_ms",  "median_rom_ms", "median_speedup",
                      "mean_rel_l2",    "max_rel_l2",    "mean_rel_h1",
                      "max_rel_h1",     "mean_op_err_a", "mean_op_err_f",
                      "out_of_pattern"};
    summary.rows.push_back(
        {static_cast<double>(report.max_q_a),
         static_cast<double>(report.max_q_f),
         static_cast<double>(report.max_n), report.median_fom_ms,
         report.median_rom_ms, report.median_speedup, report.mean_rel_l2,
         report.max_rel_l2, report.mean_rel_h1, report.max_rel_h1,
         report.mean_op_err_a, report.mean_op_err_f,
         static_cast<double>(report.out_of_pattern_entries)});
    io::write_csv(out / "summary.csv", summary);

    if (report.out_of_pattern_entries > 0) {
        std::cerr << "warning: " << report.out_of_pattern_entries
                  << " operator entries fell outside the trained sparsity "
                     "pattern (consider a richer training set)\n";
    }
    std::cout << "mean rel_l2 " << io::format_full(report.mean_rel_l2)
              << ", median speedup " << io::format_full(report.median_speedup)
              << ", results in " << out.string() << "\n";
    return kExitOk;
}

int cmd_fom(const GlobalArgs& args, const std::vector<std::string>& mu_args) {
    const config::ExperimentConfig cfg = load_config_with_overrides(args);
    if (mu_args.size() != 1) {
        throw config_error("'fom' needs exactly one --mu");
    }
    geometry::ParameterVector mu = parse_mu_arg(mu_args.front());
    if (mu.size() != cfg.spec.domain.dim()) {
        throw config_error("--mu needs " +
                           std::to_string(cfg.spec.domain.dim()) +
                           " components");
    }
    const fom::FomSystem sys = rom::assemble_at(cfg, mu);
    const Vector u = fom::solve_fom(sys);
    const fom::FeSpace space = rom::make_space(cfg);
    const Index dpn = space.dofs_per_node();

    const fs::path out = out_dir_or(args, "fom_out");
    fs::create_directories(out);
    io::CsvTable field;
    field.header = {"node", "x", "y", "active"};
    if (dpn == 1) {
        field.header.push_back("u");
    } else {
        field.header.push_back("ux");
        field.header.push_back("uy");
    }
    for (Index node = 0; node < space.mesh.n_nodes(); ++node) {
        const Eigen::Vector2d x = space.mesh.node_coord(node);
        std::vector<double> row = {static_cast<double>(node), x.x(), x.y(),
                                   sys.map.active[space.dof(node, 0)] ? 1.0
                                                                      : 0.0};
        for (Index c = 0; c < dpn; ++c) row.push_back(u[space.dof(node, c)]);
        field.rows.push_back(std::move(row));
    }
    io::write_csv(out / "fom_field.csv", field);
    std::cout << "field written to " << (out / "fom_field.csv").string()
              << "\n";
    return kExitOk;
}

int cmd_elbow(const GlobalArgs& args) {
    const config::ExperimentConfig cfg = load_config_with_overrides(args);
    if (cfg.elbow_ks.empty()) {
        throw config_error("elbow: clustering.elbow_ks is empty");
    }
    const bool use_deim = cfg.elbow_set == "deim";
    const sampling::SampleSet points = sampling::latin_hypercube(
        use_deim ? cfg.n_train_deim : cfg.n_train_rb, cfg.spec.domain,
        use_deim ? cfg.seed_deim : cfg.seed_rb);
    const auto table =
        clustering::elbow_scan(points, cfg.elbow_ks, cfg.seed_cluster);

    const fs::path out = out_dir_or(args, "elbow_out");
    fs::create_directories(out);
    io::CsvTable csv;
    csv.header = {"k", "variance"};
    for (const auto& row : table) {
        csv.rows.push_back({static_cast<double>(row.k), row.variance});
    }
    io::write_csv(out / "elbow.csv", csv);
    std::cout << "elbow table written to " << (out / "elbow.csv").string()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized reduced-basis models for PDEs on parameterized "
                 "unfitted domains"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "experiment config JSON");
    app.add_option("--model", args.model_dir, "trained model directory");
    app.add_option("--out", args.out_dir, "output directory");
    std::int64_t seed_override = -1;
    app.add_option("--seed-override", seed_override,
                   "override all seeds (derived per role)");
    app.add_option("--threads", args.threads,
                   "worker threads (fallback: LROM_THREADS)");

    auto* offline = app.add_subcommand("offline", "train a model");
    auto* online = app.add_subcommand("online", "query a trained model");
    auto* evaluate =
        app.add_subcommand("evaluate", "error/speedup study against the FOM");
    auto* fom_cmd = app.add_subcommand("fom", "single full-order solve export");
    auto* elbow = app.add_subcommand("elbow", "k-means variance table");

    std::vector<std::string> mu_args;
    online->add_option("--mu", mu_args, "query parameter (comma-separated)");
    fom_cmd->add_option("--mu", mu_args, "parameter (comma-separated)");
    Index sample_n = 0;
    std::uint64_t sample_seed = 0;
    auto* seed_opt = online->add_option("--sample-seed", sample_seed,
                                        "seed for --sample-n");
    online->add_option("--sample-n", sample_n,
                       "number of random queries from the domain");
    Index test_n = 0;
    std::uint64_t test_seed = 0;
    auto* test_seed_opt =
        evaluate->add_option("--test-seed", test_seed, "test sample seed");
    evaluate->add_option("--test-n", test_n, "test sample size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        apply_threads(args);
        if (seed_override >= 0) {
            args.seed_override = static_cast<std::uint64_t>(seed_override);
        }
        if (offline->parsed()) return cmd_offline(args);
        if (online->parsed()) {
            return cmd_online(args, mu_args, sample_n, sample_seed,
                              seed_opt->count() > 0);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(args, test_n, test_seed,
                                test_seed_opt->count() > 0);
        }
        if (fom_cmd->parsed()) return cmd_fom(args, mu_args);
        if (elbow->parsed()) return cmd_elbow(args);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
