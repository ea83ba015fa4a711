#include "lrom/clustering.hpp"
#include "lrom/config.hpp"
#include "lrom/io.hpp"
#include "lrom/rom.hpp"
#include "lrom/sampling.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace lrom;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "lrom_cli_tests";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LROM_CLI_PATH) + " " + args +
                            " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

config::json small_config() {
    return config::json{
        {"geometry",
         {{"box", {{"xmin", 0.0}, {"ymin", 0.0}, {"xmax", 2.0}, {"ymax", 2.0}}},
          {"parameters", {{"lower", {0.5}}, {"upper", {1.5}}}},
          {"holes", {{{"center", {"mu0", "mu0"}}, {"radius", 0.3}}}}}},
        {"problem", {{"kind", "poisson"}, {"source", 1.0}}},
        {"mesh", {{"nx", 12}, {"ny", 12}, {"quadrature_depth", 4}}},
        {"sampling",
         {{"n_train_rb", 10},
          {"n_train_deim", 20},
          {"n_test", 4},
          {"seed_rb", 11},
          {"seed_deim", 22},
          {"seed_test", 33}}},
        {"tolerances", {{"eps_pod", 1e-4}, {"eps_pod_deim", 1e-6}}},
        {"clustering",
         {{"n_clusters_rb", 2},
          {"n_clusters_deim", 2},
          {"seed", 44},
          {"elbow_ks", {1, 2, 4}},
          {"elbow_set", "deim"}}}};
}

fs::path write_config(const config::json& doc, const std::string& name) {
    fs::create_directories(kWork);
    const fs::path path = kWork / name;
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

bool directories_identical(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
    }
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const fs::path& rel : rel_a) {
        if (io::read_text(a / rel) != io::read_text(b / rel)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config schema validation") {
    CHECK_NOTHROW(config::parse_config(small_config()));

    config::json unknown = small_config();
    unknown["extra_section"] = 1;
    CHECK_THROWS_AS(config::parse_config(unknown), config_error);

    config::json bad_key = small_config();
    bad_key["mesh"]["n"] = 4;
    CHECK_THROWS_AS(config::parse_config(bad_key), config_error);

    config::json missing = small_config();
    missing.erase("tolerances");
    CHECK_THROWS_AS(config::parse_config(missing), config_error);

    config::json flipped = small_config();
    flipped["tolerances"]["eps_pod_deim"] = 1e-2;
    const config::ExperimentConfig cfg = config::parse_config(flipped);
    REQUIRE(cfg.warnings.size() == 1);

    config::json nonaffine = small_config();
    nonaffine["geometry"]["holes"][0]["radius"] = "mu0*mu0";
    CHECK_THROWS_AS(config::parse_config(nonaffine), config_error);

    config::json elastic = small_config();
    elastic["problem"] = {{"kind", "elasticity"},
                          {"body_force", {"2*x*y", "2*x*y"}},
                          {"young", 1.0},
                          {"poisson", 0.3}};
    const config::ExperimentConfig ecfg = config::parse_config(elastic);
    CHECK(ecfg.space_kind == fom::SpaceKind::Vector2);
    CHECK(ecfg.problem.body_force(2.0, 3.0).x() == doctest::Approx(12.0));
}

TEST_CASE("offline is deterministic across runs") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path m1 = kWork / "model_a";
    const fs::path m2 = kWork / "model_b";
    fs::remove_all(m1);
    fs::remove_all(m2);
    REQUIRE(run_cli("--config " + cfg.string() + " --out " + m1.string() +
                    " offline") == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --out " + m2.string() +
                    " offline") == 0);
    CHECK(directories_identical(m1, m2));
    fs::remove_all(m2);
}

TEST_CASE("online emits one row per query with oracle cluster choices") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path model = kWork / "model_a";
    if (!fs::exists(model / "manifest.json")) {
        REQUIRE(run_cli("--config " + cfg.string() + " --out " +
                        model.string() + " offline") == 0);
    }
    const fs::path out = kWork / "online_out";
    fs::remove_all(out);
    REQUIRE(run_cli("--model " + model.string() + " --out " + out.string() +
                    " online --mu 0.8 --sample-n 7 --sample-seed 5") == 0);

    const io::CsvTable timings = io::read_csv(out / "timings.csv");
    REQUIRE(timings.rows.size() == 8);

    const rom::LoadedModel loaded = rom::load_model(model);
    std::vector<geometry::ParameterVector> cd, cr;
    for (const auto& c : loaded.deim.local) cd.push_back(c.centroid);
    for (const auto& c : loaded.store.local) cr.push_back(c.centroid);
    const std::size_t mu_col = 1, l_col = 2, m_col = 3;
    CHECK(timings.header[l_col] == "deim_cluster");
    for (const auto& row : timings.rows) {
        const Vector mu = Vector::Constant(1, row[mu_col]);
        CHECK(static_cast<Index>(row[l_col]) ==
              clustering::nearest_centroid(cd, mu));
        CHECK(static_cast<Index>(row[m_col]) ==
              clustering::nearest_centroid(cr, mu));
    }
}

TEST_CASE("evaluate writes the error and summary tables") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path model = kWork / "model_a";
    if (!fs::exists(model / "manifest.json")) {
        REQUIRE(run_cli("--config " + cfg.string() + " --out " +
                        model.string() + " offline") == 0);
    }
    const fs::path out = kWork / "eval_out";
    fs::remove_all(out);
    REQUIRE(run_cli("--model " + model.string() + " --out " + out.string() +
                    " evaluate --test-n 4 --test-seed 9") == 0);

    const io::CsvTable errors = io::read_csv(out / "errors.csv");
    CHECK(errors.rows.size() == 4);
    const std::vector<std::string> expect_err = {
        "index", "mu0",    "rel_l2",  "rel_h1",       "op_err_a",
        "op_err_f", "fom_ms", "rom_ms", "speedup", "deim_cluster",
        "rb_cluster"};
    CHECK(errors.header == expect_err);

    const io::CsvTable summary = io::read_csv(out / "summary.csv");
    REQUIRE(summary.rows.size() == 1);
    const std::vector<std::string> expect_sum = {
        "max_q_a",       "max_q_f",        "max_n",         "median_fom_ms",
        "median_rom_ms", "median_speedup", "mean_rel_l2",   "max_rel_l2",
        "mean_rel_h1",   "max_rel_h1",     "mean_op_err_a", "mean_op_err_f",
        "out_of_pattern"};
    CHECK(summary.header == expect_sum);
    CHECK(summary.rows[0][0] >= 1.0);  // max_q_a
}

TEST_CASE("fom export carries the activity mask and symmetry") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path out = kWork / "fom_out";
    fs::remove_all(out);
    REQUIRE(run_cli("--config " + cfg.string() + " --out " + out.string() +
                    " fom --mu 1.0") == 0);
    const io::CsvTable field = io::read_csv(out / "fom_field.csv");
    const std::vector<std::string> expect = {"node", "x", "y", "active", "u"};
    CHECK(field.header == expect);
    CHECK(field.rows.size() == 13 * 13);

    bool any_masked = false;
    for (const auto& row : field.rows) {
        if (row[3] == 0.0) {
            any_masked = true;
            CHECK(row[4] == 0.0);  // inactive values export as zero
        }
    }
    CHECK(any_masked);

    // mu = 1.0 is symmetric under y <-> 2-y
    const Index n = 13;
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const auto& a = field.rows[j * n + i];
            const auto& b = field.rows[(n - 1 - j) * n + i];
            CHECK(a[4] == doctest::Approx(b[4]).epsilon(1e-9));
        }
    }
}

TEST_CASE("elbow table equals the library scan") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path out = kWork / "elbow_out";
    fs::remove_all(out);
    REQUIRE(run_cli("--config " + cfg.string() + " --out " + out.string() +
                    " elbow") == 0);

    const io::CsvTable table = io::read_csv(out / "elbow.csv");
    const config::ExperimentConfig cfg_parsed =
        config::parse_config(small_config());
    const sampling::SampleSet points = sampling::latin_hypercube(
        cfg_parsed.n_train_deim, cfg_parsed.spec.domain, cfg_parsed.seed_deim);
    const auto rows = clustering::elbow_scan(points, cfg_parsed.elbow_ks,
                                             cfg_parsed.seed_cluster);
    REQUIRE(table.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(table.rows[i][0] == static_cast<double>(rows[i].k));
        CHECK(table.rows[i][1] == rows[i].variance);  // 17-digit round trip
    }
}

TEST_CASE("exit codes follow the contract") {
    // missing subcommand / bad flags -> config error
    CHECK(run_cli("") == 2);
    // nonexistent config file -> io error
    CHECK(run_cli("--config " + (kWork / "missing.json").string() +
                  " offline") == 4);
    // invalid json -> config error
    const fs::path bad = kWork / "bad.json";
    fs::create_directories(kWork);
    std::ofstream(bad) << "{ not json";
    CHECK(run_cli("--config " + bad.string() + " offline") == 2);
    // unknown key -> config error
    config::json doc = small_config();
    doc["unknown"] = 1;
    const fs::path unknown = write_config(doc, "unknown.json");
    CHECK(run_cli("--config " + unknown.string() + " offline") == 2);
    // out-of-domain mu -> config error
    const fs::path ok = write_config(small_config(), "det.json");
    CHECK(run_cli("--config " + ok.string() + " --out " +
                  (kWork / "fom_bad").string() + " fom --mu 7.5") == 2);
    // model dir that does not exist -> io error
    CHECK(run_cli("--model " + (kWork / "no_model").string() +
                  " online --mu 1.0") == 4);
}

TEST_CASE("csv io round-trips doubles exactly") {
    fs::create_directories(kWork);
    io::CsvTable table;
    table.header = {"a", "b"};
    table.rows.push_back({1.0 / 3.0, 6.02214076e23});
    table.rows.push_back({-0.1, 2.2250738585072014e-308});
    const fs::path path = kWork / "roundtrip.csv";
    io::write_csv(path, table);
    const io::CsvTable back = io::read_csv(path);
    REQUIRE(back.header == table.header);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
            CHECK(back.rows[r][c] == table.rows[r][c]);
        }
    }
}

TEST_CASE("seed override changes the sampled sets") {
    const fs::path cfg = write_config(small_config(), "det.json");
    const fs::path m_default = kWork / "model_a";
    const fs::path m_seeded = kWork / "model_seeded";
    if (!fs::exists(m_default / "manifest.json")) {
        REQUIRE(run_cli("--config " + cfg.string() + " --out " +
                        m_default.string() + " offline") == 0);
    }
    fs::remove_all(m_seeded);
    REQUIRE(run_cli("--config " + cfg.string() + " --out " +
                    m_seeded.string() + " --seed-override 1234 offline") == 0);
    CHECK_FALSE(directories_identical(m_default, m_seeded));
    // and the override is reproducible
    const rom::LoadedModel loaded = rom::load_model(m_seeded);
    CHECK(loaded.cfg.seed_rb == 1234);
}
