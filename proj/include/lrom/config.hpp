#pragma once

#include "lrom/fom.hpp"
#include "lrom/geometry.hpp"
#include "lrom/types.hpp"

// Single-header nlohmann/json from vendor/.
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrom::config {

using json = nlohmann::json;

/// Parsed experiment configuration. The original JSON document is kept for
/// echoing into model manifests.
struct ExperimentConfig {
    geometry::GeometrySpec spec;
    fom::ProblemKind problem;
    fom::SpaceKind space_kind = fom::SpaceKind::Scalar;
    fom::BoundaryConditions bc;

    Index nx = 32;
    Index ny = 32;
    Index quadrature_depth = 6;

    Index n_train_rb = 0;
    Index n_train_deim = 0;
    Index n_test = 0;
    std::uint64_t seed_rb = 1;
    std::uint64_t seed_deim = 2;
    std::uint64_t seed_test = 3;
    std::uint64_t seed_cluster = 4;

    double eps_pod = 1e-5;
    double eps_pod_deim = 1e-7;
    Index n_clusters_rb = 1;
    Index n_clusters_deim = 1;
    std::vector<Index> elbow_ks;
    std::string elbow_set = "deim";  // which training sample the scan uses

    std::string pod_weight = "identity";  // or "h1_mid"
    bool exact_operator_snapshots = false;

    json echo;
    std::vector<std::string> warnings;  // e.g. eps ordering advice
};

/// Parses and schema-validates a config document; unknown keys are
/// rejected. Throws config_error with the offending path.
ExperimentConfig parse_config(const json& doc);

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace lrom::config
