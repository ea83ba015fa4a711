#pragma once

#include "lrom/sampling.hpp"
#include "lrom/types.hpp"

#include <cstdint>
#include <vector>

namespace lrom::clustering {

struct ClusterModel {
    std::vector<geometry::ParameterVector> centroids;
    std::vector<Index> assignment;    // nearest centroid per training point
    double variance = 0.0;            // sum of squared distances
    Index iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> variance_trace;  // per-iteration, nonincreasing

    Index cluster_count() const { return static_cast<Index>(centroids.size()); }
    std::vector<std::vector<Index>> members() const;
};

/// Lloyd iterations from k-means++ seeding, 5 restarts with the best
/// variance kept, deterministic for a given seed. Empty clusters are
/// repaired by stealing the farthest point of the largest cluster.
ClusterModel kmeans(const sampling::SampleSet& points, Index k,
                    std::uint64_t seed);

/// Sum over clusters of squared member-to-centroid distances, recomputed
/// from the model fields.
double variance(const ClusterModel& model);

/// argmin_i ||mu - centroid_i||^2; ties resolved to the lowest index.
Index nearest_centroid(const std::vector<geometry::ParameterVector>& centroids,
                       const geometry::ParameterVector& mu);

struct ElbowRow {
    Index k = 0;
    double variance = 0.0;
};

/// Variance per cluster count. Each k additionally warm-starts from the
/// previous solution with one centroid added, which keeps the table
/// monotone nonincreasing.
std::vector<ElbowRow> elbow_scan(const sampling::SampleSet& points,
                                 const std::vector<Index>& k_list,
                                 std::uint64_t seed);

}  // namespace lrom::clustering
