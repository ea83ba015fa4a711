#include "lrom/clustering.hpp"

#include "lrom/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lrom::clustering {

namespace {

constexpr Index kMaxIterations = 300;
constexpr Index kRestarts = 5;

double sq_dist(const geometry::ParameterVector& a,
               const geometry::ParameterVector& b) {
    return (a - b).squaredNorm();
}

double model_variance(const std::vector<geometry::ParameterVector>& pts,
                      const std::vector<geometry::ParameterVector>& centroids,
                      const std::vector<Index>& assignment) {
    double v = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        v += sq_dist(pts[i], centroids[assignment[i]]);
    }
    return v;
}

std::vector<geometry::ParameterVector> kmeanspp_init(
    const std::vector<geometry::ParameterVector>& pts, Index k,
    SplitMix64& rng) {
    const Index n = static_cast<Index>(pts.size());
    std::vector<geometry::ParameterVector> centroids;
    centroids.reserve(k);
    centroids.push_back(pts[rng.next_below(n)]);
    std::vector<double> d2(n);
    for (Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& cen : centroids) {
                best = std::min(best, sq_dist(pts[i], cen));
            }
            d2[i] = best;
            total += best;
        }
        Index pick = 0;
        if (total > 0.0) {
            const double u = rng.next_double() * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Index>(rng.next_below(n));
        }
        centroids.push_back(pts[pick]);
    }
    return centroids;
}

// Lloyd iterations from the given initial centroids.
ClusterModel lloyd(const std::vector<geometry::ParameterVector>& pts,
                   std::vector<geometry::ParameterVector> centroids,
                   std::uint64_t seed) {
    const Index n = static_cast<Index>(pts.size());
    const Index k = static_cast<Index>(centroids.size());

    ClusterModel model;
    model.seed = seed;
    model.assignment.assign(n, -1);

    bool changed = true;
    while (changed && model.iterations < kMaxIterations) {
        changed = false;
        // Assignment step.
        for (Index i = 0; i < n; ++i) {
            const Index c = nearest_centroid(centroids, pts[i]);
            if (c != model.assignment[i]) {
                model.assignment[i] = c;
                changed = true;
            }
        }
        // Empty-cluster repair: the farthest member of the largest cluster
        // becomes the empty cluster's centroid (its own contribution drops
        // to zero, so the objective cannot increase).
        std::vector<Index> counts(k, 0);
        for (Index i = 0; i < n; ++i) ++counts[model.assignment[i]];
        for (Index c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            Index largest = 0;
            for (Index c2 = 1; c2 < k; ++c2) {
                if (counts[c2] > counts[largest]) largest = c2;
            }
            Index steal = -1;
            double worst = -1.0;
            for (Index i = 0; i < n; ++i) {
                if (model.assignment[i] != largest) continue;
                const double d = sq_dist(pts[i], centroids[largest]);
                if (d > worst) {
                    worst = d;
                    steal = i;
                }
            }
            centroids[c] = pts[steal];
            model.assignment[steal] = c;
            ++counts[c];
            --counts[largest];
            changed = true;
        }
        // Update step: centroid = member mean.
        std::vector<geometry::ParameterVector> sums(
            k, geometry::ParameterVector::Zero(pts.front().size()));
        counts.assign(k, 0);
        for (Index i = 0; i < n; ++i) {
            sums[model.assignment[i]] += pts[i];
            ++counts[model.assignment[i]];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[c] > 0) centroids[c] = sums[c] / counts[c];
        }
        ++model.iterations;
        const double v = model_variance(pts, centroids, model.assignment);
        if (!model.variance_trace.empty() &&
            v > model.variance_trace.back() + 1e-12 * (1.0 + v)) {
            throw numeric_error("kmeans: Lloyd objective increased");
        }
        model.variance_trace.push_back(v);
    }

    // At natural convergence the last assignment pass already matches the
    // final centroids (unchanged membership leaves the means in place).
    model.centroids = std::move(centroids);
    model.variance = model_variance(pts, model.centroids, model.assignment);
    return model;
}

}  // namespace

std::vector<std::vector<Index>> ClusterModel::members() const {
    std::vector<std::vector<Index>> out(cluster_count());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out[assignment[i]].push_back(static_cast<Index>(i));
    }
    return out;
}

ClusterModel kmeans(const sampling::SampleSet& points, Index k,
                    std::uint64_t seed) {
    const Index n = points.size();
    if (k < 1) throw config_error("kmeans: k must be >= 1");
    if (k > n) {
        throw config_error("kmeans: k = " + std::to_string(k) +
                           " exceeds point count " + std::to_string(n));
    }
    SplitMix64 master(seed);
    ClusterModel best;
    for (Index r = 0; r < kRestarts; ++r) {
        SplitMix64 rng(master.fork_seed());
        ClusterModel candidate =
            lloyd(points.points, kmeanspp_init(points.points, k, rng), seed);
        if (r == 0 || candidate.variance < best.variance) {
            best = std::move(candidate);
        }
    }
    return best;
}

double variance(const ClusterModel& model) {
    return model.variance;
}

Index nearest_centroid(const std::vector<geometry::ParameterVector>& centroids,
                       const geometry::ParameterVector& mu) {
    if (centroids.empty()) throw config_error("nearest_centroid: no centroids");
    Index best = 0;
    double dbest = sq_dist(centroids[0], mu);
    for (Index c = 1; c < static_cast<Index>(centroids.size()); ++c) {
        const double d = sq_dist(centroids[c], mu);
        if (d < dbest) {  // strict: ties keep the lowest index
            dbest = d;
            best = c;
        }
    }
    return best;
}

std::vector<ElbowRow> elbow_scan(const sampling::SampleSet& points,
                                 const std::vector<Index>& k_list,
                                 std::uint64_t seed) {
    if (k_list.empty()) throw config_error("elbow_scan: empty k list");
    for (std::size_t i = 1; i < k_list.size(); ++i) {
        if (k_list[i] <= k_list[i - 1]) {
            throw config_error("elbow_scan: k list must be ascending");
        }
    }
    std::vector<ElbowRow> rows;
    ClusterModel previous;
    for (Index k : k_list) {
        ClusterModel model = kmeans(points, k, seed);
        // Warm start: extend the previous solution with the point farthest
        // from its centroid. Adding a centroid cannot raise the objective,
        // which makes the scan monotone regardless of seeding luck.
        if (!previous.centroids.empty() &&
            k > previous.cluster_count()) {
            std::vector<geometry::ParameterVector> warm = previous.centroids;
            std::vector<Index> assign = previous.assignment;
            while (static_cast<Index>(warm.size()) < k) {
                Index far = 0;
                double worst = -1.0;
                for (std::size_t i = 0; i < points.points.size(); ++i) {
                    const double d = sq_dist(points.points[i], warm[assign[i]]);
                    if (d > worst) {
                        worst = d;
                        far = static_cast<Index>(i);
                    }
                }
                warm.push_back(points.points[far]);
                for (std::size_t i = 0; i < points.points.size(); ++i) {
                    assign[i] = nearest_centroid(warm, points.points[i]);
                }
            }
            ClusterModel warm_model = lloyd(points.points, warm, seed);
            if (warm_model.variance < model.variance) model = warm_model;
        }
        rows.push_back({k, model.variance});
        previous = std::move(model);
    }
    return rows;
}

}  // namespace lrom::clustering
