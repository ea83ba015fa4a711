#include "lrom/clustering.hpp"
#include "lrom/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace lrom;
using namespace lrom::clustering;

namespace {

sampling::SampleSet set_of(std::vector<geometry::ParameterVector> pts) {
    sampling::SampleSet set;
    set.points = std::move(pts);
    set.kind = sampling::SampleKind::UniformRandom;
    return set;
}

sampling::SampleSet random_set(Index n, Index m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<geometry::ParameterVector> pts(n);
    for (Index i = 0; i < n; ++i) {
        Vector p(m);
        for (Index d = 0; d < m; ++d) p[d] = rng.next_double();
        pts[i] = p;
    }
    return set_of(std::move(pts));
}

// Exhaustive best 2-partition objective (centroids at partition means).
double best_two_partition_variance(
    const std::vector<geometry::ParameterVector>& pts) {
    const Index n = static_cast<Index>(pts.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 1; mask + 1 < (1ULL << n); ++mask) {
        Vector sum_a = Vector::Zero(pts[0].size());
        Vector sum_b = Vector::Zero(pts[0].size());
        Index na = 0, nb = 0;
        for (Index i = 0; i < n; ++i) {
            if ((mask >> i) & 1) {
                sum_a += pts[i];
                ++na;
            } else {
                sum_b += pts[i];
                ++nb;
            }
        }
        const Vector ca = sum_a / na, cb = sum_b / nb;
        double v = 0.0;
        for (Index i = 0; i < n; ++i) {
            v += ((mask >> i) & 1) ? (pts[i] - ca).squaredNorm()
                                   : (pts[i] - cb).squaredNorm();
        }
        best = std::min(best, v);
    }
    return best;
}

}  // namespace

TEST_CASE("k = 1 puts the centroid at the mean") {
    const sampling::SampleSet set = random_set(37, 2, 1);
    const ClusterModel model = kmeans(set, 1, 5);
    Vector mean = Vector::Zero(2);
    for (const auto& p : set.points) mean += p;
    mean /= static_cast<double>(set.size());
    CHECK((model.centroids[0] - mean).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("two separated blobs are recovered") {
    SplitMix64 rng(2);
    std::vector<geometry::ParameterVector> pts;
    Vector blob_a = Vector::Zero(2), blob_b = Vector::Zero(2);
    for (int i = 0; i < 6; ++i) {
        Vector p(2);
        p << 0.1 * rng.next_double(), 0.1 * rng.next_double();
        blob_a += p;
        pts.push_back(p);
    }
    for (int i = 0; i < 6; ++i) {
        Vector p(2);
        p << 10.0 + 0.1 * rng.next_double(), 0.1 * rng.next_double();
        blob_b += p;
        pts.push_back(p);
    }
    blob_a /= 6.0;
    blob_b /= 6.0;

    const double oracle = best_two_partition_variance(pts);
    const ClusterModel model = kmeans(set_of(pts), 2, 3);
    CHECK(model.variance <= oracle + 1e-9);
    const double d0a = (model.centroids[0] - blob_a).norm();
    const double d1a = (model.centroids[1] - blob_a).norm();
    const Index a_cluster = d0a < d1a ? 0 : 1;
    CHECK((model.centroids[a_cluster] - blob_a).norm() <= 0.2);
    CHECK((model.centroids[1 - a_cluster] - blob_b).norm() <= 0.2);
}

TEST_CASE("k = n drives the variance to zero") {
    const sampling::SampleSet set = random_set(9, 2, 4);
    const ClusterModel model = kmeans(set, 9, 6);
    CHECK(model.variance == 0.0);
    CHECK(variance(model) == 0.0);
}

TEST_CASE("hand-computed variance of three points in one cluster") {
    std::vector<geometry::ParameterVector> pts;
    pts.push_back((Vector(2) << 0.0, 0.0).finished());
    pts.push_back((Vector(2) << 1.0, 0.0).finished());
    pts.push_back((Vector(2) << 0.0, 1.0).finished());
    const ClusterModel model = kmeans(set_of(pts), 1, 7);
    // mean (1/3, 1/3): squared distances 2/9, 5/9, 5/9
    CHECK(model.variance == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("nearest centroid with ties") {
    std::vector<geometry::ParameterVector> centroids;
    centroids.push_back(Vector::Constant(1, 0.0));
    centroids.push_back(Vector::Constant(1, 1.0));
    CHECK(nearest_centroid(centroids, Vector::Constant(1, 0.0)) == 0);
    CHECK(nearest_centroid(centroids, Vector::Constant(1, 1.0)) == 1);
    // exactly equidistant: lowest index wins
    CHECK(nearest_centroid(centroids, Vector::Constant(1, 0.5)) == 0);

    SplitMix64 rng(8);
    const sampling::SampleSet set = random_set(12, 2, 9);
    const ClusterModel model = kmeans(set, 4, 10);
    for (int t = 0; t < 1000; ++t) {
        Vector mu(2);
        mu << rng.next_double(), rng.next_double();
        // independent linear scan
        Index best = 0;
        double dbest = std::numeric_limits<double>::infinity();
        for (Index c = 0; c < model.cluster_count(); ++c) {
            const double d = (model.centroids[c] - mu).squaredNorm();
            if (d < dbest) {
                dbest = d;
                best = c;
            }
        }
        CHECK(nearest_centroid(model.centroids, mu) == best);
    }
}

TEST_CASE("lloyd iterations never increase the objective") {
    for (std::uint64_t seed : {11, 12, 13}) {
        const ClusterModel model = kmeans(random_set(60, 2, seed), 5, seed);
        for (std::size_t i = 1; i < model.variance_trace.size(); ++i) {
            CHECK(model.variance_trace[i] <=
                  model.variance_trace[i - 1] + 1e-12);
        }
        CHECK(model.iterations >= 1);
    }
}

TEST_CASE("converged assignments are nearest-centroid optimal") {
    for (std::uint64_t seed : {14, 15}) {
        const sampling::SampleSet set = random_set(150, 2, seed);
        const ClusterModel model = kmeans(set, 6, seed);
        // moving any single point to another cluster cannot decrease the
        // Eq.-(23) objective evaluated at the converged centroids
        for (Index i = 0; i < set.size(); ++i) {
            const double own = (set.points[i] -
                                model.centroids[model.assignment[i]])
                                   .squaredNorm();
            for (Index c = 0; c < model.cluster_count(); ++c) {
                CHECK(own <=
                      (set.points[i] - model.centroids[c]).squaredNorm() +
                          1e-12);
            }
        }
        // every cluster nonempty, variance consistent with the fields
        std::vector<Index> counts(model.cluster_count(), 0);
        double v = 0.0;
        for (Index i = 0; i < set.size(); ++i) {
            ++counts[model.assignment[i]];
            v += (set.points[i] - model.centroids[model.assignment[i]])
                     .squaredNorm();
        }
        for (Index c : counts) CHECK(c > 0);
        CHECK(std::abs(v - model.variance) <= 1e-12 * (1.0 + v));
    }
}

TEST_CASE("kmeans is deterministic for a seed") {
    const sampling::SampleSet set = random_set(40, 2, 16);
    const ClusterModel a = kmeans(set, 4, 99);
    const ClusterModel b = kmeans(set, 4, 99);
    REQUIRE(a.cluster_count() == b.cluster_count());
    for (Index c = 0; c < a.cluster_count(); ++c) {
        CHECK(a.centroids[c] == b.centroids[c]);
    }
    CHECK(a.assignment == b.assignment);
    CHECK(a.variance == b.variance);
}

TEST_CASE("elbow scan on the unit square") {
    std::vector<geometry::ParameterVector> pts;
    pts.push_back((Vector(2) << 0.0, 0.0).finished());
    pts.push_back((Vector(2) << 1.0, 0.0).finished());
    pts.push_back((Vector(2) << 0.0, 1.0).finished());
    pts.push_back((Vector(2) << 1.0, 1.0).finished());
    const auto rows = elbow_scan(set_of(pts), {1, 2, 4}, 17);
    REQUIRE(rows.size() == 3);
    // best 2-clustering pairs adjacent corners: 4 * (1/2)^2 = 1
    CHECK(rows[1].variance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows[2].variance == 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].variance <= rows[i - 1].variance + 1e-12);
    }
}

TEST_CASE("elbow scan stays monotone on random data") {
    const sampling::SampleSet set = random_set(80, 2, 18);
    const auto rows = elbow_scan(set, {1, 2, 3, 4, 6, 8, 12, 16, 80}, 19);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].variance <= rows[i - 1].variance + 1e-12);
    }
    CHECK(rows.back().variance == 0.0);
}

TEST_CASE("invalid cluster counts are rejected") {
    const sampling::SampleSet set = random_set(5, 1, 20);
    CHECK_THROWS_AS(kmeans(set, 0, 1), config_error);
    CHECK_THROWS_AS(kmeans(set, 6, 1), config_error);
    CHECK_THROWS_AS(elbow_scan(set, {}, 1), config_error);
    CHECK_THROWS_AS(elbow_scan(set, {2, 2}, 1), config_error);
}
