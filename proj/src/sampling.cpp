#include "lrom/sampling.hpp"

#include "lrom/rng.hpp"

#include <algorithm>
#include <cmath>

namespace lrom::sampling {

std::string to_string(SampleKind kind) {
    switch (kind) {
        case SampleKind::LatinHypercube: return "latin_hypercube";
        case SampleKind::UniformRandom: return "uniform_random";
        case SampleKind::TensorGrid: return "tensor_grid";
    }
    return "unknown";
}

namespace {

// Distinctness contract: no two samples closer than 1e-12 in Euclidean norm.
bool collides(const std::vector<geometry::ParameterVector>& pts, Index i) {
    for (Index j = 0; j < i; ++j) {
        if ((pts[j] - pts[i]).norm() < 1e-12) return true;
    }
    return false;
}

}  // namespace

SampleSet latin_hypercube(Index n, const geometry::ParameterDomain& domain,
                          std::uint64_t seed) {
    if (n < 1) throw config_error("latin_hypercube: n must be >= 1");
    const Index m = domain.dim();
    SplitMix64 rng(seed);

    // One bin permutation per coordinate (Fisher-Yates).
    std::vector<std::vector<Index>> bins(m, std::vector<Index>(n));
    for (Index d = 0; d < m; ++d) {
        for (Index i = 0; i < n; ++i) bins[d][i] = i;
        for (Index i = n - 1; i > 0; --i) {
            const Index j = static_cast<Index>(
                rng.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(bins[d][i], bins[d][j]);
        }
    }

    SampleSet set;
    set.seed = seed;
    set.kind = SampleKind::LatinHypercube;
    set.points.resize(n);
    for (Index i = 0; i < n; ++i) {
        geometry::ParameterVector mu(m);
        for (Index d = 0; d < m; ++d) {
            const double width = (domain.upper[d] - domain.lower[d]) / n;
            mu[d] = domain.lower[d] +
                    (static_cast<double>(bins[d][i]) + rng.next_double()) *
                        width;
        }
        set.points[i] = mu;
        // Collisions keep their bins; only the within-bin offsets are redrawn.
        while (collides(set.points, i)) {
            for (Index d = 0; d < m; ++d) {
                const double width = (domain.upper[d] - domain.lower[d]) / n;
                set.points[i][d] =
                    domain.lower[d] +
                    (static_cast<double>(bins[d][i]) + rng.next_double()) *
                        width;
            }
        }
    }
    return set;
}

SampleSet uniform_random(Index n, const geometry::ParameterDomain& domain,
                         std::uint64_t seed) {
    if (n < 1) throw config_error("uniform_random: n must be >= 1");
    const Index m = domain.dim();
    SplitMix64 rng(seed);
    SampleSet set;
    set.seed = seed;
    set.kind = SampleKind::UniformRandom;
    set.points.resize(n);
    for (Index i = 0; i < n; ++i) {
        do {
            geometry::ParameterVector mu(m);
            for (Index d = 0; d < m; ++d) {
                mu[d] = domain.lower[d] +
                        rng.next_double() * (domain.upper[d] - domain.lower[d]);
            }
            set.points[i] = mu;
        } while (collides(set.points, i));
    }
    return set;
}

SampleSet tensor_grid(Index points_per_dim,
                      const geometry::ParameterDomain& domain) {
    if (points_per_dim < 1) throw config_error("tensor_grid: n must be >= 1");
    const Index m = domain.dim();
    Index total = 1;
    for (Index d = 0; d < m; ++d) total *= points_per_dim;

    SampleSet set;
    set.seed = 0;
    set.kind = SampleKind::TensorGrid;
    set.points.resize(total);
    for (Index i = 0; i < total; ++i) {
        geometry::ParameterVector mu(m);
        Index rest = i;
        for (Index d = 0; d < m; ++d) {
            const Index idx = rest % points_per_dim;
            rest /= points_per_dim;
            mu[d] = domain.lower[d] + (idx + 0.5) *
                                          (domain.upper[d] - domain.lower[d]) /
                                          points_per_dim;
        }
        set.points[i] = mu;
    }
    return set;
}

}  // namespace lrom::sampling
