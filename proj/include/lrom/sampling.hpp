#pragma once

#include "lrom/geometry.hpp"
#include "lrom/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lrom::sampling {

enum class SampleKind { LatinHypercube, UniformRandom, TensorGrid };

std::string to_string(SampleKind kind);

/// Deterministic parameter set: reproducible byte-for-byte from
/// (kind, seed, n, domain).
struct SampleSet {
    std::vector<geometry::ParameterVector> points;
    std::uint64_t seed = 0;
    SampleKind kind = SampleKind::LatinHypercube;

    Index size() const { return static_cast<Index>(points.size()); }
};

/// Latin hypercube: per coordinate, exactly one sample in each of the n
/// equal bins, uniform position within the bin.
SampleSet latin_hypercube(Index n, const geometry::ParameterDomain& domain,
                          std::uint64_t seed);

SampleSet uniform_random(Index n, const geometry::ParameterDomain& domain,
                         std::uint64_t seed);

/// Tensor grid over the domain, points_per_dim^M points (cell midpoints).
SampleSet tensor_grid(Index points_per_dim,
                      const geometry::ParameterDomain& domain);

}  // namespace lrom::sampling
