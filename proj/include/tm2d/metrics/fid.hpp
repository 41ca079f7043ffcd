#pragma once

#include <cstdint>
#include <vector>

#include "tm2d/metrics/features.hpp"

namespace tm2d::metrics {

struct GaussianStats {
    std::vector<double> mean;
    std::vector<double> cov;  // row-major n x n

    std::size_t dims() const { return mean.size(); }
};

// Sample mean and unbiased covariance; needs >= 2 vectors of equal width.
GaussianStats gaussian_stats(const std::vector<FeatureVector>& set);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The trace of the root
// comes from the eigenvalues of the symmetric S_a^(1/2) S_b S_a^(1/2);
// round-off negatives are clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

double fid(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b);

// Mean Euclidean distance over `n_pairs` seeded random pairs of distinct
// indices; n_pairs = 0 averages over every unordered pair.
double diversity(const std::vector<FeatureVector>& set, std::size_t n_pairs, std::uint64_t seed);

}  // namespace tm2d::metrics
