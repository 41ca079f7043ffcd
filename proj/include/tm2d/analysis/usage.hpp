#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tm2d/vqvae/train.hpp"

namespace tm2d::analysis {

struct UsageStats {
    std::size_t total_K = 0;
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    std::size_t shared = 0;
    double pct_a = 0.0;  // 100 * shared / used_a
    double pct_b = 0.0;
    std::vector<double> histogram_a;  // token frequency / total tokens of the corpus
    std::vector<double> histogram_b;
};

UsageStats usage_stats(const std::vector<vq::TokenSequence>& a, const std::vector<vq::TokenSequence>& b,
                       std::size_t K);
UsageStats usage_from_counts(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

struct EpochUsagePoint {
    std::size_t epoch = 0;
    std::size_t step = 0;
    UsageStats per_epoch;
    // Distinct tokens seen in any epoch so far.
    std::size_t cumulative_used_a = 0;
    std::size_t cumulative_used_b = 0;
    std::size_t cumulative_shared = 0;
};

std::vector<EpochUsagePoint> usage_over_epochs(const std::vector<vq::EpochUsage>& log, const std::string& corpus_a,
                                               const std::string& corpus_b);

// "# key=value ..." summary line, "token_id,freq_a,freq_b" header, K rows.
std::string format_usage_csv(const UsageStats& s);
std::string format_epoch_csv(const std::vector<EpochUsagePoint>& series);

// Projection of the rows onto their two leading principal axes (rows are
// centered first). Each axis is signed so its largest-magnitude loading is positive.
std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& rows);

}  // namespace tm2d::analysis
