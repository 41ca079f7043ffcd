#include "tm2d/analysis/usage.hpp"

#include <Eigen/Dense>
#include <set>
#include <sstream>

#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"

namespace tm2d::analysis {

namespace {

std::vector<std::uint64_t> count_tokens(const std::vector<vq::TokenSequence>& seqs, std::size_t K) {
    std::vector<std::uint64_t> counts(K, 0);
    for (const auto& seq : seqs) {
        for (int t : seq) {
            if (t < 0 || static_cast<std::size_t>(t) >= K) {
                throw RangeError("usage_stats: token " + std::to_string(t) + " outside [0, " + std::to_string(K) +
                                 ")");
            }
            ++counts[static_cast<std::size_t>(t)];
        }
    }
    return counts;
}

std::vector<double> normalized(const std::vector<std::uint64_t>& counts) {
    double total = 0.0;
    for (auto c : counts) {
        total += static_cast<double>(c);
    }
    std::vector<double> h(counts.size(), 0.0);
    if (total > 0.0) {
        for (std::size_t k = 0; k < counts.size(); ++k) {
            h[k] = static_cast<double>(counts[k]) / total;
        }
    }
    return h;
}

}  // namespace

UsageStats usage_from_counts(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    if (a.size() != b.size()) {
        throw ShapeError("usage_stats: count arrays of " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " entries");
    }
    UsageStats s;
    s.total_K = a.size();
    for (std::size_t k = 0; k < a.size(); ++k) {
        s.used_a += a[k] > 0 ? 1 : 0;
        s.used_b += b[k] > 0 ? 1 : 0;
        s.shared += a[k] > 0 && b[k] > 0 ? 1 : 0;
    }
    s.pct_a = s.used_a > 0 ? 100.0 * static_cast<double>(s.shared) / static_cast<double>(s.used_a) : 0.0;
    s.pct_b = s.used_b > 0 ? 100.0 * static_cast<double>(s.shared) / static_cast<double>(s.used_b) : 0.0;
    s.histogram_a = normalized(a);
    s.histogram_b = normalized(b);
    return s;
}

UsageStats usage_stats(const std::vector<vq::TokenSequence>& a, const std::vector<vq::TokenSequence>& b,
                       std::size_t K) {
    return usage_from_counts(count_tokens(a, K), count_tokens(b, K));
}

std::vector<EpochUsagePoint> usage_over_epochs(const std::vector<vq::EpochUsage>& log, const std::string& corpus_a,
                                               const std::string& corpus_b) {
    std::vector<EpochUsagePoint> series;
    std::set<std::size_t> seen_a, seen_b;
    for (const auto& e : log) {
        const auto ia = e.counts.find(corpus_a);
        const auto ib = e.counts.find(corpus_b);
        if (ia == e.counts.end() || ib == e.counts.end()) {
            throw ContractError("usage_over_epochs: epoch " + std::to_string(e.epoch) + " lacks counts for '" +
                                corpus_a + "' or '" + corpus_b + "'");
        }
        EpochUsagePoint p;
        p.epoch = e.epoch;
        p.step = e.step;
        p.per_epoch = usage_from_counts(ia->second, ib->second);
        for (std::size_t k = 0; k < ia->second.size(); ++k) {
            if (ia->second[k] > 0) {
                seen_a.insert(k);
            }
            if (ib->second[k] > 0) {
                seen_b.insert(k);
            }
        }
        p.cumulative_used_a = seen_a.size();
        p.cumulative_used_b = seen_b.size();
        for (auto k : seen_a) {
            p.cumulative_shared += seen_b.count(k);
        }
        series.push_back(std::move(p));
    }
    return series;
}

std::string format_usage_csv(const UsageStats& s) {
    std::ostringstream out;
    out << "# total_K=" << s.total_K << " used_a=" << s.used_a << " used_b=" << s.used_b << " shared=" << s.shared
        << " pct_a=" << format_double(s.pct_a) << " pct_b=" << format_double(s.pct_b) << "\n";
    out << "token_id,freq_a,freq_b\n";
    for (std::size_t k = 0; k < s.total_K; ++k) {
        out << k << "," << format_double(s.histogram_a[k]) << "," << format_double(s.histogram_b[k]) << "\n";
    }
    return out.str();
}

std::string format_epoch_csv(const std::vector<EpochUsagePoint>& series) {
    std::ostringstream out;
    out << "epoch,step,used_a,used_b,shared,cumulative_used_a,cumulative_used_b,cumulative_shared\n";
    for (const auto& p : series) {
        out << p.epoch << "," << p.step << "," << p.per_epoch.used_a << "," << p.per_epoch.used_b << ","
            << p.per_epoch.shared << "," << p.cumulative_used_a << "," << p.cumulative_used_b << ","
            << p.cumulative_shared << "\n";
    }
    return out.str();
}

std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) {
        return {};
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto w = static_cast<Eigen::Index>(rows.front().size());
    if (w < 2) {
        throw ShapeError("pca_2d: rows need >= 2 columns");
    }
    Eigen::MatrixXd x(n, w);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != w) {
            throw ShapeError("pca_2d: ragged rows");
        }
        for (Eigen::Index j = 0; j < w; ++j) {
            x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("pca_2d: eigendecomposition did not converge");
    }
    // Eigenvalues ascend; the last two columns are the leading axes.
    Eigen::MatrixXd axes(w, 2);
    for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(w - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) {
            v = -v;
        }
        axes.col(c) = v;
    }
    const Eigen::MatrixXd proj = x * axes;
    std::vector<std::array<double, 2>> out(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = {proj(i, 0), proj(i, 1)};
    }
    return out;
}

}  // namespace tm2d::analysis
