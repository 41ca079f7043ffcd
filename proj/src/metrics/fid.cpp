#include "tm2d/metrics/fid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/rng.hpp"

namespace tm2d::metrics {

namespace {

using Mat = Eigen::MatrixXd;

constexpr double kClampTolerance = 1e-8;

std::size_t common_width(const std::vector<FeatureVector>& set, const char* what) {
    if (set.empty()) {
        throw ContractError(std::string(what) + ": empty feature set");
    }
    const std::size_t w = set.front().size();
    for (const auto& v : set) {
        if (v.size() != w) {
            throw ShapeError(std::string(what) + ": feature widths differ (" + std::to_string(w) + " vs " +
                             std::to_string(v.size()) + ")");
        }
    }
    return w;
}

Mat as_matrix(const std::vector<double>& v, std::size_t n) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(),
                                                                                                     n, n);
}

// Eigenvalues of a symmetric PSD matrix with round-off negatives set to zero.
Eigen::VectorXd psd_eigenvalues(const Mat& m, Mat* vectors) {
    const Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> solver(sym, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("fid: eigendecomposition did not converge");
    }
    Eigen::VectorXd ev = solver.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < 0.0) {
            if (ev[i] < -kClampTolerance * scale) {
                throw NumericalError("fid: covariance product has eigenvalue " + std::to_string(ev[i]) +
                                     ", not positive semidefinite");
            }
            ev[i] = 0.0;
        }
    }
    if (vectors) {
        *vectors = solver.eigenvectors();
    }
    return ev;
}

}  // namespace

GaussianStats gaussian_stats(const std::vector<FeatureVector>& set) {
    const std::size_t w = common_width(set, "gaussian_stats");
    if (set.size() < 2) {
        throw ContractError("gaussian_stats: need >= 2 feature vectors, got " + std::to_string(set.size()));
    }
    const double n = static_cast<double>(set.size());
    GaussianStats s;
    s.mean.assign(w, 0.0);
    for (const auto& v : set) {
        for (std::size_t i = 0; i < w; ++i) {
            s.mean[i] += v[i] / n;
        }
    }
    s.cov.assign(w * w, 0.0);
    for (const auto& v : set) {
        for (std::size_t i = 0; i < w; ++i) {
            const double di = v[i] - s.mean[i];
            for (std::size_t j = 0; j < w; ++j) {
                s.cov[i * w + j] += di * (v[j] - s.mean[j]) / (n - 1.0);
            }
        }
    }
    return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    const std::size_t n = a.dims();
    if (b.dims() != n || a.cov.size() != n * n || b.cov.size() != n * n) {
        throw ShapeError("fid: statistics of width " + std::to_string(n) + " and " + std::to_string(b.dims()));
    }
    double mean_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
    }
    const Mat sa = as_matrix(a.cov, n);
    const Mat sb = as_matrix(b.cov, n);
    Mat va;
    const Eigen::VectorXd ea = psd_eigenvalues(sa, &va);
    const Mat root_a = va * ea.cwiseSqrt().asDiagonal() * va.transpose();
    const Eigen::VectorXd em = psd_eigenvalues(root_a * sb * root_a, nullptr);
    const double trace_root = em.cwiseSqrt().sum();
    const double d = mean_term + sa.trace() + sb.trace() - 2.0 * trace_root;
    return std::max(0.0, d);
}

double fid(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
    if (common_width(a, "fid") != common_width(b, "fid")) {
        throw ShapeError("fid: feature widths differ between the two sets");
    }
    return frechet_distance(gaussian_stats(a), gaussian_stats(b));
}

double diversity(const std::vector<FeatureVector>& set, std::size_t n_pairs, std::uint64_t seed) {
    common_width(set, "diversity");
    if (set.size() < 2) {
        throw ContractError("diversity: need >= 2 feature vectors");
    }
    const auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = 0; k < set[i].size(); ++k) {
            s += (set[i][k] - set[j][k]) * (set[i][k] - set[j][k]);
        }
        return std::sqrt(s);
    };
    double total = 0.0;
    std::size_t count = 0;
    if (n_pairs == 0) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            for (std::size_t j = i + 1; j < set.size(); ++j) {
                total += dist(i, j);
                ++count;
            }
        }
    } else {
        num::Rng rng(seed, 0xd17);
        const auto n = static_cast<std::uint32_t>(set.size());
        for (; count < n_pairs; ++count) {
            const std::size_t i = rng.below(n);
            std::size_t j = rng.below(n - 1);
            j += j >= i ? 1 : 0;
            total += dist(i, j);
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace tm2d::metrics
