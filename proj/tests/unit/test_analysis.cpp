#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tm2d/analysis/usage.hpp"
#include "tm2d/common/errors.hpp"

using namespace tm2d;
using namespace tm2d::analysis;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<vq::TokenSequence> random_corpus(num::Rng& rng, std::size_t K) {
    std::vector<vq::TokenSequence> seqs(1 + rng.below(4));
    // A random sub-alphabet keeps the used sets from covering everything.
    const std::size_t span = 1 + rng.below(static_cast<std::uint32_t>(K));
    const std::size_t lo = rng.below(static_cast<std::uint32_t>(K - span + 1));
    for (auto& s : seqs) {
        s.resize(rng.below(20));
        for (int& t : s) {
            t = static_cast<int>(lo + rng.below(static_cast<std::uint32_t>(span)));
        }
    }
    return seqs;
}

}  // namespace

TEST_CASE("usage stats worked examples") {
    const auto s = usage_stats({{0, 1, 2}}, {{2, 3}}, 8);
    CHECK(s.total_K == 8);
    CHECK(s.used_a == 3);
    CHECK(s.used_b == 2);
    CHECK(s.shared == 1);
    CHECK(s.pct_a == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(s.pct_b == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(s.histogram_a[0] == doctest::Approx(1.0 / 3.0));
    CHECK(s.histogram_b[3] == doctest::Approx(0.5));
    CHECK(s.histogram_a[7] == 0.0);

    const auto same = usage_stats({{4, 4, 5}, {6}}, {{6, 5, 4}}, 8);
    CHECK(same.pct_a == 100.0);
    CHECK(same.pct_b == 100.0);

    const auto none = usage_stats({}, {{1}}, 4);
    CHECK(none.used_a == 0);
    CHECK(none.pct_a == 0.0);
    CHECK(none.pct_b == 0.0);

    CHECK_THROWS_AS(usage_stats({{4}}, {{0}}, 4), RangeError);
    CHECK_THROWS_AS(usage_stats({{0}}, {{-1}}, 4), RangeError);
    CHECK_THROWS_AS(usage_from_counts({1, 2}, {1}), ShapeError);
}

TEST_CASE("usage stats agree with set arithmetic") {
    num::Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t K = 1 + rng.below(40);
        const auto a = random_corpus(rng, K);
        const auto b = random_corpus(rng, K);
        std::set<int> sa, sb, both;
        std::size_t na = 0, nb = 0;
        for (const auto& s : a) {
            sa.insert(s.begin(), s.end());
            na += s.size();
        }
        for (const auto& s : b) {
            sb.insert(s.begin(), s.end());
            nb += s.size();
        }
        std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(both, both.begin()));
        const auto st = usage_stats(a, b, K);
        CHECK(st.used_a == sa.size());
        CHECK(st.used_b == sb.size());
        CHECK(st.shared == both.size());
        CHECK(st.shared <= std::min(st.used_a, st.used_b));
        double ha = 0.0, hb = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            ha += st.histogram_a[k];
            hb += st.histogram_b[k];
            CHECK((st.histogram_a[k] > 0.0) == (sa.count(static_cast<int>(k)) > 0));
        }
        CHECK(ha == doctest::Approx(na > 0 ? 1.0 : 0.0).epsilon(1e-12));
        CHECK(hb == doctest::Approx(nb > 0 ? 1.0 : 0.0).epsilon(1e-12));
        // Swapping the corpora swaps the two sides.
        const auto sw = usage_stats(b, a, K);
        CHECK(sw.used_a == st.used_b);
        CHECK(sw.pct_a == st.pct_b);
    }
}

TEST_CASE("usage over epochs") {
    std::vector<vq::EpochUsage> log(3);
    log[0].epoch = 1;
    log[0].step = 10;
    log[0].counts = {{"dance", {1, 0, 0, 2}}, {"action", {0, 0, 3, 1}}};
    log[1].epoch = 2;
    log[1].step = 20;
    log[1].counts = {{"dance", {0, 5, 0, 0}}, {"action", {0, 0, 3, 0}}};
    log[2].epoch = 3;
    log[2].step = 30;
    log[2].counts = {{"dance", {0, 0, 1, 0}}, {"action", {0, 1, 0, 0}}};
    const auto s = usage_over_epochs(log, "dance", "action");
    REQUIRE(s.size() == 3);
    CHECK(s[0].per_epoch.shared == 1);
    CHECK(s[0].cumulative_used_a == 2);
    CHECK(s[1].per_epoch.shared == 0);
    CHECK(s[1].cumulative_used_a == 3);
    CHECK(s[1].cumulative_shared == 1);
    CHECK(s[2].cumulative_used_a == 4);
    CHECK(s[2].cumulative_used_b == 3);
    CHECK(s[2].cumulative_shared == 3);
    for (std::size_t i = 1; i < s.size(); ++i) {
        CHECK(s[i].cumulative_used_a >= s[i - 1].cumulative_used_a);
        CHECK(s[i].cumulative_shared >= s[i - 1].cumulative_shared);
    }
    const auto csv = format_epoch_csv(s);
    CHECK(count_lines(csv) == 4);
    CHECK(csv.find("3,30,1,1,0,4,3,3\n") != std::string::npos);
    CHECK_THROWS_AS(usage_over_epochs(log, "dance", "speech"), ContractError);
}

TEST_CASE("usage csv layout") {
    const auto s = usage_stats({{0, 1, 2}}, {{2, 3}}, 6);
    const auto csv = format_usage_csv(s);
    CHECK(count_lines(csv) == 6 + 2);
    std::istringstream in(csv);
    std::string first, header, row;
    std::getline(in, first);
    std::getline(in, header);
    CHECK(first.rfind("# total_K=6 used_a=3 used_b=2 shared=1", 0) == 0);
    CHECK(header == "token_id,freq_a,freq_b");
    std::getline(in, row);
    CHECK(row.rfind("0,", 0) == 0);
}

TEST_CASE("pca_2d") {
    // Points on a line: all variance on the first axis, oriented so the
    // largest loading is positive.
    const auto line = pca_2d({{0, 0, 0}, {1, 2, 0}, {2, 4, 0}, {3, 6, 0}});
    REQUIRE(line.size() == 4);
    const double step = std::sqrt(5.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(line[i][0] == doctest::Approx((static_cast<double>(i) - 1.5) * step).epsilon(1e-10));
        CHECK(std::abs(line[i][1]) < 1e-10);
    }

    // Oracle: power iteration plus deflation on the covariance.
    num::Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 6 + rng.below(10), w = 2 + rng.below(5);
        std::vector<std::vector<double>> rows(n, std::vector<double>(w));
        for (auto& r : rows) {
            for (std::size_t j = 0; j < w; ++j) {
                r[j] = rng.uniform(-1, 1) * static_cast<double>(w - j);
            }
        }
        Eigen::MatrixXd x(n, w);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
        }
        x.rowwise() -= x.colwise().mean();
        Eigen::MatrixXd c = x.transpose() * x;
        const auto proj = pca_2d(rows);
        for (int axis = 0; axis < 2; ++axis) {
            Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(w));
            for (int it = 0; it < 5000; ++it) {
                v = (c * v).normalized();
            }
            const double lambda = v.dot(c * v);
            Eigen::Index arg = 0;
            v.cwiseAbs().maxCoeff(&arg);
            if (v[arg] < 0) {
                v = -v;
            }
            const Eigen::VectorXd expect = x * v;
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                err = std::max(err, std::abs(expect[static_cast<Eigen::Index>(i)] - proj[i][static_cast<std::size_t>(axis)]));
            }
            CHECK(err < 1e-6);
            c -= lambda * v * v.transpose();
        }
    }
    CHECK(pca_2d({}).empty());
    CHECK_THROWS_AS(pca_2d({{1.0}, {2.0}}), ShapeError);
    CHECK_THROWS_AS(pca_2d({{1.0, 2.0}, {2.0}}), ShapeError);
}
