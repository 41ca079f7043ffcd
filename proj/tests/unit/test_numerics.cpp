#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradcases.hpp"
#include "support.hpp"
#include "tm2d/common/checkpoint.hpp"
#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"
#include "tm2d/numerics/adam.hpp"
#include "tm2d/numerics/params.hpp"

using namespace tm2d;
using namespace tm2d::num;
using tm2d::testing::rand_tensor;

TEST_CASE("rng streams are reproducible and bounded") {
    Rng a(7), b(7), c(8);
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u32();
        CHECK(x == b.next_u32());
        any_diff = any_diff || x != c.next_u32();
    }
    CHECK(any_diff);
    Rng r(3);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const auto k = r.below(7);
        CHECK(k < 7u);
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
    Rng f = Rng(1).fork(5);
    CHECK(f != Rng(1));
    const auto saved = Rng::from_raw(r.state(), r.increment());
    CHECK(saved == r);
}

TEST_CASE("matmul matches a naive triple loop") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = 1 + rng.below(5), k = 1 + rng.below(5), n = 1 + rng.below(5);
        const auto a = rand_tensor({m, k}, rng);
        const auto b = rand_tensor({k, n}, rng);
        const auto c = matmul(a, b);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) {
                    s += a.at(i, p) * b.at(p, j);
                }
                CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("conv1d matches direct cross-correlation with zero padding") {
    Rng rng(2);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t T = 4 + rng.below(9), ci = 1 + rng.below(3), co = 1 + rng.below(3);
        const std::size_t w = 1 + rng.below(4), stride = 1 + rng.below(2), pad = rng.below(2);
        const auto x = rand_tensor({T, ci}, rng);
        const auto k = rand_tensor({w, ci, co}, rng);
        const auto bias = rand_tensor({co}, rng);
        const auto y = conv1d(x, k, bias, {stride, pad});
        const std::size_t L = (T + 2 * pad - w) / stride + 1;
        REQUIRE(y.rows() == L);
        REQUIRE(y.cols() == co);
        CHECK(conv1d_out_len(T, w, {stride, pad}) == L);
        for (std::size_t t = 0; t < L; ++t) {
            for (std::size_t o = 0; o < co; ++o) {
                double s = bias.data()[o];
                for (std::size_t kk = 0; kk < w; ++kk) {
                    const long src = static_cast<long>(t * stride + kk) - static_cast<long>(pad);
                    if (src < 0 || src >= static_cast<long>(T)) {
                        continue;
                    }
                    for (std::size_t c = 0; c < ci; ++c) {
                        s += x.at(static_cast<std::size_t>(src), c) * k.data()[(kk * ci + c) * co + o];
                    }
                }
                CHECK(y.at(t, o) == doctest::Approx(s).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("softmax rows are distributions; fully masked rows are zero") {
    Rng rng(3);
    const auto x = rand_tensor({4, 6}, rng, 5.0);
    const auto p = softmax_rows(x);
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(p.at(i, j) > 0.0);
            s += p.at(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    const std::vector<std::uint8_t> allow = {1, 1, 0, 0, 0, 0};
    const auto q = masked_softmax_rows(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}), allow);
    CHECK(q.at(0, 2) == 0.0);
    CHECK(q.at(0, 0) + q.at(0, 1) == doctest::Approx(1.0));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(q.at(1, j) == 0.0);
    }
}

TEST_CASE("layer norm standardizes each row") {
    Rng rng(4);
    const auto x = rand_tensor({3, 8}, rng, 3.0);
    const auto y = layer_norm(x, Tensor::full({8}, 1.0), Tensor::zeros({8}), 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        double mu = 0.0, var = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            mu += y.at(i, j);
        }
        mu /= 8.0;
        for (std::size_t j = 0; j < 8; ++j) {
            var += (y.at(i, j) - mu) * (y.at(i, j) - mu);
        }
        CHECK(std::abs(mu) < 1e-12);
        CHECK(var / 8.0 == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("cross entropy equals -log softmax at the targets") {
    Rng rng(5);
    const auto x = rand_tensor({3, 4}, rng, 4.0);
    const std::vector<int> t = {3, 0, 2};
    const auto p = softmax_rows(x);
    double expect = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        expect -= std::log(p.at(i, static_cast<std::size_t>(t[i])));
    }
    CHECK(softmax_cross_entropy(x, t).item() == doctest::Approx(expect / 3.0).epsilon(1e-12));
    const std::vector<int> bad = {0, 0, 4};
    CHECK_THROWS(softmax_cross_entropy(x, bad));
}

TEST_CASE("every primitive passes a finite-difference check") {
    for (const auto& c : testing::primitive_cases()) {
        CAPTURE(c.name);
        CHECK(grad_check(c.build, c.inputs) < 1e-4);
    }
}

TEST_CASE("straight-through forwards the quantized value and routes gradient to the continuous input") {
    const auto z = Tensor::from({1, 3}, {0.1, 0.2, 0.3}, true);
    const auto q = Tensor::from({1, 3}, {1.0, -1.0, 0.0}, true);
    const auto y = straight_through(z, q);
    CHECK(y.at(0, 1) == -1.0);
    sum(mul(y, Tensor::from({1, 3}, {2.0, 3.0, 4.0}))).backward();
    CHECK(z.grad()[0] == 2.0);
    CHECK(z.grad()[2] == 4.0);
    CHECK(!q.has_grad());
}

TEST_CASE("no-grad guard records no graph") {
    const auto a = Tensor::full({2, 2}, 1.0, true);
    {
        NoGradGuard g;
        CHECK(!grad_enabled());
        CHECK(!matmul(a, a).requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(matmul(a, a).requires_grad());
}

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
    std::vector<double> p = {1.0, -2.0, 0.5};
    const std::vector<double> g = {0.3, -4.0, 0.0};
    std::vector<double> m(3, 0.0), v(3, 0.0);
    AdamConfig cfg;
    cfg.lr = 0.01;
    adam_update(p, g, m, v, cfg, 1);
    // Bias correction makes mhat = g and vhat = g^2 at t = 1.
    CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)));
    CHECK(p[2] == 0.5);

    // Second step against a hand-rolled recurrence.
    const std::vector<double> g2 = {-0.1, 1.0, 2.0};
    std::vector<double> p_ref = p, m_ref = m, v_ref = v;
    adam_update(p, g2, m, v, cfg, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        const double mi = 0.9 * m_ref[i] + 0.1 * g2[i];
        const double vi = 0.999 * v_ref[i] + 0.001 * g2[i] * g2[i];
        const double step = cfg.lr * (mi / (1 - 0.81)) / (std::sqrt(vi / (1 - 0.999 * 0.999)) + 1e-8);
        CHECK(p[i] == doctest::Approx(p_ref[i] - step).epsilon(1e-12));
    }
}

TEST_CASE("adam minimizes a quadratic") {
    auto x = Tensor::from({2}, {3.0, -2.0}, true);
    std::vector<Tensor> params = {x};
    auto st = make_adam_state(params, {0.05});
    for (int i = 0; i < 500; ++i) {
        zero_grads(params);
        sum_squares(x).backward();
        adam_step(params, st);
    }
    CHECK(std::abs(x.data()[0]) < 1e-2);
    CHECK(std::abs(x.data()[1]) < 1e-2);
}

TEST_CASE("format_double round-trips") {
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal(0.0, 1.0) * std::pow(10.0, rng.uniform(-30, 30));
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
    CHECK_THROWS_AS(parse_int("12.0"), FormatError);
}

TEST_CASE("checkpoint preserves hyperparameters, tensors, optimizer and rng state") {
    const auto dir = testing::scratch_dir("ckpt");
    Rng rng(9);
    ParamSet ps;
    auto w = ps.add("w", rand_tensor({3, 2}, rng));
    ps.add("b", rand_tensor({2}, rng));
    auto st = make_adam_state(ps.tensors(), {0.1});
    sum_squares(w).backward();
    adam_step(ps.tensors(), st);
    rng.next_u32();

    Checkpoint ck;
    ck.set("name", std::string("x y"));
    ck.set("pi", 3.141592653589793);
    ck.set("n", 42);
    ps.save(ck, "p.");
    save_adam(ck, "opt.", ps, st);
    save_rng(ck, "rng", rng);
    const auto path = (dir / "a.ckpt").string();
    save_checkpoint(path, ck);

    const auto back = load_checkpoint(path);
    CHECK(back.get("name") == "x y");
    CHECK(back.get_double("pi") == 3.141592653589793);
    CHECK(back.get_int("n") == 42);
    ParamSet other;
    other.add("w", Tensor::zeros({3, 2}, true));
    other.add("b", Tensor::zeros({2}, true));
    other.load(back, "p.");
    CHECK(testing::max_abs_diff(other.get("w").data(), w.data()) == 0.0);
    const auto st2 = load_adam(back, "opt.", other);
    CHECK(st2.step_count == 1);
    CHECK(st2.second_moment == st.second_moment);
    CHECK(load_rng(back, "rng") == rng);

    ParamSet wrong;
    wrong.add("w", Tensor::zeros({2, 3}));
    CHECK_THROWS(wrong.load(back, "p."));
    write_file((dir / "bad.ckpt").string(), "NOTACKPT\n");
    CHECK_THROWS_AS(load_checkpoint((dir / "bad.ckpt").string()), FormatError);
}
