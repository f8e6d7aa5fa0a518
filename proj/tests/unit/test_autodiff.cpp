// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <random>

#include "jedssl/kernels.hpp"
#include "jedssl/ops.hpp"
#include "jedssl/optim.hpp"
#include "support.hpp"

namespace jedssl::ad {
namespace {

using D = Tensor<double>;

TEST(Tensor, ShapeAndDataAgree) {
    auto t = D::from({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_EQ(t.at(1, 2), 6.0);
    EXPECT_THROW(D::from({2, 2}, {1, 2, 3}), ShapeError);
    EXPECT_THROW(D::zeros({2, 0}), ShapeError);
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
    auto s = softmax(D::from({2}, {0, 0}));
    EXPECT_DOUBLE_EQ(s.at(0), 0.5);
    EXPECT_DOUBLE_EQ(s.at(1), 0.5);
}

TEST(Ops, SoftmaxRowsSumToOne) {
    std::mt19937_64 rng(1);
    auto x = testing::random_tensor({5, 7}, rng, 4.0, false);
    auto s = softmax(x);
    for (std::size_t r = 0; r < 5; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            const double v = s.at(r, c);
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Ops, MatmulByIdentity) {
    std::mt19937_64 rng(2);
    auto a = testing::random_tensor({3, 3}, rng, 1.0, false);
    auto eye = D::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto p = matmul(eye, a);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(p.at(i), a.at(i));
}

TEST(Ops, LayerNormOfConstantRowIsZero) {
    auto y = layer_norm(D::from({3}, {1, 1, 1}), D::full({3}, 1.0), D::zeros({3}));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y.at(i), 0.0);
    auto shifted = layer_norm(D::from({3}, {1, 1, 1}), D::full({3}, 2.0), D::from({3}, {0.5, -1, 3}));
    EXPECT_EQ(shifted.at(0), 0.5);
    EXPECT_EQ(shifted.at(2), 3.0);
}

TEST(Ops, ShapeErrorsNameTheOp) {
    try {
        matmul(D::zeros({2, 3}), D::zeros({2, 3}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos);
    }
    EXPECT_THROW(add(D::zeros({2}), D::zeros({3})), ShapeError);
    const std::vector<std::int32_t> bad{4};
    EXPECT_THROW(embedding(D::zeros({4, 2}), std::span<const std::int32_t>(bad)), std::out_of_range);
}

TEST(Ops, OverflowIsAnError) {
    auto big = D::from({1}, {1e200});
    EXPECT_THROW(mul(big, big), NumericalError);
}

TEST(Backward, SumOfSquares) {
    auto x = D::from({3}, {1, 2, 3}, true);
    sum(mul(x, x)).backward();
    EXPECT_EQ(x.grad()[0], 2.0);
    EXPECT_EQ(x.grad()[1], 4.0);
    EXPECT_EQ(x.grad()[2], 6.0);
}

TEST(Backward, Mean) {
    auto x = D::from({4}, {1, -2, 3, 7}, true);
    mean(x).backward();
    for (double g : x.grad()) EXPECT_EQ(g, 0.25);
}

TEST(Backward, RequiresScalar) {
    auto x = D::from({2}, {1, 2}, true);
    EXPECT_THROW(scale(x, 2.0).backward(), ShapeError);
}

TEST(Backward, TwiceDoublesGradients) {
    std::mt19937_64 rng(3);
    auto w = testing::random_tensor({3, 4}, rng);
    auto x = testing::random_tensor({2, 3}, rng, 1.0, false);
    auto loss = sum(gelu(matmul(x, w)));
    loss.backward();
    std::vector<double> once(w.grad().begin(), w.grad().end());
    loss.backward();
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(w.grad()[i], 2.0 * once[i]);
}

TEST(Backward, SharedInputAccumulates) {
    auto x = D::from({2}, {3, -1}, true);
    sum(add(x, scale(x, 2.0))).backward();
    EXPECT_EQ(x.grad()[0], 3.0);
    EXPECT_EQ(x.grad()[1], 3.0);
}

TEST(Backward, NoGradGuardRecordsNothing) {
    auto x = D::from({2}, {1, 2}, true);
    NoGradGuard guard;
    auto y = mul(x, x);
    EXPECT_TRUE(y.node()->is_leaf());
    EXPECT_FALSE(y.requires_grad());
}

TEST(Tape, InputsPrecedeConsumers) {
    std::mt19937_64 rng(4);
    auto a = testing::random_tensor({2, 2}, rng);
    auto b = testing::random_tensor({2, 2}, rng);
    auto shared = matmul(a, b);
    auto root = sum(add(softmax(shared), gelu(shared)));
    auto tape = Tape<double>::record(root);
    const auto& order = tape.nodes();
    std::map<const Node<double>*, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) {
        EXPECT_EQ(pos.count(order[i]), 0u) << "node visited twice";
        pos[order[i]] = i;
    }
    for (const auto* n : order) {
        for (const auto& in : n->inputs) {
            ASSERT_TRUE(pos.count(in.get()));
            EXPECT_LT(pos[in.get()], pos[n]);
        }
    }
    EXPECT_EQ(order.back(), root.node());
}

TEST(Adam, ZeroGradientLeavesParameters) {
    ParamStore<double> p;
    p.add("w", D::from({3}, {1, 2, 3}, true));
    AdamState<double> s;
    for (int i = 0; i < 10; ++i) {
        p.get("w").mutable_grad();
        adam_step(p, s, 0.1);
    }
    EXPECT_EQ(p.get("w").at(0), 1.0);
    EXPECT_EQ(p.get("w").at(2), 3.0);
    EXPECT_EQ(s.step, 10u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    ParamStore<double> p;
    p.add("w", D::from({2}, {0.5, 0.5}, true));
    p.get("w").mutable_grad()[0] = 3.0;
    p.get("w").mutable_grad()[1] = -0.01;
    AdamState<double> s;
    adam_step(p, s, 0.01);
    EXPECT_NEAR(p.get("w").at(0), 0.49, 1e-6);
    EXPECT_NEAR(p.get("w").at(1), 0.51, 1e-5);
}

TEST(Adam, ConvergesOnQuadratic) {
    ParamStore<double> p;
    p.add("w", D::from({1}, {0.0}, true));
    AdamState<double> s;
    for (int i = 0; i < 200; ++i) {
        p.zero_grad();
        const double w = p.get("w").at(0);
        p.get("w").mutable_grad()[0] = 2.0 * (w - 3.0);
        adam_step(p, s, 0.1);
    }
    // Independent replay of the same recurrence.
    double w = 0.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 200; ++t) {
        const double g = 2.0 * (w - 3.0);
        m = 0.9 * m + 0.1 * g;
        v = 0.98 * v + 0.02 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t)), vh = v / (1.0 - std::pow(0.98, t));
        w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
    EXPECT_LT(std::abs(p.get("w").at(0) - 3.0), 0.05);
    EXPECT_NEAR(p.get("w").at(0), w, 1e-12);
}

TEST(Adam, NanGradientNamesTheParameter) {
    ParamStore<double> p;
    p.add("encoder.bad", D::from({1}, {0.0}, true));
    p.get("encoder.bad").mutable_grad()[0] = std::nan("");
    AdamState<double> s;
    try {
        adam_step(p, s, 0.1);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("encoder.bad"), std::string::npos);
    }
}

TEST(Schedule, WarmupShape) {
    WarmupSchedule s{2e-3, 100};
    EXPECT_DOUBLE_EQ(lr_at_step(s, 100), 2e-3);
    EXPECT_DOUBLE_EQ(lr_at_step(s, 50), 1e-3);
    EXPECT_DOUBLE_EQ(lr_at_step(s, 400), 1e-3);
    EXPECT_THROW(lr_at_step(s, 0), std::invalid_argument);
    double prev = 0.0;
    for (std::uint64_t t = 1; t <= 100; ++t) {
        EXPECT_GE(lr_at_step(s, t), prev);
        prev = lr_at_step(s, t);
    }
    for (std::uint64_t t = 101; t <= 1000; ++t) {
        EXPECT_LE(lr_at_step(s, t), prev);
        EXPECT_GT(lr_at_step(s, t), 0.0);
        prev = lr_at_step(s, t);
    }
}

TEST(Kernels, SerialAndParallelGemmAgreeBitwise) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (auto ta : {kernels::Trans::kNo, kernels::Trans::kYes}) {
        for (auto tb : {kernels::Trans::kNo, kernels::Trans::kYes}) {
            const kernels::GemmShape s{37, 19, 53};
            std::vector<double> a(s.m * s.k), b(s.k * s.n), c1(s.m * s.n), c2;
            for (auto& x : a) x = n01(rng);
            for (auto& x : b) x = n01(rng);
            for (auto& x : c1) x = n01(rng);
            c2 = c1;
            kernels::serial::gemm(ta, tb, s, a.data(), b.data(), c1.data(), true);
            kernels::omp::gemm(ta, tb, s, a.data(), b.data(), c2.data(), true);
            EXPECT_EQ(0, std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)));
        }
    }
}

TEST(Kernels, SerialAndParallelAssignAgree) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n01(0.0, 1.0);
    const kernels::AssignShape s{2000, 7, 11};
    std::vector<double> pts(s.n * s.d), cen(s.k * s.d), d1(s.n), d2(s.n);
    for (auto& x : pts) x = n01(rng);
    for (auto& x : cen) x = n01(rng);
    std::vector<std::int32_t> i1(s.n), i2(s.n);
    kernels::serial::assign_nearest(s, pts.data(), cen.data(), i1.data(), d1.data());
    kernels::omp::assign_nearest(s, pts.data(), cen.data(), i2.data(), d2.data());
    EXPECT_EQ(i1, i2);
    EXPECT_EQ(0, std::memcmp(d1.data(), d2.data(), d1.size() * sizeof(double)));
}

TEST(Kernels, GemmMatchesNaiveProduct) {
    std::mt19937_64 rng(7);
    std::normal_distribution<float> n01(0.0f, 1.0f);
    const kernels::GemmShape s{5, 4, 3};
    std::vector<float> a(20), b(12), c(15);
    for (auto& x : a) x = n01(rng);
    for (auto& x : b) x = n01(rng);
    kernels::gemm(kernels::Trans::kNo, kernels::Trans::kNo, s, a.data(), b.data(), c.data(), false);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            float ref = 0.0f;
            for (std::size_t k = 0; k < 4; ++k) ref += a[i * 4 + k] * b[k * 3 + j];
            EXPECT_NEAR(c[i * 3 + j], ref, 1e-5f);
        }
    }
}

}  // namespace
}  // namespace jedssl::ad
