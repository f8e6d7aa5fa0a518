// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jedssl/losses.hpp"
#include "jedssl/ops.hpp"
#include "support.hpp"

namespace jedssl::losses {
namespace {

using D = ad::Tensor<double>;
using Ids = std::vector<std::int32_t>;

double log_sum_exp(const std::vector<double>& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

TEST(MaskedPrediction, UniformLogits) {
    const Ids targets{0, 3, 1, 2, 2};
    const std::vector<bool> mask{true, false, true, true, false};
    EXPECT_NEAR(masked_prediction_loss(D::zeros({5, 4}), targets, mask).item(), std::log(4.0), 1e-14);
}

TEST(MaskedPrediction, UnmaskedPositionsIgnored) {
    std::mt19937_64 rng(1);
    auto logits = testing::random_tensor({4, 3}, rng, 1.0, false);
    const Ids targets{0, 1, 2, 1};
    const std::vector<bool> mask{true, false, true, false};
    const double before = masked_prediction_loss(logits, targets, mask).item();
    logits.mutable_data()[1 * 3 + 2] += 5.0;
    logits.mutable_data()[3 * 3 + 0] -= 3.0;
    EXPECT_EQ(masked_prediction_loss(logits, targets, mask).item(), before);
}

TEST(MaskedPrediction, HandComputed) {
    // 2 masked of 4 frames, K = 3.
    const std::vector<double> w{1.0, 2.0, 0.5, 0.0, -1.0, 0.3, 3.0, 1.0, 0.2, 0.2, 0.2, 0.9};
    const Ids targets{2, 0, 1, 2};
    const std::vector<bool> mask{false, true, false, true};
    const std::vector<double> r1{0.0, -1.0, 0.3}, r3{0.2, 0.2, 0.9};
    const double expect = 0.5 * ((log_sum_exp(r1) - r1[0]) + (log_sum_exp(r3) - r3[2]));
    EXPECT_NEAR(masked_prediction_loss(D::from({4, 3}, w), targets, mask).item(), expect, 1e-14);
}

TEST(MaskedPrediction, Errors) {
    const Ids targets{0, 1};
    EXPECT_THROW(masked_prediction_loss(D::zeros({2, 3}), targets, {false, false}), std::invalid_argument);
    EXPECT_THROW(masked_prediction_loss(D::zeros({2, 3}), Ids{0, 3}, {true, true}), std::out_of_range);
    EXPECT_THROW(masked_prediction_loss(D::zeros({2, 3}), Ids{0}, {true, true}), std::exception);
}

TEST(SequenceLoss, UniformIsLogV) {
    const Ids targets{1, 4, 0};
    EXPECT_NEAR(sequence_loss(D::zeros({3, 6}), targets, 0.0).item(), std::log(6.0), 1e-14);
    EXPECT_NEAR(sequence_loss(D::zeros({3, 6}), targets, 0.1).item(), std::log(6.0), 1e-14);
}

TEST(SequenceLoss, ConfidentCorrectApproachesZero) {
    const Ids targets{2, 0};
    std::vector<double> v(2 * 4, 0.0);
    v[0 * 4 + 2] = 60.0;
    v[1 * 4 + 0] = 60.0;
    EXPECT_LT(sequence_loss(D::from({2, 4}, v), targets, 0.0).item(), 1e-20);
}

TEST(SequenceLoss, SmoothedHandComputed) {
    const std::vector<double> v{2.0, -1.0, 0.5, 0.0, 0.1, 0.2, 0.3, 1.4};
    const Ids targets{0, 3};
    double expect = 0.0;
    for (int r = 0; r < 2; ++r) {
        const std::vector<double> row(v.begin() + r * 4, v.begin() + r * 4 + 4);
        const double lse = log_sum_exp(row);
        double ce = 0.0;
        for (int c = 0; c < 4; ++c) {
            const double q = (c == targets[r] ? 0.9 : 0.0) + 0.1 / 4.0;
            ce -= q * (row[c] - lse);
        }
        expect += ce / 2.0;
    }
    EXPECT_NEAR(sequence_loss(D::from({2, 4}, v), targets, 0.1).item(), expect, 1e-14);
}

TEST(SequenceLoss, LengthMismatch) {
    EXPECT_THROW(sequence_loss(D::zeros({3, 4}), Ids{1, 2}, 0.0), std::exception);
}

TEST(Combination, Arithmetic) {
    const auto lm = D::scalar(2.0), ls = D::scalar(4.0);
    EXPECT_EQ(joint_ssl_loss(lm, ls, {0.5}).item(), 3.0);
    EXPECT_EQ(joint_ssl_loss(lm, ls, {1.0}).item(), 2.0);
    EXPECT_EQ(joint_ssl_loss(lm, ls, {0.0}).item(), 4.0);
    const auto ctc = D::scalar(10.0), att = D::scalar(0.0);
    EXPECT_NEAR(joint_finetune_loss(ctc, att, {0.3}).item(), 3.0, 1e-15);
    EXPECT_EQ(joint_finetune_loss(ctc, D::scalar(7.0), {1.0}).item(), 10.0);
    EXPECT_EQ(joint_finetune_loss(ctc, D::scalar(7.0), {0.0}).item(), 7.0);
}

TEST(Ctc, SingleFrame) {
    EXPECT_NEAR(ctc_loss(D::zeros({1, 2}), Ids{1}).item(), std::log(2.0), 1e-14);
}

TEST(Ctc, TwoFrames) {
    EXPECT_NEAR(ctc_loss(D::zeros({2, 2}), Ids{1}).item(), -std::log(0.75), 1e-14);
}

TEST(Ctc, EmptyLabel) {
    // Only the all-blank path.
    std::mt19937_64 rng(3);
    auto logits = testing::random_tensor({3, 3}, rng, 1.0, false);
    const auto lp = ad::log_softmax(logits);
    const double expect = -(lp.at(0, 0) + lp.at(1, 0) + lp.at(2, 0));
    EXPECT_NEAR(ctc_loss(logits, Ids{}).item(), expect, 1e-13);
}

TEST(Ctc, MatchesBruteForce) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> frames(1, 6), chars(1, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t t = frames(rng), c = chars(rng);
        std::uniform_int_distribution<std::int32_t> lab(1, static_cast<std::int32_t>(c));
        std::uniform_int_distribution<std::size_t> len(0, std::min<std::size_t>(t, 3));
        Ids label(len(rng));
        for (auto& x : label) x = lab(rng);
        if (ctc_min_frames(label) > t) continue;
        auto logits = testing::random_tensor({t, c + 1}, rng, 2.0, false);
        const auto lp = ad::log_softmax(logits);
        const std::vector<double> lpv(lp.data().begin(), lp.data().end());
        EXPECT_NEAR(ctc_loss(logits, label).item(), testing::ctc_brute_force(lpv, t, c + 1, label), 1e-10);
    }
}

TEST(Ctc, MinFramesAndInfeasible) {
    EXPECT_EQ(ctc_min_frames(Ids{1, 1, 2}), 4u);
    EXPECT_EQ(ctc_min_frames(Ids{1, 2, 3}), 3u);
    EXPECT_THROW(ctc_loss(D::zeros({3, 3}), Ids{1, 1, 2}), std::invalid_argument);
    EXPECT_THROW(ctc_loss(D::zeros({3, 3}), Ids{3}), std::out_of_range);
}

}  // namespace
}  // namespace jedssl::losses
