// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: masked prediction, decoder sequence loss, CTC, and the
// two weighted combinations used for pre-training and finetuning.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jedssl/tensor.hpp"

namespace jedssl::losses {

struct JointSSLWeights {
    double alpha = 0.5;  // weight of the masked prediction loss
};

struct JointFinetuneWeights {
    double beta = 0.3;  // weight of the CTC loss
};

inline constexpr std::int32_t kBlank = 0;

// Mean cross-entropy over masked frames only. logits [T, K], one target per
// frame. Throws std::invalid_argument when no frame is masked.
template <class T>
ad::Tensor<T> masked_prediction_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets,
                                     const std::vector<bool>& mask);

// Label-smoothed cross-entropy averaged over positions; the smoothing mass is
// spread uniformly over the whole vocabulary.
template <class T>
ad::Tensor<T> sequence_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets, double smoothing);

template <class T>
ad::Tensor<T> joint_ssl_loss(const ad::Tensor<T>& masked_loss, const ad::Tensor<T>& seq_loss, JointSSLWeights w);

template <class T>
ad::Tensor<T> joint_finetune_loss(const ad::Tensor<T>& ctc, const ad::Tensor<T>& attention, JointFinetuneWeights w);

// Fewest frames that can emit `labels`: one per label plus a blank between
// each pair of equal neighbours.
std::size_t ctc_min_frames(std::span<const std::int32_t> labels);

// -log P(labels | log_probs) by the log-space forward recursion; the backward
// rule uses the matching beta recursion. log_probs [T, C + 1] must already be
// normalized. Throws std::invalid_argument if labels cannot fit in T frames.
template <class T>
ad::Tensor<T> ctc_nll(const ad::Tensor<T>& log_probs, std::span<const std::int32_t> labels,
                      std::int32_t blank = kBlank);

// ctc_nll(log_softmax(logits)).
template <class T>
ad::Tensor<T> ctc_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> labels,
                       std::int32_t blank = kBlank);

}  // namespace jedssl::losses
