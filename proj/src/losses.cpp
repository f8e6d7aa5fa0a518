// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jedssl/ops.hpp"

namespace jedssl::losses {

namespace {

void check_weight(const char* name, double w) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

template <class T>
void check_targets(const char* op, const ad::Tensor<T>& logits, std::span<const std::int32_t> targets) {
    if (logits.rank() != 2) throw ad::ShapeError(std::string(op) + ": logits must be 2-D, got " + ad::to_string(logits.shape()));
    if (targets.size() != logits.dim(0)) {
        throw ad::ShapeError(std::string(op) + ": " + std::to_string(targets.size()) + " targets for logits " +
                             ad::to_string(logits.shape()));
    }
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

template <class T>
ad::Tensor<T> masked_prediction_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets,
                                     const std::vector<bool>& mask) {
    check_targets("masked_prediction_loss", logits, targets);
    if (mask.size() != targets.size()) {
        throw ad::ShapeError("masked_prediction_loss: mask covers " + std::to_string(mask.size()) + " of " +
                             std::to_string(targets.size()) + " frames");
    }
    std::size_t masked = 0;
    for (bool m : mask) masked += m ? 1 : 0;
    if (masked == 0) throw std::invalid_argument("masked_prediction_loss: no masked frames");
    std::vector<T> weight(mask.size());
    for (std::size_t t = 0; t < mask.size(); ++t) weight[t] = mask[t] ? T(1) / static_cast<T>(masked) : T(0);
    auto picked = ad::pick(ad::log_softmax(logits), targets);
    auto w = ad::Tensor<T>::from({mask.size()}, std::move(weight));
    return ad::scale(ad::sum(ad::mul(picked, w)), T(-1));
}

template <class T>
ad::Tensor<T> sequence_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets, double smoothing) {
    check_targets("sequence_loss", logits, targets);
    if (!(smoothing >= 0.0 && smoothing < 1.0)) throw std::invalid_argument("sequence_loss: smoothing must lie in [0, 1)");
    auto lp = ad::log_softmax(logits);
    auto nll = ad::scale(ad::mean(ad::pick(lp, targets)), T(-1));
    if (smoothing == 0.0) return nll;
    const auto cells = static_cast<T>(lp.numel());
    auto uniform = ad::scale(ad::sum(lp), T(-1) / cells);
    return ad::add(ad::scale(nll, static_cast<T>(1.0 - smoothing)), ad::scale(uniform, static_cast<T>(smoothing)));
}

template <class T>
ad::Tensor<T> joint_ssl_loss(const ad::Tensor<T>& masked_loss, const ad::Tensor<T>& seq_loss, JointSSLWeights w) {
    check_weight("alpha", w.alpha);
    return ad::add(ad::scale(masked_loss, static_cast<T>(w.alpha)), ad::scale(seq_loss, static_cast<T>(1.0 - w.alpha)));
}

template <class T>
ad::Tensor<T> joint_finetune_loss(const ad::Tensor<T>& ctc, const ad::Tensor<T>& attention, JointFinetuneWeights w) {
    check_weight("beta", w.beta);
    return ad::add(ad::scale(ctc, static_cast<T>(w.beta)), ad::scale(attention, static_cast<T>(1.0 - w.beta)));
}

std::size_t ctc_min_frames(std::span<const std::int32_t> labels) {
    std::size_t n = labels.size();
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] == labels[i - 1]) ++n;
    }
    return n;
}

template <class T>
ad::Tensor<T> ctc_nll(const ad::Tensor<T>& log_probs, std::span<const std::int32_t> labels, std::int32_t blank) {
    if (log_probs.rank() != 2) throw ad::ShapeError("ctc: log_probs must be [T, C], got " + ad::to_string(log_probs.shape()));
    const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);
    if (blank < 0 || static_cast<std::size_t>(blank) >= classes) throw std::out_of_range("ctc: blank id outside classes");
    for (auto l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= classes || l == blank) {
            throw std::out_of_range("ctc: label " + std::to_string(l) + " is blank or outside " +
                                    std::to_string(classes) + " classes");
        }
    }
    if (ctc_min_frames(labels) > frames) {
        throw std::invalid_argument("ctc: label sequence of length " + std::to_string(labels.size()) + " needs " +
                                    std::to_string(ctc_min_frames(labels)) + " frames, only " +
                                    std::to_string(frames) + " available");
    }
    // Blank-interleaved extended labels.
    const std::size_t states = 2 * labels.size() + 1;
    std::vector<std::int32_t> ext(states, blank);
    for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
    auto skip_allowed = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

    auto lp = log_probs.data();
    auto emit = [&](std::size_t t, std::size_t s) { return static_cast<double>(lp[t * classes + static_cast<std::size_t>(ext[s])]); };

    std::vector<double> alpha(frames * states, kNegInf);
    alpha[0] = emit(0, 0);
    if (states > 1) alpha[1] = emit(0, 1);
    for (std::size_t t = 1; t < frames; ++t) {
        for (std::size_t s = 0; s < states; ++s) {
            double a = alpha[(t - 1) * states + s];
            if (s >= 1) a = log_add(a, alpha[(t - 1) * states + s - 1]);
            if (skip_allowed(s)) a = log_add(a, alpha[(t - 1) * states + s - 2]);
            alpha[t * states + s] = a == kNegInf ? kNegInf : a + emit(t, s);
        }
    }
    const std::size_t last = (frames - 1) * states;
    double log_p = alpha[last + states - 1];
    if (states > 1) log_p = log_add(log_p, alpha[last + states - 2]);

    auto ext_saved = std::make_shared<std::vector<std::int32_t>>(std::move(ext));
    auto alpha_saved = std::make_shared<std::vector<double>>(std::move(alpha));
    auto lp_tensor = log_probs;
    std::vector<T> value{static_cast<T>(-log_p)};

    // Backward through the beta recursion; grad wrt log_probs[t, k] is
    // -exp(logsumexp_{s: ext[s] = k}(alpha + beta - lp[t, k]) - log p).
    auto node = std::make_shared<ad::Node<T>>();
    node->shape = {1};
    node->value = std::move(value);
    node->op = "ctc_nll";
    if (ad::grad_enabled() && log_probs.requires_grad()) {
        node->requires_grad = true;
        node->inputs.push_back(log_probs.node_ptr());
        node->backward = [frames, classes, states, log_p, ext_saved, alpha_saved](ad::Node<T>& self) {
            auto& in = *self.inputs[0];
            auto& g = in.grad_buffer();
            const auto& lpv = in.value;
            const auto& ext = *ext_saved;
            const auto& alpha = *alpha_saved;
            auto emit = [&](std::size_t t, std::size_t s) { return static_cast<double>(lpv[t * classes + static_cast<std::size_t>(ext[s])]); };
            auto skip_from = [&](std::size_t s) { return s + 2 < states && ext[s + 2] != ext[s] && ext[s + 2] != ext[0]; };
            std::vector<double> beta(frames * states, kNegInf);
            const std::size_t last = (frames - 1) * states;
            beta[last + states - 1] = emit(frames - 1, states - 1);
            if (states > 1) beta[last + states - 2] = emit(frames - 1, states - 2);
            for (std::size_t t = frames - 1; t-- > 0;) {
                for (std::size_t s = 0; s < states; ++s) {
                    double b = beta[(t + 1) * states + s];
                    if (s + 1 < states) b = log_add(b, beta[(t + 1) * states + s + 1]);
                    if (skip_from(s)) b = log_add(b, beta[(t + 1) * states + s + 2]);
                    beta[t * states + s] = b == kNegInf ? kNegInf : b + emit(t, s);
                }
            }
            const double upstream = static_cast<double>(self.grad[0]);
            std::vector<double> occupancy(classes);
            for (std::size_t t = 0; t < frames; ++t) {
                std::fill(occupancy.begin(), occupancy.end(), kNegInf);
                for (std::size_t s = 0; s < states; ++s) {
                    const double ab = alpha[t * states + s] + beta[t * states + s];
                    auto k = static_cast<std::size_t>(ext[s]);
                    if (alpha[t * states + s] != kNegInf && beta[t * states + s] != kNegInf) {
                        occupancy[k] = log_add(occupancy[k], ab);
                    }
                }
                for (std::size_t k = 0; k < classes; ++k) {
                    if (occupancy[k] == kNegInf) continue;
                    const double d = -std::exp(occupancy[k] - static_cast<double>(lpv[t * classes + k]) - log_p);
                    g[t * classes + k] += static_cast<T>(upstream * d);
                }
            }
        };
    }
    if (!std::isfinite(static_cast<double>(node->value[0]))) {
        throw ad::NumericalError("ctc: non-finite loss (label has zero probability under the given log_probs)");
    }
    return ad::Tensor<T>(std::move(node));
}

template <class T>
ad::Tensor<T> ctc_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> labels, std::int32_t blank) {
    return ctc_nll(ad::log_softmax(logits), labels, blank);
}

#define JEDSSL_INSTANTIATE_LOSSES(T)                                                                              \
    template ad::Tensor<T> masked_prediction_loss<T>(const ad::Tensor<T>&, std::span<const std::int32_t>,         \
                                                     const std::vector<bool>&);                                   \
    template ad::Tensor<T> sequence_loss<T>(const ad::Tensor<T>&, std::span<const std::int32_t>, double);         \
    template ad::Tensor<T> joint_ssl_loss<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, JointSSLWeights);        \
    template ad::Tensor<T> joint_finetune_loss<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, JointFinetuneWeights); \
    template ad::Tensor<T> ctc_nll<T>(const ad::Tensor<T>&, std::span<const std::int32_t>, std::int32_t);         \
    template ad::Tensor<T> ctc_loss<T>(const ad::Tensor<T>&, std::span<const std::int32_t>, std::int32_t);

JEDSSL_INSTANTIATE_LOSSES(float)
JEDSSL_INSTANTIATE_LOSSES(double)

#undef JEDSSL_INSTANTIATE_LOSSES

}  // namespace jedssl::losses
