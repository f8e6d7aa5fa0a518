// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>

#include "checks.hpp"
#include "jedssl/ops.hpp"
#include "jedssl/targets.hpp"
#include "support.hpp"

namespace jedssl::acceptance {

namespace {

std::vector<std::int32_t> random_run_sequence(std::mt19937_64& rng) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    const auto vocab = std::uniform_int_distribution<std::int32_t>(1, 6)(rng);
    std::uniform_int_distribution<std::int32_t> sym(0, vocab - 1);
    std::vector<std::int32_t> out;
    while (out.size() < n) {
        const auto run = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
        const auto s = sym(rng);
        for (std::size_t i = 0; i < run && out.size() < n; ++i) out.push_back(s);
    }
    return out;
}

}  // namespace

Verdict check_target_properties() {
    constexpr std::size_t kSequences = 10000;
    std::mt19937_64 rng(3003);
    Verdict v{true, "", {}};
    std::size_t idempotent = 0, no_dups = 0, inverse = 0, invariant = 0;
    auto cheap = ad::Tensor<double>::zeros({1, 1});
    for (std::size_t n = 0; n < kSequences; ++n) {
        const auto seq = random_run_sequence(rng);
        const auto once = targets::collapse_repetitions(seq);
        if (targets::collapse_repetitions(once) == once) ++idempotent;
        bool adjacent = false;
        for (std::size_t i = 1; i < once.size(); ++i) adjacent |= once[i] == once[i - 1];
        if (!adjacent) ++no_dups;
        const auto runs = targets::run_lengths(seq);
        std::vector<std::int32_t> expanded;
        if (runs.size() == once.size()) {
            for (std::size_t i = 0; i < once.size(); ++i) expanded.insert(expanded.end(), runs[i], once[i]);
        }
        if (expanded == seq) ++inverse;

        // Decoder targets from the frames before and after masking agree.
        const std::int32_t k = 6;
        const auto reference = targets::prepare_decoder_targets(seq, k).ids;
        const auto p = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
        auto spec = targets::sample_mask_spans(seq.size(), p, 1 + rng() % 10, rng);
        auto feats = ad::Tensor<double>::zeros({seq.size(), 1});
        auto masked = targets::apply_mask(feats, spec, cheap, seq);
        auto full = targets::mask_from_starts(seq.size(), std::vector<std::size_t>{0}, seq.size());
        auto all_masked = targets::apply_mask(feats, full, cheap, seq);
        if (targets::prepare_decoder_targets(masked.targets, k).ids == reference &&
            targets::prepare_decoder_targets(all_masked.targets, k).ids == reference) {
            ++invariant;
        }
    }
    v.pass = idempotent == kSequences && no_dups == kSequences && inverse == kSequences && invariant == kSequences;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%zu sequences: idempotent %zu, no adjacent duplicates %zu, run-length inverse %zu, mask-invariant "
                  "targets %zu",
                  kSequences, idempotent, no_dups, inverse, invariant);
    v.detail = buf;
    return v;
}

Verdict check_masking() {
    constexpr std::size_t kTrials = 10000, kFrames = 1000, kSpan = 10;
    constexpr double kP = 0.08, kTol = 0.01;
    std::mt19937_64 rng(4004);
    std::size_t well_formed = 0;
    double lib_fraction = 0.0;
    for (std::size_t trial = 0; trial < kTrials; ++trial) {
        const auto spec = targets::sample_mask_spans(kFrames, kP, kSpan, rng);
        // Rebuild the union of spans from the reported starts.
        std::vector<bool> expect(kFrames, false);
        bool ok = spec.masked.size() == kFrames && std::is_sorted(spec.starts.begin(), spec.starts.end());
        for (auto s : spec.starts) {
            ok &= s < kFrames;
            for (std::size_t t = s; t < std::min(s + kSpan, kFrames); ++t) expect[t] = true;
        }
        ok &= expect == spec.masked;
        // Every maximal run is at least one full span, or runs into the end.
        std::size_t t = 0;
        while (t < kFrames) {
            if (!spec.masked[t]) {
                ++t;
                continue;
            }
            std::size_t e = t;
            while (e < kFrames && spec.masked[e]) ++e;
            ok &= (e - t >= kSpan) || e == kFrames;
            t = e;
        }
        if (ok) ++well_formed;
        lib_fraction += static_cast<double>(spec.masked_count()) / kFrames;
    }
    lib_fraction /= kTrials;

    // Independent simulation: Bernoulli starts, each covering the next span.
    std::mt19937_64 sim_rng(99);
    std::bernoulli_distribution start(kP);
    double sim_fraction = 0.0;
    for (std::size_t trial = 0; trial < kTrials; ++trial) {
        std::size_t covered_until = 0, masked = 0;
        for (std::size_t t = 0; t < kFrames; ++t) {
            if (start(sim_rng)) covered_until = t + kSpan;
            if (t < covered_until) ++masked;
        }
        sim_fraction += static_cast<double>(masked) / kFrames;
    }
    sim_fraction /= kTrials;

    double exact = 0.0;
    for (std::size_t t = 0; t < kFrames; ++t) exact += 1.0 - std::pow(1.0 - kP, static_cast<double>(std::min(t + 1, kSpan)));
    exact /= kFrames;

    Verdict v;
    v.pass = well_formed == kTrials && std::abs(lib_fraction - sim_fraction) <= kTol;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%zu/%zu masks are unions of length-%zu spans; masked fraction %.4f vs simulation %.4f (closed form "
                  "%.4f), tolerance 0.01",
                  well_formed, kTrials, kSpan, lib_fraction, sim_fraction, exact);
    v.detail = buf;
    return v;
}

}  // namespace jedssl::acceptance
