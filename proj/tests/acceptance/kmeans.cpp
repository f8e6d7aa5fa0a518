// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <limits>

#include "checks.hpp"
#include "jedssl/config.hpp"
#include "jedssl/corpus.hpp"
#include "jedssl/frontend.hpp"
#include "jedssl/kmeans.hpp"

namespace jedssl::acceptance {

namespace {

units::FeatureMatrix blobs(std::size_t n, std::size_t d, std::size_t centres, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> means(centres * d);
    for (auto& m : means) m = 4.0 * n01(rng);
    units::FeatureMatrix f;
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = rng() % centres;
        for (std::size_t j = 0; j < d; ++j) row[j] = means[c * d + j] + n01(rng);
        f.append(row, 1, d);
    }
    return f;
}

std::int32_t brute_nearest(const units::KMeansModel& m, std::span<const double> x) {
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m.k; ++c) {
        double d = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) {
            const double diff = x[j] - m.centroids[c * m.dim + j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::int32_t>(c);
        }
    }
    return best;
}

}  // namespace

Verdict check_kmeans() {
    Verdict v{true, "", {}};
    std::mt19937_64 rng(6006);

    std::size_t fits = 0, monotone = 0, iterations = 0;
    std::size_t points = 0, agree = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rng() % 6, k = 2 + rng() % 6;
        auto f = blobs(200 + rng() % 300, d, 1 + rng() % 8, rng);
        auto m = units::kmeans_fit(f, k, 50, rng());
        ++fits;
        iterations += m.inertia_history.size();
        bool mono = true;
        for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
            mono &= m.inertia_history[i] <= m.inertia_history[i - 1] * (1.0 + 1e-12);
        }
        if (mono) ++monotone;
        // Fresh points plus the centroids themselves.
        auto probe = blobs(500, d, 3, rng);
        probe.append(m.centroids, k, d);
        const auto a = units::kmeans_assign(m, probe);
        for (std::size_t i = 0; i < probe.rows; ++i) {
            ++points;
            if (a.ids[i] == brute_nearest(m, probe.row(i))) ++agree;
        }
    }
    if (monotone != fits) v.pass = false;
    if (agree != points) v.pass = false;

    // Three-phone corpus through the untrained desk-tiny frontend.
    const auto preset = config::preset("desk-tiny");
    auto spec = preset.corpus;
    spec.n_latent_phones = 3;
    spec.n_utterances = 20;
    spec.n_test_utterances = 0;
    const auto corp = corpus::generate_synthetic_corpus(spec);
    ad::ParamStore<double> fparams;
    frontend::init_frontend_params(fparams, preset.model.frontend, preset.seed);
    units::FeatureMatrix feats;
    std::vector<std::int32_t> labels;
    for (const auto& u : corp.utterances) {
        auto fr = frontend::conv_feature_extractor<double>(u.wave, fparams, preset.model.frontend).frames;
        feats.append_rows<double>(fr.data(), fr.dim(1));
        auto l = corpus::frame_phone_labels(u, preset.model.frontend);
        labels.insert(labels.end(), l.begin(), l.end());
    }
    const auto km = units::kmeans_fit(feats, 3, preset.kmeans.max_iters, preset.seed);
    const double purity = units::cluster_purity(units::kmeans_assign(km, feats).ids, labels);
    if (!(purity > 0.8)) v.pass = false;

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "inertia monotone in %zu/%zu fits (%zu iterations); assignment matches brute force on %zu/%zu "
                  "points; purity %.3f on 3 phones with K=3 (%zu frames), needs > 0.8",
                  monotone, fits, iterations, agree, points, purity, feats.rows);
    v.detail = buf;
    return v;
}

}  // namespace jedssl::acceptance
