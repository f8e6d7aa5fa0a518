// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Lloyd's k-means with k-means++ seeding. Cluster ids of frame features are
// the pseudo-labels for masked prediction.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace jedssl::units {

// Row-major frame features, always held in double.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    void append(std::span<const double> row_major, std::size_t n_rows, std::size_t n_cols);
    template <class T>
    void append_rows(std::span<const T> row_major, std::size_t n_cols) {
        std::vector<double> tmp(row_major.begin(), row_major.end());
        append(tmp, tmp.size() / n_cols, n_cols);
    }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

struct KMeansModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // after each assignment step
    bool converged = false;
};

struct ClusterAssignment {
    std::vector<std::int32_t> ids;
    std::vector<double> sq_distance;
};

// Throws std::invalid_argument when features.rows < k.
KMeansModel kmeans_fit(const FeatureMatrix& features, std::size_t k, std::size_t max_iters, std::uint64_t seed);

// Nearest centroid (squared Euclidean), ties to the lowest index.
ClusterAssignment kmeans_assign(const KMeansModel& model, const FeatureMatrix& features);

double inertia(const KMeansModel& model, const FeatureMatrix& features);

// Fraction of frames whose cluster's majority label matches their own label.
double cluster_purity(std::span<const std::int32_t> cluster_ids, std::span<const std::int32_t> labels);

// Features of encoder layer `layer` (0 = frontend output) for one utterance.
using LayerFeatureFn = std::function<FeatureMatrix(std::size_t utterance_index, std::size_t layer)>;

// Second k-means pass over an intermediate layer of a trained model.
// `depth` is the number of encoder layers; valid layers are 0..depth.
KMeansModel refit_from_model_layer(const LayerFeatureFn& layer_features, std::size_t layer_index, std::size_t depth,
                                   std::size_t n_utterances, std::size_t k, std::size_t max_iters,
                                   std::uint64_t seed);

// kmeans.json (K, D, seed, inertia, ...) + centroids.f32 (little-endian float32).
void save_kmeans(const KMeansModel& model, const std::filesystem::path& dir);
KMeansModel load_kmeans(const std::filesystem::path& dir);

}  // namespace jedssl::units
