// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/kmeans.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "jedssl/kernels.hpp"
#include "jedssl/rng.hpp"
#include "jedssl/serialize.hpp"

namespace jedssl::units {

void FeatureMatrix::append(std::span<const double> row_major, std::size_t n_rows, std::size_t n_cols) {
    if (rows == 0) cols = n_cols;
    if (n_cols != cols) {
        throw std::invalid_argument("FeatureMatrix: appending width " + std::to_string(n_cols) + " to width " +
                                    std::to_string(cols));
    }
    values.insert(values.end(), row_major.begin(), row_major.end());
    rows += n_rows;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

std::vector<double> kmeanspp_init(const FeatureMatrix& x, std::size_t k, std::mt19937_64& rng) {
    std::vector<double> centroids;
    centroids.reserve(k * x.cols);
    std::uniform_int_distribution<std::size_t> pick(0, x.rows - 1);
    auto first = x.row(pick(rng));
    centroids.insert(centroids.end(), first.begin(), first.end());
    std::vector<double> d2(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) d2[i] = sq_dist(x.row(i), first);
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t chosen;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            chosen = x.rows - 1;
            for (std::size_t i = 0; i < x.rows; ++i) {
                r -= d2[i];
                if (r < 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        auto row = x.row(chosen);
        centroids.insert(centroids.end(), row.begin(), row.end());
        for (std::size_t i = 0; i < x.rows; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), row));
    }
    return centroids;
}

ClusterAssignment assign_with(std::span<const double> centroids, std::size_t k, const FeatureMatrix& x) {
    ClusterAssignment a;
    a.ids.resize(x.rows);
    a.sq_distance.resize(x.rows);
    kernels::assign_nearest({x.rows, x.cols, k}, x.values.data(), centroids.data(), a.ids.data(), a.sq_distance.data());
    return a;
}

double total(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

KMeansModel kmeans_fit(const FeatureMatrix& features, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
    if (k == 0) throw std::invalid_argument("kmeans_fit: K must be at least 1");
    if (features.rows < k) {
        throw std::invalid_argument("kmeans_fit: " + std::to_string(features.rows) + " frames cannot fill K = " +
                                    std::to_string(k) + " clusters");
    }
    if (max_iters == 0) throw std::invalid_argument("kmeans_fit: max_iters must be positive");
    const std::size_t d = features.cols;
    auto rng = make_rng(seed);
    KMeansModel model;
    model.k = k;
    model.dim = d;
    model.seed = seed;
    model.centroids = kmeanspp_init(features, k, rng);

    std::vector<std::int32_t> previous;
    for (std::size_t it = 0; it < max_iters; ++it) {
        auto a = assign_with(model.centroids, k, features);
        model.inertia = total(a.sq_distance);
        model.inertia_history.push_back(model.inertia);
        model.iterations = it + 1;
        if (a.ids == previous) {
            model.converged = true;
            break;
        }
        if (it + 1 == max_iters) break;

        std::vector<double> sums(k * d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < features.rows; ++i) {
            const auto c = static_cast<std::size_t>(a.ids[i]);
            auto row = features.row(i);
            for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
            counts[c] += 1;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < d; ++j) model.centroids[c * d + j] = sums[c * d + j] / counts[c];
        }
        // Empty clusters take the points currently farthest from their centroid.
        std::vector<std::size_t> order(features.rows);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return a.sq_distance[x] > a.sq_distance[y]; });
        std::size_t next_far = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            auto row = features.row(order[next_far++]);
            std::copy(row.begin(), row.end(), model.centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
            a.ids.clear();  // force another assignment pass
        }
        previous = std::move(a.ids);
    }
    return model;
}

ClusterAssignment kmeans_assign(const KMeansModel& model, const FeatureMatrix& features) {
    if (features.rows > 0 && features.cols != model.dim) {
        throw std::invalid_argument("kmeans_assign: feature dimension " + std::to_string(features.cols) +
                                    " does not match centroid dimension " + std::to_string(model.dim));
    }
    return assign_with(model.centroids, model.k, features);
}

double inertia(const KMeansModel& model, const FeatureMatrix& features) {
    return total(kmeans_assign(model, features).sq_distance);
}

double cluster_purity(std::span<const std::int32_t> cluster_ids, std::span<const std::int32_t> labels) {
    if (cluster_ids.size() != labels.size() || labels.empty()) {
        throw std::invalid_argument("cluster_purity: need equal-length, non-empty id and label lists");
    }
    std::map<std::int32_t, std::map<std::int32_t, std::size_t>> table;
    for (std::size_t i = 0; i < labels.size(); ++i) table[cluster_ids[i]][labels[i]] += 1;
    std::size_t majority = 0;
    for (const auto& [cluster, counts] : table) {
        std::size_t best = 0;
        for (const auto& [label, n] : counts) best = std::max(best, n);
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(labels.size());
}

KMeansModel refit_from_model_layer(const LayerFeatureFn& layer_features, std::size_t layer_index, std::size_t depth,
                                   std::size_t n_utterances, std::size_t k, std::size_t max_iters,
                                   std::uint64_t seed) {
    if (layer_index > depth) {
        throw std::out_of_range("refit_from_model_layer: layer " + std::to_string(layer_index) +
                                " outside encoder depth " + std::to_string(depth));
    }
    FeatureMatrix all;
    for (std::size_t u = 0; u < n_utterances; ++u) {
        auto f = layer_features(u, layer_index);
        all.append(f.values, f.rows, f.cols);
    }
    return kmeans_fit(all, k, max_iters, seed);
}

void save_kmeans(const KMeansModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json header = {{"format", "jedssl-kmeans"},
                             {"version", 1},
                             {"K", model.k},
                             {"D", model.dim},
                             {"seed", model.seed},
                             {"inertia", model.inertia},
                             {"iterations", model.iterations},
                             {"converged", model.converged}};
    std::vector<float> c(model.centroids.begin(), model.centroids.end());
    write_f32_file(dir / "centroids.f32", c);
    write_text_file(dir / "kmeans.json", header.dump(2) + "\n");
}

KMeansModel load_kmeans(const std::filesystem::path& dir) {
    const auto header = nlohmann::json::parse(read_text_file(dir / "kmeans.json"));
    if (header.value("format", "") != "jedssl-kmeans") throw std::runtime_error(dir.string() + ": not a k-means model");
    KMeansModel m;
    m.k = header.at("K");
    m.dim = header.at("D");
    m.seed = header.at("seed");
    m.inertia = header.at("inertia");
    m.iterations = header.at("iterations");
    m.converged = header.at("converged");
    auto c = read_f32_file(dir / "centroids.f32");
    if (c.size() != m.k * m.dim) {
        throw std::runtime_error(dir.string() + ": centroid payload holds " + std::to_string(c.size()) +
                                 " values, header says " + std::to_string(m.k * m.dim));
    }
    m.centroids.assign(c.begin(), c.end());
    return m;
}

}  // namespace jedssl::units
