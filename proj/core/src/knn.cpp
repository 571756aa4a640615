#include "custemb/classify.hpp"

#include "custemb/error.hpp"
#include "custemb/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace custemb {

Knn::Vote Knn::vote(std::span<const double> query) const {
    const std::size_t n = labels.size();
    const std::size_t k = std::min(params.n_neighbors, n);
    const bool euclidean = params.p == 2.0;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = rows.data() + i * cols;
        double acc = 0.0;
        if (euclidean) {
            for (std::size_t j = 0; j < cols; ++j) {
                const double diff = r[j] - query[j];
                acc += diff * diff;
            }
        } else {
            for (std::size_t j = 0; j < cols; ++j) acc += std::pow(std::abs(r[j] - query[j]), params.p);
        }
        dist[i] = {acc, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    Vote out;
    std::size_t zero_total = 0, zero_positive = 0;
    for (std::size_t j = 0; j < k && dist[j].first == 0.0; ++j) {
        ++zero_total;
        zero_positive += labels[dist[j].second];
    }
    if (zero_total > 0) {
        out.score = static_cast<double>(zero_positive) / static_cast<double>(zero_total);
        out.label = 2 * zero_positive > zero_total ? 1 : 0;
        return out;
    }
    double score0 = 0.0, score1 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double w = 1.0;
        if (params.weights == KnnWeights::kDistance) {
            const double d = euclidean ? std::sqrt(dist[j].first) : std::pow(dist[j].first, 1.0 / params.p);
            w = 1.0 / d;
        }
        (labels[dist[j].second] ? score1 : score0) += w;
    }
    out.score = score1 / (score0 + score1);
    out.label = score1 > score0 ? 1 : 0;
    return out;
}

TrainedModel train_knn(const FeatureTable& table, const KnnParams& params) {
    if (params.n_neighbors == 0) throw ConfigError("must be at least 1", "knn.n_neighbors");
    if (params.n_neighbors > table.rows()) {
        throw ConfigError("n_neighbors=" + std::to_string(params.n_neighbors) + " exceeds the " +
                              std::to_string(table.rows()) + " training rows",
                          "knn.n_neighbors");
    }
    if (!(params.p >= 1.0)) throw ConfigError("Minkowski p must be >= 1", "knn.p");
    Knn model;
    model.params = params;
    model.cols = table.cols();
    model.rows = table.values;
    model.labels = table.labels;
    return TrainedModel(ModelSpec{params}, table.column_names, std::move(model));
}

KnnPrediction knn_predict(const FeatureTable& train_table, MatrixView queries, const KnnParams& params, int threads) {
    const auto model = train_knn(train_table, params);
    const auto& knn = std::get<Knn>(model.state());
    if (queries.cols != knn.cols) throw DomainError("query width does not match the training table");
    KnnPrediction out;
    out.labels.resize(queries.rows);
    out.scores.resize(queries.rows);
    parallel_for(queries.rows, threads, [&](std::size_t i) {
        const auto v = knn.vote(queries.row(i));
        out.labels[i] = v.label;
        out.scores[i] = v.score;
    });
    return out;
}

}  // namespace custemb
