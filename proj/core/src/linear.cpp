#include "custemb/classify.hpp"

#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace custemb {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double signed_label(std::uint8_t label) { return label ? 1.0 : -1.0; }

double margin(std::span<const double> x, std::span<const double> w, double b) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
    return z;
}

void require_two_classes(const FeatureTable& table, std::string_view model) {
    const std::size_t pos = table.positives();
    if (pos == 0 || pos == table.rows()) {
        throw DomainError(std::string(model) + " needs both classes in the training table");
    }
}

}  // namespace

Standardizer Standardizer::fit(MatrixView x) {
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 1.0);
    if (x.rows == 0) return s;
    const double n = static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += r[j];
    }
    for (double& m : s.mean) m /= n;
    std::vector<double> var(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double sd = std::sqrt(var[j] / n);
        s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

std::vector<double> Standardizer::transform(MatrixView x) const {
    std::vector<double> out(x.rows * x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) apply(x.row(i), std::span<double>(out.data() + i * x.cols, x.cols));
    return out;
}

double logistic_objective(MatrixView x, std::span<const std::uint8_t> labels, std::span<const double> w, double b,
                          double C) {
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double loss = reg / (2.0 * C);
    for (std::size_t i = 0; i < x.rows; ++i) loss += softplus(-signed_label(labels[i]) * margin(x.row(i), w, b));
    return loss;
}

std::vector<double> logistic_gradient(MatrixView x, std::span<const std::uint8_t> labels, std::span<const double> w,
                                      double b, double C) {
    std::vector<double> grad(w.size() + 1, 0.0);
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] = w[j] / C;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double y = signed_label(labels[i]);
        const auto r = x.row(i);
        const double g = -y * sigmoid(-y * margin(r, w, b));
        for (std::size_t j = 0; j < w.size(); ++j) grad[j] += g * r[j];
        grad.back() += g;
    }
    return grad;
}

double LogisticRegression::score(std::span<const double> row) const {
    std::vector<double> z(row.size());
    standardizer.apply(row, z);
    return sigmoid(margin(z, weights, bias));
}

TrainedModel train_logistic_regression(const FeatureTable& table, const LogisticRegressionParams& params) {
    require_two_classes(table, "logistic regression");
    if (!(params.C > 0.0)) throw ConfigError("must be positive", "lr.C");
    if (params.batch_size == 0) throw ConfigError("must be at least 1", "lr.batch_size");

    LogisticRegression model;
    const auto raw = view_of(table);
    model.standardizer = Standardizer::fit(raw);
    const std::vector<double> data = model.standardizer.transform(raw);
    const MatrixView x{data, raw.rows, raw.cols};
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    model.weights.assign(d, 0.0);

    // Minimizes the objective divided by n. The L2 term is applied as an exact proximal
    // step, which stays stable for any C.
    const double lambda = 1.0 / (params.C * static_cast<double>(n));
    const double lr = params.learning_rate;
    Rng rng(derive_seed(params.seed, 0x10));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(d);
    double previous = logistic_objective(x, table.labels, model.weights, model.bias, params.C) / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < params.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += params.batch_size) {
            const std::size_t stop = std::min(n, start + params.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = order[k];
                const double y = signed_label(table.labels[i]);
                const auto r = x.row(i);
                const double g = -y * sigmoid(-y * margin(r, model.weights, model.bias)) * scale;
                for (std::size_t j = 0; j < d; ++j) grad[j] += g * r[j];
                grad_b += g;
            }
            const double shrink = 1.0 / (1.0 + lr * lambda);
            for (std::size_t j = 0; j < d; ++j) model.weights[j] = (model.weights[j] - lr * grad[j]) * shrink;
            model.bias -= lr * grad_b;
        }
        const double current =
            logistic_objective(x, table.labels, model.weights, model.bias, params.C) / static_cast<double>(n);
        model.epoch_objective.push_back(current);
        if (previous - current < params.tolerance) break;
        previous = current;
    }
    return TrainedModel(ModelSpec{params}, table.column_names, std::move(model));
}

}  // namespace custemb
