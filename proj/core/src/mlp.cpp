#include "custemb/classify.hpp"

#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace custemb {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Layout {
    std::size_t inputs, hidden;
    std::size_t w1() const { return 0; }
    std::size_t b1() const { return hidden * inputs; }
    std::size_t w2() const { return b1() + hidden; }
    std::size_t b2() const { return w2() + hidden; }
    std::size_t total() const { return b2() + 1; }
};

// Loss and gradient for one batch stored row-major in `x`. `mask` is batch x hidden or empty.
double forward_backward(const Layout& layout, const double* theta, const RowMatrix& x, const Eigen::VectorXd& y,
                        double alpha, const RowMatrix* mask, double* grad) {
    const auto h = static_cast<Eigen::Index>(layout.hidden);
    const auto d = static_cast<Eigen::Index>(layout.inputs);
    const double batch = static_cast<double>(x.rows());
    Eigen::Map<const RowMatrix> w1(theta + layout.w1(), h, d);
    Eigen::Map<const Eigen::VectorXd> b1(theta + layout.b1(), h);
    Eigen::Map<const Eigen::VectorXd> w2(theta + layout.w2(), h);
    const double b2 = theta[layout.b2()];

    RowMatrix z1 = x * w1.transpose();
    z1.rowwise() += b1.transpose();
    RowMatrix a = z1.cwiseMax(0.0);
    if (mask) a = a.cwiseProduct(*mask);
    Eigen::VectorXd z2 = a * w2;
    z2.array() += b2;

    double loss = 0.0;
    Eigen::VectorXd dz2(z2.size());
    for (Eigen::Index i = 0; i < z2.size(); ++i) {
        loss += softplus(z2[i]) - y[i] * z2[i];
        dz2[i] = (sigmoid(z2[i]) - y[i]) / batch;
    }
    loss = loss / batch + alpha / (2.0 * batch) * (w1.squaredNorm() + w2.squaredNorm());

    Eigen::Map<RowMatrix> g_w1(grad + layout.w1(), h, d);
    Eigen::Map<Eigen::VectorXd> g_b1(grad + layout.b1(), h);
    Eigen::Map<Eigen::VectorXd> g_w2(grad + layout.w2(), h);
    g_w2 = a.transpose() * dz2 + (alpha / batch) * w2;
    grad[layout.b2()] = dz2.sum();
    RowMatrix dz1 = dz2 * w2.transpose();
    if (mask) dz1 = dz1.cwiseProduct(*mask);
    dz1 = dz1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    g_w1 = dz1.transpose() * x + (alpha / batch) * w1;
    g_b1 = dz1.colwise().sum().transpose();
    return loss;
}

}  // namespace

std::vector<double> MlpWeights::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.push_back(b2);
    return flat;
}

void MlpWeights::assign(std::span<const double> flat) {
    const Layout layout{inputs, hidden};
    if (flat.size() != layout.total()) throw DomainError("MLP parameter vector has the wrong length");
    w1.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(layout.b1()));
    b1.assign(flat.begin() + static_cast<std::ptrdiff_t>(layout.b1()), flat.begin() + static_cast<std::ptrdiff_t>(layout.w2()));
    w2.assign(flat.begin() + static_cast<std::ptrdiff_t>(layout.w2()), flat.begin() + static_cast<std::ptrdiff_t>(layout.b2()));
    b2 = flat[layout.b2()];
}

double mlp_loss_and_gradient(const MlpWeights& weights, MatrixView x, std::span<const std::uint8_t> labels,
                             double alpha, std::span<const double> dropout_mask, std::vector<double>& gradient) {
    const Layout layout{weights.inputs, weights.hidden};
    if (x.cols != weights.inputs) throw DomainError("input width does not match the network");
    const auto theta = weights.flatten();
    RowMatrix batch = Eigen::Map<const RowMatrix>(x.data.data(), static_cast<Eigen::Index>(x.rows),
                                                  static_cast<Eigen::Index>(x.cols));
    Eigen::VectorXd y(static_cast<Eigen::Index>(x.rows));
    for (std::size_t i = 0; i < x.rows; ++i) y[static_cast<Eigen::Index>(i)] = labels[i];
    gradient.assign(layout.total(), 0.0);
    if (dropout_mask.empty()) return forward_backward(layout, theta.data(), batch, y, alpha, nullptr, gradient.data());
    if (dropout_mask.size() != x.rows * weights.hidden) throw DomainError("dropout mask has the wrong size");
    const RowMatrix mask = Eigen::Map<const RowMatrix>(dropout_mask.data(), static_cast<Eigen::Index>(x.rows),
                                                       static_cast<Eigen::Index>(weights.hidden));
    return forward_backward(layout, theta.data(), batch, y, alpha, &mask, gradient.data());
}

double Mlp::score(std::span<const double> row) const {
    const auto h = weights.hidden;
    const auto d = weights.inputs;
    std::vector<double> z(d);
    standardizer.apply(row, z);
    double out = weights.b2;
    for (std::size_t u = 0; u < h; ++u) {
        double a = weights.b1[u];
        const double* w = weights.w1.data() + u * d;
        for (std::size_t j = 0; j < d; ++j) a += w[j] * z[j];
        if (a > 0.0) out += weights.w2[u] * a;
    }
    return sigmoid(out);
}

TrainedModel train_mlp(const FeatureTable& table, const MlpParams& params) {
    if (table.rows() < 2) throw DomainError("MLP needs at least 2 training rows");
    const std::size_t pos = table.positives();
    if (pos == 0 || pos == table.rows()) throw DomainError("MLP needs both classes in the training table");
    if (params.hidden == 0) throw ConfigError("must be at least 1", "mlp.hidden");
    if (!(params.dropout >= 0.0 && params.dropout < 1.0)) throw ConfigError("must lie in [0, 1)", "mlp.dropout");
    if (params.batch_size == 0) throw ConfigError("must be at least 1", "mlp.batch_size");

    Mlp model;
    const auto raw = view_of(table);
    model.standardizer = Standardizer::fit(raw);
    const std::vector<double> data = model.standardizer.transform(raw);
    const std::size_t n = raw.rows;
    const std::size_t d = raw.cols;
    const Layout layout{d, params.hidden};

    Rng rng(derive_seed(params.seed, 0x31));
    std::vector<double> theta(layout.total(), 0.0);
    const double bound1 = std::sqrt(6.0 / static_cast<double>(d + params.hidden));
    const double bound2 = std::sqrt(6.0 / static_cast<double>(params.hidden + 1));
    for (std::size_t i = layout.w1(); i < layout.b1(); ++i) theta[i] = rng.uniform(-bound1, bound1);
    for (std::size_t i = layout.w2(); i < layout.b2(); ++i) theta[i] = rng.uniform(-bound2, bound2);

    std::vector<double> grad(layout.total());
    std::vector<double> m(layout.total(), 0.0), v(layout.total(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double keep = 1.0 - params.dropout;
    std::uint64_t step = 0;
    RowMatrix batch, mask;
    Eigen::VectorXd y;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stalled = 0;
    for (std::size_t epoch = 0; epoch < params.max_iter; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += params.batch_size) {
            const std::size_t stop = std::min(n, start + params.batch_size);
            const auto b = static_cast<Eigen::Index>(stop - start);
            batch.resize(b, static_cast<Eigen::Index>(d));
            y.resize(b);
            for (Eigen::Index k = 0; k < b; ++k) {
                const std::size_t i = order[start + static_cast<std::size_t>(k)];
                std::copy_n(data.data() + i * d, d, batch.row(k).data());
                y[k] = table.labels[i];
            }
            const RowMatrix* mask_ptr = nullptr;
            if (params.dropout > 0.0) {
                mask.resize(b, static_cast<Eigen::Index>(params.hidden));
                for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
                mask_ptr = &mask;
            }
            const double loss = forward_backward(layout, theta.data(), batch, y, params.alpha, mask_ptr, grad.data());
            epoch_loss += loss * static_cast<double>(b);

            ++step;
            const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < theta.size(); ++p) {
                m[p] = params.beta1 * m[p] + (1.0 - params.beta1) * grad[p];
                v[p] = params.beta2 * v[p] + (1.0 - params.beta2) * grad[p] * grad[p];
                theta[p] -= params.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + params.epsilon);
            }
        }
        const double mean_loss = epoch_loss / static_cast<double>(n);
        model.epoch_loss.push_back(mean_loss);
        if (params.n_iter_no_change > 0) {
            stalled = mean_loss > best_loss - params.tol ? stalled + 1 : 0;
            best_loss = std::min(best_loss, mean_loss);
            if (stalled > params.n_iter_no_change) break;
        }
    }
    model.weights.inputs = d;
    model.weights.hidden = params.hidden;
    model.weights.assign(theta);
    return TrainedModel(ModelSpec{params}, table.column_names, std::move(model));
}

}  // namespace custemb
