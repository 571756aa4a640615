#pragma once

#include "custemb/ingest.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace custemb {

/// Borrowed row-major matrix.
struct MatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

inline MatrixView view_of(const FeatureTable& table) { return {table.values, table.rows(), table.cols()}; }

enum class ModelKind { kDecisionTree, kRandomForest, kLogisticRegression, kKnn, kMlp };

/// "DT", "RF", "LR", "KNN", "MLP". "SVC" is recognised and rejected with
/// UnsupportedModelError; anything else is a ConfigError.
ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct DecisionTreeParams {
    std::size_t max_depth = 3;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
};

struct RandomForestParams {
    std::size_t n_estimators = 100;
    std::size_t max_depth = 50;
    std::size_t max_features = 10;
    std::size_t min_samples_split = 8;
    std::size_t min_samples_leaf = 5;
    bool bootstrap = false;
    std::uint64_t seed = 10;
};

struct LogisticRegressionParams {
    double C = 0.001;  // inverse L2 strength
    std::size_t max_epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 0.01;
    double tolerance = 1e-6;
    std::uint64_t seed = 1;
};

enum class KnnWeights { kUniform, kDistance };

struct KnnParams {
    std::size_t n_neighbors = 14;
    double p = 2.0;  // Minkowski exponent
    KnnWeights weights = KnnWeights::kDistance;
};

struct MlpParams {
    std::size_t hidden = 100;
    double alpha = 0.05;
    double dropout = 0.1;
    std::size_t max_iter = 100;  // epochs
    /// Training stops once the epoch loss has failed to improve on the best loss by `tol`
    /// for more than `n_iter_no_change` consecutive epochs; 0 disables the check.
    double tol = 1e-4;
    std::size_t n_iter_no_change = 10;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
};

using Hyperparameters =
    std::variant<DecisionTreeParams, RandomForestParams, LogisticRegressionParams, KnnParams, MlpParams>;

struct ModelSpec {
    Hyperparameters params;

    ModelKind kind() const noexcept { return static_cast<ModelKind>(params.index()); }
    static ModelSpec defaults(ModelKind kind);
};

// ---------------------------------------------------------------------------
// Learned state

/// Mean and scale fitted on training rows; a zero-variance column keeps scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(MatrixView x);
    void apply(std::span<const double> in, std::span<double> out) const;
    std::vector<double> transform(MatrixView x) const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double positive_fraction = 0.0;
    std::size_t samples = 0;
    double impurity = 0.0;  // Gini

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double score(std::span<const double> row) const;
    std::size_t depth() const;
    /// Weighted impurity decrease per feature, unnormalized.
    std::vector<double> impurity_decrease(std::size_t n_features) const;
};

struct TreeGrowth {
    std::size_t max_depth = 3;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 = consider every feature
};

class Rng;

/// CART on Gini impurity. `rows` lists the training rows (repeats allowed). With
/// max_features > 0, candidate features are drawn from `feature_rng` without replacement
/// until max_features non-constant ones have been evaluated. Ties prefer the lower
/// feature index, then the lower threshold.
DecisionTree grow_tree(MatrixView x, std::span<const std::uint8_t> labels, std::vector<std::size_t> rows,
                       const TreeGrowth& growth, Rng* feature_rng);

struct RandomForest {
    std::vector<DecisionTree> trees;
    double score(std::span<const double> row) const;
};

struct LogisticRegression {
    Standardizer standardizer;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> epoch_objective;  // training curve, not persisted

    double score(std::span<const double> row) const;
};

struct Knn {
    KnnParams params;
    std::size_t cols = 0;
    std::vector<double> rows;
    std::vector<std::uint8_t> labels;

    struct Vote {
        double score = 0.0;  // class-1 share of the vote, in [0, 1]
        std::uint8_t label = 0;
    };
    Vote vote(std::span<const double> query) const;
};

struct MlpWeights {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;

    std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
};

struct Mlp {
    Standardizer standardizer;
    MlpWeights weights;
    std::vector<double> epoch_loss;  // training curve, not persisted

    double score(std::span<const double> row) const;
};

// ---------------------------------------------------------------------------
// Objectives exposed for gradient checking

/// (1/(2C))||w||^2 + sum_i log(1 + exp(-y_i (w.x_i + b))), labels mapped to y in {-1, +1}.
double logistic_objective(MatrixView x, std::span<const std::uint8_t> labels, std::span<const double> w, double b,
                          double C);
/// Gradient of logistic_objective: weights first, bias last.
std::vector<double> logistic_gradient(MatrixView x, std::span<const std::uint8_t> labels, std::span<const double> w,
                                      double b, double C);

/// Mean binary cross-entropy + (alpha / (2 n)) ||W||^2 over the given rows with optional
/// inverted-dropout mask (hidden units, already scaled by 1/(1-rate)); empty mask = no
/// dropout. Writes the gradient in MlpWeights::flatten order.
double mlp_loss_and_gradient(const MlpWeights& weights, MatrixView x, std::span<const std::uint8_t> labels,
                             double alpha, std::span<const double> dropout_mask, std::vector<double>& gradient);

// ---------------------------------------------------------------------------

class TrainedModel {
public:
    using State = std::variant<DecisionTree, RandomForest, LogisticRegression, Knn, Mlp>;

    TrainedModel(ModelSpec spec, std::vector<std::string> columns, State state);

    ModelKind kind() const noexcept { return spec_.kind(); }
    const ModelSpec& spec() const noexcept { return spec_; }
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const State& state() const noexcept { return state_; }

    /// Class-1 scores in [0, 1]. DomainError when the width differs from training.
    std::vector<double> predict_scores(MatrixView rows, int threads = 0) const;
    /// score >= 0.5, except KNN which labels by its own vote (ties to class 0).
    std::vector<std::uint8_t> predict(MatrixView rows, int threads = 0) const;

    std::vector<double> predict_scores(const FeatureTable& table, int threads = 0) const {
        return predict_scores(view_of(table), threads);
    }
    std::vector<std::uint8_t> predict(const FeatureTable& table, int threads = 0) const {
        return predict(view_of(table), threads);
    }

    std::string to_json() const;
    static TrainedModel from_json(std::string_view text);
    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);

private:
    ModelSpec spec_;
    std::vector<std::string> columns_;
    State state_;
};

TrainedModel train_decision_tree(const FeatureTable& table, const DecisionTreeParams& params = {});
TrainedModel train_random_forest(const FeatureTable& table, const RandomForestParams& params = {}, int threads = 0);
TrainedModel train_logistic_regression(const FeatureTable& table, const LogisticRegressionParams& params = {});
TrainedModel train_knn(const FeatureTable& table, const KnnParams& params = {});
TrainedModel train_mlp(const FeatureTable& table, const MlpParams& params = {});
TrainedModel train_model(const FeatureTable& table, const ModelSpec& spec, int threads = 0);

/// Labels and class-1 scores from a brute-force KNN over raw training rows.
struct KnnPrediction {
    std::vector<std::uint8_t> labels;
    std::vector<double> scores;
};
KnnPrediction knn_predict(const FeatureTable& train_table, MatrixView queries, const KnnParams& params, int threads = 0);

/// Normalized impurity-decrease importance, descending (ties by column order). Forests
/// average the per-tree normalized importances. UnsupportedModelError for non-tree models.
std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model);

}  // namespace custemb
