#include "custemb/classify.hpp"

#include "custemb/error.hpp"
#include "custemb/parallel.hpp"
#include "json_io.hpp"

#include <fstream>
#include <sstream>

namespace custemb {

namespace {

using detail::Json;

template <typename T>
void read_field(const Json& obj, const char* name, T& out, const std::string& prefix) {
    if (!obj.contains(name)) return;
    try {
        out = obj.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("has the wrong type", prefix + "." + name);
    }
}

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> known, const std::string& prefix,
                    std::initializer_list<std::string_view> ignored, std::vector<std::string>* warnings) {
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        if (std::find(known.begin(), known.end(), key) != known.end()) continue;
        if (std::find(ignored.begin(), ignored.end(), key) != ignored.end()) {
            if (warnings) warnings->push_back(prefix + "." + key + " has no effect with brute-force search; ignored");
            continue;
        }
        throw ConfigError("unknown hyperparameter", prefix + "." + key);
    }
}

Json tree_to_json(const DecisionTree& tree) {
    Json features = Json::array(), thresholds = Json::array(), lefts = Json::array(), rights = Json::array(),
         fractions = Json::array(), samples = Json::array(), impurities = Json::array();
    for (const auto& n : tree.nodes) {
        features.push_back(n.feature);
        thresholds.push_back(n.threshold);
        lefts.push_back(n.left);
        rights.push_back(n.right);
        fractions.push_back(n.positive_fraction);
        samples.push_back(n.samples);
        impurities.push_back(n.impurity);
    }
    return Json{{"feature", features}, {"threshold", thresholds}, {"left", lefts}, {"right", rights},
                {"positive_fraction", fractions}, {"samples", samples}, {"impurity", impurities}};
}

DecisionTree tree_from_json(const Json& j) {
    DecisionTree tree;
    const auto& features = j.at("feature");
    tree.nodes.resize(features.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        auto& n = tree.nodes[i];
        n.feature = features.at(i).get<int>();
        n.threshold = j.at("threshold").at(i).get<double>();
        n.left = j.at("left").at(i).get<int>();
        n.right = j.at("right").at(i).get<int>();
        n.positive_fraction = j.at("positive_fraction").at(i).get<double>();
        n.samples = j.at("samples").at(i).get<std::size_t>();
        n.impurity = j.at("impurity").at(i).get<double>();
    }
    return tree;
}

Json standardizer_to_json(const Standardizer& s) { return Json{{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer standardizer_from_json(const Json& j) {
    return Standardizer{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

std::string_view weights_name(KnnWeights w) { return w == KnnWeights::kDistance ? "distance" : "uniform"; }

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
    if (name == "DT") return ModelKind::kDecisionTree;
    if (name == "RF") return ModelKind::kRandomForest;
    if (name == "LR") return ModelKind::kLogisticRegression;
    if (name == "KNN") return ModelKind::kKnn;
    if (name == "MLP") return ModelKind::kMlp;
    if (name == "SVC") {
        throw UnsupportedModelError("SVC (RBF support vector classifier) is not supported in this artifact", "model");
    }
    throw ConfigError("unknown model kind '" + std::string(name) + "' (expected DT, RF, LR, KNN or MLP)", "model");
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kDecisionTree: return "DT";
        case ModelKind::kRandomForest: return "RF";
        case ModelKind::kLogisticRegression: return "LR";
        case ModelKind::kKnn: return "KNN";
        case ModelKind::kMlp: return "MLP";
    }
    return "?";
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
    switch (kind) {
        case ModelKind::kDecisionTree: return ModelSpec{DecisionTreeParams{}};
        case ModelKind::kRandomForest: return ModelSpec{RandomForestParams{}};
        case ModelKind::kLogisticRegression: return ModelSpec{LogisticRegressionParams{}};
        case ModelKind::kKnn: return ModelSpec{KnnParams{}};
        case ModelKind::kMlp: return ModelSpec{MlpParams{}};
    }
    throw ConfigError("unknown model kind", "model");
}

namespace detail {

Json hyperparameters_to_json(const ModelSpec& spec) {
    return std::visit(
        [](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DecisionTreeParams>) {
                return Json{{"max_depth", p.max_depth}, {"min_samples_split", p.min_samples_split},
                            {"min_samples_leaf", p.min_samples_leaf}};
            } else if constexpr (std::is_same_v<T, RandomForestParams>) {
                return Json{{"n_estimators", p.n_estimators}, {"max_depth", p.max_depth},
                            {"max_features", p.max_features}, {"min_samples_split", p.min_samples_split},
                            {"min_samples_leaf", p.min_samples_leaf}, {"bootstrap", p.bootstrap},
                            {"random_state", p.seed}};
            } else if constexpr (std::is_same_v<T, LogisticRegressionParams>) {
                return Json{{"C", p.C}, {"penalty", "l2"}, {"max_epochs", p.max_epochs},
                            {"batch_size", p.batch_size}, {"learning_rate", p.learning_rate},
                            {"tolerance", p.tolerance}, {"seed", p.seed}};
            } else if constexpr (std::is_same_v<T, KnnParams>) {
                return Json{{"n_neighbors", p.n_neighbors}, {"metric", "minkowski"}, {"p", p.p},
                            {"weights", weights_name(p.weights)}};
            } else {
                return Json{{"hidden_layer_sizes", Json::array({p.hidden})}, {"alpha", p.alpha},
                            {"dropout", p.dropout}, {"activation", "relu"}, {"solver", "adam"},
                            {"max_iter", p.max_iter}, {"tol", p.tol}, {"n_iter_no_change", p.n_iter_no_change},
                            {"batch_size", p.batch_size},
                            {"learning_rate", p.learning_rate}, {"beta1", p.beta1}, {"beta2", p.beta2},
                            {"epsilon", p.epsilon}, {"seed", p.seed}};
            }
        },
        spec.params);
}

ModelSpec model_spec_from_json(ModelKind kind, const Json& params, const std::string& prefix,
                               std::vector<std::string>* warnings) {
    ModelSpec spec = ModelSpec::defaults(kind);
    if (params.is_null()) return spec;
    if (!params.is_object()) throw ConfigError("must be an object", prefix);
    auto fixed_string = [&](const char* key, std::string_view expected) {
        if (params.contains(key) && params.at(key) != expected) {
            throw ConfigError("only '" + std::string(expected) + "' is supported", prefix + "." + key);
        }
    };
    std::visit(
        [&](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DecisionTreeParams>) {
                reject_unknown(params, {"max_depth", "min_samples_split", "min_samples_leaf"}, prefix, {}, warnings);
                read_field(params, "max_depth", p.max_depth, prefix);
                read_field(params, "min_samples_split", p.min_samples_split, prefix);
                read_field(params, "min_samples_leaf", p.min_samples_leaf, prefix);
            } else if constexpr (std::is_same_v<T, RandomForestParams>) {
                reject_unknown(params,
                               {"n_estimators", "max_depth", "max_features", "min_samples_split", "min_samples_leaf",
                                "bootstrap", "random_state"},
                               prefix, {}, warnings);
                read_field(params, "n_estimators", p.n_estimators, prefix);
                read_field(params, "max_depth", p.max_depth, prefix);
                read_field(params, "max_features", p.max_features, prefix);
                read_field(params, "min_samples_split", p.min_samples_split, prefix);
                read_field(params, "min_samples_leaf", p.min_samples_leaf, prefix);
                read_field(params, "bootstrap", p.bootstrap, prefix);
                read_field(params, "random_state", p.seed, prefix);
            } else if constexpr (std::is_same_v<T, LogisticRegressionParams>) {
                reject_unknown(params,
                               {"C", "penalty", "max_epochs", "batch_size", "learning_rate", "tolerance", "seed"},
                               prefix, {}, warnings);
                fixed_string("penalty", "l2");
                read_field(params, "C", p.C, prefix);
                read_field(params, "max_epochs", p.max_epochs, prefix);
                read_field(params, "batch_size", p.batch_size, prefix);
                read_field(params, "learning_rate", p.learning_rate, prefix);
                read_field(params, "tolerance", p.tolerance, prefix);
                read_field(params, "seed", p.seed, prefix);
            } else if constexpr (std::is_same_v<T, KnnParams>) {
                reject_unknown(params, {"n_neighbors", "metric", "p", "weights"}, prefix, {"algorithm", "leaf_size"},
                               warnings);
                fixed_string("metric", "minkowski");
                read_field(params, "n_neighbors", p.n_neighbors, prefix);
                read_field(params, "p", p.p, prefix);
                if (params.contains("weights")) {
                    const auto w = params.at("weights");
                    if (w == "distance") {
                        p.weights = KnnWeights::kDistance;
                    } else if (w == "uniform") {
                        p.weights = KnnWeights::kUniform;
                    } else {
                        throw ConfigError("must be 'distance' or 'uniform'", prefix + ".weights");
                    }
                }
            } else {
                reject_unknown(params,
                               {"hidden_layer_sizes", "alpha", "dropout", "activation", "solver", "max_iter",
                                "tol", "n_iter_no_change", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "seed"},
                               prefix, {}, warnings);
                fixed_string("activation", "relu");
                fixed_string("solver", "adam");
                if (params.contains("hidden_layer_sizes")) {
                    const auto& h = params.at("hidden_layer_sizes");
                    if (!h.is_array() || h.size() != 1 || !h.at(0).is_number_unsigned()) {
                        throw ConfigError("exactly one hidden layer is supported, e.g. [100]",
                                          prefix + ".hidden_layer_sizes");
                    }
                    p.hidden = h.at(0).get<std::size_t>();
                }
                read_field(params, "alpha", p.alpha, prefix);
                read_field(params, "dropout", p.dropout, prefix);
                read_field(params, "max_iter", p.max_iter, prefix);
                read_field(params, "tol", p.tol, prefix);
                read_field(params, "n_iter_no_change", p.n_iter_no_change, prefix);
                read_field(params, "batch_size", p.batch_size, prefix);
                read_field(params, "learning_rate", p.learning_rate, prefix);
                read_field(params, "beta1", p.beta1, prefix);
                read_field(params, "beta2", p.beta2, prefix);
                read_field(params, "epsilon", p.epsilon, prefix);
                read_field(params, "seed", p.seed, prefix);
            }
        },
        spec.params);
    return spec;
}

}  // namespace detail

TrainedModel::TrainedModel(ModelSpec spec, std::vector<std::string> columns, State state)
    : spec_(std::move(spec)), columns_(std::move(columns)), state_(std::move(state)) {
    if (spec_.params.index() != state_.index()) throw DomainError("model state does not match its spec");
}

std::vector<double> TrainedModel::predict_scores(MatrixView rows, int threads) const {
    if (rows.cols != columns_.size()) {
        throw DomainError("input has " + std::to_string(rows.cols) + " columns, model was trained on " +
                          std::to_string(columns_.size()));
    }
    std::vector<double> scores(rows.rows);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            parallel_for(rows.rows, threads, [&](std::size_t i) {
                if constexpr (std::is_same_v<T, Knn>) {
                    scores[i] = m.vote(rows.row(i)).score;
                } else {
                    scores[i] = m.score(rows.row(i));
                }
            });
        },
        state_);
    return scores;
}

std::vector<std::uint8_t> TrainedModel::predict(MatrixView rows, int threads) const {
    std::vector<std::uint8_t> labels(rows.rows);
    if (const auto* knn = std::get_if<Knn>(&state_)) {
        if (rows.cols != columns_.size()) throw DomainError("input width does not match the model");
        parallel_for(rows.rows, threads, [&](std::size_t i) { labels[i] = knn->vote(rows.row(i)).label; });
        return labels;
    }
    const auto scores = predict_scores(rows, threads);
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] >= 0.5 ? 1 : 0;
    return labels;
}

std::string TrainedModel::to_json() const {
    Json j;
    j["format"] = "custemb-model";
    j["version"] = 1;
    j["kind"] = std::string(to_string(kind()));
    j["hyperparameters"] = detail::hyperparameters_to_json(spec_);
    j["columns"] = columns_;
    Json state;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTree>) {
                state["tree"] = tree_to_json(m);
            } else if constexpr (std::is_same_v<T, RandomForest>) {
                auto& trees = state["trees"] = Json::array();
                for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            } else if constexpr (std::is_same_v<T, LogisticRegression>) {
                state["standardizer"] = standardizer_to_json(m.standardizer);
                state["weights"] = m.weights;
                state["bias"] = m.bias;
            } else if constexpr (std::is_same_v<T, Knn>) {
                state["cols"] = m.cols;
                state["rows"] = m.rows;
                state["labels"] = m.labels;
            } else {
                state["standardizer"] = standardizer_to_json(m.standardizer);
                state["inputs"] = m.weights.inputs;
                state["hidden"] = m.weights.hidden;
                state["w1"] = m.weights.w1;
                state["b1"] = m.weights.b1;
                state["w2"] = m.weights.w2;
                state["b2"] = m.weights.b2;
            }
        },
        state_);
    j["state"] = std::move(state);
    return j.dump() + "\n";
}

TrainedModel TrainedModel::from_json(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("model document is not valid JSON: ") + e.what(), 1);
    }
    try {
        if (j.at("format") != "custemb-model") throw FormatError("not a model document", 1);
        const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
        ModelSpec spec = detail::model_spec_from_json(kind, j.at("hyperparameters"), "hyperparameters", nullptr);
        auto columns = j.at("columns").get<std::vector<std::string>>();
        const Json& s = j.at("state");
        State state = DecisionTree{};
        switch (kind) {
            case ModelKind::kDecisionTree: state = tree_from_json(s.at("tree")); break;
            case ModelKind::kRandomForest: {
                RandomForest forest;
                for (const auto& t : s.at("trees")) forest.trees.push_back(tree_from_json(t));
                state = std::move(forest);
                break;
            }
            case ModelKind::kLogisticRegression: {
                LogisticRegression m;
                m.standardizer = standardizer_from_json(s.at("standardizer"));
                m.weights = s.at("weights").get<std::vector<double>>();
                m.bias = s.at("bias").get<double>();
                state = std::move(m);
                break;
            }
            case ModelKind::kKnn: {
                Knn m;
                m.params = std::get<KnnParams>(spec.params);
                m.cols = s.at("cols").get<std::size_t>();
                m.rows = s.at("rows").get<std::vector<double>>();
                m.labels = s.at("labels").get<std::vector<std::uint8_t>>();
                state = std::move(m);
                break;
            }
            case ModelKind::kMlp: {
                Mlp m;
                m.standardizer = standardizer_from_json(s.at("standardizer"));
                m.weights.inputs = s.at("inputs").get<std::size_t>();
                m.weights.hidden = s.at("hidden").get<std::size_t>();
                m.weights.w1 = s.at("w1").get<std::vector<double>>();
                m.weights.b1 = s.at("b1").get<std::vector<double>>();
                m.weights.w2 = s.at("w2").get<std::vector<double>>();
                m.weights.b2 = s.at("b2").get<double>();
                state = std::move(m);
                break;
            }
        }
        return TrainedModel(std::move(spec), std::move(columns), std::move(state));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what(), 1);
    }
}

void TrainedModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model to '" + path + "'");
    out << to_json();
    if (!out) throw IoError("write failed for '" + path + "'");
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

TrainedModel train_model(const FeatureTable& table, const ModelSpec& spec, int threads) {
    return std::visit(
        [&](const auto& p) -> TrainedModel {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DecisionTreeParams>) {
                return train_decision_tree(table, p);
            } else if constexpr (std::is_same_v<T, RandomForestParams>) {
                return train_random_forest(table, p, threads);
            } else if constexpr (std::is_same_v<T, LogisticRegressionParams>) {
                return train_logistic_regression(table, p);
            } else if constexpr (std::is_same_v<T, KnnParams>) {
                return train_knn(table, p);
            } else {
                return train_mlp(table, p);
            }
        },
        spec.params);
}

}  // namespace custemb
