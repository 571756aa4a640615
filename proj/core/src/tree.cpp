#include "custemb/classify.hpp"

#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/parallel.hpp"
#include "custemb/rng.hpp"

#include <algorithm>
#include <numeric>

namespace custemb {

namespace {

double gini(double n1, double n) {
    if (n <= 0.0) return 0.0;
    const double p1 = n1 / n;
    const double p0 = 1.0 - p1;
    return 1.0 - p1 * p1 - p0 * p0;
}

// Per-feature sorted distinct values and the rank of every row's value, shared by all
// trees grown on the same matrix.
struct RankedColumns {
    std::size_t rows = 0;
    std::vector<std::vector<double>> distinct;
    std::vector<std::uint32_t> rank;  // column-major: rank[f * rows + r]

    explicit RankedColumns(MatrixView x) : rows(x.rows), distinct(x.cols), rank(x.cols * x.rows) {
        std::vector<double> column(x.rows);
        for (std::size_t f = 0; f < x.cols; ++f) {
            for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.data[r * x.cols + f];
            auto& d = distinct[f];
            d = column;
            std::sort(d.begin(), d.end());
            d.erase(std::unique(d.begin(), d.end()), d.end());
            for (std::size_t r = 0; r < x.rows; ++r) {
                rank[f * x.rows + r] =
                    static_cast<std::uint32_t>(std::lower_bound(d.begin(), d.end(), column[r]) - d.begin());
            }
        }
    }
};

class TreeBuilder {
public:
    TreeBuilder(MatrixView x, const RankedColumns& ranked, std::span<const std::uint8_t> labels,
                std::vector<std::size_t> rows, const TreeGrowth& growth, Rng* rng)
        : x_(x), ranked_(ranked), labels_(labels), rows_(std::move(rows)), growth_(growth), rng_(rng) {
        features_.resize(x.cols);
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    DecisionTree build() {
        if (!rows_.empty()) grow(0, rows_.size(), 0);
        return DecisionTree{std::move(nodes_)};
    }

private:
    struct Split {
        double decrease = 0.0;
        std::size_t feature = 0;
        double threshold = 0.0;
        bool found = false;
    };

    // Rows sharing one feature value inside a node.
    struct Bucket {
        std::uint32_t rank;
        std::uint32_t count;
        std::uint32_t positives;
    };

    double value(std::size_t row, std::size_t feature) const { return x_.data[row * x_.cols + feature]; }
    std::uint32_t rank(std::size_t row, std::size_t feature) const { return ranked_.rank[feature * ranked_.rows + row]; }

    bool is_constant(std::size_t begin, std::size_t end, std::size_t feature) const {
        const auto first = rank(rows_[begin], feature);
        for (std::size_t i = begin + 1; i < end; ++i) {
            if (rank(rows_[i], feature) != first) return false;
        }
        return true;
    }

    std::vector<std::size_t> candidate_features(std::size_t begin, std::size_t end) {
        const std::size_t cols = x_.cols;
        if (growth_.max_features == 0 || growth_.max_features >= cols || rng_ == nullptr) return features_;
        std::vector<std::size_t> chosen;
        for (std::size_t t = 0; t < cols && chosen.size() < growth_.max_features; ++t) {
            const std::size_t j = t + rng_->below(cols - t);
            std::swap(features_[t], features_[j]);
            if (!is_constant(begin, end, features_[t])) chosen.push_back(features_[t]);
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    // Fills buckets_ with the node's distinct values of `f` in ascending order.
    void collect_buckets(std::size_t begin, std::size_t end, std::size_t f) {
        buckets_.clear();
        const std::size_t n = end - begin;
        const std::size_t k = ranked_.distinct[f].size();
        if (k <= 2 * n) {
            count_.assign(k, 0);
            positive_.assign(k, 0);
            for (std::size_t i = begin; i < end; ++i) {
                const auto r = rank(rows_[i], f);
                ++count_[r];
                positive_[r] += labels_[rows_[i]];
            }
            for (std::size_t r = 0; r < k; ++r) {
                if (count_[r] > 0) buckets_.push_back({static_cast<std::uint32_t>(r), count_[r], positive_[r]});
            }
            return;
        }
        sorted_.clear();
        for (std::size_t i = begin; i < end; ++i) sorted_.push_back((std::uint64_t{rank(rows_[i], f)} << 1) | labels_[rows_[i]]);
        std::sort(sorted_.begin(), sorted_.end());
        for (const std::uint64_t key : sorted_) {
            const auto r = static_cast<std::uint32_t>(key >> 1);
            if (buckets_.empty() || buckets_.back().rank != r) buckets_.push_back({r, 0, 0});
            ++buckets_.back().count;
            buckets_.back().positives += static_cast<std::uint32_t>(key & 1);
        }
    }

    Split best_split(std::size_t begin, std::size_t end, std::size_t positives) {
        const std::size_t n = end - begin;
        const double nd = static_cast<double>(n);
        const double n1 = static_cast<double>(positives);
        const double parent_term = (n1 * n1 + (nd - n1) * (nd - n1)) / nd;
        const double min_gain = 1e-12 * nd;
        const std::size_t min_leaf = std::max<std::size_t>(1, growth_.min_samples_leaf);
        Split best;
        for (std::size_t f : candidate_features(begin, end)) {
            collect_buckets(begin, end, f);
            const auto& values = ranked_.distinct[f];
            std::size_t nl = 0;
            double left1 = 0.0;
            for (std::size_t b = 0; b + 1 < buckets_.size(); ++b) {
                nl += buckets_[b].count;
                left1 += buckets_[b].positives;
                const std::size_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double l = static_cast<double>(nl);
                const double r = static_cast<double>(nr);
                const double right1 = n1 - left1;
                const double left_term = (left1 * left1 + (l - left1) * (l - left1)) / l;
                const double right_term = (right1 * right1 + (r - right1) * (r - right1)) / r;
                const double decrease = left_term + right_term - parent_term;
                // Near-equal decreases are ties, so rounding cannot override the (feature, threshold) order.
                if (decrease > min_gain && (!best.found || decrease > best.decrease + min_gain)) {
                    const double lo = values[buckets_[b].rank];
                    const double hi = values[buckets_[b + 1].rank];
                    double threshold = 0.5 * (lo + hi);
                    if (threshold >= hi) threshold = lo;
                    best = Split{decrease, f, threshold, true};
                }
            }
        }
        return best;
    }

    int grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t n = end - begin;
        std::size_t positives = 0;
        for (std::size_t i = begin; i < end; ++i) positives += labels_[rows_[i]];
        const int id = static_cast<int>(nodes_.size());
        TreeNode node;
        node.samples = n;
        node.positive_fraction = static_cast<double>(positives) / static_cast<double>(n);
        node.impurity = gini(static_cast<double>(positives), static_cast<double>(n));
        nodes_.push_back(node);

        const bool pure = positives == 0 || positives == n;
        if (pure || depth >= growth_.max_depth || n < std::max<std::size_t>(2, growth_.min_samples_split) ||
            n < 2 * std::max<std::size_t>(1, growth_.min_samples_leaf)) {
            return id;
        }
        const Split split = best_split(begin, end, positives);
        if (!split.found) return id;

        const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::size_t r) { return value(r, split.feature) <= split.threshold; });
        const auto middle = static_cast<std::size_t>(mid - rows_.begin());
        const int left = grow(begin, middle, depth + 1);
        const int right = grow(middle, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].feature = static_cast<int>(split.feature);
        nodes_[static_cast<std::size_t>(id)].threshold = split.threshold;
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    MatrixView x_;
    const RankedColumns& ranked_;
    std::span<const std::uint8_t> labels_;
    std::vector<std::size_t> rows_;
    TreeGrowth growth_;
    Rng* rng_;
    std::vector<std::size_t> features_;
    std::vector<TreeNode> nodes_;
    std::vector<Bucket> buckets_;
    std::vector<std::uint32_t> count_;
    std::vector<std::uint32_t> positive_;
    std::vector<std::uint64_t> sorted_;
};

std::size_t depth_from(const std::vector<TreeNode>& nodes, int id) {
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(depth_from(nodes, node.left), depth_from(nodes, node.right));
}

}  // namespace

DecisionTree grow_tree(MatrixView x, std::span<const std::uint8_t> labels, std::vector<std::size_t> rows,
                       const TreeGrowth& growth, Rng* feature_rng) {
    const RankedColumns ranked(x);
    return TreeBuilder(x, ranked, labels, std::move(rows), growth, feature_rng).build();
}

double DecisionTree::score(std::span<const double> row) const {
    if (nodes.empty()) return 0.0;
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& node = nodes[id];
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return nodes[id].positive_fraction;
}

std::size_t DecisionTree::depth() const { return nodes.empty() ? 0 : depth_from(nodes, 0); }

std::vector<double> DecisionTree::impurity_decrease(std::size_t n_features) const {
    std::vector<double> out(n_features, 0.0);
    for (const auto& node : nodes) {
        if (node.is_leaf()) continue;
        const auto& l = nodes[static_cast<std::size_t>(node.left)];
        const auto& r = nodes[static_cast<std::size_t>(node.right)];
        const double gain = static_cast<double>(node.samples) * node.impurity -
                            static_cast<double>(l.samples) * l.impurity - static_cast<double>(r.samples) * r.impurity;
        out[static_cast<std::size_t>(node.feature)] += std::max(0.0, gain);
    }
    return out;
}

double RandomForest::score(std::span<const double> row) const {
    if (trees.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.score(row);
    return sum / static_cast<double>(trees.size());
}

TrainedModel train_decision_tree(const FeatureTable& table, const DecisionTreeParams& params) {
    if (table.rows() == 0) throw DomainError("cannot train a decision tree on an empty table");
    std::vector<std::size_t> rows(table.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const TreeGrowth growth{params.max_depth, params.min_samples_split, params.min_samples_leaf, 0};
    auto tree = grow_tree(view_of(table), table.labels, std::move(rows), growth, nullptr);
    return TrainedModel(ModelSpec{params}, table.column_names, std::move(tree));
}

TrainedModel train_random_forest(const FeatureTable& table, const RandomForestParams& params, int threads) {
    if (table.rows() == 0) throw DomainError("cannot train a random forest on an empty table");
    if (params.max_features > table.cols()) {
        throw ConfigError("max_features=" + std::to_string(params.max_features) + " exceeds the " +
                              std::to_string(table.cols()) + " available columns",
                          "rf.max_features");
    }
    if (params.n_estimators == 0) throw ConfigError("must be at least 1", "rf.n_estimators");
    const TreeGrowth growth{params.max_depth, params.min_samples_split, params.min_samples_leaf, params.max_features};
    RandomForest forest;
    forest.trees.resize(params.n_estimators);
    const auto x = view_of(table);
    const RankedColumns ranked(x);
    parallel_for(params.n_estimators, threads, [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<std::size_t> rows(table.rows());
        if (params.bootstrap) {
            for (auto& r : rows) r = rng.below(table.rows());
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        forest.trees[t] = TreeBuilder(x, ranked, table.labels, std::move(rows), growth, &rng).build();
    });
    return TrainedModel(ModelSpec{params}, table.column_names, std::move(forest));
}

std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& model) {
    const std::size_t n = model.columns().size();
    std::vector<double> total(n, 0.0);
    auto add_normalized = [&](const DecisionTree& tree, double weight) {
        const auto dec = tree.impurity_decrease(n);
        const double sum = std::accumulate(dec.begin(), dec.end(), 0.0);
        if (sum <= 0.0) return;
        for (std::size_t i = 0; i < n; ++i) total[i] += weight * dec[i] / sum;
    };
    if (const auto* tree = std::get_if<DecisionTree>(&model.state())) {
        add_normalized(*tree, 1.0);
    } else if (const auto* forest = std::get_if<RandomForest>(&model.state())) {
        for (const auto& t : forest->trees) add_normalized(t, 1.0);
    } else {
        throw UnsupportedModelError("feature importance is only defined for DT and RF models",
                                    std::string(to_string(model.kind())));
    }
    const double sum = std::accumulate(total.begin(), total.end(), 0.0);
    if (sum > 0.0) {
        for (double& v : total) v /= sum;
    }
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ranked.emplace_back(model.columns()[i], total[i]);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

}  // namespace custemb
