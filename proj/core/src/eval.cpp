#include "custemb/eval.hpp"

#include "custemb/corpus.hpp"
#include "custemb/csv.hpp"
#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/parallel.hpp"
#include "json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

namespace custemb {

namespace {

std::uint64_t hash_bytes(const void* data, std::size_t size, std::uint64_t state) {
    return fnv1a64(std::string_view(static_cast<const char*>(data), size), state);
}

std::string fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool right_align) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return right_align ? fill + s : s + fill;
}

}  // namespace

void SplitConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("must lie in (0, 1)", "split.test_fraction");
}

SplitIndices stratified_split(std::span<const std::uint8_t> labels, std::span<const std::uint64_t> fingerprints,
                              const SplitConfig& config) {
    config.validate();
    if (labels.size() != fingerprints.size()) throw DomainError("labels and fingerprints differ in length");
    struct Item {
        std::uint64_t key;
        std::uint64_t fingerprint;
        std::size_t index;
        bool operator<(const Item& o) const {
            return std::tie(key, fingerprint, index) < std::tie(o.key, o.fingerprint, o.index);
        }
    };
    std::vector<Item> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 1) throw DomainError("labels must be 0 or 1");
        by_class[labels[i]].push_back({derive_seed(config.seed, fingerprints[i]), fingerprints[i], i});
    }
    if (by_class[0].empty() || by_class[1].empty()) throw DomainError("split needs both classes present");

    std::vector<Item> test, train;
    auto take = [&](std::vector<Item>& items) {
        std::sort(items.begin(), items.end());
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(items.size()) * config.test_fraction));
        test.insert(test.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), items.begin() + static_cast<std::ptrdiff_t>(n_test), items.end());
    };
    if (config.stratified) {
        take(by_class[0]);
        take(by_class[1]);
    } else {
        std::vector<Item> all = std::move(by_class[0]);
        all.insert(all.end(), by_class[1].begin(), by_class[1].end());
        take(all);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    SplitIndices out;
    for (const auto& it : train) out.train.push_back(it.index);
    for (const auto& it : test) out.test.push_back(it.index);
    return out;
}

std::uint64_t row_fingerprint(const FeatureTable& table, std::size_t row) {
    const auto values = table.row(row);
    std::uint64_t h = hash_bytes(values.data(), values.size() * sizeof(double), kFnvOffsetBasis);
    h = hash_bytes(&table.labels[row], 1, h);
    return fnv1a64(table.customer_keys[row].value, h);
}

std::pair<FeatureTable, FeatureTable> stratified_split(const FeatureTable& table, const SplitConfig& config) {
    std::vector<std::uint64_t> fingerprints(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) fingerprints[i] = row_fingerprint(table, i);
    const auto split = stratified_split(table.labels, fingerprints, config);
    return {table.subset(split.train), table.subset(split.test)};
}

std::uint64_t transaction_fingerprint(const RawTransaction& t) {
    std::string s = format_timestamp(t.timestamp);
    for (const std::string* field : {&t.category, &t.first_name, &t.last_name, &t.job, &t.date_of_birth, &t.home_address}) {
        s += '\x1f';
        s += *field;
    }
    for (double v : {t.amount, t.customer_lat, t.customer_lon, t.merchant_lat, t.merchant_lon}) {
        s += '\x1f';
        s += csv::format_double(v);
    }
    s += '\x1f';
    s += t.gender;
    s += t.is_fraud ? '1' : '0';
    return fnv1a64(s);
}

std::uint64_t dataset_fingerprint(std::span<const RawTransaction> transactions) {
    std::uint64_t sum = 0;
    for (const auto& t : transactions) sum += mix64(transaction_fingerprint(t));
    return mix64(sum ^ mix64(transactions.size()));
}

Confusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw DomainError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                          std::to_string(y_pred.size()) + " predictions");
    }
    Confusion c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] > 1 || y_pred[i] > 1) throw DomainError("confusion: labels must be 0 or 1");
        if (y_true[i]) {
            (y_pred[i] ? c.tp : c.fn) += 1;
        } else {
            (y_pred[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

Prf prf(const Confusion& c) {
    Prf out;
    out.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    out.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

Prf macro_prf(const Confusion& c) {
    const Prf pos = prf(c);
    const Prf neg = prf(Confusion{c.tn, c.fn, c.fp, c.tp});
    return {(pos.precision + neg.precision) / 2.0, (pos.recall + neg.recall) / 2.0, (pos.f1 + neg.f1) / 2.0};
}

void ExperimentConfig::validate() const {
    embed.validate();
    augment.validate();
    split.validate();
    if (groups.empty()) throw ConfigError("at least one group is required", "groups");
    std::set<int> seen;
    for (int g : groups) {
        if (g < 1 || g > 4) throw ConfigError("groups are numbered 1 to 4", "groups");
        if (!seen.insert(g).second) throw ConfigError("group " + std::to_string(g) + " is listed twice", "groups");
    }
}

std::vector<ModelSpec> ExperimentConfig::effective_models() const {
    if (!models.empty()) return models;
    std::vector<ModelSpec> out;
    for (auto kind : {ModelKind::kDecisionTree, ModelKind::kRandomForest, ModelKind::kLogisticRegression,
                      ModelKind::kKnn, ModelKind::kMlp}) {
        out.push_back(ModelSpec::defaults(kind));
    }
    return out;
}

std::string ExperimentConfig::to_json() const {
    detail::Json j;
    j["embed"] = detail::to_json(embed);
    j["augment"] = detail::to_json(augment);
    j["split"] = detail::to_json(split);
    j["models"] = detail::models_to_json(effective_models());
    j["groups"] = groups;
    j["keep_category"] = keep_category;
    j["parallel_embedding"] = threads > 1;
    return j.dump();
}

const MetricsRow* ExperimentReport::find(int group, std::string_view model) const {
    for (const auto& r : rows) {
        if (r.group == group && r.model == model) return &r;
    }
    return nullptr;
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream out;
    out << "# dataset_fingerprint=" << to_hex16(dataset_fingerprint) << '\n';
    out << "# config_digest=" << config_digest << '\n';
    out << "# seeds split=" << split_seed << " embed=" << embed_seed << " augment=" << augment_seed << '\n';
    out << "group,model,averaging,precision,recall,f1,macro_precision,macro_recall,macro_f1,tp,fp,fn,tn\n";
    for (const auto& r : rows) {
        out << r.group << ',' << r.model << ',' << r.averaging << ',' << fixed(r.metrics.precision, 6) << ','
            << fixed(r.metrics.recall, 6) << ',' << fixed(r.metrics.f1, 6) << ',' << fixed(r.macro.precision, 6)
            << ',' << fixed(r.macro.recall, 6) << ',' << fixed(r.macro.f1, 6) << ',' << r.counts.tp << ','
            << r.counts.fp << ',' << r.counts.fn << ',' << r.counts.tn << '\n';
    }
    return out.str();
}

std::string ExperimentReport::to_text() const {
    static const char* kGroupNames[] = {"", "one-hot category", "customer embedding", "one-hot + SMOTE",
                                        "embedding + similarity relabel"};
    std::ostringstream out;
    out << "dataset fingerprint " << to_hex16(dataset_fingerprint) << ", config digest " << config_digest << '\n';
    out << "seeds: split " << split_seed << ", embed " << embed_seed << ", augment " << augment_seed << '\n';
    out << "vocabulary " << vocabulary_size << " customers, " << rows_without_embedding
        << " rows without an embedding\n\n";

    for (const auto& g : groups) {
        out << "group " << g.group << " (" << kGroupNames[g.group] << "): " << g.feature_count << " features, train "
            << g.train_rows << " rows / " << g.train_positives << " positive, test " << g.test_rows << " rows / "
            << g.test_positives << " positive\n";
        if (g.augmentation) {
            const auto& a = *g.augmentation;
            out << "  " << a.method << ": positives " << a.positives_before << " -> " << a.positives_after;
            if (a.method == "smote") {
                out << ", " << a.synthetic_rows_created << " synthetic rows, k=" << a.smote_k;
            } else {
                out << ", " << a.rows_relabeled << " rows relabelled for " << a.flipped_customers.size()
                    << " customers, tau=" << fixed(a.tau, 4);
            }
            out << '\n';
        }
    }
    out << '\n';

    const std::vector<std::string> header{"group", "model", "precision", "recall", "f1",
                                          "macro_p", "macro_r", "macro_f1"};
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : rows) {
        cells.push_back({std::to_string(r.group), r.model, fixed(r.metrics.precision, 4), fixed(r.metrics.recall, 4),
                         fixed(r.metrics.f1, 4), fixed(r.macro.precision, 4), fixed(r.macro.recall, 4),
                         fixed(r.macro.f1, 4)});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << pad(row[c], width[c], c >= 2);
        }
        out << '\n';
    }

    if (!feature_importance.empty()) {
        out << "\nfeature importance (group 1 random forest)\n";
        std::size_t name_width = 0;
        for (const auto& [name, _] : feature_importance) name_width = std::max(name_width, name.size());
        for (const auto& [name, value] : feature_importance) {
            out << "  " << pad(name, name_width, false) << "  " << fixed(value, 4) << '\n';
        }
    }
    return out.str();
}

std::string ExperimentReport::to_json() const {
    detail::Json j;
    j["dataset_fingerprint"] = to_hex16(dataset_fingerprint);
    j["config_digest"] = config_digest;
    j["seeds"] = detail::Json{{"split", split_seed}, {"embed", embed_seed}, {"augment", augment_seed}};
    j["vocabulary_size"] = vocabulary_size;
    j["rows_without_embedding"] = rows_without_embedding;
    auto& groups_json = j["groups"] = detail::Json::array();
    for (const auto& g : groups) {
        detail::Json gj{{"group", g.group},
                        {"features", g.feature_count},
                        {"train_rows", g.train_rows},
                        {"train_positives", g.train_positives},
                        {"test_rows", g.test_rows},
                        {"test_positives", g.test_positives}};
        if (g.augmentation) gj["augmentation"] = detail::Json::parse(g.augmentation->to_json());
        groups_json.push_back(std::move(gj));
    }
    auto& rows_json = j["rows"] = detail::Json::array();
    for (const auto& r : rows) {
        rows_json.push_back(detail::Json{
            {"group", r.group},
            {"model", r.model},
            {"averaging", r.averaging},
            {"precision", r.metrics.precision},
            {"recall", r.metrics.recall},
            {"f1", r.metrics.f1},
            {"macro", {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}}},
            {"confusion", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}}});
    }
    auto& fi = j["feature_importance"] = detail::Json::array();
    for (const auto& [name, value] : feature_importance) fi.push_back(detail::Json{{"feature", name}, {"importance", value}});
    return j.dump(2) + "\n";
}

ExperimentReport run_groups(std::span<const RawTransaction> transactions, const ExperimentConfig& config,
                            EmbeddingSpace* space_out) {
    config.validate();
    TrainConfig embed = config.embed;
    embed.threads = config.threads;
    EmbeddingSpace space = train(build_sequences(transactions), embed);
    auto report = run_groups(transactions, space, config);
    if (space_out) *space_out = std::move(space);
    return report;
}

ExperimentReport run_groups(std::span<const RawTransaction> transactions, const EmbeddingSpace& space,
                            const ExperimentConfig& config) {
    config.validate();
    const auto models = config.effective_models();
    const std::set<int> groups(config.groups.begin(), config.groups.end());

    ExperimentReport report;
    report.dataset_fingerprint = dataset_fingerprint(transactions);
    report.config_digest = to_hex16(fnv1a64(config.to_json()));
    report.split_seed = config.split.seed;
    report.embed_seed = config.embed.seed;
    report.augment_seed = config.augment.seed;
    report.vocabulary_size = space.vocab.size();

    std::vector<std::uint8_t> labels(transactions.size());
    std::vector<std::uint64_t> fingerprints(transactions.size());
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        labels[i] = transactions[i].is_fraud ? 1 : 0;
        fingerprints[i] = transaction_fingerprint(transactions[i]);
    }
    const SplitIndices split = stratified_split(labels, fingerprints, config.split);

    struct GroupData {
        FeatureTable train;
        FeatureTable test;
    };
    std::vector<GroupData> data(5);

    if (groups.contains(1) || groups.contains(3)) {
        const FeatureTable full = build_feature_table(transactions, {FeatureMode::kOneHotCategory, nullptr, false, {}});
        data[1] = {full.subset(split.train), full.subset(split.test)};
    }
    if (groups.contains(2) || groups.contains(4)) {
        const FeatureTable full =
            build_feature_table(transactions, {FeatureMode::kEmbeddings, &space, config.keep_category, {}});
        const auto flag = full.column_index("has_embedding");
        if (flag) {
            for (std::size_t i = 0; i < full.rows(); ++i) {
                if (full.row(i)[*flag] == 0.0) ++report.rows_without_embedding;
            }
        }
        data[2] = {full.subset(split.train), full.subset(split.test)};
    }

    std::optional<AugmentationReport> augmentation[5];
    if (groups.contains(3)) {
        const std::size_t positives = data[1].train.positives();
        const std::size_t extra =
            config.augment.smote_extra > 0
                ? config.augment.smote_extra
                : static_cast<std::size_t>(std::llround(static_cast<double>(positives) * kReferenceSmoteRatio));
        auto [table, aug] = smote(data[1].train, config.augment.smote_k, extra, config.augment.seed);
        data[3] = {std::move(table), data[1].test};
        augmentation[3] = std::move(aug);
    }
    if (groups.contains(4)) {
        auto [table, aug] = relabel_by_similarity(data[2].train, space, config.augment.tau);
        data[4] = {std::move(table), data[2].test};
        augmentation[4] = std::move(aug);
    }

    for (int g : groups) {
        GroupSummary s;
        s.group = g;
        s.train_rows = data[g].train.rows();
        s.train_positives = data[g].train.positives();
        s.test_rows = data[g].test.rows();
        s.test_positives = data[g].test.positives();
        s.feature_count = data[g].train.cols();
        s.augmentation = augmentation[g];
        report.groups.push_back(std::move(s));
    }

    struct Job {
        int group;
        const ModelSpec* spec;
        MetricsRow row;
        std::vector<std::pair<std::string, double>> importance;
    };
    std::vector<Job> jobs;
    for (int g : groups) {
        for (const auto& m : models) jobs.push_back({g, &m, {}, {}});
    }
    const bool outer_parallel = config.threads > 1;
    const int inner_threads = outer_parallel ? 1 : config.threads;
    parallel_for(jobs.size(), outer_parallel ? config.threads : 0, [&](std::size_t j) {
        Job& job = jobs[j];
        const GroupData& d = data[job.group];
        const TrainedModel model = train_model(d.train, *job.spec, inner_threads);
        const auto predicted = model.predict(d.test, inner_threads);
        const Confusion c = confusion(d.test.labels, predicted);
        job.row = MetricsRow{job.group, std::string(to_string(model.kind())), "positive", prf(c), macro_prf(c), c};
        if (job.group == 1 && model.kind() == ModelKind::kRandomForest) job.importance = feature_importance(model);
    });
    for (auto& job : jobs) {
        if (report.feature_importance.empty() && !job.importance.empty()) report.feature_importance = job.importance;
        report.rows.push_back(std::move(job.row));
    }
    return report;
}

}  // namespace custemb
