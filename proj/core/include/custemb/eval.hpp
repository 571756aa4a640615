#pragma once

#include "custemb/classify.hpp"
#include "custemb/embed.hpp"
#include "custemb/ingest.hpp"
#include "custemb/simaug.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace custemb {

struct SplitConfig {
    double test_fraction = 0.30;
    std::uint64_t seed = 1;
    bool stratified = true;

    void validate() const;
};

/// Row indices of each partition, ordered by their seed-derived sort key so that the
/// partitions (and everything trained on them) do not depend on input row order.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Each row gets the key mix64(seed, fingerprint); within each class the rows with the
/// smallest keys, round(class_count * test_fraction) of them, form the test set.
/// DomainError when only one class is present.
SplitIndices stratified_split(std::span<const std::uint8_t> labels, std::span<const std::uint64_t> fingerprints,
                              const SplitConfig& config);

/// Fingerprints every row by its values, label and customer key.
std::pair<FeatureTable, FeatureTable> stratified_split(const FeatureTable& table, const SplitConfig& config);

std::uint64_t row_fingerprint(const FeatureTable& table, std::size_t row);
std::uint64_t transaction_fingerprint(const RawTransaction& transaction);
/// Order-independent digest of a transaction multiset.
std::uint64_t dataset_fingerprint(std::span<const RawTransaction> transactions);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Class 1 is positive. DomainError on a length mismatch or a label outside {0, 1}.
Confusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// 2pr / (p + r), or 0 when p + r = 0.
double f1_score(double precision, double recall);
Prf prf(const Confusion& c);
/// Unweighted mean of the class-1 and class-0 scores.
Prf macro_prf(const Confusion& c);

struct MetricsRow {
    int group = 0;
    std::string model;
    std::string averaging = "positive";
    Prf metrics;
    Prf macro;  // reported in separate columns
    Confusion counts;
};

struct GroupSummary {
    int group = 0;
    std::size_t train_rows = 0;
    std::size_t train_positives = 0;
    std::size_t test_rows = 0;
    std::size_t test_positives = 0;
    std::size_t feature_count = 0;
    std::optional<AugmentationReport> augmentation;
};

struct ExperimentConfig {
    TrainConfig embed;
    AugmentConfig augment;  // smote_extra == 0 selects round(train positives * kReferenceSmoteRatio)
    SplitConfig split;
    std::vector<ModelSpec> models;  // empty means every supported model with its defaults
    std::vector<int> groups{1, 2, 3, 4};
    bool keep_category = false;
    int threads = 0;

    void validate() const;
    std::vector<ModelSpec> effective_models() const;
    /// Canonical JSON of every setting that influences the report.
    std::string to_json() const;
};

struct ExperimentReport {
    std::vector<MetricsRow> rows;  // ordered by (group, configured model order)
    std::vector<GroupSummary> groups;
    std::vector<std::pair<std::string, double>> feature_importance;  // Group 1 random forest
    std::uint64_t dataset_fingerprint = 0;
    std::string config_digest;  // 16 hex characters
    std::uint64_t split_seed = 0;
    std::uint64_t embed_seed = 0;
    std::uint64_t augment_seed = 0;
    std::size_t vocabulary_size = 0;
    std::size_t rows_without_embedding = 0;

    const MetricsRow* find(int group, std::string_view model) const;
    std::string to_csv() const;
    std::string to_text() const;
    std::string to_json() const;
};

/// Trains the embedding on every transaction, splits once on transaction fingerprints and
/// runs each configured model on each configured group. When `space_out` is given the
/// trained embedding is moved there.
ExperimentReport run_groups(std::span<const RawTransaction> transactions, const ExperimentConfig& config,
                            EmbeddingSpace* space_out = nullptr);

/// Same, with an embedding that has already been trained.
ExperimentReport run_groups(std::span<const RawTransaction> transactions, const EmbeddingSpace& space,
                            const ExperimentConfig& config);

}  // namespace custemb
