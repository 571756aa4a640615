#pragma once

#include "custemb/customer_key.hpp"
#include "custemb/embed.hpp"
#include "custemb/ingest.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace custemb {

/// Cosine similarity. nullopt when either vector is all zeros (similarity undefined);
/// DomainError on a length mismatch.
std::optional<double> cosine(std::span<const double> a, std::span<const double> b);

struct SimilarityHit {
    double similarity = 0.0;
    CustomerKey seed;
};

/// Brute-force maximum cosine from one customer to a seed set. Seeds that are out of
/// vocabulary or have a zero vector are ignored; ties keep the smallest seed key.
/// nullopt when the query is out of vocabulary (or has a zero vector); DomainError when
/// no seed is usable.
std::optional<SimilarityHit> max_similarity_to_set(const EmbeddingSpace& space, const CustomerKey& query,
                                                   std::span<const CustomerKey> seeds);

/// Precomputed seed vectors and norms for repeated max-similarity queries. Produces
/// bit-identical results to max_similarity_to_set.
class SeedIndex {
public:
    SeedIndex(const EmbeddingSpace& space, std::span<const CustomerKey> seeds);

    std::optional<SimilarityHit> query(std::span<const double> vector) const;
    std::size_t size() const noexcept { return keys_.size(); }

private:
    std::size_t dim_ = 0;
    std::vector<CustomerKey> keys_;  // sorted
    std::vector<double> vectors_;
    std::vector<double> norms_;
};

struct AugmentConfig {
    double tau = 0.95;
    std::size_t smote_k = 5;
    /// Synthetic rows SMOTE appends. The public-dataset run went from 18,506 to 35,772
    /// positives; see kReferenceSmoteRatio for that preset expressed as a ratio.
    std::size_t smote_extra = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Extra SMOTE rows per original positive in the public-dataset preset (17,266 / 18,506).
inline constexpr double kReferenceSmoteRatio = 17266.0 / 18506.0;

struct AugmentationReport {
    std::string method;  // "similarity" or "smote"
    std::size_t positives_before = 0;
    std::size_t positives_after = 0;
    std::size_t rows_relabeled = 0;
    std::vector<CustomerKey> flipped_customers;  // similarity only, sorted
    std::size_t synthetic_rows_created = 0;      // smote only
    double tau = 0.0;
    std::size_t smote_k = 0;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

/// Seeds are the customers with at least one positive row, fixed before any flip. Every
/// other in-vocabulary customer whose maximum cosine to the seeds is >= tau has all of
/// its rows relabelled 1. Labels never go from 1 to 0.
std::pair<FeatureTable, AugmentationReport> relabel_by_similarity(const FeatureTable& table,
                                                                  const EmbeddingSpace& space, double tau);

/// Appends `extra` rows x_i + lambda (x_nn - x_i): x_i a random positive row, x_nn one of
/// its k nearest positive rows (Euclidean), lambda uniform on [0, 1]. Synthetic rows get
/// label 1 and kSyntheticCustomerKey.
std::pair<FeatureTable, AugmentationReport> smote(const FeatureTable& table, std::size_t k, std::size_t extra,
                                                  std::uint64_t seed);

}  // namespace custemb
