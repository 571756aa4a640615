#pragma once

#include "custemb/ingest.hpp"

#include <cstdint>
#include <vector>

namespace custemb {

/// Planted-ring generator for desk-scale experiments.
///
/// Ring members repeatedly buy together: each ring owns a few categories and a few
/// merchant locations, and every ring "event" puts most of its members into the same
/// (category, ISO week) slot within a few hours of each other. A fraction
/// `ring_fraud_share` of the fraud labels is placed on ring-event transactions, whose
/// amounts are then drawn from a shifted distribution; the remaining fraud labels land
/// on independently drawn transactions.
struct SyntheticConfig {
    std::size_t n_customers = 2000;
    std::size_t n_transactions = 60000;
    std::size_t n_categories = 14;
    std::size_t n_rings = 20;
    std::size_t ring_size = 10;
    double fraud_rate = 0.02;
    double ring_fraud_share = 0.97;
    /// Share of ring members that join any single ring event.
    double ring_participation = 0.9;
    int year = 2019;
    std::uint64_t seed = 7;

    /// Throws ConfigError on infeasible or out-of-range settings.
    void validate() const;
};

struct SyntheticDataset {
    std::vector<RawTransaction> transactions;  // sorted by timestamp
    std::vector<std::vector<CustomerKey>> rings;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

/// The category names used by the generator: the fourteen categories of the public
/// fraud dataset, extended with "cat_15", "cat_16", ... when more are requested.
std::vector<std::string> synthetic_categories(std::size_t n);

}  // namespace custemb
