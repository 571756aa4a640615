#pragma once

#include "custemb/ingest.hpp"
#include "custemb/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <string>

namespace custemb::test {

inline RawTransaction make_transaction(const std::string& first_name, const std::string& timestamp,
                                       const std::string& category, double amount, bool fraud = false) {
    RawTransaction t;
    t.timestamp = *parse_timestamp(timestamp);
    t.category = category;
    t.amount = amount;
    t.first_name = first_name;
    t.last_name = "Doe";
    t.job = "clerk";
    t.date_of_birth = "1970-01-01";
    t.home_address = "1 Main St";
    t.gender = 'F';
    t.customer_lat = 40.7;
    t.customer_lon = -74.0;
    t.merchant_lat = 40.8;
    t.merchant_lon = -73.9;
    t.is_fraud = fraud;
    return t;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("custemb_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Gaussian features, label 1 with probability `positive_rate`; positives are shifted by
/// `shift` in every coordinate. Keys cycle through `customers` distinct values.
inline FeatureTable random_table(std::size_t rows, std::size_t cols, std::uint64_t seed, double positive_rate = 0.3,
                                 double shift = 1.0, std::size_t customers = 0) {
    FeatureTable t;
    for (std::size_t c = 0; c < cols; ++c) t.column_names.push_back("f" + std::to_string(c));
    Rng rng(seed);
    std::vector<double> row(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const bool positive = i < 2 ? i == 1 : rng.bernoulli(positive_rate);
        for (auto& v : row) v = rng.normal() + (positive ? shift : 0.0);
        const std::size_t id = customers > 0 ? i % customers : i;
        char key[17];
        std::snprintf(key, sizeof key, "%016zx", id + 1);
        t.append_row(row, positive ? 1 : 0, CustomerKey{key});
    }
    return t;
}

}  // namespace custemb::test
