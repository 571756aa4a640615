#pragma once

#include "custemb/customer_key.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace custemb {

struct EmbeddingSpace;

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS" and "YYYY-MM-DD HH:MM".
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

struct RawTransaction {
    Timestamp timestamp{};
    std::string category;
    double amount = 0.0;
    std::string first_name;
    std::string last_name;
    std::string job;
    std::string date_of_birth;
    std::string home_address;
    char gender = 'F';
    double customer_lat = 0.0;
    double customer_lon = 0.0;
    double merchant_lat = 0.0;
    double merchant_lon = 0.0;
    bool is_fraud = false;

    CustomerKey customer_key() const {
        return derive_customer_key(first_name, last_name, job, date_of_birth, home_address);
    }
};

// ---------------------------------------------------------------------------
// Parsing

/// Canonical column name and the alias used by the public credit-card fraud dataset
/// (the Kaggle "fraudTrain.csv"/"fraudTest.csv" layout). Either name is accepted.
struct ColumnAlias {
    std::string_view canonical;
    std::string_view public_dataset;
};

/// The fourteen required columns, in canonical output order.
std::span<const ColumnAlias> transaction_columns();

struct ParseDiagnostic {
    std::size_t line = 0;
    std::string reason;
};

struct ParseResult {
    std::vector<RawTransaction> transactions;
    std::size_t rows_read = 0;
    std::size_t skipped = 0;
    /// At most kMaxDiagnostics entries are kept; `skipped` is always exact.
    std::vector<ParseDiagnostic> diagnostics;

    static constexpr std::size_t kMaxDiagnostics = 100;
};

/// Rows with unparseable fields, negative amounts, unknown gender codes, or
/// out-of-range coordinates are skipped and counted. A missing required column
/// throws SchemaError; an unreadable stream throws IoError.
ParseResult parse_transactions(std::istream& source);
ParseResult parse_transactions_file(const std::string& path);

/// Writes the canonical column layout; parse_transactions reads it back.
void write_transactions(std::ostream& out, std::span<const RawTransaction> transactions);

// ---------------------------------------------------------------------------
// Engineered features

enum class TimeBin { H06_12, H12_18, H18_00, H00_06 };

TimeBin bin_time(Timestamp ts);
std::string_view to_string(TimeBin bin);

enum class Continent { Africa, Asia, Europe, NorthAmerica, SouthAmerica, Oceania, Antarctica, Unknown };

inline constexpr std::size_t kContinentCount = 8;

std::string_view to_string(Continent continent);

struct ContinentBox {
    Continent continent;
    double lat_min, lat_max;
    double lon_min, lon_max;
};

/// Coarse bounding boxes, consulted in order; the first box containing the point wins.
std::span<const ContinentBox> continent_boxes();

/// Throws DomainError for latitudes outside [-90, 90] or longitudes outside [-180, 180].
Continent continent_of(double lat, double lon);

/// ISO weekday, Monday = 0 ... Sunday = 6.
int iso_weekday_index(Timestamp ts);

/// Distinct (merchant_lat, merchant_lon) pairs per customer.
std::unordered_map<CustomerKey, std::size_t> count_locations(std::span<const RawTransaction> transactions);

// ---------------------------------------------------------------------------
// Feature table

struct FeatureTable {
    std::vector<std::string> column_names;
    std::vector<double> values;  // row-major, rows() * cols()
    std::vector<std::uint8_t> labels;
    std::vector<CustomerKey> customer_keys;

    std::size_t rows() const noexcept { return labels.size(); }
    std::size_t cols() const noexcept { return column_names.size(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }

    void append_row(std::span<const double> row_values, std::uint8_t label, const CustomerKey& key);
    FeatureTable subset(std::span<const std::size_t> indices) const;
    std::size_t positives() const noexcept;
    std::optional<std::size_t> column_index(std::string_view name) const;

    /// Throws DomainError if any structural invariant is broken.
    void validate() const;
};

enum class FeatureMode { kOneHotCategory, kEmbeddings };

struct FeatureOptions {
    FeatureMode mode = FeatureMode::kOneHotCategory;
    /// Required in kEmbeddings mode.
    const EmbeddingSpace* space = nullptr;
    /// Also emit the one-hot category block in kEmbeddings mode.
    bool keep_category = false;
    /// Category vocabulary for the one-hot block; empty means the sorted distinct
    /// categories of the input.
    std::vector<std::string> categories;
};

/// Column order: amount; dow_mon..dow_sun; time_06_12, time_12_18, time_18_00,
/// time_00_06; gender (F=1, M=0); number_of_locations; txn_continent_* (merchant
/// coordinates); home_continent_* (customer coordinates); then either category_* or
/// emb_0..emb_{dim-1} followed by has_embedding.
FeatureTable build_feature_table(std::span<const RawTransaction> transactions, const FeatureOptions& options);

/// Named one-hot column groups ("dow", "time", "txn_continent", "home_continent",
/// "category") present in a column list, as column indices.
std::map<std::string, std::vector<std::size_t>> one_hot_groups(std::span<const std::string> column_names);

/// Header is the feature column names followed by is_fraud and customer_key.
void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in);

}  // namespace custemb
