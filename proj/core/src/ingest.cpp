#include "custemb/ingest.hpp"

#include "custemb/csv.hpp"
#include "custemb/embed.hpp"
#include "custemb/error.hpp"
#include "custemb/hash.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace custemb {

namespace {

std::string normalize_identity_field(std::string_view field) {
    std::string out(csv::trim(field));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_fixed_digits(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

constexpr std::array<ColumnAlias, 14> kColumns{{
    {"timestamp", "trans_date_trans_time"},
    {"category", "category"},
    {"amount", "amt"},
    {"first_name", "first"},
    {"last_name", "last"},
    {"job", "job"},
    {"date_of_birth", "dob"},
    {"home_address", "street"},
    {"gender", "gender"},
    {"customer_lat", "lat"},
    {"customer_lon", "long"},
    {"merchant_lat", "merch_lat"},
    {"merchant_lon", "merch_long"},
    {"is_fraud", "is_fraud"},
}};

enum Column : std::size_t {
    kTimestamp, kCategory, kAmount, kFirst, kLast, kJob, kDob, kAddress,
    kGender, kCustLat, kCustLon, kMerchLat, kMerchLon, kFraud,
};

// Ordered from most to least specific where boxes overlap.
constexpr std::array<ContinentBox, 10> kContinentBoxes{{
    {Continent::Antarctica, -90.0, -60.0, -180.0, 180.0},
    {Continent::Oceania, -50.0, -10.0, 110.0, 180.0},
    {Continent::Oceania, -25.0, 0.0, 140.0, 180.0},
    {Continent::Europe, 36.0, 72.0, -25.0, 45.0},
    {Continent::Africa, -35.0, 37.5, -18.0, 52.0},
    {Continent::Asia, -11.0, 82.0, 25.0, 180.0},
    {Continent::NorthAmerica, 15.0, 84.0, -170.0, -50.0},
    {Continent::NorthAmerica, 7.0, 15.0, -93.0, -77.0},
    {Continent::SouthAmerica, -56.0, 13.0, -82.0, -34.0},
    {Continent::NorthAmerica, 51.0, 72.0, -180.0, -170.0},
}};

constexpr std::array<std::string_view, kContinentCount> kContinentNames{
    "africa", "asia", "europe", "north_america", "south_america", "oceania", "antarctica", "unknown"};

constexpr std::array<std::string_view, 7> kWeekdayNames{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};

}  // namespace

CustomerKey derive_customer_key(std::string_view first_name, std::string_view last_name, std::string_view job,
                                std::string_view date_of_birth, std::string_view home_address) {
    std::string joined = normalize_identity_field(first_name);
    for (std::string_view field : {last_name, job, date_of_birth, home_address}) {
        joined.push_back('|');
        joined += normalize_identity_field(field);
    }
    return CustomerKey{to_hex16(fnv1a64(joined))};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    text = csv::trim(text);
    // YYYY-MM-DD[ T]HH:MM[:SS]
    if (text.size() != 19 && text.size() != 16) return std::nullopt;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_fixed_digits(text, 0, 4, y) || text[4] != '-' || !parse_fixed_digits(text, 5, 2, mo) ||
        text[7] != '-' || !parse_fixed_digits(text, 8, 2, d) || (text[10] != ' ' && text[10] != 'T') ||
        !parse_fixed_digits(text, 11, 2, h) || text[13] != ':' || !parse_fixed_digits(text, 14, 2, mi)) {
        return std::nullopt;
    }
    if (text.size() == 19 && (text[16] != ':' || !parse_fixed_digits(text, 17, 2, s))) return std::nullopt;
    using namespace std::chrono;
    const year_month_day date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!date.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
    return Timestamp{sys_days{date}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s}};
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    const auto day_point = floor<days>(ts);
    const year_month_day date{day_point};
    const hh_mm_ss clock{ts - day_point};
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                  static_cast<long>(clock.hours().count()), static_cast<long>(clock.minutes().count()),
                  static_cast<long>(clock.seconds().count()));
    return buffer;
}

std::span<const ColumnAlias> transaction_columns() { return kColumns; }

ParseResult parse_transactions(std::istream& source) {
    if (!source.good()) throw IoError("transaction stream is not readable");
    std::string line;
    if (!std::getline(source, line)) {
        if (source.bad()) throw IoError("failed reading transaction header");
        throw SchemaError("transaction input has no header line");
    }
    std::vector<std::string> fields;
    if (!csv::split_record(line, fields)) throw SchemaError("unterminated quote in header");

    std::array<std::size_t, kColumns.size()> position{};
    std::vector<std::string> missing;
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto found = std::find_if(fields.begin(), fields.end(), [&](const std::string& name) {
            const auto trimmed = csv::trim(name);
            return trimmed == kColumns[c].canonical || trimmed == kColumns[c].public_dataset;
        });
        if (found == fields.end()) {
            missing.emplace_back(kColumns[c].canonical);
        } else {
            position[c] = static_cast<std::size_t>(found - fields.begin());
        }
    }
    if (!missing.empty()) {
        std::string message = "missing required column(s):";
        for (const auto& name : missing) message += " " + name;
        throw SchemaError(message);
    }
    const std::size_t min_fields = *std::max_element(position.begin(), position.end()) + 1;

    ParseResult result;
    std::size_t line_number = 1;
    auto skip = [&](std::string reason) {
        ++result.skipped;
        if (result.diagnostics.size() < ParseResult::kMaxDiagnostics) {
            result.diagnostics.push_back({line_number, std::move(reason)});
        }
    };

    while (std::getline(source, line)) {
        ++line_number;
        if (csv::trim(line).empty()) continue;
        ++result.rows_read;
        if (!csv::split_record(line, fields)) {
            skip("unterminated quoted field");
            continue;
        }
        if (fields.size() < min_fields) {
            skip("expected at least " + std::to_string(min_fields) + " fields, found " + std::to_string(fields.size()));
            continue;
        }
        auto field = [&](Column c) -> const std::string& { return fields[position[c]]; };

        RawTransaction tx;
        const auto ts = parse_timestamp(field(kTimestamp));
        if (!ts) {
            skip("unparseable timestamp '" + field(kTimestamp) + "'");
            continue;
        }
        tx.timestamp = *ts;
        tx.category = std::string(csv::trim(field(kCategory)));
        if (tx.category.empty()) {
            skip("empty category");
            continue;
        }
        if (!csv::parse_double(field(kAmount), tx.amount) || tx.amount < 0.0) {
            skip("invalid amount '" + field(kAmount) + "'");
            continue;
        }
        tx.first_name = field(kFirst);
        tx.last_name = field(kLast);
        tx.job = field(kJob);
        tx.date_of_birth = field(kDob);
        tx.home_address = field(kAddress);

        const auto gender = csv::trim(field(kGender));
        if (gender.size() != 1 || (std::toupper(gender[0]) != 'F' && std::toupper(gender[0]) != 'M')) {
            skip("invalid gender '" + field(kGender) + "'");
            continue;
        }
        tx.gender = static_cast<char>(std::toupper(gender[0]));

        const bool coords_ok = csv::parse_double(field(kCustLat), tx.customer_lat) &&
                               csv::parse_double(field(kCustLon), tx.customer_lon) &&
                               csv::parse_double(field(kMerchLat), tx.merchant_lat) &&
                               csv::parse_double(field(kMerchLon), tx.merchant_lon);
        if (!coords_ok) {
            skip("unparseable coordinate");
            continue;
        }
        if (std::abs(tx.customer_lat) > 90.0 || std::abs(tx.merchant_lat) > 90.0 ||
            std::abs(tx.customer_lon) > 180.0 || std::abs(tx.merchant_lon) > 180.0) {
            skip("coordinate out of range");
            continue;
        }

        const auto label = csv::trim(field(kFraud));
        if (label == "1" || label == "true" || label == "True") {
            tx.is_fraud = true;
        } else if (label == "0" || label == "false" || label == "False") {
            tx.is_fraud = false;
        } else {
            skip("invalid is_fraud label '" + field(kFraud) + "'");
            continue;
        }
        result.transactions.push_back(std::move(tx));
    }
    if (source.bad()) throw IoError("read error at line " + std::to_string(line_number));
    return result;
}

ParseResult parse_transactions_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transaction file '" + path + "'");
    return parse_transactions(in);
}

void write_transactions(std::ostream& out, std::span<const RawTransaction> transactions) {
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        if (c > 0) out << ',';
        out << kColumns[c].canonical;
    }
    out << '\n';
    for (const auto& tx : transactions) {
        out << format_timestamp(tx.timestamp) << ',' << csv::escape(tx.category) << ','
            << csv::format_double(tx.amount) << ',' << csv::escape(tx.first_name) << ','
            << csv::escape(tx.last_name) << ',' << csv::escape(tx.job) << ',' << csv::escape(tx.date_of_birth)
            << ',' << csv::escape(tx.home_address) << ',' << tx.gender << ','
            << csv::format_double(tx.customer_lat) << ',' << csv::format_double(tx.customer_lon) << ','
            << csv::format_double(tx.merchant_lat) << ',' << csv::format_double(tx.merchant_lon) << ','
            << (tx.is_fraud ? 1 : 0) << '\n';
    }
}

TimeBin bin_time(Timestamp ts) {
    using namespace std::chrono;
    const auto hour = duration_cast<hours>(ts - floor<days>(ts)).count();
    if (hour < 6) return TimeBin::H00_06;
    if (hour < 12) return TimeBin::H06_12;
    if (hour < 18) return TimeBin::H12_18;
    return TimeBin::H18_00;
}

std::string_view to_string(TimeBin bin) {
    switch (bin) {
        case TimeBin::H06_12: return "06_12";
        case TimeBin::H12_18: return "12_18";
        case TimeBin::H18_00: return "18_00";
        case TimeBin::H00_06: return "00_06";
    }
    return "?";
}

std::string_view to_string(Continent continent) { return kContinentNames[static_cast<std::size_t>(continent)]; }

std::span<const ContinentBox> continent_boxes() { return kContinentBoxes; }

Continent continent_of(double lat, double lon) {
    if (!(lat >= -90.0 && lat <= 90.0)) throw DomainError("latitude out of range: " + csv::format_double(lat));
    if (!(lon >= -180.0 && lon <= 180.0)) throw DomainError("longitude out of range: " + csv::format_double(lon));
    for (const auto& box : kContinentBoxes) {
        if (lat >= box.lat_min && lat <= box.lat_max && lon >= box.lon_min && lon <= box.lon_max) {
            return box.continent;
        }
    }
    return Continent::Unknown;
}

int iso_weekday_index(Timestamp ts) {
    using namespace std::chrono;
    return static_cast<int>(weekday{floor<days>(ts)}.iso_encoding()) - 1;
}

std::unordered_map<CustomerKey, std::size_t> count_locations(std::span<const RawTransaction> transactions) {
    std::unordered_map<CustomerKey, std::set<std::pair<double, double>>> seen;
    for (const auto& tx : transactions) {
        seen[tx.customer_key()].emplace(tx.merchant_lat, tx.merchant_lon);
    }
    std::unordered_map<CustomerKey, std::size_t> counts;
    counts.reserve(seen.size());
    for (const auto& [key, places] : seen) counts.emplace(key, places.size());
    return counts;
}

// ---------------------------------------------------------------------------

void FeatureTable::append_row(std::span<const double> row_values, std::uint8_t label, const CustomerKey& key) {
    if (row_values.size() != cols()) {
        throw DomainError("row has " + std::to_string(row_values.size()) + " values, table has " +
                          std::to_string(cols()) + " columns");
    }
    values.insert(values.end(), row_values.begin(), row_values.end());
    labels.push_back(label);
    customer_keys.push_back(key);
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
    FeatureTable out;
    out.column_names = column_names;
    out.values.reserve(indices.size() * cols());
    out.labels.reserve(indices.size());
    out.customer_keys.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(labels[i]);
        out.customer_keys.push_back(customer_keys[i]);
    }
    return out;
}

std::size_t FeatureTable::positives() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::optional<std::size_t> FeatureTable::column_index(std::string_view name) const {
    auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - column_names.begin());
}

void FeatureTable::validate() const {
    if (values.size() != rows() * cols()) throw DomainError("feature matrix size does not match rows x columns");
    if (customer_keys.size() != rows()) throw DomainError("customer key count does not match row count");
    std::set<std::string_view> unique(column_names.begin(), column_names.end());
    if (unique.size() != column_names.size()) throw DomainError("duplicate column names");
    for (auto label : labels) {
        if (label > 1) throw DomainError("label outside {0,1}");
    }
}

FeatureTable build_feature_table(std::span<const RawTransaction> transactions, const FeatureOptions& options) {
    if (options.mode == FeatureMode::kEmbeddings && options.space == nullptr) {
        throw ConfigError("embedding features requested without a trained embedding space", "embedding_mode");
    }
    std::vector<std::string> categories = options.categories;
    const bool want_category = options.mode == FeatureMode::kOneHotCategory || options.keep_category;
    if (want_category && categories.empty()) {
        std::set<std::string> distinct;
        for (const auto& tx : transactions) distinct.insert(tx.category);
        categories.assign(distinct.begin(), distinct.end());
    }

    FeatureTable table;
    auto& names = table.column_names;
    names.emplace_back("amount");
    for (auto day : kWeekdayNames) names.push_back("dow_" + std::string(day));
    for (auto bin : {TimeBin::H06_12, TimeBin::H12_18, TimeBin::H18_00, TimeBin::H00_06}) {
        names.push_back("time_" + std::string(to_string(bin)));
    }
    names.emplace_back("gender");
    names.emplace_back("number_of_locations");
    for (auto name : kContinentNames) names.push_back("txn_continent_" + std::string(name));
    for (auto name : kContinentNames) names.push_back("home_continent_" + std::string(name));
    const std::size_t category_offset = names.size();
    if (want_category) {
        for (const auto& c : categories) names.push_back("category_" + c);
    }
    const std::size_t embedding_offset = names.size();
    std::size_t dim = 0;
    if (options.mode == FeatureMode::kEmbeddings) {
        dim = options.space->dim;
        for (std::size_t d = 0; d < dim; ++d) names.push_back("emb_" + std::to_string(d));
        names.emplace_back("has_embedding");
    }

    std::unordered_map<std::string, std::size_t> category_index;
    for (std::size_t i = 0; i < categories.size(); ++i) category_index.emplace(categories[i], i);

    const auto locations = count_locations(transactions);
    std::unordered_map<CustomerKey, std::optional<std::vector<double>>> vector_cache;

    const std::size_t width = names.size();
    table.values.reserve(transactions.size() * width);
    table.labels.reserve(transactions.size());
    table.customer_keys.reserve(transactions.size());
    std::vector<double> row(width);
    for (const auto& tx : transactions) {
        std::fill(row.begin(), row.end(), 0.0);
        const CustomerKey key = tx.customer_key();
        std::size_t col = 0;
        row[col++] = tx.amount;
        row[col + static_cast<std::size_t>(iso_weekday_index(tx.timestamp))] = 1.0;
        col += 7;
        row[col + static_cast<std::size_t>(bin_time(tx.timestamp))] = 1.0;
        col += 4;
        row[col++] = tx.gender == 'F' ? 1.0 : 0.0;
        row[col++] = static_cast<double>(locations.at(key));
        row[col + static_cast<std::size_t>(continent_of(tx.merchant_lat, tx.merchant_lon))] = 1.0;
        col += kContinentCount;
        row[col + static_cast<std::size_t>(continent_of(tx.customer_lat, tx.customer_lon))] = 1.0;
        col += kContinentCount;
        if (want_category) {
            auto found = category_index.find(tx.category);
            if (found == category_index.end()) throw DomainError("category '" + tx.category + "' not in category list");
            row[category_offset + found->second] = 1.0;
        }
        if (options.mode == FeatureMode::kEmbeddings) {
            auto cached = vector_cache.find(key);
            if (cached == vector_cache.end()) {
                cached = vector_cache.emplace(key, vector_of(*options.space, key)).first;
            }
            if (cached->second) {
                std::copy(cached->second->begin(), cached->second->end(), row.begin() + static_cast<std::ptrdiff_t>(embedding_offset));
                row[embedding_offset + dim] = 1.0;
            }
        }
        table.values.insert(table.values.end(), row.begin(), row.end());
        table.labels.push_back(tx.is_fraud ? 1 : 0);
        table.customer_keys.push_back(key);
    }
    return table;
}

std::map<std::string, std::vector<std::size_t>> one_hot_groups(std::span<const std::string> column_names) {
    static constexpr std::array<std::string_view, 5> kPrefixes{"dow_", "time_", "txn_continent_", "home_continent_",
                                                               "category_"};
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        for (auto prefix : kPrefixes) {
            if (column_names[i].starts_with(prefix)) {
                groups[std::string(prefix.substr(0, prefix.size() - 1))].push_back(i);
                break;
            }
        }
    }
    return groups;
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
    for (const auto& name : table.column_names) out << csv::escape(name) << ',';
    out << "is_fraud,customer_key\n";
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (double v : table.row(i)) out << csv::format_double(v) << ',';
        out << static_cast<int>(table.labels[i]) << ',' << table.customer_keys[i].value << '\n';
    }
}

FeatureTable read_feature_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("feature table has no header");
    std::vector<std::string> fields;
    csv::split_record(line, fields);
    if (fields.size() < 2 || fields[fields.size() - 2] != "is_fraud" || fields.back() != "customer_key") {
        throw SchemaError("feature table header must end with is_fraud,customer_key");
    }
    FeatureTable table;
    table.column_names.assign(fields.begin(), fields.end() - 2);
    const std::size_t width = table.cols();
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (csv::trim(line).empty()) continue;
        csv::split_record(line, fields);
        if (fields.size() != width + 2) {
            throw FormatError("expected " + std::to_string(width + 2) + " fields, found " + std::to_string(fields.size()),
                              line_number);
        }
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0.0;
            if (!csv::parse_double(fields[c], v)) throw FormatError("bad number in column " + table.column_names[c], line_number);
            table.values.push_back(v);
        }
        const auto label = csv::trim(fields[width]);
        if (label != "0" && label != "1") throw FormatError("label must be 0 or 1", line_number);
        table.labels.push_back(label == "1" ? 1 : 0);
        table.customer_keys.push_back(CustomerKey{std::string(csv::trim(fields[width + 1]))});
    }
    table.validate();
    return table;
}

}  // namespace custemb
