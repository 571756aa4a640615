#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace custemb::csv {

/// Splits one comma-separated record. Double-quoted fields may contain commas and
/// doubled quotes (""). Returns false on an unterminated quote.
bool split_record(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field if it contains a comma, quote, or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Strict full-string parse; rejects trailing garbage, empty input, and non-finite values.
bool parse_double(std::string_view text, double& out);

bool parse_int(std::string_view text, long long& out);

std::string_view trim(std::string_view text);

}  // namespace custemb::csv
