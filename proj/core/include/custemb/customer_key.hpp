#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace custemb {

/// Deterministic customer identifier: 16 lowercase hex characters.
struct CustomerKey {
    std::string value;

    friend auto operator<=>(const CustomerKey&, const CustomerKey&) = default;
    friend bool operator==(const CustomerKey&, const CustomerKey&) = default;
};

/// Key carried by rows that SMOTE synthesizes; never produced by derive_customer_key
/// except through a 2^-64 hash collision.
inline const CustomerKey kSyntheticCustomerKey{"0000000000000000"};

/// Lower-cases and trims each field, joins them with '|' in argument order and hashes
/// the result with 64-bit FNV-1a.
CustomerKey derive_customer_key(std::string_view first_name, std::string_view last_name,
                                std::string_view job, std::string_view date_of_birth,
                                std::string_view home_address);

}  // namespace custemb

template <>
struct std::hash<custemb::CustomerKey> {
    std::size_t operator()(const custemb::CustomerKey& key) const noexcept {
        return std::hash<std::string>{}(key.value);
    }
};
