#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace reportminer {

// Calendar date, ISO-8601 "YYYY-MM-DD". Ordering is chronological.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;
};

// Strict parse with range validation (leap years included).
// Throws std::invalid_argument on malformed input.
Date parse_date(const std::string& iso);

bool is_valid_date(int year, int month, int day);

}  // namespace reportminer
