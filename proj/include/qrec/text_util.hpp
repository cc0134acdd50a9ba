#pragma once

#include <string>
#include <string_view>

namespace qrec {

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string trim(std::string_view s);

/// `order_quantity` -> `order quantity`.
std::string default_display_text(std::string_view identifier);

/// Accepts YYYY-MM-DD, optionally followed by `T` or a space and
/// HH:MM[:SS[.fraction]] with an optional `Z` or +HH:MM offset. Calendar
/// validity (month range, days in month, leap years) is checked.
bool parse_iso8601(std::string_view s);

/// Pluralizes the last word of a phrase: `customer name` -> `customer names`.
std::string pluralize_last_word(std::string_view phrase);

}  // namespace qrec
