#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace wia {

inline constexpr std::int32_t kMaxRow = 1'048'576;
inline constexpr std::int32_t kMaxCol = 16'384;  // "XFD"

// A cell location in A1 coordinates (1-based). Identity and ordering are the
// location (sheet, row, col); the `$` markers are reference syntax and only
// matter when printing or comparing formula trees (see identical()).
struct CellAddress {
  std::string sheet;
  std::int32_t row = 1;
  std::int32_t col = 1;
  bool row_absolute = false;
  bool col_absolute = false;

  friend bool operator==(const CellAddress& a, const CellAddress& b) {
    return a.row == b.row && a.col == b.col && a.sheet == b.sheet;
  }
  friend std::strong_ordering operator<=>(const CellAddress& a,
                                          const CellAddress& b) {
    if (auto c = a.sheet <=> b.sheet; c != 0) return c;
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }

  /// Same location with both `$` markers cleared.
  CellAddress location() const { return {sheet, row, col, false, false}; }
  /// Moved by (dr, dc), markers kept.
  CellAddress offset(std::int32_t dr, std::int32_t dc) const {
    return {sheet, row + dr, col + dc, row_absolute, col_absolute};
  }
};

/// Location and `$` markers all equal.
inline bool identical(const CellAddress& a, const CellAddress& b) {
  return a == b && a.row_absolute == b.row_absolute &&
         a.col_absolute == b.col_absolute;
}

/// "A".."XFD" <-> 1..16384. Case-insensitive on input.
std::string column_name(std::int32_t col);
std::int32_t column_index(std::string_view letters);

/// Sheet names that are not plain identifiers print in single quotes with ''
/// escaping.
bool sheet_needs_quotes(std::string_view name);
std::string quote_sheet(std::string_view name);

/// Parses `[Sheet!]["$"]Col["$"]Row`; quoted sheet names use '...'.
/// Throws MalformedAddress.
CellAddress parse_address(std::string_view text, std::string_view default_sheet);

/// "B3", "$A$1": the A1 part only.
std::string format_a1(const CellAddress& address);
/// "S1!B3" or "'My sheet'!B3".
std::string format_address(const CellAddress& address);

/// Attempts to read a bare A1 token (with optional `$` markers and no sheet).
/// Returns false without throwing when the token is not a cell reference.
bool try_parse_a1(std::string_view token, CellAddress& out);

bool iequals(std::string_view a, std::string_view b);

}  // namespace wia
