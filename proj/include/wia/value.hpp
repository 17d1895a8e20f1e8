#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace wia {

enum class ErrorKind { Div0, Value, Cycle, Ref, Name };

std::string_view error_name(ErrorKind kind);  // "DIV0", "VALUE", ...
bool parse_error_name(std::string_view text, ErrorKind& out);

struct Empty {
  friend bool operator==(Empty, Empty) { return true; }
};

// A scalar cell value. Stored inputs never hold NaN or infinities.
class CellValue {
 public:
  using Storage = std::variant<Empty, double, std::string, bool, ErrorKind>;

  CellValue() = default;
  static CellValue number(double v) { return CellValue(Storage(std::in_place_index<1>, v)); }
  static CellValue text(std::string v) { return CellValue(Storage(std::in_place_index<2>, std::move(v))); }
  static CellValue boolean(bool v) { return CellValue(Storage(std::in_place_index<3>, v)); }
  static CellValue error(ErrorKind k) { return CellValue(Storage(std::in_place_index<4>, k)); }

  bool is_empty() const { return storage_.index() == 0; }
  bool is_number() const { return storage_.index() == 1; }
  bool is_text() const { return storage_.index() == 2; }
  bool is_boolean() const { return storage_.index() == 3; }
  bool is_error() const { return storage_.index() == 4; }

  double as_number() const { return std::get<1>(storage_); }
  const std::string& as_text() const { return std::get<2>(storage_); }
  bool as_boolean() const { return std::get<3>(storage_); }
  ErrorKind as_error() const { return std::get<4>(storage_); }

  const Storage& storage() const { return storage_; }

  friend bool operator==(const CellValue&, const CellValue&) = default;

 private:
  explicit CellValue(Storage s) : storage_(std::move(s)) {}
  Storage storage_;
};

/// Bit-exact comparison (numbers compared by representation).
bool bit_identical(const CellValue& a, const CellValue& b);

/// Shortest decimal that reads back to the same double ("1.2", "1e+20").
std::string format_number(double v);

/// Human-readable rendering used by the CLI: 5, "x", TRUE, #DIV0, (empty).
std::string display_value(const CellValue& v);

}  // namespace wia
