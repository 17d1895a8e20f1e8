#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wia/address.hpp"
#include "wia/value.hpp"

namespace wia {

enum class DataType { Number, Text, Boolean, Formula, Empty };

std::string_view data_type_name(DataType t);  // "number", "text", ...

struct Formula {
  std::string source;  // always starts with '='
  friend bool operator==(const Formula&, const Formula&) = default;
};

struct Cell {
  CellAddress address;
  std::variant<CellValue, Formula> content;
  std::optional<CellValue> computed;

  bool is_formula() const { return content.index() == 1; }
  const std::string& formula() const { return std::get<Formula>(content).source; }
  const CellValue& literal() const { return std::get<CellValue>(content); }

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// The type tag used for data-type continuity. Formula cells are FORMULA
/// whatever they compute.
DataType cell_data_type(const Cell& cell);

struct Sheet {
  std::string name;
  std::map<CellAddress, Cell> cells;  // keys carry `name` as their sheet

  /// Throws DuplicateCell when the address is taken.
  void put(Cell cell);
  /// Convenience setters for building sheets in code; they overwrite.
  void set_value(std::string_view a1, CellValue value);
  void set_formula(std::string_view a1, std::string source);

  const Cell* find(std::int32_t row, std::int32_t col) const;

  friend bool operator==(const Sheet&, const Sheet&) = default;
};

// Sparse workbook. Empty cells are never materialized; looking up an address
// that has no cell means Empty.
class Workbook {
 public:
  /// Throws SchemaError when the name clashes (case-insensitively). The
  /// returned reference stays valid as more sheets are added.
  Sheet& add_sheet(std::string name);

  const std::deque<Sheet>& sheets() const { return sheets_; }
  std::deque<Sheet>& sheets() { return sheets_; }

  const Sheet* find_sheet(std::string_view name) const;  // case-insensitive
  Sheet* find_sheet(std::string_view name);
  const Cell* find(const CellAddress& address) const;
  /// Instantiated cells inside the rectangle spanned by `start` and `end`
  /// (sheet taken from `start`), in address order.
  std::vector<const Cell*> cells_in(const CellAddress& start, const CellAddress& end) const;

  /// Every cell ordered by (sheet, row, col).
  std::vector<const Cell*> all_cells() const;
  std::size_t cell_count() const;
  /// The first sheet's name, or "" for an empty workbook.
  std::string default_sheet() const;

  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  friend bool operator==(const Workbook&, const Workbook&) = default;

 private:
  std::deque<Sheet> sheets_;
  std::map<std::string, std::string> metadata_;
};

/// Reads the canonical JSON workbook document. Unknown keys are ignored;
/// `null` values declare nothing. Throws SchemaError / DuplicateCell.
Workbook load_workbook(std::string_view document);

/// Writes the canonical JSON form (cells in row-major order, compact).
std::string save_workbook(const Workbook& workbook);

}  // namespace wia
