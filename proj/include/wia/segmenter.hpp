#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wia/dataflow.hpp"
#include "wia/evaluator.hpp"
#include "wia/formula.hpp"
#include "wia/workbook.hpp"

namespace wia {

enum class Direction { Vertical, Horizontal };
enum class RefMode { Shifted, Pinned };

std::string_view direction_name(Direction d);  // "vertical" / "horizontal"
std::string_view ref_mode_name(RefMode m);      // "shifted" / "pinned"

/// Unit step along the scan direction: (+1 row, 0) or (0, +1 col).
inline std::pair<std::int32_t, std::int32_t> unit_step(Direction d) {
  return d == Direction::Vertical ? std::pair{1, 0} : std::pair{0, 1};
}

struct GridSlot {
  bool present = false;
  DataType type = DataType::Empty;
  NormalizedFormula normalized;  // formula slots only
  RefList refs;                  // formula slots only
};

// Dense view of one sheet over the bounding box of its instantiated cells.
// Slot indices are 0-based; slot (r, c) is the cell at 1-based
// (origin_row + r, origin_col + c).
struct GridMatrix {
  std::string sheet;
  std::int32_t origin_row = 1;
  std::int32_t origin_col = 1;
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<GridSlot> slots;  // row-major

  const GridSlot& at(std::int32_t r, std::int32_t c) const {
    return slots[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                 static_cast<std::size_t>(c)];
  }
  CellAddress address(std::int32_t r, std::int32_t c) const {
    return {sheet, origin_row + r, origin_col + c};
  }
  std::size_t present_count() const;
};

struct Segment {
  std::size_t id = 0;
  std::string sheet;
  Direction direction = Direction::Vertical;
  CellAddress start;
  std::int32_t length = 1;
  DataType data_type = DataType::Empty;
  std::optional<NormalizedFormula> normalized_formula;
  std::vector<RefMode> ref_modes;  // formula segments of length >= 2

  std::vector<CellAddress> cells() const;
  bool contains(const CellAddress& at) const;
};

enum class GroupKind { Segment, Singleton };

struct Group {
  std::size_t id = 0;
  GroupKind kind = GroupKind::Singleton;
  std::optional<Direction> direction;  // segments only
  std::vector<CellAddress> members;    // in scan order
  DataType data_type = DataType::Empty;
  std::optional<NormalizedFormula> normalized_formula;
  std::vector<RefMode> ref_modes;
  std::vector<std::size_t> referenced_groups;
};

/// One matrix per nonempty sheet, in workbook sheet order.
std::vector<GridMatrix> build_matrix(const Workbook& workbook);
std::vector<GridMatrix> build_matrix(const CompiledWorkbook& compiled);

/// Maximal runs per line with equal type tag and, for formulas,
/// equal normalized formula. Absent slots end a run.
std::vector<Segment> generate_segments(const GridMatrix& matrix, Direction direction);

/// Splits formula candidates where consecutive cells do not keep
/// every reference either pinned or shifted by one step, or where the
/// per-reference mode changes; records the modes.
std::vector<Segment> parse_formula_segments(const std::vector<Segment>& candidates,
                                            const GridMatrix& matrix);

/// The direction whose length>=2 segments cover more cells; ties go
/// vertical.
Direction preferred_scan_direction(const std::vector<Segment>& vertical,
                                   const std::vector<Segment>& horizontal);

/// Keeps every length>=2 segment of the preferred direction, then
/// admits the other direction's length>=2 segments (longest first, then by
/// start address) that do not overlap anything accepted.
std::vector<Segment> prune_segments(const std::vector<Segment>& vertical,
                                    const std::vector<Segment>& horizontal,
                                    Direction preferred);

/// Groups referenced by `members`, deduplicated in order of first occurrence
/// (members in order, each member's references by ordinal).
std::vector<std::size_t> referenced_groups(const std::vector<CellAddress>& members,
                                           const CellGraph& graph,
                                           const std::map<CellAddress, std::size_t>& group_of);

/// referenced_groups for each accepted segment.
std::vector<std::vector<std::size_t>> set_referenced_segments(
    const std::vector<Segment>& accepted, const CellGraph& graph,
    const std::map<CellAddress, std::size_t>& group_of);

struct Grouping {
  std::vector<Group> groups;  // ids equal positions; ordered by first member
  CellGraph cell_graph;
  std::vector<Segment> segments;  // accepted segments
  std::map<CellAddress, std::size_t> group_of;
};

/// The full pipeline. Cells outside accepted segments become
/// singleton groups, so the groups partition the instantiated cells.
Grouping generate_groups(const Workbook& workbook);
Grouping generate_groups(const CompiledWorkbook& compiled);

/// "B1:B5" for a multi-cell group, "B1" for a singleton (no sheet prefix).
std::string group_range(const Group& group);

}  // namespace wia
