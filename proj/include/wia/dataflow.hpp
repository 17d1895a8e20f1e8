#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "wia/evaluator.hpp"
#include "wia/workbook.hpp"

namespace wia {

struct CellEdge {
  CellAddress from;  // precedent
  CellAddress to;    // dependent formula cell
  std::size_t ordinal = 0;

  friend bool operator==(const CellEdge&, const CellEdge&) = default;
  friend auto operator<=>(const CellEdge&, const CellEdge&) = default;
};

/// A reference that does not land on an instantiated cell: an empty address
/// (possibly inside a range) or a sheet that does not exist.
struct DanglingRef {
  CellAddress from;  // the formula cell holding the reference
  std::size_t ordinal = 0;
  CellAddress target;

  friend bool operator==(const DanglingRef&, const DanglingRef&) = default;
};

// Cell-level dataflow graph: every instantiated cell is a node and every
// reference occurrence yields one edge per instantiated target.
struct CellGraph {
  std::set<CellAddress> nodes;
  /// Ordered by dependent, then ordinal, then precedent.
  std::vector<CellEdge> edges;
  std::vector<DanglingRef> dangling;
};

/// Ranges larger than this many cells are not scanned for dangling notes.
inline constexpr long long kMaxDanglingScan = 1 << 16;

CellGraph build_cell_graph(const Workbook& workbook);
CellGraph build_cell_graph(const CompiledWorkbook& compiled);

/// All cells that feed `cell`, directly or indirectly (the cell itself
/// excluded). Throws UnknownCell when `cell` is not a node.
std::set<CellAddress> transitive_precedents(const CellGraph& graph, const CellAddress& cell);

}  // namespace wia
