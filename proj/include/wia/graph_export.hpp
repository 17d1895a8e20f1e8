#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wia/evaluator.hpp"
#include "wia/segmenter.hpp"

namespace wia {

inline constexpr std::string_view kGraphSchemaVersion = "wia-graph/1";

struct GroupSummary {
  std::string id;  // "g0", "g1", ...
  std::string kind;  // "segment" | "singleton"
  std::string sheet;
  std::optional<std::string> direction;
  std::string range;               // "B1:B5" or "B1"
  std::vector<std::string> cells;  // member A1 refs in scan order
  std::string data_type;
  std::optional<std::string> normalized_formula;
  std::vector<std::string> ref_modes;
  std::vector<std::string> referenced_groups;

  friend bool operator==(const GroupSummary&, const GroupSummary&) = default;
};

struct GroupEdge {
  std::string from;  // group holding the precedent cells
  std::string to;    // group holding the dependent cells
  std::size_t multiplicity = 0;

  friend bool operator==(const GroupEdge&, const GroupEdge&) = default;
};

struct CellEdgeSummary {
  std::string from;  // "S1!A1"
  std::string to;
  std::size_t ordinal = 0;

  friend bool operator==(const CellEdgeSummary&, const CellEdgeSummary&) = default;
};

// The merged analysis output: topology groups plus the lifted dataflow.
// Edges inside one group appear as a self-edge on that group.
struct StructureGraph {
  std::vector<GroupSummary> groups;
  std::vector<GroupEdge> group_edges;
  std::optional<std::vector<CellEdgeSummary>> cell_edges;
  std::optional<std::vector<std::pair<std::string, CellValue>>> values;

  friend bool operator==(const StructureGraph&, const StructureGraph&) = default;
};

enum class GraphLevel { Cell, Group };

std::optional<GraphLevel> parse_graph_level(std::string_view text);  // "cell" | "group"

struct StructureOptions {
  bool include_cell_edges = false;
  const EvalResult* values = nullptr;
};

StructureGraph build_structure(const Grouping& grouping, const StructureOptions& options = {});

/// Compact JSON with a fixed key order; identical input gives identical bytes.
std::string export_json(const StructureGraph& structure);
/// Inverse of export_json. Throws SchemaError.
StructureGraph import_json(std::string_view document);

/// GraphViz digraph. GROUP level: one node per group; CELL level: one node
/// per member cell and one edge per cell edge.
std::string export_dot(const StructureGraph& structure, GraphLevel level);

/// Number, string, bool or null; errors become {"error":"DIV0"}.
nlohmann::ordered_json value_to_json(const CellValue& v);

}  // namespace wia
