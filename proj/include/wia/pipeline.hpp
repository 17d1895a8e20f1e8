#pragma once

#include <string>

#include "wia/evaluator.hpp"
#include "wia/graph_export.hpp"
#include "wia/segmenter.hpp"

namespace wia {

// The one analysis path shared by the CLI and the HTTP service.
struct Analysis {
  Grouping grouping;
  StructureGraph graph;
};

/// CELL level adds the cell edges to the graph; GROUP level leaves them out.
Analysis analyze(const CompiledWorkbook& compiled, GraphLevel level);

/// {"S1!A1": 5, "S1!A2": {"error":"DIV0"}, ...} in address order.
std::string export_values_json(const EvalResult& result);

}  // namespace wia
