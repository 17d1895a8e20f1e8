#include "wia/pipeline.hpp"

namespace wia {

Analysis analyze(const CompiledWorkbook& compiled, GraphLevel level) {
  Analysis out{generate_groups(compiled), {}};
  StructureOptions options;
  options.include_cell_edges = level == GraphLevel::Cell;
  out.graph = build_structure(out.grouping, options);
  return out;
}

std::string export_values_json(const EvalResult& result) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [at, v] : result.values) doc[format_address(at)] = value_to_json(v);
  return doc.dump();
}

}  // namespace wia
