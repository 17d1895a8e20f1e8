#include "wia/graph_export.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "wia/errors.hpp"
#include "wia/json_util.hpp"

namespace wia {

using ojson = nlohmann::ordered_json;

std::optional<GraphLevel> parse_graph_level(std::string_view text) {
  if (text == "cell") return GraphLevel::Cell;
  if (text == "group") return GraphLevel::Group;
  return std::nullopt;
}

ojson value_to_json(const CellValue& v) {
  if (v.is_number()) return v.as_number();
  if (v.is_text()) return v.as_text();
  if (v.is_boolean()) return v.as_boolean();
  if (v.is_error()) return ojson{{"error", std::string(error_name(v.as_error()))}};
  return nullptr;
}

namespace {

std::string group_id(std::size_t index) { return "g" + std::to_string(index); }

CellValue value_from_json(const ojson& j, const std::string& path) {
  if (j.is_null()) return {};
  if (j.is_number()) return CellValue::number(j.get<double>());
  if (j.is_string()) return CellValue::text(j.get<std::string>());
  if (j.is_boolean()) return CellValue::boolean(j.get<bool>());
  if (j.is_object() && j.contains("error") && j["error"].is_string()) {
    ErrorKind k;
    if (parse_error_name(j["error"].get<std::string>(), k)) return CellValue::error(k);
  }
  throw SchemaError(path, "unrecognized value");
}

}  // namespace

StructureGraph build_structure(const Grouping& grouping, const StructureOptions& options) {
  StructureGraph out;
  for (const Group& g : grouping.groups) {
    GroupSummary s;
    s.id = group_id(g.id);
    s.kind = g.kind == GroupKind::Segment ? "segment" : "singleton";
    s.sheet = g.members.front().sheet;
    if (g.direction) s.direction = std::string(direction_name(*g.direction));
    s.range = group_range(g);
    for (const auto& m : g.members) s.cells.push_back(format_a1(m));
    s.data_type = std::string(data_type_name(g.data_type));
    s.normalized_formula = g.normalized_formula;
    for (RefMode m : g.ref_modes) s.ref_modes.emplace_back(ref_mode_name(m));
    for (std::size_t r : g.referenced_groups) s.referenced_groups.push_back(group_id(r));
    out.groups.push_back(std::move(s));
  }

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> lifted;
  for (const auto& e : grouping.cell_graph.edges)
    ++lifted[{grouping.group_of.at(e.from), grouping.group_of.at(e.to)}];
  for (const auto& [key, n] : lifted)
    out.group_edges.push_back({group_id(key.first), group_id(key.second), n});

  if (options.include_cell_edges) {
    std::vector<CellEdgeSummary> edges;
    for (const auto& e : grouping.cell_graph.edges)
      edges.push_back({format_address(e.from), format_address(e.to), e.ordinal});
    out.cell_edges = std::move(edges);
  }
  if (options.values != nullptr) {
    std::vector<std::pair<std::string, CellValue>> values;
    for (const auto& [at, v] : options.values->values) values.emplace_back(format_address(at), v);
    out.values = std::move(values);
  }
  return out;
}

std::string export_json(const StructureGraph& structure) {
  ojson doc;
  doc["version"] = kGraphSchemaVersion;
  doc["groups"] = ojson::array();
  for (const auto& g : structure.groups) {
    ojson j;
    j["id"] = g.id;
    j["kind"] = g.kind;
    j["sheet"] = g.sheet;
    j["direction"] = g.direction ? ojson(*g.direction) : ojson(nullptr);
    j["range"] = g.range;
    j["cells"] = g.cells;
    j["data_type"] = g.data_type;
    j["normalized_formula"] = g.normalized_formula ? ojson(*g.normalized_formula) : ojson(nullptr);
    j["ref_modes"] = g.ref_modes;
    j["referenced_groups"] = g.referenced_groups;
    doc["groups"].push_back(std::move(j));
  }
  doc["group_edges"] = ojson::array();
  for (const auto& e : structure.group_edges)
    doc["group_edges"].push_back({{"from", e.from}, {"to", e.to}, {"multiplicity", e.multiplicity}});
  if (structure.cell_edges) {
    doc["cell_edges"] = ojson::array();
    for (const auto& e : *structure.cell_edges)
      doc["cell_edges"].push_back({{"from", e.from}, {"to", e.to}, {"ordinal", e.ordinal}});
  }
  if (structure.values) {
    doc["values"] = ojson::object();
    for (const auto& [at, v] : *structure.values) doc["values"][at] = value_to_json(v);
  }
  return doc.dump();
}

namespace {

const ojson& field(const ojson& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, std::string("missing key '") + key + "'");
  return *it;
}

std::string string_field(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = field(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "/" + key, "must be a string");
  return v.get<std::string>();
}

std::optional<std::string> nullable_string(const ojson& obj, const char* key,
                                           const std::string& path) {
  const ojson& v = field(obj, key, path);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw SchemaError(path + "/" + key, "must be a string or null");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = field(obj, key, path);
  if (!v.is_array()) throw SchemaError(path + "/" + key, "must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(path + "/" + key, "must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::size_t count_field(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = field(obj, key, path);
  if (!v.is_number_unsigned()) throw SchemaError(path + "/" + key, "must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace

StructureGraph import_json(std::string_view document) {
  const ojson doc = parse_json<ojson>(document);
  if (!doc.is_object()) throw SchemaError("", "document must be an object");
  if (string_field(doc, "version", "") != kGraphSchemaVersion)
    throw SchemaError("/version", "unsupported version");

  StructureGraph out;
  const ojson& groups = field(doc, "groups", "");
  if (!groups.is_array()) throw SchemaError("/groups", "must be an array");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string path = "/groups/" + std::to_string(i);
    const ojson& j = groups[i];
    if (!j.is_object()) throw SchemaError(path, "must be an object");
    GroupSummary g;
    g.id = string_field(j, "id", path);
    g.kind = string_field(j, "kind", path);
    g.sheet = string_field(j, "sheet", path);
    g.direction = nullable_string(j, "direction", path);
    g.range = string_field(j, "range", path);
    g.cells = string_list(j, "cells", path);
    g.data_type = string_field(j, "data_type", path);
    g.normalized_formula = nullable_string(j, "normalized_formula", path);
    g.ref_modes = string_list(j, "ref_modes", path);
    g.referenced_groups = string_list(j, "referenced_groups", path);
    out.groups.push_back(std::move(g));
  }
  const ojson& edges = field(doc, "group_edges", "");
  if (!edges.is_array()) throw SchemaError("/group_edges", "must be an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "/group_edges/" + std::to_string(i);
    out.group_edges.push_back({string_field(edges[i], "from", path),
                               string_field(edges[i], "to", path),
                               count_field(edges[i], "multiplicity", path)});
  }
  if (auto it = doc.find("cell_edges"); it != doc.end()) {
    if (!it->is_array()) throw SchemaError("/cell_edges", "must be an array");
    std::vector<CellEdgeSummary> cell_edges;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "/cell_edges/" + std::to_string(i);
      cell_edges.push_back({string_field((*it)[i], "from", path),
                            string_field((*it)[i], "to", path),
                            count_field((*it)[i], "ordinal", path)});
    }
    out.cell_edges = std::move(cell_edges);
  }
  if (auto it = doc.find("values"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("/values", "must be an object");
    std::vector<std::pair<std::string, CellValue>> values;
    for (const auto& [k, v] : it->items()) values.emplace_back(k, value_from_json(v, "/values/" + k));
    out.values = std::move(values);
  }
  return out;
}

namespace {

std::string dot_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string dot_quote(std::string_view text) { return "\"" + dot_escape(text) + "\""; }

}  // namespace

std::string export_dot(const StructureGraph& structure, GraphLevel level) {
  std::ostringstream out;
  out << "digraph wia {\n";
  if (level == GraphLevel::Group) {
    for (const auto& g : structure.groups) {
      const std::string range = quote_sheet(g.sheet) + "!" + g.range;
      const std::string& detail = g.normalized_formula ? *g.normalized_formula : g.data_type;
      // "\n" stays escaped: DOT turns it into a line break inside the label.
      out << "  " << dot_quote(g.id) << " [label=\"" << dot_escape(range) << "\\n"
          << dot_escape(detail) << "\", shape=" << (g.kind == "segment" ? "box" : "ellipse")
          << "];\n";
    }
    for (const auto& e : structure.group_edges)
      out << "  " << dot_quote(e.from) << " -> " << dot_quote(e.to)
          << " [label=" << dot_quote(std::to_string(e.multiplicity)) << "];\n";
  } else {
    for (const auto& g : structure.groups) {
      for (const auto& c : g.cells) {
        const std::string name = quote_sheet(g.sheet) + "!" + c;
        out << "  " << dot_quote(name) << " [label=" << dot_quote(name) << ", shape=box];\n";
      }
    }
    if (structure.cell_edges) {
      for (const auto& e : *structure.cell_edges)
        out << "  " << dot_quote(e.from) << " -> " << dot_quote(e.to) << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace wia
