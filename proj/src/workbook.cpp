#include "wia/workbook.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "wia/errors.hpp"
#include "wia/json_util.hpp"

namespace wia {

using nlohmann::json;

std::string_view data_type_name(DataType t) {
  switch (t) {
    case DataType::Number: return "number";
    case DataType::Text: return "text";
    case DataType::Boolean: return "boolean";
    case DataType::Formula: return "formula";
    case DataType::Empty: return "empty";
  }
  return "empty";
}

DataType cell_data_type(const Cell& cell) {
  if (cell.is_formula()) return DataType::Formula;
  const CellValue& v = cell.literal();
  if (v.is_number()) return DataType::Number;
  if (v.is_text()) return DataType::Text;
  if (v.is_boolean()) return DataType::Boolean;
  // Error literals cannot be loaded; treat them like text for typing.
  if (v.is_error()) return DataType::Text;
  return DataType::Empty;
}

void Sheet::put(Cell cell) {
  cell.address = cell.address.location();
  cell.address.sheet = name;
  if (cells.contains(cell.address)) throw DuplicateCell(format_address(cell.address));
  auto key = cell.address;
  cells.emplace(std::move(key), std::move(cell));
}

void Sheet::set_value(std::string_view a1, CellValue value) {
  CellAddress at = parse_address(a1, name).location();
  at.sheet = name;
  cells.insert_or_assign(at, Cell{at, std::move(value), std::nullopt});
}

void Sheet::set_formula(std::string_view a1, std::string source) {
  CellAddress at = parse_address(a1, name).location();
  at.sheet = name;
  cells.insert_or_assign(at, Cell{at, Formula{std::move(source)}, std::nullopt});
}

const Cell* Sheet::find(std::int32_t row, std::int32_t col) const {
  auto it = cells.find(CellAddress{name, row, col});
  return it == cells.end() ? nullptr : &it->second;
}

Sheet& Workbook::add_sheet(std::string name) {
  if (name.empty()) throw SchemaError("/sheets", "sheet name must be nonempty");
  if (find_sheet(name) != nullptr)
    throw SchemaError("/sheets", "duplicate sheet name '" + name + "'");
  sheets_.push_back(Sheet{std::move(name), {}});
  return sheets_.back();
}

const Sheet* Workbook::find_sheet(std::string_view name) const {
  for (const auto& s : sheets_)
    if (iequals(s.name, name)) return &s;
  return nullptr;
}

Sheet* Workbook::find_sheet(std::string_view name) {
  for (auto& s : sheets_)
    if (iequals(s.name, name)) return &s;
  return nullptr;
}

const Cell* Workbook::find(const CellAddress& address) const {
  const Sheet* sheet = find_sheet(address.sheet);
  return sheet ? sheet->find(address.row, address.col) : nullptr;
}

std::vector<const Cell*> Workbook::cells_in(const CellAddress& start,
                                            const CellAddress& end) const {
  std::vector<const Cell*> out;
  const Sheet* sheet = find_sheet(start.sheet);
  if (sheet == nullptr) return out;
  const auto [r0, r1] = std::minmax(start.row, end.row);
  const auto [c0, c1] = std::minmax(start.col, end.col);
  auto it = sheet->cells.lower_bound(CellAddress{sheet->name, r0, c0});
  while (it != sheet->cells.end() && it->first.row <= r1) {
    const CellAddress& at = it->first;
    if (at.col < c0) {
      it = sheet->cells.lower_bound(CellAddress{sheet->name, at.row, c0});
      continue;
    }
    if (at.col > c1) {
      it = sheet->cells.lower_bound(CellAddress{sheet->name, at.row + 1, c0});
      continue;
    }
    out.push_back(&it->second);
    ++it;
  }
  return out;
}

std::vector<const Cell*> Workbook::all_cells() const {
  std::vector<const Sheet*> order;
  for (const auto& s : sheets_) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const Sheet* a, const Sheet* b) { return a->name < b->name; });
  std::vector<const Cell*> out;
  for (const Sheet* s : order)
    for (const auto& [addr, cell] : s->cells) out.push_back(&cell);
  return out;
}

std::size_t Workbook::cell_count() const {
  std::size_t n = 0;
  for (const auto& s : sheets_) n += s.cells.size();
  return n;
}

std::string Workbook::default_sheet() const {
  return sheets_.empty() ? std::string() : sheets_.front().name;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, std::string("missing key '") + key + "'");
  return *it;
}

std::optional<CellValue> value_from_json(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  if (v.is_boolean()) return CellValue::boolean(v.get<bool>());
  if (v.is_number()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(path, "number is not finite");
    return CellValue::number(d);
  }
  if (v.is_string()) return CellValue::text(v.get<std::string>());
  throw SchemaError(path, "value must be a number, string, boolean or null");
}

}  // namespace

Workbook load_workbook(std::string_view document) {
  const json doc = parse_json(document);
  if (!doc.is_object()) throw SchemaError("", "document must be an object");

  Workbook wb;
  const json& sheets = require(doc, "sheets", "");
  if (!sheets.is_array()) throw SchemaError("/sheets", "must be an array");
  for (std::size_t si = 0; si < sheets.size(); ++si) {
    const std::string spath = "/sheets/" + std::to_string(si);
    const json& s = sheets[si];
    if (!s.is_object()) throw SchemaError(spath, "must be an object");
    const json& name = require(s, "name", spath);
    if (!name.is_string() || name.get<std::string>().empty())
      throw SchemaError(spath + "/name", "must be a nonempty string");
    if (wb.find_sheet(name.get<std::string>()) != nullptr)
      throw SchemaError(spath + "/name",
                        "sheet name clashes (case-insensitive): '" +
                            name.get<std::string>() + "'");
    Sheet& sheet = wb.add_sheet(name.get<std::string>());

    auto cells_it = s.find("cells");
    if (cells_it == s.end()) continue;
    if (!cells_it->is_array()) throw SchemaError(spath + "/cells", "must be an array");
    std::set<CellAddress> declared;
    for (std::size_t ci = 0; ci < cells_it->size(); ++ci) {
      const std::string cpath = spath + "/cells/" + std::to_string(ci);
      const json& c = (*cells_it)[ci];
      if (!c.is_object()) throw SchemaError(cpath, "must be an object");
      const json& ref = require(c, "ref", cpath);
      if (!ref.is_string()) throw SchemaError(cpath + "/ref", "must be a string");
      CellAddress at;
      try {
        at = parse_address(ref.get<std::string>(), sheet.name).location();
      } catch (const MalformedAddress& e) {
        throw SchemaError(cpath + "/ref", e.what());
      }
      if (!iequals(at.sheet, sheet.name))
        throw SchemaError(cpath + "/ref", "cell ref names another sheet");
      at.sheet = sheet.name;

      const bool has_value = c.contains("value");
      const bool has_formula = c.contains("formula");
      if (has_value == has_formula)
        throw SchemaError(cpath, "exactly one of 'value' or 'formula' is required");
      if (!declared.insert(at).second) throw DuplicateCell(format_address(at));
      if (has_formula) {
        const json& f = c["formula"];
        if (!f.is_string() || f.get<std::string>().empty() ||
            f.get<std::string>().front() != '=')
          throw SchemaError(cpath + "/formula", "must be a string starting with '='");
        sheet.put(Cell{at, Formula{f.get<std::string>()}, std::nullopt});
      } else if (auto v = value_from_json(c["value"], cpath + "/value")) {
        sheet.put(Cell{at, *v, std::nullopt});
      }
    }
  }

  if (auto meta = doc.find("metadata"); meta != doc.end()) {
    if (!meta->is_object()) throw SchemaError("/metadata", "must be an object");
    for (const auto& [k, v] : meta->items()) {
      if (!v.is_string()) throw SchemaError("/metadata/" + k, "must be a string");
      wb.metadata()[k] = v.get<std::string>();
    }
  }
  return wb;
}

std::string save_workbook(const Workbook& workbook) {
  nlohmann::ordered_json doc;
  doc["sheets"] = nlohmann::ordered_json::array();
  for (const auto& sheet : workbook.sheets()) {
    nlohmann::ordered_json s;
    s["name"] = sheet.name;
    s["cells"] = nlohmann::ordered_json::array();
    for (const auto& [addr, cell] : sheet.cells) {
      nlohmann::ordered_json c;
      c["ref"] = format_a1(addr);
      if (cell.is_formula()) {
        c["formula"] = cell.formula();
      } else {
        const CellValue& v = cell.literal();
        if (v.is_number()) c["value"] = v.as_number();
        else if (v.is_text()) c["value"] = v.as_text();
        else if (v.is_boolean()) c["value"] = v.as_boolean();
        else continue;
      }
      s["cells"].push_back(std::move(c));
    }
    doc["sheets"].push_back(std::move(s));
  }
  if (!workbook.metadata().empty()) {
    doc["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : workbook.metadata()) doc["metadata"][k] = v;
  }
  return doc.dump();
}

}  // namespace wia
