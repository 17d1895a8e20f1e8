#include "wia/dataflow.hpp"

#include <map>

#include "wia/errors.hpp"

namespace wia {

CellGraph build_cell_graph(const Workbook& workbook) {
  return build_cell_graph(CompiledWorkbook(workbook));
}

CellGraph build_cell_graph(const CompiledWorkbook& compiled) {
  const Workbook& wb = compiled.workbook();
  CellGraph g;
  for (const Cell* c : wb.all_cells()) g.nodes.insert(c->address);

  for (const auto& [at, formula] : compiled.formulas()) {
    for (const auto& r : extract_refs(*formula.ast)) {
      if (wb.find_sheet(r.start.sheet) == nullptr) {
        g.dangling.push_back({at, r.ordinal, r.start.location()});
        continue;
      }
      if (!r.is_range()) {
        if (const Cell* c = wb.find(r.start))
          g.edges.push_back({c->address, at, r.ordinal});
        else
          g.dangling.push_back({at, r.ordinal, r.start.location()});
        continue;
      }
      const auto present = wb.cells_in(r.start, *r.end);
      for (const Cell* c : present) g.edges.push_back({c->address, at, r.ordinal});

      const long long area = static_cast<long long>(r.end->row - r.start.row + 1) *
                             (r.end->col - r.start.col + 1);
      if (area > kMaxDanglingScan || static_cast<long long>(present.size()) == area) continue;
      std::size_t next = 0;
      for (std::int32_t row = r.start.row; row <= r.end->row; ++row) {
        for (std::int32_t col = r.start.col; col <= r.end->col; ++col) {
          const CellAddress probe{r.start.sheet, row, col};
          if (next < present.size() && present[next]->address == probe) {
            ++next;
            continue;
          }
          g.dangling.push_back({at, r.ordinal, probe});
        }
      }
    }
  }
  return g;
}

std::set<CellAddress> transitive_precedents(const CellGraph& graph, const CellAddress& cell) {
  if (!graph.nodes.contains(cell)) throw UnknownCell(format_address(cell));
  std::map<CellAddress, std::vector<CellAddress>> incoming;
  for (const auto& e : graph.edges) incoming[e.to].push_back(e.from);

  std::set<CellAddress> seen;
  std::vector<CellAddress> work{cell};
  while (!work.empty()) {
    const CellAddress at = work.back();
    work.pop_back();
    auto it = incoming.find(at);
    if (it == incoming.end()) continue;
    for (const auto& p : it->second)
      if (seen.insert(p).second) work.push_back(p);
  }
  seen.erase(cell);
  return seen;
}

}  // namespace wia
