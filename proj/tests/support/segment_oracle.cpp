#include "segment_oracle.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "wia/formula.hpp"

namespace wia::oracle {

namespace {

struct CellInfo {
  DataType type = DataType::Empty;
  std::string normalized;
  RefList refs;
};

using InfoMap = std::map<CellAddress, CellInfo>;

InfoMap collect(const Workbook& wb) {
  InfoMap out;
  for (const Sheet& sheet : wb.sheets()) {
    for (const auto& [at, cell] : sheet.cells) {
      CellInfo info;
      info.type = cell_data_type(cell);
      if (cell.is_formula()) {
        const FormulaAst ast = parse_formula(cell.formula(), sheet.name);
        info.normalized = normalize(ast);
        info.refs = extract_refs(ast);
      }
      out.emplace(at, std::move(info));
    }
  }
  return out;
}

std::pair<int, int> step_of(Direction d) { return d == Direction::Vertical ? std::pair{1, 0} : std::pair{0, 1}; }

// Mode of reference k between two consecutive cells, if any.
std::optional<RefMode> pair_mode(const RefOccurrence& a, const RefOccurrence& b, Direction d) {
  if (a.is_range() != b.is_range()) return std::nullopt;
  const auto [dr, dc] = step_of(d);
  auto same = [](const CellAddress& x, const CellAddress& y) {
    return x.sheet == y.sheet && x.row == y.row && x.col == y.col;
  };
  auto moved = [&](const CellAddress& x, const CellAddress& y) {
    return x.sheet == y.sheet && x.row + dr == y.row && x.col + dc == y.col;
  };
  bool pinned = same(a.start, b.start);
  bool shifted = moved(a.start, b.start);
  if (a.is_range()) {
    pinned = pinned && same(*a.end, *b.end);
    shifted = shifted && moved(*a.end, *b.end);
  }
  if (pinned) return RefMode::Pinned;
  if (shifted) return RefMode::Shifted;
  return std::nullopt;
}

// Modes of a window of cells if it satisfies R1-R4, nullopt otherwise.
std::optional<std::vector<RefMode>> window_modes(const InfoMap& info,
                                                 const std::vector<CellAddress>& cells,
                                                 Direction d) {
  std::vector<const CellInfo*> slots;
  for (const auto& c : cells) {
    auto it = info.find(c);
    if (it == info.end()) return std::nullopt;
    slots.push_back(&it->second);
  }
  const auto [dr, dc] = step_of(d);
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].sheet != cells[i - 1].sheet || cells[i].row != cells[i - 1].row + dr ||
        cells[i].col != cells[i - 1].col + dc)
      return std::nullopt;
    if (slots[i]->type != slots[0]->type) return std::nullopt;
  }
  std::vector<RefMode> modes;
  if (slots[0]->type != DataType::Formula || cells.size() < 2) return modes;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (slots[i]->normalized != slots[0]->normalized) return std::nullopt;
    if (slots[i]->refs.size() != slots[0]->refs.size()) return std::nullopt;
  }
  const std::size_t nrefs = slots[0]->refs.size();
  for (std::size_t k = 0; k < nrefs; ++k) {
    std::optional<RefMode> mode;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      auto m = pair_mode(slots[i - 1]->refs[k], slots[i]->refs[k], d);
      if (!m) return std::nullopt;
      if (mode && *mode != *m) return std::nullopt;
      mode = m;
    }
    modes.push_back(*mode);
  }
  return modes;
}

struct Window {
  Direction direction;
  std::vector<CellAddress> cells;
  std::vector<RefMode> modes;
};

std::vector<Window> windows_for(const InfoMap& info, const Workbook& wb, Direction d) {
  std::vector<Window> out;
  for (const Sheet& sheet : wb.sheets()) {
    if (sheet.cells.empty()) continue;
    int r0 = INT32_MAX, r1 = 0, c0 = INT32_MAX, c1 = 0;
    for (const auto& [at, cell] : sheet.cells) {
      r0 = std::min(r0, at.row);
      r1 = std::max(r1, at.row);
      c0 = std::min(c0, at.col);
      c1 = std::max(c1, at.col);
    }
    const bool vertical = d == Direction::Vertical;
    const int lines_from = vertical ? c0 : r0, lines_to = vertical ? c1 : r1;
    const int pos_from = vertical ? r0 : c0, pos_to = vertical ? r1 : c1;
    for (int line = lines_from; line <= lines_to; ++line) {
      std::vector<CellAddress> positions;
      for (int p = pos_from; p <= pos_to; ++p)
        positions.push_back(vertical ? CellAddress{sheet.name, p, line} : CellAddress{sheet.name, line, p});
      std::size_t i = 0;
      while (i < positions.size()) {
        if (!info.contains(positions[i])) {
          ++i;
          continue;
        }
        std::size_t best = i;
        std::vector<RefMode> best_modes;
        for (std::size_t j = i; j < positions.size(); ++j) {
          std::vector<CellAddress> cand(positions.begin() + static_cast<long>(i),
                                        positions.begin() + static_cast<long>(j) + 1);
          if (auto m = window_modes(info, cand, d)) {
            best = j;
            best_modes = *m;
          }
        }
        out.push_back({d,
                       {positions.begin() + static_cast<long>(i), positions.begin() + static_cast<long>(best) + 1},
                       best_modes});
        i = best + 1;
      }
    }
  }
  return out;
}

std::vector<CellAddress> precedents_of(const Workbook& wb, const CellInfo& info) {
  std::vector<CellAddress> out;
  for (const auto& ref : info.refs) {
    const Sheet* sheet = wb.find_sheet(ref.start.sheet);
    if (sheet == nullptr) continue;
    if (!ref.is_range()) {
      CellAddress at{sheet->name, ref.start.row, ref.start.col};
      if (sheet->cells.contains(at)) out.push_back(at);
      continue;
    }
    for (const auto& [at, cell] : sheet->cells) {
      if (at.row >= ref.start.row && at.row <= ref.end->row && at.col >= ref.start.col &&
          at.col <= ref.end->col)
        out.push_back(at);
    }
  }
  return out;
}

}  // namespace

std::vector<OracleGroup> enumerate_groups(const Workbook& wb) {
  const InfoMap info = collect(wb);
  const auto vertical = windows_for(info, wb, Direction::Vertical);
  const auto horizontal = windows_for(info, wb, Direction::Horizontal);

  std::vector<Window> accepted;
  std::set<CellAddress> taken;
  for (const Sheet& sheet : wb.sheets()) {
    auto on_sheet = [&](const std::vector<Window>& ws) {
      std::vector<const Window*> out;
      for (const auto& w : ws)
        if (w.cells.size() >= 2 && w.cells.front().sheet == sheet.name) out.push_back(&w);
      return out;
    };
    const auto v = on_sheet(vertical), h = on_sheet(horizontal);
    auto coverage = [](const std::vector<const Window*>& ws) {
      std::size_t n = 0;
      for (const Window* w : ws) n += w->cells.size();
      return n;
    };
    const bool prefer_vertical = coverage(v) >= coverage(h);
    for (const Window* w : prefer_vertical ? v : h) {
      accepted.push_back(*w);
      taken.insert(w->cells.begin(), w->cells.end());
    }
    std::vector<const Window*> rest = prefer_vertical ? h : v;
    std::sort(rest.begin(), rest.end(), [](const Window* a, const Window* b) {
      if (a->cells.size() != b->cells.size()) return a->cells.size() > b->cells.size();
      return a->cells.front() < b->cells.front();
    });
    for (const Window* w : rest) {
      if (std::any_of(w->cells.begin(), w->cells.end(), [&](const CellAddress& c) { return taken.contains(c); }))
        continue;
      accepted.push_back(*w);
      taken.insert(w->cells.begin(), w->cells.end());
    }
  }

  std::vector<OracleGroup> groups;
  for (const auto& w : accepted) {
    OracleGroup g;
    g.segment = true;
    g.direction = w.direction;
    g.members = w.cells;
    const CellInfo& first = info.at(w.cells.front());
    g.data_type = first.type;
    if (first.type == DataType::Formula) g.normalized = first.normalized;
    g.modes = w.modes;
    groups.push_back(std::move(g));
  }
  for (const auto& [at, ci] : info) {
    if (taken.contains(at)) continue;
    OracleGroup g;
    g.members = {at};
    g.data_type = ci.type;
    if (ci.type == DataType::Formula) g.normalized = ci.normalized;
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [](const OracleGroup& a, const OracleGroup& b) { return a.members.front() < b.members.front(); });

  std::map<CellAddress, std::size_t> group_of;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (const auto& m : groups[i].members) group_of[m] = i;
  for (auto& g : groups) {
    for (const auto& m : g.members) {
      for (const auto& p : precedents_of(wb, info.at(m))) {
        const std::size_t target = group_of.at(p);
        if (std::find(g.referenced.begin(), g.referenced.end(), target) == g.referenced.end())
          g.referenced.push_back(target);
      }
    }
  }
  return groups;
}

namespace {

std::string describe(const std::vector<CellAddress>& cells) {
  std::string out;
  for (const auto& c : cells) out += (out.empty() ? "" : ",") + format_address(c);
  return out;
}

}  // namespace

std::string compare_groups(const Grouping& grouping, const std::vector<OracleGroup>& expected) {
  const auto& got = grouping.groups;
  if (got.size() != expected.size())
    return "group count " + std::to_string(got.size()) + " vs oracle " + std::to_string(expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    const Group& g = got[i];
    const OracleGroup& e = expected[i];
    const std::string where = "group " + std::to_string(i) + " [" + describe(g.members) + "]: ";
    if (g.id != i) return where + "id mismatch";
    if ((g.kind == GroupKind::Segment) != e.segment) return where + "kind differs";
    if (g.direction != e.direction) return where + "direction differs";
    if (g.members != e.members) return where + "members differ from oracle [" + describe(e.members) + "]";
    if (g.data_type != e.data_type) return where + "data type differs";
    if (g.normalized_formula != e.normalized) return where + "normalized formula differs";
    if (g.ref_modes != e.modes) return where + "ref modes differ";
    if (g.referenced_groups != e.referenced) return where + "referenced groups differ";
  }
  return "";
}

std::string check_segment_rules(const Workbook& wb, const Grouping& grouping) {
  const InfoMap info = collect(wb);
  for (const Group& g : grouping.groups) {
    if (g.kind != GroupKind::Segment) {
      if (g.members.size() != 1) return "singleton with " + std::to_string(g.members.size()) + " members";
      continue;
    }
    const std::string where = "[" + describe(g.members) + "] ";
    if (g.members.size() < 2) return where + "segment group shorter than 2";
    if (!g.direction) return where + "segment without direction";
    const auto [dr, dc] = step_of(*g.direction);
    for (std::size_t i = 1; i < g.members.size(); ++i) {
      const auto& a = g.members[i - 1];
      const auto& b = g.members[i];
      if (a.sheet != b.sheet || b.row != a.row + dr || b.col != a.col + dc) return where + "R1 contiguity";
    }
    std::vector<const CellInfo*> slots;
    for (const auto& m : g.members) {
      auto it = info.find(m);
      if (it == info.end()) return where + "member not instantiated";
      slots.push_back(&it->second);
    }
    for (const auto* s : slots)
      if (s->type != g.data_type) return where + "R2 data type";
    if (g.data_type != DataType::Formula) {
      if (!g.ref_modes.empty() || g.normalized_formula) return where + "formula data on a literal segment";
      continue;
    }
    for (const auto* s : slots)
      if (!g.normalized_formula || s->normalized != *g.normalized_formula) return where + "R3 normalized formula";
    if (g.ref_modes.size() != slots[0]->refs.size()) return where + "ref mode count";
    for (std::size_t i = 1; i < slots.size(); ++i) {
      for (std::size_t k = 0; k < g.ref_modes.size(); ++k) {
        auto m = pair_mode(slots[i - 1]->refs[k], slots[i]->refs[k], *g.direction);
        if (!m || *m != g.ref_modes[k])
          return where + "R4 reference " + std::to_string(k) + " between " + format_address(g.members[i - 1]) +
                 " and " + format_address(g.members[i]);
      }
    }
  }
  return "";
}

std::string check_partition(const Workbook& wb, const Grouping& grouping) {
  std::map<CellAddress, std::size_t> seen;
  for (std::size_t i = 0; i < grouping.groups.size(); ++i) {
    if (grouping.groups[i].id != i) return "group ids are not positions";
    for (const auto& m : grouping.groups[i].members) {
      if (!seen.emplace(m, i).second) return format_address(m) + " is in two groups";
      auto it = grouping.group_of.find(m);
      if (it == grouping.group_of.end() || it->second != i) return "group_of disagrees for " + format_address(m);
    }
  }
  std::size_t instantiated = 0;
  for (const Sheet& sheet : wb.sheets()) {
    for (const auto& [at, cell] : sheet.cells) {
      ++instantiated;
      if (!seen.contains(at)) return format_address(at) + " is in no group";
    }
  }
  if (seen.size() != instantiated) return "groups hold cells that are not instantiated";
  return "";
}

std::string check_maximality(const Workbook& wb, const Grouping& grouping) {
  const InfoMap info = collect(wb);
  for (const Group& g : grouping.groups) {
    if (g.kind != GroupKind::Segment) continue;
    const auto [dr, dc] = step_of(*g.direction);
    const CellAddress before = g.members.front().offset(-dr, -dc);
    const CellAddress after = g.members.back().offset(dr, dc);
    for (const auto& extra : {before, after}) {
      if (extra.row < 1 || extra.col < 1 || !info.contains(extra)) continue;
      const std::size_t owner = grouping.group_of.at(extra);
      if (grouping.groups[owner].members.size() > 1) continue;
      std::vector<CellAddress> grown = g.members;
      if (extra < g.members.front())
        grown.insert(grown.begin(), extra);
      else
        grown.push_back(extra);
      if (window_modes(info, grown, *g.direction))
        return "[" + describe(g.members) + "] extends to " + format_address(extra);
    }
  }
  return "";
}

}  // namespace wia::oracle
