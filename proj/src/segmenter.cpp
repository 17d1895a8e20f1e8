#include "wia/segmenter.hpp"

#include <algorithm>
#include <climits>
#include <set>

namespace wia {

std::string_view direction_name(Direction d) {
  return d == Direction::Vertical ? "vertical" : "horizontal";
}

std::string_view ref_mode_name(RefMode m) { return m == RefMode::Shifted ? "shifted" : "pinned"; }

std::size_t GridMatrix::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(slots.begin(), slots.end(), [](const GridSlot& s) { return s.present; }));
}

std::vector<CellAddress> Segment::cells() const {
  const auto [dr, dc] = unit_step(direction);
  std::vector<CellAddress> out;
  out.reserve(static_cast<std::size_t>(length));
  for (std::int32_t i = 0; i < length; ++i) out.push_back(start.offset(dr * i, dc * i).location());
  return out;
}

bool Segment::contains(const CellAddress& at) const {
  if (at.sheet != start.sheet) return false;
  if (direction == Direction::Vertical)
    return at.col == start.col && at.row >= start.row && at.row < start.row + length;
  return at.row == start.row && at.col >= start.col && at.col < start.col + length;
}

std::vector<GridMatrix> build_matrix(const Workbook& workbook) {
  return build_matrix(CompiledWorkbook(workbook));
}

std::vector<GridMatrix> build_matrix(const CompiledWorkbook& compiled) {
  std::vector<GridMatrix> out;
  for (const Sheet& sheet : compiled.workbook().sheets()) {
    if (sheet.cells.empty()) continue;
    std::int32_t r0 = INT32_MAX, r1 = 0, c0 = INT32_MAX, c1 = 0;
    for (const auto& [at, cell] : sheet.cells) {
      r0 = std::min(r0, at.row);
      r1 = std::max(r1, at.row);
      c0 = std::min(c0, at.col);
      c1 = std::max(c1, at.col);
    }
    GridMatrix m;
    m.sheet = sheet.name;
    m.origin_row = r0;
    m.origin_col = c0;
    m.rows = r1 - r0 + 1;
    m.cols = c1 - c0 + 1;
    m.slots.resize(static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols));
    for (const auto& [at, cell] : sheet.cells) {
      GridSlot& slot = m.slots[static_cast<std::size_t>(at.row - r0) * static_cast<std::size_t>(m.cols) +
                               static_cast<std::size_t>(at.col - c0)];
      slot.present = true;
      slot.type = cell_data_type(cell);
      if (const CompiledFormula* f = compiled.formula(at)) {
        slot.normalized = normalize(*f->ast);
        slot.refs = extract_refs(*f->ast);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Segment> generate_segments(const GridMatrix& matrix, Direction direction) {
  std::vector<Segment> out;
  const bool vertical = direction == Direction::Vertical;
  const std::int32_t lines = vertical ? matrix.cols : matrix.rows;
  const std::int32_t span = vertical ? matrix.rows : matrix.cols;
  auto slot = [&](std::int32_t line, std::int32_t pos) -> const GridSlot& {
    return vertical ? matrix.at(pos, line) : matrix.at(line, pos);
  };
  auto address = [&](std::int32_t line, std::int32_t pos) {
    return vertical ? matrix.address(pos, line) : matrix.address(line, pos);
  };
  auto same_run = [](const GridSlot& a, const GridSlot& b) {
    if (!b.present || a.type != b.type) return false;
    return a.type != DataType::Formula || a.normalized == b.normalized;
  };

  for (std::int32_t line = 0; line < lines; ++line) {
    std::int32_t pos = 0;
    while (pos < span) {
      const GridSlot& first = slot(line, pos);
      if (!first.present) {
        ++pos;
        continue;
      }
      std::int32_t end = pos + 1;
      while (end < span && same_run(first, slot(line, end))) ++end;
      Segment s;
      s.id = out.size();
      s.sheet = matrix.sheet;
      s.direction = direction;
      s.start = address(line, pos);
      s.length = end - pos;
      s.data_type = first.type;
      if (first.type == DataType::Formula) s.normalized_formula = first.normalized;
      out.push_back(std::move(s));
      pos = end;
    }
  }
  return out;
}

namespace {

// Modes that carry reference `a` (in one cell) to `b` (in the next cell),
// or nullopt when neither holds.
std::optional<RefMode> pair_mode(const RefOccurrence& a, const RefOccurrence& b, Direction d) {
  const auto [dr, dc] = unit_step(d);
  if (a.is_range() != b.is_range()) return std::nullopt;
  auto same = [](const CellAddress& x, const CellAddress& y) { return x == y; };
  auto shifted = [&](const CellAddress& x, const CellAddress& y) {
    return y == x.offset(dr, dc).location();
  };
  const bool pinned = same(a.start, b.start) && (!a.is_range() || same(*a.end, *b.end));
  if (pinned) return RefMode::Pinned;
  const bool shift = shifted(a.start, b.start) && (!a.is_range() || shifted(*a.end, *b.end));
  if (shift) return RefMode::Shifted;
  return std::nullopt;
}

std::optional<std::vector<RefMode>> pair_modes(const GridSlot& a, const GridSlot& b, Direction d) {
  if (a.refs.size() != b.refs.size()) return std::nullopt;
  std::vector<RefMode> modes;
  modes.reserve(a.refs.size());
  for (std::size_t k = 0; k < a.refs.size(); ++k) {
    auto m = pair_mode(a.refs[k], b.refs[k], d);
    if (!m) return std::nullopt;
    modes.push_back(*m);
  }
  return modes;
}

const GridSlot& slot_at(const GridMatrix& m, const CellAddress& at) {
  return m.at(at.row - m.origin_row, at.col - m.origin_col);
}

}  // namespace

std::vector<Segment> parse_formula_segments(const std::vector<Segment>& candidates,
                                            const GridMatrix& matrix) {
  std::vector<Segment> out;
  auto emit = [&](const Segment& proto, const std::vector<CellAddress>& cells, std::size_t from,
                  std::size_t to, std::vector<RefMode> modes) {
    Segment s = proto;
    s.id = out.size();
    s.start = cells[from];
    s.length = static_cast<std::int32_t>(to - from);
    s.ref_modes = s.length >= 2 ? std::move(modes) : std::vector<RefMode>{};
    out.push_back(std::move(s));
  };

  for (const Segment& cand : candidates) {
    if (cand.data_type != DataType::Formula || cand.length < 2) {
      Segment s = cand;
      s.id = out.size();
      out.push_back(std::move(s));
      continue;
    }
    const auto cells = cand.cells();
    std::size_t begin = 0;
    std::optional<std::vector<RefMode>> current;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
      auto modes = pair_modes(slot_at(matrix, cells[i]), slot_at(matrix, cells[i + 1]),
                              cand.direction);
      if (modes && (!current || *current == *modes)) {
        current = std::move(modes);
        continue;
      }
      // The pair breaks the run: cells[i] closes the current piece.
      emit(cand, cells, begin, i + 1, current.value_or(std::vector<RefMode>{}));
      begin = i + 1;
      current.reset();
    }
    emit(cand, cells, begin, cells.size(), current.value_or(std::vector<RefMode>{}));
  }
  return out;
}

namespace {

std::size_t covered(const std::vector<Segment>& segments) {
  std::size_t n = 0;
  for (const auto& s : segments)
    if (s.length >= 2) n += static_cast<std::size_t>(s.length);
  return n;
}

}  // namespace

Direction preferred_scan_direction(const std::vector<Segment>& vertical,
                                   const std::vector<Segment>& horizontal) {
  return covered(horizontal) > covered(vertical) ? Direction::Horizontal : Direction::Vertical;
}

std::vector<Segment> prune_segments(const std::vector<Segment>& vertical,
                                    const std::vector<Segment>& horizontal,
                                    Direction preferred) {
  const auto& first = preferred == Direction::Vertical ? vertical : horizontal;
  const auto& second = preferred == Direction::Vertical ? horizontal : vertical;

  std::vector<Segment> accepted;
  std::set<CellAddress> taken;
  for (const auto& s : first) {
    if (s.length < 2) continue;
    for (const auto& c : s.cells()) taken.insert(c);
    accepted.push_back(s);
  }

  std::vector<const Segment*> rest;
  for (const auto& s : second)
    if (s.length >= 2) rest.push_back(&s);
  std::stable_sort(rest.begin(), rest.end(), [](const Segment* a, const Segment* b) {
    if (a->length != b->length) return a->length > b->length;
    return a->start < b->start;
  });
  for (const Segment* s : rest) {
    const auto cells = s->cells();
    if (std::any_of(cells.begin(), cells.end(),
                    [&](const CellAddress& c) { return taken.contains(c); }))
      continue;
    for (const auto& c : cells) taken.insert(c);
    accepted.push_back(*s);
  }
  return accepted;
}

std::vector<std::size_t> referenced_groups(const std::vector<CellAddress>& members,
                                           const CellGraph& graph,
                                           const std::map<CellAddress, std::size_t>& group_of) {
  std::vector<std::size_t> out;
  for (const auto& m : members) {
    auto lo = std::lower_bound(graph.edges.begin(), graph.edges.end(), m,
                               [](const CellEdge& e, const CellAddress& at) { return e.to < at; });
    for (auto it = lo; it != graph.edges.end() && it->to == m; ++it) {
      auto g = group_of.find(it->from);
      if (g == group_of.end()) continue;
      if (std::find(out.begin(), out.end(), g->second) == out.end()) out.push_back(g->second);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> set_referenced_segments(
    const std::vector<Segment>& accepted, const CellGraph& graph,
    const std::map<CellAddress, std::size_t>& group_of) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(accepted.size());
  for (const auto& s : accepted) out.push_back(referenced_groups(s.cells(), graph, group_of));
  return out;
}

Grouping generate_groups(const Workbook& workbook) {
  return generate_groups(CompiledWorkbook(workbook));
}

Grouping generate_groups(const CompiledWorkbook& compiled) {
  Grouping result;
  result.cell_graph = build_cell_graph(compiled);

  for (const GridMatrix& m : build_matrix(compiled)) {
    const auto vertical = parse_formula_segments(generate_segments(m, Direction::Vertical), m);
    const auto horizontal = parse_formula_segments(generate_segments(m, Direction::Horizontal), m);
    const Direction preferred = preferred_scan_direction(vertical, horizontal);
    for (auto& s : prune_segments(vertical, horizontal, preferred))
      result.segments.push_back(std::move(s));
  }

  std::set<CellAddress> in_segment;
  for (const auto& s : result.segments) {
    Group g;
    g.kind = GroupKind::Segment;
    g.direction = s.direction;
    g.members = s.cells();
    g.data_type = s.data_type;
    g.normalized_formula = s.normalized_formula;
    g.ref_modes = s.ref_modes;
    for (const auto& c : g.members) in_segment.insert(c);
    result.groups.push_back(std::move(g));
  }
  for (const Cell* c : compiled.workbook().all_cells()) {
    if (in_segment.contains(c->address)) continue;
    Group g;
    g.kind = GroupKind::Singleton;
    g.members = {c->address};
    g.data_type = cell_data_type(*c);
    if (const CompiledFormula* f = compiled.formula(c->address))
      g.normalized_formula = normalize(*f->ast);
    result.groups.push_back(std::move(g));
  }

  std::stable_sort(result.groups.begin(), result.groups.end(),
                   [](const Group& a, const Group& b) { return a.members[0] < b.members[0]; });
  std::stable_sort(result.segments.begin(), result.segments.end(),
                   [](const Segment& a, const Segment& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < result.groups.size(); ++i) {
    result.groups[i].id = i;
    for (const auto& c : result.groups[i].members) result.group_of[c] = i;
  }
  for (auto& g : result.groups)
    g.referenced_groups = referenced_groups(g.members, result.cell_graph, result.group_of);
  return result;
}

std::string group_range(const Group& group) {
  if (group.members.size() == 1) return format_a1(group.members.front());
  return format_a1(group.members.front()) + ":" + format_a1(group.members.back());
}

}  // namespace wia
