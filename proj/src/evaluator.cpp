#include "wia/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <queue>
#include <unordered_map>

#include "wia/errors.hpp"

namespace wia {

namespace {

void resolve_sheets(FormulaNode& node, const Workbook& wb) {
  if (node.kind == NodeKind::Ref || node.kind == NodeKind::Range) {
    if (const Sheet* s = wb.find_sheet(node.ref.sheet)) {
      node.ref.sheet = s->name;
      node.range_end.sheet = s->name;
    }
    return;
  }
  for (auto& c : node.children) resolve_sheets(c, wb);
}

std::vector<CellAddress> precedents_of(const FormulaAst& ast, const Workbook& wb) {
  std::set<CellAddress> found;
  for (const auto& r : extract_refs(ast)) {
    if (r.is_range()) {
      for (const Cell* c : wb.cells_in(r.start, *r.end)) found.insert(c->address);
    } else if (const Cell* c = wb.find(r.start)) {
      found.insert(c->address);
    }
  }
  return {found.begin(), found.end()};
}

}  // namespace

CompiledWorkbook::CompiledWorkbook(Workbook workbook)
    : workbook_(std::make_shared<const Workbook>(std::move(workbook))) {
  std::vector<ParseFailure::Entry> failures;
  for (const Cell* cell : workbook_->all_cells()) {
    if (!cell->is_formula()) continue;
    try {
      FormulaAst ast = parse_formula(cell->formula(), cell->address.sheet);
      resolve_sheets(ast.root, *workbook_);
      CompiledFormula compiled;
      compiled.precedents = precedents_of(ast, *workbook_);
      compiled.ast = std::make_shared<const FormulaAst>(std::move(ast));
      formulas_.emplace(cell->address, std::move(compiled));
    } catch (const ParseError& e) {
      failures.push_back({format_address(cell->address), e.what()});
    }
  }
  if (!failures.empty()) throw ParseFailure(std::move(failures));
}

const CompiledFormula* CompiledWorkbook::formula(const CellAddress& address) const {
  auto it = formulas_.find(address);
  return it == formulas_.end() ? nullptr : &it->second;
}

CompiledWorkbook CompiledWorkbook::with_asts(
    const std::map<CellAddress, FormulaAst>& replacements) const {
  CompiledWorkbook out;
  out.workbook_ = workbook_;
  out.formulas_ = formulas_;
  for (const auto& [at, ast] : replacements) {
    auto it = out.formulas_.find(at);
    if (it == out.formulas_.end()) throw UnknownCell(format_address(at));
    it->second.ast = std::make_shared<const FormulaAst>(ast);
  }
  return out;
}

namespace {

// Value semantics for one formula tree. `lookup` returns computed values for
// formula cells evaluated earlier.
class Interpreter {
 public:
  Interpreter(const Workbook& wb, const std::map<CellAddress, CellValue>& computed)
      : wb_(wb), computed_(computed) {}

  CellValue run(const FormulaNode& root) const {
    CellValue v = eval(root);
    if (v.is_empty()) return CellValue::number(0.0);
    return v;
  }

 private:
  CellValue cell_value(const CellAddress& at) const {
    const Cell* c = wb_.find(at);
    if (c == nullptr) return {};
    if (!c->is_formula()) return c->literal();
    auto it = computed_.find(c->address);
    return it == computed_.end() ? CellValue::error(ErrorKind::Cycle) : it->second;
  }

  static CellValue number_or_error(double v) {
    if (!std::isfinite(v)) return CellValue::error(ErrorKind::Value);
    return CellValue::number(v);
  }

  // Arithmetic coercion. Returns false with `err` set on failure.
  static bool to_number(const CellValue& v, double& out, CellValue& err) {
    if (v.is_number()) {
      out = v.as_number();
      return true;
    }
    if (v.is_empty()) {
      out = 0.0;
      return true;
    }
    if (v.is_boolean()) {
      out = v.as_boolean() ? 1.0 : 0.0;
      return true;
    }
    err = v.is_error() ? v : CellValue::error(ErrorKind::Value);
    return false;
  }

  static std::string to_text(const CellValue& v) {
    if (v.is_text()) return v.as_text();
    if (v.is_number()) return format_number(v.as_number());
    if (v.is_boolean()) return v.as_boolean() ? "TRUE" : "FALSE";
    return "";
  }

  static std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }

  // Ordering across types: number < text < boolean. Empty adopts the other
  // side's type.
  static int compare(CellValue a, CellValue b) {
    auto blank_like = [](const CellValue& other) {
      if (other.is_text()) return CellValue::text("");
      if (other.is_boolean()) return CellValue::boolean(false);
      return CellValue::number(0.0);
    };
    if (a.is_empty() && b.is_empty()) return 0;
    if (a.is_empty()) a = blank_like(b);
    if (b.is_empty()) b = blank_like(a);
    auto rank = [](const CellValue& v) { return v.is_number() ? 0 : v.is_text() ? 1 : 2; };
    if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
    if (a.is_number()) {
      const double x = a.as_number();
      const double y = b.as_number();
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.is_text()) {
      const std::string x = upper(a.as_text());
      const std::string y = upper(b.as_text());
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    return static_cast<int>(a.as_boolean()) - static_cast<int>(b.as_boolean());
  }

  CellValue eval(const FormulaNode& n) const {
    switch (n.kind) {
      case NodeKind::Number: return CellValue::number(n.number);
      case NodeKind::Text: return CellValue::text(n.text);
      case NodeKind::Boolean: return CellValue::boolean(n.boolean);
      case NodeKind::Ref:
        if (wb_.find_sheet(n.ref.sheet) == nullptr) return CellValue::error(ErrorKind::Ref);
        return cell_value(n.ref);
      case NodeKind::Range:
        if (wb_.find_sheet(n.ref.sheet) == nullptr) return CellValue::error(ErrorKind::Ref);
        return CellValue::error(ErrorKind::Value);
      case NodeKind::Unary: return unary(n);
      case NodeKind::Binary: return binary(n);
      case NodeKind::Call: return call(n);
    }
    return CellValue::error(ErrorKind::Value);
  }

  CellValue unary(const FormulaNode& n) const {
    const CellValue v = eval(n.children[0]);
    double x = 0;
    CellValue err;
    if (!to_number(v, x, err)) return err;
    return CellValue::number(n.op == Operator::Neg ? -x : x);
  }

  CellValue binary(const FormulaNode& n) const {
    const CellValue a = eval(n.children[0]);
    const CellValue b = eval(n.children[1]);
    if (a.is_error()) return a;
    if (b.is_error()) return b;
    switch (n.op) {
      case Operator::Concat: return CellValue::text(to_text(a) + to_text(b));
      case Operator::Eq: return CellValue::boolean(compare(a, b) == 0);
      case Operator::Ne: return CellValue::boolean(compare(a, b) != 0);
      case Operator::Lt: return CellValue::boolean(compare(a, b) < 0);
      case Operator::Le: return CellValue::boolean(compare(a, b) <= 0);
      case Operator::Gt: return CellValue::boolean(compare(a, b) > 0);
      case Operator::Ge: return CellValue::boolean(compare(a, b) >= 0);
      default: break;
    }
    double x = 0;
    double y = 0;
    CellValue err;
    if (!to_number(a, x, err) || !to_number(b, y, err)) return err;
    switch (n.op) {
      case Operator::Add: return number_or_error(x + y);
      case Operator::Sub: return number_or_error(x - y);
      case Operator::Mul: return number_or_error(x * y);
      case Operator::Div:
        if (y == 0.0) return CellValue::error(ErrorKind::Div0);
        return number_or_error(x / y);
      case Operator::Pow:
        if (x == 0.0 && y < 0.0) return CellValue::error(ErrorKind::Div0);
        return number_or_error(std::pow(x, y));
      default: return CellValue::error(ErrorKind::Value);
    }
  }

  // Collects the numeric inputs of an aggregate. Inside ranges (and bare
  // references) only numbers count; errors propagate.
  bool gather(const FormulaNode& arg, bool counting, std::vector<double>& out,
              CellValue& err) const {
    auto take_cell = [&](const CellValue& v) {
      if (v.is_error()) {
        err = v;
        return false;
      }
      if (v.is_number()) out.push_back(v.as_number());
      return true;
    };
    if (arg.kind == NodeKind::Range || arg.kind == NodeKind::Ref) {
      if (wb_.find_sheet(arg.ref.sheet) == nullptr) {
        err = CellValue::error(ErrorKind::Ref);
        return false;
      }
      if (arg.kind == NodeKind::Ref) return take_cell(cell_value(arg.ref));
      for (const Cell* c : wb_.cells_in(arg.ref, arg.range_end))
        if (!take_cell(cell_value(c->address))) return false;
      return true;
    }
    const CellValue v = eval(arg);
    if (v.is_error()) {
      err = v;
      return false;
    }
    if (v.is_number()) out.push_back(v.as_number());
    else if (v.is_boolean()) out.push_back(v.as_boolean() ? 1.0 : 0.0);
    else if (v.is_text() && !counting) {
      err = CellValue::error(ErrorKind::Value);
      return false;
    }
    return true;
  }

  CellValue call(const FormulaNode& n) const {
    switch (n.function) {
      case Function::Sum:
      case Function::Average:
      case Function::Min:
      case Function::Max:
      case Function::Count: {
        std::vector<double> xs;
        CellValue err;
        for (const auto& arg : n.children)
          if (!gather(arg, n.function == Function::Count, xs, err)) return err;
        if (n.function == Function::Count) return CellValue::number(static_cast<double>(xs.size()));
        if (n.function == Function::Min || n.function == Function::Max) {
          if (xs.empty()) return CellValue::number(0.0);
          return CellValue::number(n.function == Function::Min
                                       ? *std::min_element(xs.begin(), xs.end())
                                       : *std::max_element(xs.begin(), xs.end()));
        }
        double sum = 0.0;
        for (double x : xs) sum += x;
        if (n.function == Function::Sum) return number_or_error(sum);
        if (xs.empty()) return CellValue::error(ErrorKind::Div0);
        return number_or_error(sum / static_cast<double>(xs.size()));
      }
      case Function::If: {
        const CellValue c = eval(n.children[0]);
        if (c.is_error()) return c;
        bool truth = false;
        if (c.is_boolean()) truth = c.as_boolean();
        else if (c.is_number()) truth = c.as_number() != 0.0;
        else if (c.is_text()) return CellValue::error(ErrorKind::Value);
        return eval(n.children[truth ? 1 : 2]);
      }
      case Function::Abs: {
        double x = 0;
        CellValue err;
        if (!to_number(eval(n.children[0]), x, err)) return err;
        return CellValue::number(std::fabs(x));
      }
      case Function::Round: {
        double x = 0;
        double d = 0;
        CellValue err;
        if (!to_number(eval(n.children[0]), x, err)) return err;
        if (!to_number(eval(n.children[1]), d, err)) return err;
        return number_or_error(round_half_away(x, std::trunc(d)));
      }
    }
    return CellValue::error(ErrorKind::Value);
  }

  static double round_half_away(double x, double digits) {
    if (digits > 308 || digits < -308) return digits > 0 ? x : 0.0;
    const double f = std::pow(10.0, std::fabs(digits));
    if (digits >= 0) {
      const double scaled = x * f;
      if (!std::isfinite(scaled)) return x;
      return std::round(scaled) / f;
    }
    return std::round(x / f) * f;
  }

  const Workbook& wb_;
  const std::map<CellAddress, CellValue>& computed_;
};

// Tarjan's algorithm over the formula cells in `cells`; edges run from a
// cell to its formula precedents inside the set.
std::vector<std::vector<CellAddress>> strongly_connected(
    const std::vector<CellAddress>& cells,
    const std::map<CellAddress, std::vector<CellAddress>>& deps) {
  std::map<CellAddress, int> index;
  std::map<CellAddress, int> low;
  std::set<CellAddress> on_stack;
  std::vector<CellAddress> stack;
  std::vector<std::vector<CellAddress>> out;
  int counter = 0;

  struct Frame {
    CellAddress node;
    std::size_t next = 0;
  };
  for (const auto& root : cells) {
    if (index.contains(root)) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack.insert(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      const auto& succ = deps.at(f.node);
      if (f.next < succ.size()) {
        const CellAddress& w = succ[f.next++];
        if (!index.contains(w)) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack.insert(w);
          frames.push_back({w, 0});
        } else if (on_stack.contains(w)) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const CellAddress v = f.node;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[v]);
      if (low[v] == index[v]) {
        std::vector<CellAddress> component;
        for (;;) {
          CellAddress w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          component.push_back(w);
          if (w == v) break;
        }
        out.push_back(std::move(component));
      }
    }
  }
  return out;
}

EvalResult evaluate_subset(const CompiledWorkbook& compiled, const std::set<CellAddress>& cells) {
  const Workbook& wb = compiled.workbook();
  EvalResult result;

  std::vector<CellAddress> formula_cells;
  std::map<CellAddress, std::vector<CellAddress>> deps;
  for (const auto& at : cells) {
    const CompiledFormula* f = compiled.formula(at);
    if (f == nullptr) continue;
    formula_cells.push_back(at);
    auto& d = deps[at];
    for (const auto& p : f->precedents)
      if (compiled.formula(p) != nullptr && cells.contains(p)) d.push_back(p);
  }

  std::set<CellAddress> in_cycle;
  for (auto& comp : strongly_connected(formula_cells, deps)) {
    const bool self_loop =
        comp.size() == 1 &&
        std::find(deps[comp[0]].begin(), deps[comp[0]].end(), comp[0]) != deps[comp[0]].end();
    if (comp.size() < 2 && !self_loop) continue;
    std::sort(comp.begin(), comp.end());
    for (const auto& c : comp) in_cycle.insert(c);
    result.cycles.push_back(std::move(comp));
  }
  std::sort(result.cycles.begin(), result.cycles.end());

  // Kahn's algorithm, smallest address first.
  std::map<CellAddress, int> pending;
  std::map<CellAddress, std::vector<CellAddress>> dependents;
  for (const auto& at : formula_cells) {
    if (in_cycle.contains(at)) continue;
    int n = 0;
    for (const auto& p : deps[at]) {
      if (in_cycle.contains(p)) continue;
      ++n;
      dependents[p].push_back(at);
    }
    pending[at] = n;
  }
  std::priority_queue<CellAddress, std::vector<CellAddress>, std::greater<>> ready;
  for (const auto& [at, n] : pending)
    if (n == 0) ready.push(at);
  while (!ready.empty()) {
    CellAddress at = ready.top();
    ready.pop();
    result.order.push_back(at);
    for (const auto& d : dependents[at])
      if (--pending[d] == 0) ready.push(d);
  }

  std::map<CellAddress, CellValue> computed;
  for (const auto& c : in_cycle) computed[c] = CellValue::error(ErrorKind::Cycle);
  Interpreter interp(wb, computed);
  for (const auto& at : result.order) computed[at] = interp.run(compiled.formula(at)->ast->root);

  for (const auto& at : cells) {
    const Cell* c = wb.find(at);
    if (c == nullptr) continue;
    result.values[at] = c->is_formula() ? computed.at(at) : c->literal();
  }
  return result;
}

}  // namespace

EvalResult evaluate(const Workbook& workbook) { return evaluate(CompiledWorkbook(workbook)); }

EvalResult evaluate(const CompiledWorkbook& compiled) {
  std::set<CellAddress> all;
  for (const Cell* c : compiled.workbook().all_cells()) all.insert(c->address);
  return evaluate_subset(compiled, all);
}

EvalResult evaluate_cells(const Workbook& workbook, const std::set<CellAddress>& targets) {
  return evaluate_cells(CompiledWorkbook(workbook), targets);
}

EvalResult evaluate_cells(const CompiledWorkbook& compiled,
                          const std::set<CellAddress>& targets) {
  std::set<CellAddress> closure;
  std::vector<CellAddress> work;
  for (const auto& t : targets) {
    const Cell* c = compiled.workbook().find(t);
    if (c == nullptr) throw UnknownCell(format_address(t));
    if (closure.insert(c->address).second) work.push_back(c->address);
  }
  while (!work.empty()) {
    const CellAddress at = work.back();
    work.pop_back();
    if (const CompiledFormula* f = compiled.formula(at)) {
      for (const auto& p : f->precedents)
        if (closure.insert(p).second) work.push_back(p);
    }
  }
  return evaluate_subset(compiled, closure);
}

}  // namespace wia
