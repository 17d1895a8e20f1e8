#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wia/address.hpp"

namespace wia {

enum class NodeKind { Number, Text, Boolean, Ref, Range, Unary, Binary, Call };

enum class Operator {
  Add, Sub, Mul, Div, Pow, Concat,
  Eq, Ne, Lt, Le, Gt, Ge,
  Neg, Plus,  // unary
};

enum class Function { Sum, Average, Min, Max, Count, If, Abs, Round };

std::string_view operator_symbol(Operator op);
std::string_view function_name(Function fn);
std::optional<Function> lookup_function(std::string_view name);  // case-insensitive

// One node of a formula tree. Only the fields relevant to `kind` are
// meaningful; children are owned by value.
struct FormulaNode {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;
  std::string text;
  bool boolean = false;
  CellAddress ref;        // Ref, and the start of a Range
  CellAddress range_end;  // Range
  Operator op = Operator::Add;
  Function function = Function::Sum;
  std::vector<FormulaNode> children;

  static FormulaNode number_literal(double v);
  static FormulaNode text_literal(std::string v);
  static FormulaNode boolean_literal(bool v);
  static FormulaNode reference(CellAddress a);
  /// Endpoints are canonicalized so start <= end on both axes.
  static FormulaNode range(CellAddress a, CellAddress b);
  static FormulaNode unary(Operator op, FormulaNode child);
  static FormulaNode binary(Operator op, FormulaNode lhs, FormulaNode rhs);
  static FormulaNode call(Function fn, std::vector<FormulaNode> args);
};

struct FormulaAst {
  FormulaNode root;
  /// Sheet the formula lives on; references to it print without a prefix.
  std::string home_sheet;
};

/// Exact tree equality: `$` markers, sheet names and numbers (bitwise) all
/// participate.
bool structurally_equal(const FormulaNode& a, const FormulaNode& b);
inline bool structurally_equal(const FormulaAst& a, const FormulaAst& b) {
  return structurally_equal(a.root, b.root);
}

/// Parses a formula (leading '=' required). Precedence, tightest first:
/// ^ (right-assoc), unary -/+, * /, + -, &, comparisons. A unary minus
/// applied to a non-negative number literal folds into a negative literal.
/// Throws ParseError / UnknownFunction.
FormulaAst parse_formula(std::string_view source, std::string_view default_sheet);

/// Prints with the minimal parentheses needed to parse back to the same tree.
std::string print_formula(const FormulaAst& ast);

/// Canonical formula text with every reference replaced by "R" (ranges "R:R").
using NormalizedFormula = std::string;
NormalizedFormula normalize(const FormulaAst& ast);

struct RefOccurrence {
  std::size_t ordinal = 0;
  CellAddress start;
  std::optional<CellAddress> end;  // set for ranges
  std::vector<std::size_t> path;   // child indices from the root

  bool is_range() const { return end.has_value(); }
};
using RefList = std::vector<RefOccurrence>;

/// One entry per Ref and Range node, in left-to-right traversal order.
RefList extract_refs(const FormulaAst& ast);

struct LiteralSlot {
  CellAddress owner;
  std::size_t ordinal = 0;
  double original_value = 0.0;

  friend bool operator==(const LiteralSlot& a, const LiteralSlot& b) {
    return identical(a.owner, b.owner) && a.ordinal == b.ordinal &&
           a.original_value == b.original_value;
  }
};

/// One slot per number literal, in traversal order.
std::vector<LiteralSlot> extract_literal_slots(const FormulaAst& ast,
                                               const CellAddress& owner);
std::size_t count_number_literals(const FormulaNode& node);

/// Replaces number literals by ordinal. Throws UnknownSlot for ordinals that
/// do not exist.
FormulaAst rewrite_literals(const FormulaAst& ast,
                            const std::map<std::size_t, double>& assignment);

}  // namespace wia
