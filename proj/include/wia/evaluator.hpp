#pragma once

#include <map>
#include <memory>
#include <set>
#include <vector>

#include "wia/formula.hpp"
#include "wia/workbook.hpp"

namespace wia {

struct CompiledFormula {
  std::shared_ptr<const FormulaAst> ast;
  /// Instantiated cells this formula reads (ranges expanded), ascending,
  /// without duplicates.
  std::vector<CellAddress> precedents;
};

// A workbook with every formula parsed once and reference sheet names
// resolved to the workbook's spelling. Copies share the parsed trees.
class CompiledWorkbook {
 public:
  /// Throws ParseFailure listing every formula that does not parse.
  explicit CompiledWorkbook(Workbook workbook);

  const Workbook& workbook() const { return *workbook_; }
  const std::map<CellAddress, CompiledFormula>& formulas() const { return formulas_; }
  const CompiledFormula* formula(const CellAddress& address) const;

  /// Replaces formula trees in place of the parsed ones. The replacements
  /// must keep the same references (only literals may differ), so the
  /// precedent lists carry over.
  CompiledWorkbook with_asts(const std::map<CellAddress, FormulaAst>& replacements) const;

 private:
  CompiledWorkbook() = default;
  std::shared_ptr<const Workbook> workbook_;
  std::map<CellAddress, CompiledFormula> formulas_;
};

struct EvalResult {
  std::map<CellAddress, CellValue> values;
  /// Formula cells outside cycles, each after all of its precedents.
  std::vector<CellAddress> order;
  /// Strongly connected formula cells (sorted members, sorted by first).
  std::vector<std::vector<CellAddress>> cycles;
};

EvalResult evaluate(const Workbook& workbook);
EvalResult evaluate(const CompiledWorkbook& compiled);

/// Evaluates only `targets` and their transitive precedents. Equal to the
/// restriction of evaluate() to that set. Throws UnknownCell when a target
/// is not instantiated.
EvalResult evaluate_cells(const Workbook& workbook, const std::set<CellAddress>& targets);
EvalResult evaluate_cells(const CompiledWorkbook& compiled,
                          const std::set<CellAddress>& targets);

}  // namespace wia
