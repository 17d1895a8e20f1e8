#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wia/errors.hpp"
#include "wia/evaluator.hpp"
#include "wia/formula.hpp"
#include "wia/workbook.hpp"

namespace wia {

class EmptyAnnotationSet : public Error {
 public:
  EmptyAnnotationSet() : Error("a fitness function needs at least one annotation") {}
};

class NoAnnotations : public Error {
 public:
  NoAnnotations() : Error("the session has no annotations to evolve against") {}
};

class AnchorMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownGenome : public Error {
 public:
  using Error::Error;
};

class SessionClosed : public Error {
 public:
  SessionClosed() : Error("the session has been accepted and is closed") {}
};

enum class Verdict { Correct, TooHigh, TooLow };

std::string_view verdict_name(Verdict v);  // "correct", "too_high", "too_low"
std::optional<Verdict> parse_verdict(std::string_view text);

struct Annotation {
  CellAddress cell;
  Verdict verdict = Verdict::Correct;
  double anchor = 0.0;  // value the user saw when marking the cell
  std::size_t round = 0;
};

struct FitnessTerm {
  Annotation annotation;
  double margin = 0.0;  // epsilon * max(1, |anchor|)
  double scale = 1.0;   // max(1, |anchor|)
};

// Sum of per-annotation penalties; lower is better and 0 means every mark
// is satisfied.
struct FitnessSpec {
  std::vector<FitnessTerm> terms;
  double epsilon = 0.05;
};

inline constexpr double kNonNumberPenalty = 1e6;

/// Throws EmptyAnnotationSet; epsilon must be positive.
FitnessSpec build_fitness(const std::vector<Annotation>& annotations, double epsilon = 0.05);

/// CORRECT: ((v-anchor)/scale)^2. TOO_HIGH: zero once v <= anchor-margin,
/// else ((v-(anchor-margin))/scale)^2. TOO_LOW mirrors it. Anything that is
/// not a number costs kNonNumberPenalty.
double term_penalty(const FitnessTerm& term, const CellValue& value);

struct Genome {
  std::vector<LiteralSlot> slots;
  std::vector<double> values;  // aligned with slots

  friend bool operator==(const Genome&, const Genome&) = default;
};

struct GaConfig {
  std::size_t population = 64;
  std::size_t elitism = 2;
  std::size_t tournament = 3;
  double crossover_p = 0.9;
  double mutation_p = 0.1;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  bool tie_genes_by_segment = false;
};

/// Reads the JSON config object (every key optional). Throws SchemaError.
GaConfig parse_ga_config(std::string_view json_text);

// The base workbook seen as a function of its numeric formula literals.
// Each gene is one literal, or with gene tying one literal position shared
// by every cell of a formula segment.
class CoefficientModel {
 public:
  CoefficientModel(Workbook base, bool tie_genes_by_segment);

  const CompiledWorkbook& base() const { return *base_; }
  /// The genome holding every literal's original value.
  const Genome& identity() const { return identity_; }
  std::size_t gene_count() const { return identity_.values.size(); }
  /// Mutation step for gene i: 0.1 * max(1, |original|).
  double sigma(std::size_t gene) const;

  /// Throws std::invalid_argument when the genome is not aligned.
  CompiledWorkbook apply(const Genome& genome) const;
  EvalResult evaluate(const Genome& genome, const std::set<CellAddress>& targets) const;
  /// Base workbook with the changed formulas reprinted.
  Workbook export_workbook(const Genome& genome) const;

  Genome with_values(std::vector<double> values) const;

 private:
  std::map<CellAddress, FormulaAst> rewritten(const Genome& genome) const;

  std::shared_ptr<const CompiledWorkbook> base_;
  Genome identity_;
  /// For each gene, the (cell, literal ordinal) positions it drives.
  std::vector<std::vector<std::pair<CellAddress, std::size_t>>> targets_;
};

double evaluate_fitness(const FitnessSpec& spec, const Genome& genome, const CoefficientModel& model);
double evaluate_fitness(const FitnessSpec& spec, const Genome& genome, const Workbook& base);

enum class SessionStatus { AwaitingAnnotations, Evolved, Accepted };
std::string_view status_name(SessionStatus s);

struct StepResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<Genome> sample;  // up to 5 distinct alternatives to `best`
  std::vector<double> sample_fitness;
  std::vector<double> history;  // best fitness after each generation (index 0 = start)
};

// One refinement session: accumulated annotations, the fitness built from
// them, the GA population and the model currently shown to the user.
class EvolutionSession {
 public:
  EvolutionSession(Workbook base, GaConfig config);

  std::size_t round() const { return round_; }
  SessionStatus status() const { return status_; }
  const GaConfig& config() const { return config_; }
  const CoefficientModel& model() const { return *model_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  /// Fitness over every annotation so far; nullopt before the first one.
  const std::optional<FitnessSpec>& fitness() const { return fitness_; }
  /// The model the user is looking at (identity until one is chosen).
  const Genome& current() const { return current_; }
  const std::vector<Genome>& population() const { return population_; }
  const std::optional<StepResult>& last_step() const { return last_step_; }
  const std::map<std::size_t, Genome>& best_per_round() const { return best_per_round_; }

  /// Value of `cell` in the current model.
  CellValue shown_value(const CellAddress& cell) const;

  /// Adds marks made on the current model. Each anchor must equal the
  /// cell's current value (1e-9 relative) and that value must be a number.
  /// Throws AnchorMismatch / UnknownCell / SessionClosed.
  void add_annotations(std::vector<Annotation> annotations);

 private:
  friend StepResult evolve_step(EvolutionSession& session, std::size_t generations);
  friend void advance_round(EvolutionSession& session, std::vector<Annotation> annotations,
                            const Genome& chosen);
  friend void accept_model(EvolutionSession& session, const Genome& chosen);

  void seed_population(const Genome& seed);
  void check_open() const;

  std::shared_ptr<const CoefficientModel> model_;
  GaConfig config_;
  std::mt19937_64 rng_;
  std::size_t round_ = 0;
  SessionStatus status_ = SessionStatus::AwaitingAnnotations;
  std::vector<Annotation> annotations_;
  std::optional<FitnessSpec> fitness_;
  Genome current_;
  std::vector<Genome> population_;
  std::optional<StepResult> last_step_;
  std::map<std::size_t, Genome> best_per_round_;
};

/// Runs `generations` generations of the GA against the current fitness:
/// elitism, tournament selection, uniform crossover, Gaussian mutation.
/// Throws NoAnnotations.
StepResult evolve_step(EvolutionSession& session, std::size_t generations);

/// Moves to the next round with `chosen` (the last step's best or one of its
/// sample) as the shown model, reseeds the population from it and adds the
/// new marks. Throws UnknownGenome / AnchorMismatch.
void advance_round(EvolutionSession& session, std::vector<Annotation> annotations,
                   const Genome& chosen);

/// Marks the session finished with `chosen` as the final model.
void accept_model(EvolutionSession& session, const Genome& chosen);

Workbook export_model(const EvolutionSession& session, const Genome& genome);

/// Annotation file: [{"cell":"C1","verdict":"too_high","anchor":20.0,"round":0}].
/// Cells without a sheet prefix resolve to `default_sheet`. Throws SchemaError.
std::vector<Annotation> parse_annotations(std::string_view json_text, std::string_view default_sheet);

}  // namespace wia
