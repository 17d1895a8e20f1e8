#include "wia/evolution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "wia/json_util.hpp"
#include "wia/segmenter.hpp"

namespace wia {

using nlohmann::json;

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::TooHigh: return "too_high";
    case Verdict::TooLow: return "too_low";
  }
  return "correct";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (iequals(text, "correct")) return Verdict::Correct;
  if (iequals(text, "too_high")) return Verdict::TooHigh;
  if (iequals(text, "too_low")) return Verdict::TooLow;
  return std::nullopt;
}

std::string_view status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingAnnotations: return "awaiting_annotations";
    case SessionStatus::Evolved: return "evolved";
    case SessionStatus::Accepted: return "accepted";
  }
  return "awaiting_annotations";
}

FitnessSpec build_fitness(const std::vector<Annotation>& annotations, double epsilon) {
  if (annotations.empty()) throw EmptyAnnotationSet();
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive");
  FitnessSpec spec;
  spec.epsilon = epsilon;
  for (const auto& a : annotations) {
    const double scale = std::max(1.0, std::fabs(a.anchor));
    spec.terms.push_back({a, epsilon * scale, scale});
  }
  return spec;
}

double term_penalty(const FitnessTerm& term, const CellValue& value) {
  if (!value.is_number()) return kNonNumberPenalty;
  const double v = value.as_number();
  const double anchor = term.annotation.anchor;
  double excess = 0.0;
  switch (term.annotation.verdict) {
    case Verdict::Correct: excess = v - anchor; break;
    case Verdict::TooHigh: excess = std::max(0.0, v - (anchor - term.margin)); break;
    case Verdict::TooLow: excess = std::max(0.0, (anchor + term.margin) - v); break;
  }
  const double r = excess / term.scale;
  return r * r;
}

GaConfig parse_ga_config(std::string_view json_text) {
  json doc = parse_json(json_text.empty() ? std::string_view("{}") : json_text);
  if (doc.is_null()) doc = json::object();
  if (!doc.is_object()) throw SchemaError("", "config must be an object");
  GaConfig c;
  auto count = [&](const char* key, std::size_t& out, std::size_t min) {
    if (!doc.contains(key)) return;
    const json& v = doc[key];
    if (!v.is_number_unsigned() || v.get<std::size_t>() < min)
      throw SchemaError(std::string("/") + key, "must be an integer >= " + std::to_string(min));
    out = v.get<std::size_t>();
  };
  auto probability = [&](const char* key, double& out) {
    if (!doc.contains(key)) return;
    const json& v = doc[key];
    if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0)
      throw SchemaError(std::string("/") + key, "must be a number in [0, 1]");
    out = v.get<double>();
  };
  count("population", c.population, 2);
  count("elitism", c.elitism, 0);
  count("tournament", c.tournament, 1);
  probability("crossover_p", c.crossover_p);
  probability("mutation_p", c.mutation_p);
  if (doc.contains("epsilon")) {
    const json& v = doc["epsilon"];
    if (!v.is_number() || !(v.get<double>() > 0.0))
      throw SchemaError("/epsilon", "must be a positive number");
    c.epsilon = v.get<double>();
  }
  if (doc.contains("seed")) {
    const json& v = doc["seed"];
    if (!v.is_number_unsigned()) throw SchemaError("/seed", "must be a nonnegative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (doc.contains("tie_genes_by_segment")) {
    const json& v = doc["tie_genes_by_segment"];
    if (!v.is_boolean()) throw SchemaError("/tie_genes_by_segment", "must be a boolean");
    c.tie_genes_by_segment = v.get<bool>();
  }
  if (c.elitism >= c.population)
    throw SchemaError("/elitism", "must be smaller than the population");
  return c;
}

// ---------------------------------------------------------------------------
// CoefficientModel

CoefficientModel::CoefficientModel(Workbook base, bool tie_genes_by_segment)
    : base_(std::make_shared<const CompiledWorkbook>(std::move(base))) {
  std::set<CellAddress> tied;
  if (tie_genes_by_segment) {
    const Grouping grouping = generate_groups(*base_);
    for (const Group& g : grouping.groups) {
      if (g.kind != GroupKind::Segment || g.data_type != DataType::Formula) continue;
      const CellAddress& lead = g.members.front();
      for (const auto& slot : extract_literal_slots(*base_->formula(lead)->ast, lead)) {
        std::vector<std::pair<CellAddress, std::size_t>> positions;
        for (const auto& m : g.members) positions.emplace_back(m, slot.ordinal);
        identity_.slots.push_back(slot);
        identity_.values.push_back(slot.original_value);
        targets_.push_back(std::move(positions));
      }
      for (const auto& m : g.members) tied.insert(m);
    }
  }
  for (const auto& [at, formula] : base_->formulas()) {
    if (tied.contains(at)) continue;
    for (const auto& slot : extract_literal_slots(*formula.ast, at)) {
      identity_.slots.push_back(slot);
      identity_.values.push_back(slot.original_value);
      targets_.push_back({{at, slot.ordinal}});
    }
  }
}

double CoefficientModel::sigma(std::size_t gene) const {
  return 0.1 * std::max(1.0, std::fabs(identity_.slots.at(gene).original_value));
}

Genome CoefficientModel::with_values(std::vector<double> values) const {
  if (values.size() != identity_.values.size())
    throw std::invalid_argument("genome has the wrong number of genes");
  Genome g{identity_.slots, std::move(values)};
  return g;
}

std::map<CellAddress, FormulaAst> CoefficientModel::rewritten(const Genome& genome) const {
  if (genome.slots != identity_.slots || genome.values.size() != identity_.values.size())
    throw std::invalid_argument("genome is not aligned with the base workbook");
  std::map<CellAddress, std::map<std::size_t, double>> assignment;
  for (std::size_t i = 0; i < genome.values.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(genome.values[i]) ==
        std::bit_cast<std::uint64_t>(identity_.values[i]))
      continue;
    for (const auto& [at, ordinal] : targets_[i]) assignment[at][ordinal] = genome.values[i];
  }
  std::map<CellAddress, FormulaAst> out;
  for (const auto& [at, values] : assignment)
    out.emplace(at, rewrite_literals(*base_->formula(at)->ast, values));
  return out;
}

CompiledWorkbook CoefficientModel::apply(const Genome& genome) const {
  return base_->with_asts(rewritten(genome));
}

EvalResult CoefficientModel::evaluate(const Genome& genome,
                                      const std::set<CellAddress>& targets) const {
  return evaluate_cells(apply(genome), targets);
}

Workbook CoefficientModel::export_workbook(const Genome& genome) const {
  Workbook out = base_->workbook();
  for (const auto& [at, ast] : rewritten(genome)) {
    Sheet* sheet = out.find_sheet(at.sheet);
    sheet->cells.at(at).content = Formula{print_formula(ast)};
  }
  return out;
}

double evaluate_fitness(const FitnessSpec& spec, const Genome& genome, const CoefficientModel& model) {
  std::set<CellAddress> targets;
  for (const auto& t : spec.terms) targets.insert(t.annotation.cell);
  const EvalResult r = model.evaluate(genome, targets);
  double total = 0.0;
  for (const auto& t : spec.terms) {
    auto it = r.values.find(t.annotation.cell);
    total += term_penalty(t, it == r.values.end() ? CellValue{} : it->second);
  }
  return total;
}

double evaluate_fitness(const FitnessSpec& spec, const Genome& genome, const Workbook& base) {
  return evaluate_fitness(spec, genome, CoefficientModel(base, false));
}

// ---------------------------------------------------------------------------
// Session

EvolutionSession::EvolutionSession(Workbook base, GaConfig config)
    : model_(std::make_shared<const CoefficientModel>(std::move(base), config.tie_genes_by_segment)),
      config_(config),
      rng_(config.seed),
      current_(model_->identity()) {
  if (config_.population < 2 || config_.elitism >= config_.population || config_.tournament < 1)
    throw std::invalid_argument("invalid GA configuration");
}

void EvolutionSession::check_open() const {
  if (status_ == SessionStatus::Accepted) throw SessionClosed();
}

CellValue EvolutionSession::shown_value(const CellAddress& cell) const {
  const EvalResult r = model_->evaluate(current_, {cell});
  const Cell* c = model_->base().workbook().find(cell);
  return r.values.at(c->address);
}

void EvolutionSession::add_annotations(std::vector<Annotation> annotations) {
  check_open();
  if (annotations.empty()) return;
  std::set<CellAddress> targets;
  for (auto& a : annotations) {
    const Cell* c = model_->base().workbook().find(a.cell);
    if (c == nullptr) throw UnknownCell(format_address(a.cell));
    a.cell = c->address;
    targets.insert(a.cell);
  }
  const EvalResult shown = model_->evaluate(current_, targets);
  for (auto& a : annotations) {
    const CellValue& v = shown.values.at(a.cell);
    if (!v.is_number())
      throw AnchorMismatch(format_address(a.cell) + " does not hold a number in the shown model");
    if (!std::isfinite(a.anchor) ||
        std::fabs(a.anchor - v.as_number()) > 1e-9 * std::max(1.0, std::fabs(v.as_number())))
      throw AnchorMismatch(format_address(a.cell) + ": anchor " + format_number(a.anchor) +
                           " does not match the shown value " + format_number(v.as_number()));
    a.round = round_;
  }
  for (auto& a : annotations) annotations_.push_back(std::move(a));
  fitness_ = build_fitness(annotations_, config_.epsilon);
}

void EvolutionSession::seed_population(const Genome& seed) {
  population_.clear();
  population_.push_back(seed);
  const std::size_t genes = seed.values.size();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  while (population_.size() < config_.population) {
    Genome g = seed;
    if (genes > 0) {
      bool changed = false;
      for (std::size_t i = 0; i < genes; ++i) {
        if (coin(rng_) < config_.mutation_p) {
          g.values[i] += std::normal_distribution<double>(0.0, model_->sigma(i))(rng_);
          changed = true;
        }
      }
      if (!changed) {
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, genes - 1)(rng_);
        g.values[i] += std::normal_distribution<double>(0.0, model_->sigma(i))(rng_);
      }
    }
    population_.push_back(std::move(g));
  }
}

namespace {

double genome_distance(const Genome& a, const Genome& b, const CoefficientModel& model) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = (a.values[i] - b.values[i]) / model.sigma(i);
    d += x * x;
  }
  return d;
}

}  // namespace

StepResult evolve_step(EvolutionSession& session, std::size_t generations) {
  session.check_open();
  if (!session.fitness_) throw NoAnnotations();
  if (generations < 1) throw std::invalid_argument("generations must be at least 1");
  if (session.population_.empty()) session.seed_population(session.current_);

  const GaConfig& cfg = session.config_;
  const CoefficientModel& model = *session.model_;
  const FitnessSpec& spec = *session.fitness_;
  auto& rng = session.rng_;
  auto& pop = session.population_;
  const std::size_t genes = model.gene_count();

  std::map<std::vector<double>, double> cache;
  auto fitness_of = [&](const Genome& g) {
    auto it = cache.find(g.values);
    if (it != cache.end()) return it->second;
    const double f = evaluate_fitness(spec, g, model);
    cache.emplace(g.values, f);
    return f;
  };
  auto score = [&] {
    std::vector<double> fits;
    fits.reserve(pop.size());
    for (const auto& g : pop) fits.push_back(fitness_of(g));
    return fits;
  };
  auto ranking = [&](const std::vector<double>& fits) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fits[a] < fits[b]; });
    return order;
  };

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);

  StepResult result;
  std::vector<double> fits = score();
  result.history.push_back(*std::min_element(fits.begin(), fits.end()));

  for (std::size_t gen = 0; gen < generations; ++gen) {
    const auto order = ranking(fits);
    std::vector<Genome> next;
    next.reserve(pop.size());
    for (std::size_t e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[e]]);

    auto tournament = [&]() -> const Genome& {
      std::size_t best = pick(rng);
      for (std::size_t k = 1; k < cfg.tournament; ++k) {
        const std::size_t c = pick(rng);
        if (fits[c] < fits[best] || (fits[c] == fits[best] && c < best)) best = c;
      }
      return pop[best];
    };
    while (next.size() < pop.size()) {
      const Genome& a = tournament();
      const Genome& b = tournament();
      Genome child = a;
      if (coin(rng) < cfg.crossover_p) {
        for (std::size_t i = 0; i < genes; ++i)
          if (coin(rng) < 0.5) child.values[i] = b.values[i];
      }
      for (std::size_t i = 0; i < genes; ++i) {
        if (coin(rng) < cfg.mutation_p)
          child.values[i] += std::normal_distribution<double>(0.0, model.sigma(i))(rng);
      }
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fits = score();
    const double best = *std::min_element(fits.begin(), fits.end());
    if (best > result.history.back())
      throw std::logic_error("elitism violated: best fitness increased between generations");
    result.history.push_back(best);
  }

  const auto order = ranking(fits);
  result.best = pop[order.front()];
  result.best_fitness = fits[order.front()];

  // Farthest-point pick of distinct alternatives, ties to the fitter one.
  std::vector<std::size_t> pool;
  for (std::size_t idx : order) {
    if (pop[idx].values == result.best.values) continue;
    if (std::any_of(pool.begin(), pool.end(),
                    [&](std::size_t p) { return pop[p].values == pop[idx].values; }))
      continue;
    pool.push_back(idx);
  }
  std::vector<const Genome*> chosen{&result.best};
  while (result.sample.size() < 5 && !pool.empty()) {
    std::size_t best_pos = 0;
    double best_dist = -1.0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      double nearest = INFINITY;
      for (const Genome* c : chosen) nearest = std::min(nearest, genome_distance(pop[pool[p]], *c, model));
      if (nearest > best_dist) {
        best_dist = nearest;
        best_pos = p;
      }
    }
    const std::size_t idx = pool[best_pos];
    result.sample.push_back(pop[idx]);
    result.sample_fitness.push_back(fits[idx]);
    chosen.push_back(&pop[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }

  session.status_ = SessionStatus::Evolved;
  session.best_per_round_[session.round_] = result.best;
  session.last_step_ = result;
  return result;
}

namespace {

bool offered(const EvolutionSession& session, const Genome& chosen) {
  const auto& step = session.last_step();
  if (!step) return false;
  if (step->best.values == chosen.values) return true;
  return std::any_of(step->sample.begin(), step->sample.end(),
                     [&](const Genome& g) { return g.values == chosen.values; });
}

}  // namespace

void advance_round(EvolutionSession& session, std::vector<Annotation> annotations,
                   const Genome& chosen) {
  session.check_open();
  if (!offered(session, chosen) || chosen.slots != session.model_->identity().slots)
    throw UnknownGenome("the chosen genome was not proposed by the last evolution step");
  const auto saved_round = session.round_;
  const auto saved_status = session.status_;
  const auto saved_rng = session.rng_;
  Genome saved_current = session.current_;
  auto saved_step = session.last_step_;
  auto saved_population = session.population_;
  try {
    session.round_ += 1;
    session.current_ = chosen;
    session.status_ = SessionStatus::AwaitingAnnotations;
    session.last_step_.reset();
    session.seed_population(chosen);
    session.add_annotations(std::move(annotations));
  } catch (...) {
    // A rejected round leaves the session as it was.
    session.round_ = saved_round;
    session.status_ = saved_status;
    session.rng_ = saved_rng;
    session.current_ = std::move(saved_current);
    session.last_step_ = std::move(saved_step);
    session.population_ = std::move(saved_population);
    throw;
  }
}

void accept_model(EvolutionSession& session, const Genome& chosen) {
  session.check_open();
  if (!(chosen == session.current_) && !offered(session, chosen))
    throw UnknownGenome("the accepted genome is neither shown nor proposed");
  session.current_ = chosen;
  session.status_ = SessionStatus::Accepted;
}

Workbook export_model(const EvolutionSession& session, const Genome& genome) {
  return session.model().export_workbook(genome);
}

std::vector<Annotation> parse_annotations(std::string_view json_text, std::string_view default_sheet) {
  const json doc = parse_json(json_text);
  if (!doc.is_array()) throw SchemaError("", "annotations must be an array");
  std::vector<Annotation> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    const json& a = doc[i];
    if (!a.is_object()) throw SchemaError(path, "must be an object");
    Annotation ann;
    if (!a.contains("cell") || !a["cell"].is_string())
      throw SchemaError(path + "/cell", "must be a string");
    try {
      ann.cell = parse_address(a["cell"].get<std::string>(), default_sheet).location();
    } catch (const MalformedAddress& e) {
      throw SchemaError(path + "/cell", e.what());
    }
    if (!a.contains("verdict") || !a["verdict"].is_string())
      throw SchemaError(path + "/verdict", "must be a string");
    const auto verdict = parse_verdict(a["verdict"].get<std::string>());
    if (!verdict) throw SchemaError(path + "/verdict", "must be correct, too_high or too_low");
    ann.verdict = *verdict;
    if (!a.contains("anchor") || !a["anchor"].is_number())
      throw SchemaError(path + "/anchor", "must be a number");
    ann.anchor = a["anchor"].get<double>();
    if (!std::isfinite(ann.anchor)) throw SchemaError(path + "/anchor", "must be finite");
    if (a.contains("round")) {
      if (!a["round"].is_number_unsigned()) throw SchemaError(path + "/round", "must be a nonnegative integer");
      ann.round = a["round"].get<std::size_t>();
    }
    out.push_back(std::move(ann));
  }
  return out;
}

}  // namespace wia
