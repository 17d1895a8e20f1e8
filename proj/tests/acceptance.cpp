// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "generators.hpp"
#include "segment_oracle.hpp"
#include "wia/cli.hpp"
#include "wia/dataflow.hpp"
#include "wia/evaluator.hpp"
#include "wia/evolution.hpp"
#include "wia/graph_export.hpp"
#include "wia/io.hpp"
#include "wia/service.hpp"

using namespace wia;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kRulesSeconds = 30.0;
constexpr double kOracleSeconds = 120.0;
constexpr double kEvolutionSeconds = 10.0;
constexpr double kValueTolerance = 1e-12;  // relative, oracle values vs evaluator
constexpr double kGridSlack = 1e-6;
constexpr int kGridPoints1 = 1000;
constexpr int kGridPoints2 = 32;  // per axis

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string fixture(const std::string& name) { return std::string(WIA_FIXTURES) + "/" + name; }

// ---------------------------------------------------------------------------

void rule_invariants() {
  gen::Rng rng(1001);
  const auto t0 = Clock::now();
  int bad = 0;
  std::string first;
  std::size_t segments = 0;
  for (int i = 0; i < 500; ++i) {
    const Workbook wb = gen::segment_workbook(rng);
    const Grouping g = generate_groups(wb);
    segments += g.segments.size();
    std::string why = oracle::check_segment_rules(wb, g);
    if (why.empty()) why = oracle::check_partition(wb, g);
    if (!why.empty()) {
      if (first.empty()) first = why;
      ++bad;
    }
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < kRulesSeconds, "rule-invariants",
         std::to_string(500 - bad) + "/500 workbooks satisfy R1-R5 (" + std::to_string(segments) +
             " segments), " + fixed(secs) + " s (limit " + fixed(kRulesSeconds, 0) + " s)" +
             (first.empty() ? "" : "; first violation: " + first));
}

void oracle_equivalence() {
  gen::Rng rng(2002);
  const auto t0 = Clock::now();
  int bad = 0;
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    const Workbook wb = gen::symbol_grid(rng, 6, 6);
    const std::string why = oracle::compare_groups(generate_groups(wb), oracle::enumerate_groups(wb));
    if (!why.empty()) {
      if (first.empty()) first = why + " in " + save_workbook(wb);
      ++bad;
    }
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < kOracleSeconds, "oracle-equivalence",
         std::to_string(1000 - bad) + "/1000 grids match the brute-force enumerator, " + fixed(secs) +
             " s (limit " + fixed(kOracleSeconds, 0) + " s)" + (first.empty() ? "" : "; first mismatch: " + first));
}

void evaluator_oracle() {
  gen::Rng rng(3003);
  int partial_bad = 0, value_bad = 0, cycle_bad = 0;
  std::size_t compared = 0;
  for (int i = 0; i < 200; ++i) {
    const gen::DagCase c = gen::dag_workbook(rng, 50);
    const CompiledWorkbook compiled(c.workbook);
    const EvalResult full = evaluate(compiled);
    for (const auto& [cell, expected] : c.expected) {
      const CellValue& v = full.values.at(cell);
      if (!v.is_number() ||
          std::fabs(v.as_number() - expected) > kValueTolerance * std::max(1.0, std::fabs(expected)))
        ++value_bad;
    }
    std::set<CellAddress> targets;
    for (const auto& [cell, v] : c.expected)
      if (gen::chance(rng, 0.2)) targets.insert(cell);
    if (targets.empty() && !c.expected.empty()) targets.insert(c.expected.begin()->first);
    const EvalResult part = evaluate_cells(compiled, targets);
    const CellGraph graph = build_cell_graph(compiled);
    std::set<CellAddress> closure = targets;
    for (const auto& t : targets)
      for (const auto& p : transitive_precedents(graph, t)) closure.insert(p);
    bool ok = part.values.size() == closure.size();
    for (const auto& [cell, v] : part.values) {
      ++compared;
      ok = ok && closure.contains(cell) && bit_identical(v, full.values.at(cell));
    }
    if (!ok) ++partial_bad;
  }

  int cycle_cases = 0;
  for (int i = 0; i < 100; ++i) {
    const gen::CycleCase c = gen::cycle_workbook(rng);
    ++cycle_cases;
    const EvalResult r = evaluate(c.workbook);
    std::set<CellAddress> members;
    for (const auto& cyc : c.cycles) members.insert(cyc.begin(), cyc.end());
    bool ok = r.cycles == c.cycles;
    for (const auto& m : members) ok = ok && r.values.at(m).is_error() && r.values.at(m).as_error() == ErrorKind::Cycle;
    for (const auto& [cell, v] : r.values)
      if (!members.contains(cell) && std::find(r.order.begin(), r.order.end(), cell) == r.order.end() &&
          c.workbook.find(cell)->is_formula())
        ok = false;  // every formula off the rings is ordered
    if (!ok) ++cycle_bad;
  }
  {
    const EvalResult r = evaluate(load_workbook(read_file(fixture("cycle.json"))));
    ++cycle_cases;
    const std::vector<std::vector<CellAddress>> want = {{{"S1", 1, 1}, {"S1", 2, 1}}};
    if (r.cycles != want) ++cycle_bad;
  }
  report(partial_bad == 0 && value_bad == 0 && cycle_bad == 0, "evaluator-oracle",
         std::to_string(200 - partial_bad) + "/200 DAGs: evaluate_cells bit-identical to evaluate (" +
             std::to_string(compared) + " values); " + std::to_string(value_bad) +
             " values off the generator oracle by more than " + fixed(kValueTolerance * 1e12, 0) + "e-12 rel; " +
             std::to_string(cycle_cases - cycle_bad) + "/" + std::to_string(cycle_cases) +
             " cycle fixtures flag exactly their ring members");
}

void formula_round_trip() {
  gen::Rng rng(4004);
  int trip_bad = 0, norm_bad = 0, equal_pairs = 0;
  for (int i = 0; i < 10000; ++i) {
    const FormulaAst ast{gen::random_ast(rng, 5, "S1"), "S1"};
    const std::string printed = print_formula(ast);
    try {
      if (!structurally_equal(parse_formula(printed, "S1"), ast)) ++trip_bad;
    } catch (const std::exception&) {
      ++trip_bad;
    }
    const FormulaAst other{i % 2 == 0 ? gen::remap_refs(rng, ast.root, "S1") : gen::perturb(rng, ast.root, "S1"), "S1"};
    const bool masked = gen::masked_equal(ast.root, other.root);
    if (masked) ++equal_pairs;
    if ((normalize(ast) == normalize(other)) != masked) ++norm_bad;
  }
  report(trip_bad == 0 && norm_bad == 0, "formula-round-trip",
         std::to_string(10000 - trip_bad) + "/10000 parse(print(t)) == t; " + std::to_string(10000 - norm_bad) +
             "/10000 normalize equality agrees with masked equality (" + std::to_string(equal_pairs) +
             " masked-equal pairs)");
}

// ---------------------------------------------------------------------------

double grid_best(const Workbook& base, const std::vector<Annotation>& annotations) {
  const CoefficientModel model(base, false);
  const FitnessSpec spec = build_fitness(annotations);
  const auto& orig = model.identity().values;
  auto axis = [&](std::size_t gene, int n) {
    const double w = std::max(1.0, std::fabs(orig[gene]));
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(orig[gene] - w + 2.0 * w * i / (n - 1));
    return xs;
  };
  double best = std::numeric_limits<double>::infinity();
  if (orig.size() == 1) {
    for (double x : axis(0, kGridPoints1)) best = std::min(best, evaluate_fitness(spec, model.with_values({x}), model));
  } else {
    for (double x : axis(0, kGridPoints2))
      for (double y : axis(1, kGridPoints2))
        best = std::min(best, evaluate_fitness(spec, model.with_values({x, y}), model));
  }
  return best;
}

void evolution_criterion() {
  const auto t0 = Clock::now();
  std::vector<std::string> notes;
  bool ok = true;
  struct Problem {
    const char* workbook;
    const char* annotations;
  };
  for (const Problem& p : {Problem{"one_gene.json", "one_gene_annotations.json"},
                           Problem{"two_gene.json", "two_gene_annotations.json"}}) {
    const Workbook base = load_workbook(read_file(fixture(p.workbook)));
    const auto anns = parse_annotations(read_file(fixture(p.annotations)), "S1");
    auto run = [&](std::uint64_t seed) {
      GaConfig cfg;
      cfg.seed = seed;
      EvolutionSession s(base, cfg);
      s.add_annotations(anns);
      return evolve_step(s, 50);  // throws if elitism is ever violated
    };
    try {
      const StepResult a = run(42), b = run(42);
      const bool same = a.best == b.best && a.history == b.history && a.sample == b.sample;
      bool monotone = true;
      for (std::size_t i = 1; i < a.history.size(); ++i) monotone = monotone && a.history[i] <= a.history[i - 1];
      const double grid = grid_best(base, anns);
      const bool optimal = a.best_fitness <= grid + kGridSlack;
      ok = ok && same && monotone && optimal;
      notes.push_back(std::string(p.workbook) + ": reproducible=" + (same ? "yes" : "no") + ", monotone=" +
                      (monotone ? "yes" : "no") + ", GA best " + format_fitness(a.best_fitness) + " vs grid " +
                      format_fitness(grid));
      if (std::string(p.workbook) == "one_gene.json") {
        const bool zero = a.best_fitness == 0.0;
        ok = ok && zero;
        notes.push_back("TOO_HIGH fixture fitness 0 within 50 generations (seed 42): " + std::string(zero ? "yes" : "no"));
      }
    } catch (const std::exception& e) {
      ok = false;
      notes.push_back(std::string(p.workbook) + ": " + e.what());
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kEvolutionSeconds;
  std::string detail;
  for (const auto& n : notes) detail += n + "; ";
  report(ok, "evolution", detail + fixed(secs) + " s (limit " + fixed(kEvolutionSeconds, 0) + " s)");
}

// ---------------------------------------------------------------------------

struct Proc {
  int code = -1;
  std::string out;
};

Proc run_binary(const std::string& args) {
  Proc p;
  const std::string cmd = std::string(WIA_BINARY) + " " + args + " 2>/dev/null";
  FILE* f = ::popen(cmd.c_str(), "r");
  if (f == nullptr) return p;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
  const int raw = ::pclose(f);
  p.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wia-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Http {
  httplib::Client& client;

  json call(const std::string& method, const std::string& path, const json& body, int expected) {
    auto r = method == "GET" ? client.Get(path) : client.Post(path, body.dump(), "application/json");
    if (!r) throw std::runtime_error(method + " " + path + ": no response");
    if (r->status != expected)
      throw std::runtime_error(method + " " + path + " -> " + std::to_string(r->status) + " " + r->body);
    return json::parse(r->body);
  }
  std::string raw_get(const std::string& path) {
    auto r = client.Get(path);
    if (!r || r->status != 200) throw std::runtime_error("GET " + path + " failed");
    return r->body;
  }
};

void two_round_session(httplib::Client& client, const TempDir& dir) {
  Http http{client};
  try {
    const std::string wb_path = fixture("cost_model.json");
    const json round0 = json::array({{{"cell", "B1"}, {"verdict", "correct"}, {"anchor", 120.0}},
                                     {{"cell", "B4"}, {"verdict", "too_high"}, {"anchor", 213.9}}});
    const std::string ann_path = (dir.path / "round0.json").string();
    write_file_atomic(ann_path, round0.dump());

    // Round 0 in batch mode through the CLI.
    const Proc cli = run_binary("evolve " + wb_path + " --annotations " + ann_path + " --seed 7 --generations 50");
    if (cli.code != 0) throw std::runtime_error("wia evolve exited with " + std::to_string(cli.code));

    // The same session driven over HTTP.
    const json wb = http.call("POST", "/workbooks", json::parse(read_file(wb_path)), 201);
    const std::string sid =
        http.call("POST", "/sessions", {{"workbook_id", wb["id"]}, {"config", {{"seed", 7}}}}, 201)["id"];
    http.call("POST", "/sessions/" + sid + "/annotations", round0, 200);
    const json step0 = http.call("POST", "/sessions/" + sid + "/step", {{"generations", 50}}, 200);
    const double best0 = step0["best_fitness"];
    const bool cli_agrees = cli.out == "best fitness " + format_fitness(best0) + "\n";

    // The user picks the best candidate and marks three cells on it.
    const std::string chosen = step0["candidates"][0]["genome_id"];
    const std::string model = http.raw_get("/sessions/" + sid + "/export?genome_id=" + chosen);
    const json shown_wb = http.call("POST", "/workbooks", json::parse(model), 201);
    const json shown = http.call("GET", "/workbooks/" + shown_wb["id"].get<std::string>() + "/values", {}, 200);
    const json round1 = json::array({{{"cell", "B1"}, {"verdict", "correct"}, {"anchor", shown["S1!B1"]}},
                                     {{"cell", "B2"}, {"verdict", "correct"}, {"anchor", shown["S1!B2"]}},
                                     {{"cell", "B3"}, {"verdict", "too_high"}, {"anchor", shown["S1!B3"]}}});
    const json state =
        http.call("POST", "/sessions/" + sid + "/choose", {{"genome_id", chosen}, {"annotations", round1}}, 200);
    const std::size_t terms = state["fitness_terms"];
    const json step1 = http.call("POST", "/sessions/" + sid + "/step", {{"generations", 50}}, 200);
    const double best1 = step1["best_fitness"];
    const std::size_t candidates = step1["candidates"].size();

    const bool ok = cli_agrees && terms == 5 && best1 <= best0 && state["round"] == 1 && candidates <= 6;
    report(ok, "two-round-session",
           "CLI round-0 '" + cli.out.substr(0, cli.out.size() - 1) + "' " +
               (cli_agrees ? "matches" : "differs from") + " service best " + format_fitness(best0) +
               "; f1 has " + std::to_string(terms) + " terms (want 5); terminal best " + format_fitness(best1) +
               " <= round-0 best " + format_fitness(best0) + ": " + (best1 <= best0 ? "yes" : "no") + "; " +
               std::to_string(candidates) + " candidates per step");
  } catch (const std::exception& e) {
    report(false, "two-round-session", e.what());
  }
}

void cli_service_parity(httplib::Client& client, const TempDir& dir) {
  Http http{client};
  std::vector<std::string> files;
  for (const char* name : {"two_column.json", "sum3.json", "cycle.json", "one_gene.json", "two_gene.json",
                           "cost_model.json"})
    files.push_back(fixture(name));
  gen::Rng rng(7007);
  for (int i = 0; files.size() < 50; ++i) {
    Workbook wb;
    switch (i % 3) {
      case 0: wb = gen::segment_workbook(rng); break;
      case 1: wb = gen::dag_workbook(rng).workbook; break;
      default: wb = gen::cycle_workbook(rng).workbook; break;
    }
    const std::string path = (dir.path / ("wb" + std::to_string(i) + ".json")).string();
    write_file_atomic(path, save_workbook(wb));
    files.push_back(path);
  }
  int same = 0;
  std::string first;
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      const std::string out = (dir.path / ("graph" + std::to_string(i) + ".json")).string();
      const Proc p = run_binary("analyze " + files[i] + " --json " + out);
      if (p.code != 0) throw std::runtime_error("wia analyze exited with " + std::to_string(p.code));
      const json wb = http.call("POST", "/workbooks", json::parse(read_file(files[i])), 201);
      const std::string served = http.raw_get("/workbooks/" + wb["id"].get<std::string>() + "/graph");
      if (read_file(out) == served)
        ++same;
      else if (first.empty())
        first = files[i];
    } catch (const std::exception& e) {
      if (first.empty()) first = files[i] + " (" + e.what() + ")";
    }
  }
  report(same == 50, "cli-service-parity",
         std::to_string(same) + "/50 workbooks: `wia analyze --json` bytes equal GET /workbooks/{id}/graph" +
             (first.empty() ? "" : "; first difference: " + first));
}

}  // namespace

int main() {
  rule_invariants();
  oracle_equivalence();
  evaluator_oracle();
  formula_round_trip();
  evolution_criterion();

  Service service;
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  TempDir dir;
  two_round_session(client, dir);
  cli_service_parity(client, dir);
  server.stop();

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
