#include "wia/cli.hpp"

#include <optional>

#include <CLI11.hpp>

#include "wia/errors.hpp"
#include "wia/evolution.hpp"
#include "wia/io.hpp"
#include "wia/pipeline.hpp"
#include "wia/service.hpp"

namespace wia {

std::string format_fitness(double v) {
  std::string s = format_number(v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::string plural(std::size_t n, const std::string& noun) {
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

void write_output(const std::string& target, const std::string& text, std::ostream& out) {
  if (target == "-")
    out << text << "\n";
  else
    write_file_atomic(target, text);
}

struct AnalyzeArgs {
  std::string workbook;
  std::string json_out;
  std::string dot_out;
  std::string level = "group";
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const CompiledWorkbook compiled(load_workbook(read_file(a.workbook)));
  const GraphLevel level = *parse_graph_level(a.level);
  const Analysis analysis = analyze(compiled, level);
  if (!a.json_out.empty()) write_output(a.json_out, export_json(analysis.graph), out);
  if (!a.dot_out.empty()) write_output(a.dot_out, export_dot(analysis.graph, level), out);
  out << plural(analysis.graph.groups.size(), "group") << ", "
      << plural(analysis.graph.group_edges.size(), "group edge") << ", "
      << plural(compiled.workbook().cell_count(), "cell") << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string workbook;
  std::string cell;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const CompiledWorkbook compiled(load_workbook(read_file(a.workbook)));
  if (!a.cell.empty()) {
    const CellAddress at = parse_address(a.cell, compiled.workbook().default_sheet()).location();
    const Cell* cell = compiled.workbook().find(at);
    if (cell == nullptr) throw UnknownCell(format_address(at));
    const EvalResult r = evaluate_cells(compiled, {cell->address});
    out << format_address(cell->address) << "=" << display_value(r.values.at(cell->address)) << "\n";
    return kExitOk;
  }
  const EvalResult r = evaluate(compiled);
  for (const auto& [at, v] : r.values) out << format_address(at) << "=" << display_value(v) << "\n";
  return kExitOk;
}

struct EvolveArgs {
  std::string workbook;
  std::string annotations;
  std::string config;
  std::string out;
  std::size_t generations = 50;
  std::optional<std::uint64_t> seed;
  bool tie = false;
};

int cmd_evolve(const EvolveArgs& a, std::ostream& out) {
  Workbook wb = load_workbook(read_file(a.workbook));
  GaConfig config = a.config.empty() ? GaConfig{} : parse_ga_config(read_file(a.config));
  if (a.seed) config.seed = *a.seed;
  if (a.tie) config.tie_genes_by_segment = true;
  const std::string sheet = wb.default_sheet();
  auto annotations = parse_annotations(read_file(a.annotations), sheet);
  EvolutionSession session(std::move(wb), config);
  session.add_annotations(std::move(annotations));
  const StepResult step = evolve_step(session, a.generations);
  if (!a.out.empty()) write_output(a.out, save_workbook(export_model(session, step.best)), out);
  out << "best fitness " << format_fitness(step.best_fitness) << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  Service service;
  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  out << "listening on http://" << a.host << ":" << port << std::endl;
  server.run();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Spreadsheet structure analysis and coefficient refinement", "wia"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Group cells and print the structure summary");
  analyze_cmd->add_option("workbook", analyze_args.workbook, "Workbook JSON file")->required();
  analyze_cmd->add_option("--json", analyze_args.json_out, "Write the structure graph JSON here ('-' for stdout)");
  analyze_cmd->add_option("--dot", analyze_args.dot_out, "Write a GraphViz digraph here ('-' for stdout)");
  analyze_cmd->add_option("--level", analyze_args.level, "Graph granularity")
      ->check(CLI::IsMember({"group", "cell"}))
      ->default_str("group");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate every cell and print REF=VALUE lines");
  eval_cmd->add_option("workbook", eval_args.workbook, "Workbook JSON file")->required();
  eval_cmd->add_option("--cell", eval_args.cell, "Print only this cell (A1 or Sheet!A1)");

  EvolveArgs evolve_args;
  std::uint64_t seed = 0;
  auto* evolve_cmd = app.add_subcommand("evolve", "Run the GA against an annotation file");
  evolve_cmd->add_option("workbook", evolve_args.workbook, "Workbook JSON file")->required();
  evolve_cmd->add_option("--annotations", evolve_args.annotations, "Annotation JSON file")->required();
  evolve_cmd->add_option("--generations", evolve_args.generations, "Generations to run")
      ->check(CLI::PositiveNumber)
      ->default_str("50");
  auto* seed_opt = evolve_cmd->add_option("--seed", seed, "RNG seed (overrides the config file)");
  evolve_cmd->add_option("--config", evolve_args.config, "GA config JSON file");
  evolve_cmd->add_flag("--tie-genes", evolve_args.tie, "One gene per literal position of a formula segment");
  evolve_cmd->add_option("--out", evolve_args.out, "Write the best model here ('-' for stdout)");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the JSON-over-HTTP service");
  serve_cmd->add_option("--port", serve_args.port, "TCP port (0 picks a free one)")
      ->check(CLI::Range(0, 65535))
      ->default_str("8080");
  serve_cmd->add_option("--host", serve_args.host, "Interface to bind")->default_str("127.0.0.1");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (*seed_opt) evolve_args.seed = seed;

  try {
    if (*analyze_cmd) return cmd_analyze(analyze_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*evolve_cmd) return cmd_evolve(evolve_args, out);
    if (*serve_cmd) return cmd_serve(serve_args, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace wia
