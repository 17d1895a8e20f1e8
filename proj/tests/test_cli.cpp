#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "test_util.hpp"
#include "wia/cli.hpp"
#include "wia/graph_export.hpp"
#include "wia/io.hpp"
#include "wia/pipeline.hpp"

using namespace wia;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run wia_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wia");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fx(const char* name) { return wia::test::fixture_path(name); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wia-cli-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("analyze prints a summary and writes the graph") {
    TempDir dir;
    const Run r = wia_cli({"analyze", fx("two_column.json"), "--json", dir / "g.json", "--dot", dir / "g.dot"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "2 groups, 1 group edge, 10 cells\n");
    const CompiledWorkbook compiled(wia::test::fixture("two_column.json"));
    const Analysis a = analyze(compiled, GraphLevel::Group);
    CHECK(read_file(dir / "g.json") == export_json(a.graph));
    CHECK(read_file(dir / "g.dot") == export_dot(a.graph, GraphLevel::Group));

    const Run cell = wia_cli({"analyze", fx("two_column.json"), "--level", "cell", "--json", "-"});
    CHECK(cell.code == kExitOk);
    CHECK(cell.out == export_json(analyze(compiled, GraphLevel::Cell).graph) + "\n" +
                          "2 groups, 1 group edge, 10 cells\n");
    CHECK(wia_cli({"analyze", fx("sum3.json")}).out == "2 groups, 1 group edge, 3 cells\n");
    CHECK(wia_cli({"analyze", fx("two_column.json"), "--level", "sheet"}).code == kExitInput);
  }

  TEST_CASE("eval") {
    CHECK(wia_cli({"eval", fx("sum3.json"), "--cell", "A3"}).out == "S1!A3=5\n");
    CHECK(wia_cli({"eval", fx("sum3.json")}).out == "S1!A1=2\nS1!A2=3\nS1!A3=5\n");
    const Run cyc = wia_cli({"eval", fx("cycle.json")});
    CHECK(cyc.code == kExitOk);
    CHECK(cyc.out == "S1!A1=#CYCLE\nS1!B1=7\nS1!A2=#CYCLE\nS1!B2=8\nS1!A3=#CYCLE\n");
    const Run missing = wia_cli({"eval", fx("sum3.json"), "--cell", "Q9"});
    CHECK(missing.code == kExitInput);
    CHECK(missing.err.find("S1!Q9") != std::string::npos);
  }

  TEST_CASE("evolve") {
    TempDir dir;
    const Run r = wia_cli({"evolve", fx("one_gene.json"), "--annotations", fx("one_gene_annotations.json"),
                           "--seed", "42", "--out", dir / "best.json"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "best fitness 0.0\n");
    const Workbook best = load_workbook(read_file(dir / "best.json"));
    CHECK(best.find(wia::test::at("C1"))->formula() != "=A1*2");
    const Run again = wia_cli({"evolve", fx("one_gene.json"), "--annotations", fx("one_gene_annotations.json"),
                               "--seed", "42", "--out", "-"});
    CHECK(again.out == read_file(dir / "best.json") + "\nbest fitness 0.0\n");

    write_file_atomic(dir / "cfg.json", R"({"population":16,"seed":3})");
    CHECK(wia_cli({"evolve", fx("two_gene.json"), "--annotations", fx("two_gene_annotations.json"), "--config",
                   dir / "cfg.json", "--generations", "5"})
              .code == kExitOk);
    CHECK(wia_cli({"evolve", fx("two_column.json"), "--annotations", fx("empty_annotations.json"), "--tie-genes"})
              .code == kExitInput);
  }

  TEST_CASE("exit codes") {
    CHECK(wia_cli({}).code == kExitInput);
    CHECK(wia_cli({"--help"}).code == kExitOk);
    CHECK(wia_cli({"frobnicate"}).code == kExitInput);
    CHECK(wia_cli({"analyze"}).code == kExitInput);
    const Run missing = wia_cli({"analyze", "/nonexistent/wb.json"});
    CHECK(missing.code == kExitIo);
    const Run malformed = wia_cli({"analyze", fx("malformed.json")});
    CHECK(malformed.code == kExitInput);
    CHECK(malformed.err.find("invalid JSON") != std::string::npos);
    CHECK(wia_cli({"analyze", fx("two_column.json"), "--json", "/nonexistent/dir/g.json"}).code == kExitIo);
    CHECK(wia_cli({"evolve", fx("one_gene.json"), "--annotations", "/nonexistent.json"}).code == kExitIo);
  }

  TEST_CASE("atomic writes replace the target and leave no temporaries") {
    TempDir dir;
    write_file_atomic(dir / "x.json", "old");
    write_file_atomic(dir / "x.json", "new");
    CHECK(read_file(dir / "x.json") == "new");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
    CHECK(files == 1);
    CHECK_THROWS_AS(read_file(dir / "absent.json"), IoError);
  }

  TEST_CASE("format_fitness") {
    CHECK(format_fitness(0.0) == "0.0");
    CHECK(format_fitness(2.5) == "2.5");
    CHECK(format_fitness(3.0) == "3.0");
    CHECK(format_fitness(0.0025) == "0.0025");
  }

  TEST_CASE("the installed binary reports exit codes") {
    auto status_of = [](const std::string& cmd) {
      const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
      return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    const std::string bin = WIA_BINARY;
    CHECK(status_of(bin + " analyze " + fx("two_column.json")) == 0);
    CHECK(status_of(bin + " analyze " + fx("malformed.json")) == 1);
    CHECK(status_of(bin + " analyze /nonexistent.json") == 2);
  }
}
