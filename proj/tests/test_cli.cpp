#include "support.hpp"
#include "stochcp/cli.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stochcp;
using testsupport::model_path;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> files(const std::string& name) {
  return {model_path(name + ".sopl"), model_path(name + ".sdat")};
}

std::vector<std::string> command(const std::string& cmd, const std::string& name, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{cmd};
  for (const auto& f : files(name)) args.push_back(f);
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

std::string temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("stochcp_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("solve reports the portfolio optimum") {
  const auto r = run(command("solve", "portfolio", {"--format", "records"}));
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "record=result status=optimal proven=true limit_reached=false objective=-14.25"));
  CHECK(has(r.out, "record=tree stages=3 scenarios=8 nb_nodes=1,2,4,8"));
  CHECK(has(r.out, "record=decision name=inv[stock,<1,1>] value=64"));
}

TEST_CASE("compile writes the flat model without solving") {
  const auto r = run(command("compile", "portfolio"));
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "var int wealth[<1,1>]"));
  CHECK_FALSE(has(r.out, "objective:"));
  CHECK(r.out == run(command("compile", "portfolio")).out);

  const auto single = run(command("compile", "portfolio", {"--scenario", "expected"}));
  CHECK(single.code == kExitOk);
  CHECK(has(single.out, "var int pos in"));
}

TEST_CASE("reduce lists survivors") {
  const auto top = run(command("reduce", "portfolio", {"--scenario", "top 3", "--format", "records"}));
  CHECK(top.code == kExitOk);
  CHECK(has(top.out, "record=survivor index=1 probability=1/3"));
  CHECK(has(top.out, "record=survivor index=3 probability=1/3"));

  const std::string model = temp_file("toy.sopl", "range S [1..1];\nstoch int d[S] = ...;\nvar int x in 0..1;\nsubject to { x >= 0; };\n");
  const std::string data = temp_file("toy.sdat", "d = [<0(0.5), 1(0.3), 10(0.2)>];\n");
  const auto dgr = run({"reduce", model, data, "--scenario", "DGR 2", "--format", "records"});
  CHECK(dgr.code == kExitOk);
  CHECK(has(dgr.out, "record=survivor index=1 probability=0.8"));
  CHECK(has(dgr.out, "record=survivor index=3 probability=0.2"));

  const auto ev = run(command("reduce", "portfolio", {"--scenario", "expected", "--format", "records"}));
  CHECK(has(ev.out, "record=survivor index=expected probability=1"));

  const auto bad = run(command("reduce", "portfolio", {"--scenario", "top 9"}));
  CHECK(bad.code == kExitInputError);
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("analyze reports information statistics") {
  const auto r = run(command("analyze", "payoff", {"--format", "records"}));
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "record=info ss=5 wss=6 evs=5 evpi=1 vss=0 proven=true"));

  const auto curve = run(command("analyze", "template", {"--skip-stats", "--curve", "top,dgr", "--fractions", "0.5,1",
                                                         "--format", "records"}));
  CHECK(curve.code == kExitOk);
  std::size_t points = 0;
  for (auto pos = curve.out.find("record=point"); pos != std::string::npos; pos = curve.out.find("record=point", pos + 1)) ++points;
  CHECK(points == 4);
}

TEST_CASE("exit statuses") {
  const std::string broken = temp_file("broken.sopl", "var int x in 0..;\n");
  const std::string empty = temp_file("empty.sdat", "");
  const auto parse = run({"solve", broken, empty});
  CHECK(parse.code == kExitInputError);
  CHECK(has(parse.err, "error"));

  const std::string infeasible = temp_file("infeasible.sopl", "var int x in 0..3;\nsubject to { x >= 4; };\n");
  CHECK(run({"solve", infeasible, empty}).code == kExitNoSolution);

  CHECK(run({"solve", "/nonexistent/model.sopl", empty}).code == kExitInputError);
  CHECK(run({"frobnicate"}).code == kExitInputError);

  const auto limited = run(command("solve", "template", {"--max-nodes", "1"}));
  CHECK(limited.code == kExitNoSolution);
}

TEST_CASE("records output is byte-identical across runs") {
  for (const auto& args : {command("solve", "template", {"--format", "records"}),
                           command("reduce", "production", {"--scenario", "lhs 12", "--seed", "3", "--format", "records"}),
                           command("analyze", "payoff", {"--format", "records"})}) {
    const std::string first = run(args).out;
    for (int i = 0; i < 3; ++i) CHECK(run(args).out == first);
  }
}
