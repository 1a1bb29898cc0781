#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace stochcp;
using testsupport::load_bundled;
using testsupport::load_text;
using testsupport::solution_set;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

CompiledModel compile_text(const std::string& text) {
  const auto model = load_text(text);
  return compile(model, build_tree(model));
}

}  // namespace

TEST_CASE("portfolio compiles to the certainty-equivalent layout") {
  const auto model = load_bundled("portfolio");
  const auto tree = build_tree(model);
  const auto c = compile(model, tree);
  const std::string text = emit_flat(c);
  for (int leaf = 1; leaf <= 8; ++leaf) {
    CHECK(count_of(text, "var int pos[@" + std::to_string(leaf) + "] in 0..50;") == 1);
    CHECK(count_of(text, "var int neg[@" + std::to_string(leaf) + "] in 0..50;") == 1);
  }
  CHECK(count_of(text, "var int wealth[<1,1>]") == 1);
  CHECK(count_of(text, "var int wealth[<4,8>]") == 1);
  CHECK(count_of(text, "wealth[<1,1>] = 100;") == 1);
  CHECK(c.nb_nodes == std::vector<int>{1, 2, 4, 8});

  // expected(pos - 4*neg) with every scenario at 1/8.
  for (const auto& [v, w] : c.flat.objective) {
    const auto& name = c.flat.vars[static_cast<std::size_t>(v)].name;
    if (name.rfind("pos", 0) == 0) CHECK(w == Rational(1, 8));
    if (name.rfind("neg", 0) == 0) CHECK(w == Rational(-1, 2));
  }
  CHECK(c.flat.objective.size() == 16);
  CHECK(c.flat.direction == Objective::Direction::Maximize);
}

TEST_CASE("stage-indexed variables respect non-anticipativity") {
  for (const char* name : {"portfolio", "production"}) {
    INFO(name);
    const auto model = load_bundled(name);
    const auto full = build_tree(model);
    // Keep the production tree small: every fourth leaf.
    std::vector<std::pair<std::size_t, Rational>> keep;
    const std::size_t step = full.leaf_count() > 64 ? 16 : 1;
    for (std::size_t s = 0; s < full.leaf_count(); s += step) keep.emplace_back(s, Rational(step, full.leaf_count()));
    const auto tree = full.restrict_to(keep);
    const auto c = compile(model, tree);
    for (const auto& dv : model.decision_vars) {
      if (!dv.stage_dim || dv.robust) continue;
      const auto& stages = dv.dims[*dv.stage_dim];
      for (std::size_t a = 0; a < tree.leaf_count(); ++a) {
        for (std::size_t b = a + 1; b < tree.leaf_count(); ++b) {
          for (std::int64_t t = stages.lo; t <= stages.hi; ++t) {
            std::vector<std::int64_t> idx;
            for (std::size_t d = 0; d < dv.dims.size(); ++d) idx.push_back(d == *dv.stage_dim ? t : dv.dims[d].lo);
            const auto va = flat_var_for(model, tree, c, dv.name, idx, a);
            const auto vb = flat_var_for(model, tree, c, dv.name, idx, b);
            if (!va || !vb) continue;
            const int stage = static_cast<int>(t - stages.lo) + 1;
            const bool shared = tree.node_at(stage, a) == tree.node_at(stage, b);
            CHECK((*va == *vb) == shared);
          }
        }
      }
    }
  }
}

TEST_CASE("robust variables have one flat copy") {
  const auto model = load_bundled("production_robust");
  const auto tree = build_tree(model);
  const auto c = compile(model, tree);
  const auto a = flat_var_for(model, tree, c, "OrderUpTo", {3}, 0);
  const auto b = flat_var_for(model, tree, c, "OrderUpTo", {3}, 1023);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(*a == *b);
  CHECK(c.flat.vars[static_cast<std::size_t>(*a)].name == "OrderUpTo[3]");
}

TEST_CASE("single-scenario compile matches direct substitution") {
  const std::string body =
      "var int x in 0..4;\nvar int y in 0..4;\nvar int z in 0..6;\n"
      "subject to {\n  x + y >= d[1];\n  z = max(0, x - d[1]) + min(y, 2);\n  x * y <= 2 * d[1];\n};\n";
  const auto stochastic = compile_text("range S [1..1];\nstoch int d[S] = [<3(1.0)>];\n" + body);
  const auto direct = compile_text("range S [1..1];\nint d[S] = [3];\n" + body);
  const auto a = solution_set(stochastic.flat);
  CHECK_FALSE(a.empty());
  CHECK(a == solution_set(direct.flat));
}

TEST_CASE("chance constraints") {
  const std::string decls =
      "range S [1..1];\nstoch int d[S] = [<1(0.2), 2(0.3), 4(0.5)>];\n"
      "robust int x in 0..5;\nvar int y in 0..3;\n";
  SECTION("threshold 1 equals the hard constraint") {
    const auto chance = compile_text(decls + "subject to {\n  prob(x - d[1] >= y) >= 1;\n};\n");
    const auto hard = compile_text(decls + "subject to {\n  x - d[1] >= y;\n};\n");
    CHECK(solution_set(chance.flat) == solution_set(hard.flat));
  }
  SECTION("threshold 0 is vacuous") {
    const auto chance = compile_text(decls + "minimize expected(x + y)\nsubject to {\n  prob(x - d[1] >= y) >= 0;\n};\n");
    const auto none = compile_text(decls + "minimize expected(x + y)\nsubject to { };\n");
    CHECK(solution_set(chance.flat) == solution_set(none.flat));
  }
  SECTION("partial threshold counts probability mass") {
    const auto c = compile_text("range S [1..1];\nstoch int d[S] = [<1(0.2), 2(0.3), 4(0.5)>];\n"
                                "robust int x in 0..5;\n"
                                "minimize expected(x)\nsubject to {\n  prob(x >= d[1]) >= 0.5;\n};\n");
    const auto r = solve(c.flat);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 2);
  }
  SECTION("stage-local chance constraint uses stage node probabilities") {
    const auto c = compile_text("range P [1..2];\nstoch int d[P] = [<1(0.5), 3(0.5)>, <1(0.5), 3(0.5)>];\n"
                                "var int s[P] in 0..5;\n"
                                "subject to {\n  forall(p in P) prob(s[p] >= d[p]) >= 0.5;\n};\n");
    const std::string text = emit_flat(c);
    // One reified indicator per stage-2 and stage-3 node: 2 + 4.
    CHECK(count_of(text, "var int _b") == 6);
  }
}

TEST_CASE("objective kinds") {
  const std::string decls = "range S [1..1];\nstoch int d[S] = [<1(0.5), 5(0.5)>];\nrobust int x in 0..6;\n";
  auto value = [&](const std::string& goal) {
    const auto c = compile_text(decls + goal + "\nsubject to { x >= 0; };\n");
    const auto r = solve(c.flat);
    REQUIRE(r.status == SolveStatus::Optimal);
    return *r.objective;
  };
  CHECK(value("minimize spread(7)") == 0);
  CHECK(value("minimize spread(x - d[1])") == 4);
  CHECK(value("maximize downside(x - d[1])") == 1);
  CHECK(value("minimize upside(x + d[1])") == 5);
  // x = 3: both scenarios cost 2, no deviation.
  CHECK(value("minimize mv(max(x - d[1], d[1] - x), 1)") == 2);
  // E = x - 3, deviation 2 in both scenarios, best at x = 6.
  CHECK(value("maximize mv(x - d[1], -1)") == 1);
}

TEST_CASE("mv with a negative lambda under minimize is rejected") {
  const auto model = load_text("range S [1..1];\nstoch int d[S] = [<1(0.5), 5(0.5)>];\nrobust int x in 0..6;\n"
                               "minimize mv(x - d[1], -1)\nsubject to { x >= 0; };\n");
  CHECK_THROWS_AS(compile(model, build_tree(model)), ModelError);
}

TEST_CASE("emit_flat is deterministic") {
  const auto model = load_bundled("template_service");
  const auto tree = build_tree(model);
  const auto a = compile(model, tree);
  const auto b = compile(model, tree);
  CHECK(emit_flat(a) == emit_flat(b));
  CHECK(flat_hash(a) == flat_hash(b));

  const auto empty = load_text("var int x in 0..1;\nvar int y in 2..3;\nminimize expected(x + y)\nsubject to { };\n");
  const std::string text = emit_flat(compile(empty, build_tree(empty)));
  CHECK(count_of(text, "var int") == 2);
  CHECK(count_of(text, "subject to {\n};") == 1);
}

TEST_CASE("compiled models carry no stochastic references and no orphan variables") {
  for (const char* name : {"portfolio", "template", "template_service", "agricultural"}) {
    INFO(name);
    const auto model = load_bundled(name);
    const auto c = compile(model, build_tree(model));
    std::vector<char> used(c.flat.vars.size(), 0);
    for (const auto& fc : c.flat.constraints) {
      for (int v : fc.scope()) used[static_cast<std::size_t>(v)] = 1;
    }
    for (const auto& [v, w] : c.flat.objective) used[static_cast<std::size_t>(v)] = 1;
    for (std::size_t v = 0; v < used.size(); ++v) {
      INFO(c.flat.vars[v].name);
      CHECK(used[v]);
    }
  }
}
