#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace stochcp;

namespace {

using Domains = std::vector<std::pair<std::int64_t, std::int64_t>>;

int add_var(DeterministicModel& m, const std::string& name, std::int64_t lo, std::int64_t hi) {
  m.vars.push_back({name, lo, hi, 0, false});
  return static_cast<int>(m.vars.size()) - 1;
}

FlatConstraint linear(std::vector<LinTerm> terms, CmpOp op, std::int64_t rhs) {
  FlatConstraint c;
  c.kind = FlatConstraint::Kind::Linear;
  c.terms = std::move(terms);
  c.op = op;
  c.rhs = rhs;
  return c;
}

FlatConstraint functional(FlatConstraint::Kind kind, int z, std::vector<int> args) {
  FlatConstraint c;
  c.kind = kind;
  c.z = z;
  c.args = std::move(args);
  return c;
}

/// Optimum by enumerating every point of the variable domains.
std::optional<Rational> brute_force(const DeterministicModel& m) {
  std::vector<std::int64_t> x;
  for (const auto& v : m.vars) x.push_back(v.lo);
  std::optional<Rational> best;
  while (true) {
    bool ok = true;
    for (const auto& c : m.constraints) ok = ok && satisfied(c, x);
    if (ok) {
      Rational value = m.objective_constant;
      for (const auto& [v, w] : m.objective) value += w * x[static_cast<std::size_t>(v)];
      if (!best || (m.direction == Objective::Direction::Maximize ? value > *best : value < *best)) best = value;
    }
    std::size_t k = 0;
    for (; k < x.size(); ++k) {
      if (x[k] < m.vars[k].hi) {
        ++x[k];
        break;
      }
      x[k] = m.vars[k].lo;
    }
    if (k == x.size()) break;
  }
  return best;
}

DeterministicModel random_model(std::mt19937_64& rng) {
  DeterministicModel m;
  const int n = 2 + static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) {
    const std::int64_t lo = static_cast<std::int64_t>(rng() % 7) - 3;
    add_var(m, "v" + std::to_string(i), lo, lo + static_cast<std::int64_t>(rng() % 5));
  }
  auto pick = [&] { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  const int cons = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < cons; ++k) {
    switch (rng() % 6) {
      case 0:
      case 1: {
        std::vector<LinTerm> terms;
        for (int i = 0; i < n; ++i) {
          if (rng() % 2) terms.push_back({i, static_cast<std::int64_t>(rng() % 7) - 3});
        }
        if (terms.empty()) terms.push_back({pick(), 1});
        const CmpOp ops[] = {CmpOp::Le, CmpOp::Eq, CmpOp::Ne};
        m.constraints.push_back(linear(terms, ops[rng() % 3], static_cast<std::int64_t>(rng() % 9) - 4));
        break;
      }
      case 2:
        m.constraints.push_back(functional(FlatConstraint::Kind::Product, pick(), {pick(), pick()}));
        break;
      case 3:
        m.constraints.push_back(functional(FlatConstraint::Kind::Min, pick(), {pick(), pick()}));
        break;
      case 4:
        m.constraints.push_back(functional(FlatConstraint::Kind::Max, pick(), {pick(), pick()}));
        break;
      default: {
        const int z = add_var(m, "b" + std::to_string(k), 0, 1);
        FlatConstraint c = linear({{pick(), 1}, {pick(), -2}}, rng() % 2 ? CmpOp::Le : CmpOp::Ne,
                                  static_cast<std::int64_t>(rng() % 5) - 2);
        c.kind = FlatConstraint::Kind::Reified;
        c.z = z;
        m.constraints.push_back(c);
        break;
      }
    }
  }
  m.direction = rng() % 2 ? Objective::Direction::Minimize : Objective::Direction::Maximize;
  for (std::size_t v = 0; v < m.vars.size(); ++v) {
    if (rng() % 2) m.objective.emplace_back(static_cast<int>(v), Rational(static_cast<long>(rng() % 9) - 4, 1 + static_cast<long>(rng() % 3)));
  }
  return m;
}

}  // namespace

TEST_CASE("propagation examples") {
  SECTION("linear equality") {
    DeterministicModel m;
    const int x = add_var(m, "x", 0, 2);
    const int y = add_var(m, "y", 0, 2);
    m.constraints.push_back(linear({{x, 1}, {y, 1}}, CmpOp::Eq, 3));
    const auto d = propagate(m);
    REQUIRE(d);
    CHECK((*d)[0] == std::pair<std::int64_t, std::int64_t>{1, 2});
    CHECK((*d)[1] == std::pair<std::int64_t, std::int64_t>{1, 2});
  }
  SECTION("max with a negative argument") {
    DeterministicModel m;
    const int z = add_var(m, "z", -10, 10);
    const int zero = add_var(m, "k", 0, 0);
    const int s = add_var(m, "s", -5, -1);
    m.constraints.push_back(functional(FlatConstraint::Kind::Max, z, {zero, s}));
    const auto d = propagate(m);
    REQUIRE(d);
    CHECK((*d)[0] == std::pair<std::int64_t, std::int64_t>{0, 0});
  }
  SECTION("product back-propagation") {
    DeterministicModel m;
    const int z = add_var(m, "z", 4, 4);
    const int x = add_var(m, "x", 0, 2);
    const int y = add_var(m, "y", 0, 3);
    m.constraints.push_back(functional(FlatConstraint::Kind::Product, z, {x, y}));
    const auto d = propagate(m);
    REQUIRE(d);
    CHECK((*d)[1] == std::pair<std::int64_t, std::int64_t>{2, 2});
    CHECK((*d)[2] == std::pair<std::int64_t, std::int64_t>{2, 2});
  }
  SECTION("reified comparison decided by bounds") {
    DeterministicModel m;
    const int b = add_var(m, "b", 0, 1);
    const int x = add_var(m, "x", 3, 5);
    FlatConstraint c = linear({{x, 1}}, CmpOp::Le, 2);
    c.kind = FlatConstraint::Kind::Reified;
    c.z = b;
    m.constraints.push_back(c);
    const auto d = propagate(m);
    REQUIRE(d);
    CHECK((*d)[0] == std::pair<std::int64_t, std::int64_t>{0, 0});
  }
}

TEST_CASE("solve examples") {
  SECTION("maximize on a line") {
    DeterministicModel m;
    const int x = add_var(m, "x", 0, 2);
    const int y = add_var(m, "y", 0, 2);
    m.constraints.push_back(linear({{x, 1}, {y, 1}}, CmpOp::Eq, 3));
    m.direction = Objective::Direction::Maximize;
    m.objective = {{x, Rational(1)}};
    const auto r = solve(m);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.assignment == std::vector<std::int64_t>{2, 1});
    CHECK(*r.objective == 2);
  }
  SECTION("infeasible pair") {
    DeterministicModel m;
    const int x = add_var(m, "x", -5, 5);
    m.constraints.push_back(linear({{x, -1}}, CmpOp::Le, -1));
    m.constraints.push_back(linear({{x, 1}}, CmpOp::Le, 0));
    const auto r = solve(m);
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK_FALSE(r.assignment);
    CHECK(r.proven());
  }
  SECTION("node limit keeps the incumbent") {
    DeterministicModel m;
    std::vector<LinTerm> terms;
    for (int i = 0; i < 8; ++i) terms.push_back({add_var(m, "x" + std::to_string(i), 0, 3), 1 + i});
    m.constraints.push_back(linear(terms, CmpOp::Ne, 17));
    m.direction = Objective::Direction::Maximize;
    for (const auto& t : terms) m.objective.emplace_back(t.var, Rational(t.coef % 3 == 0 ? -1 : 1));
    SolveLimits limits;
    limits.max_nodes = 3;
    const auto r = solve(m, limits);
    CHECK(r.limit_reached);
    CHECK_FALSE(r.proven());
    if (r.assignment) CHECK(evaluate(m, *r.assignment).feasible());
  }
}

TEST_CASE("solver agrees with enumeration on random models") {
  std::mt19937_64 rng(31);
  int feasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto m = random_model(rng);
    const auto expected = brute_force(m);
    const auto r = solve(m);
    INFO("trial " << trial);
    if (!expected) {
      CHECK(r.status == SolveStatus::Infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == *expected);
    CHECK(evaluate(m, *r.assignment).feasible());
    CHECK(evaluate(m, *r.assignment).objective == *r.objective);

    const auto again = solve(m);
    CHECK(again.assignment == r.assignment);
    CHECK(again.stats.nodes == r.stats.nodes);
    CHECK(again.stats.failures == r.stats.failures);
  }
  CHECK(feasible > 100);
}

TEST_CASE("propagation never widens a domain") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_model(rng);
    Domains in;
    for (const auto& v : m.vars) {
      const std::int64_t lo = v.lo + static_cast<std::int64_t>(rng() % 2);
      in.emplace_back(std::min(lo, v.hi), v.hi);
    }
    const auto out = propagate(m, &in);
    if (!out) continue;
    for (std::size_t v = 0; v < in.size(); ++v) {
      CHECK((*out)[v].first >= in[v].first);
      CHECK((*out)[v].second <= in[v].second);
    }
  }
}

TEST_CASE("evaluate") {
  DeterministicModel m;
  const int x = add_var(m, "x", 0, 5);
  const int y = add_var(m, "y", 0, 5);
  m.constraints.push_back(linear({{x, 1}, {y, 1}}, CmpOp::Le, 4));
  m.constraints.push_back(linear({{x, 1}, {y, -1}}, CmpOp::Ne, 0));
  m.objective = {{x, Rational(1, 2)}, {y, Rational(3)}};
  m.objective_constant = 1;
  const auto ok = evaluate(m, {1, 2});
  CHECK(ok.feasible());
  CHECK(ok.objective == Rational(15, 2));
  const auto bad = evaluate(m, {2, 2});
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].find("constraint 1") == 0);
  CHECK_THROWS_AS(evaluate(m, {1}), std::invalid_argument);
}

TEST_CASE("static order-up-to policy costs 439.70 in the expected-cost model") {
  const auto model = testsupport::load_bundled("production");
  const auto tree = build_tree(model);
  const auto c = compile(model, tree);
  const std::int64_t policy[] = {14, 21, 23, 20, 18};
  Domains d;
  for (const auto& v : c.flat.vars) d.emplace_back(v.lo, v.hi);
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    for (std::int64_t p = 1; p <= 5; ++p) {
      const auto out = flat_var_for(model, tree, c, "OrderUpTo", {p}, leaf);
      const auto rep = flat_var_for(model, tree, c, "Replenish", {p}, leaf);
      REQUIRE(out);
      REQUIRE(rep);
      d[static_cast<std::size_t>(*out)] = {policy[p - 1], policy[p - 1]};
      d[static_cast<std::size_t>(*rep)] = {1, 1};
    }
  }
  const auto fixed = propagate(c.flat, &d);
  REQUIRE(fixed);
  std::vector<std::int64_t> values;
  for (const auto& [lo, hi] : *fixed) {
    REQUIRE(lo == hi);
    values.push_back(lo);
  }
  const auto e = evaluate(c.flat, values);
  CHECK(e.feasible());
  CHECK(e.objective == Rational(43970, 100));
}

TEST_CASE("small bundled models solve to their enumerated optima") {
  SECTION("portfolio") {
    const auto model = testsupport::load_bundled("portfolio");
    const auto r = stochastic_solution(model, build_tree(model));
    REQUIRE(r.proven);
    CHECK(*r.value == Rational(-57, 4));
  }
  SECTION("template design") {
    const auto model = testsupport::load_bundled("template");
    const auto r = stochastic_solution(model, build_tree(model));
    REQUIRE(r.proven);
    CHECK(*r.value == Rational(23, 2));
  }
  SECTION("template design with service levels") {
    const auto model = testsupport::load_bundled("template_service");
    const auto r = stochastic_solution(model, build_tree(model));
    REQUIRE(r.proven);
    CHECK(*r.value == 11);
  }
}
