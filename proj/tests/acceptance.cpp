// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include "support.hpp"
#include "stochcp/cli.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace stochcp;
using testsupport::load_bundled;
using testsupport::load_text;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", s);
  return buf;
}

std::string decisions_text(const Decisions& d) {
  std::string out;
  for (const auto& [name, value] : d) {
    if (!out.empty()) out += " ";
    out += name + "=" + std::to_string(value);
  }
  return out;
}

std::string method_name(ReductionSpec::Kind k) {
  switch (k) {
    case ReductionSpec::Kind::Top: return "top";
    case ReductionSpec::Kind::Sample: return "sample";
    case ReductionSpec::Kind::Lhs: return "lhs";
    case ReductionSpec::Kind::Dgr: return "dgr";
    default: return "expected";
  }
}

std::int64_t decision(const Decisions& d, const std::string& name) {
  for (const auto& [n, v] : d) {
    if (n == name) return v;
  }
  throw std::runtime_error("no decision " + name);
}

// 1. Expected-cost production model on the full tree.
Verdict production_expected() {
  const auto model = load_bundled("production");
  SolveLimits limits;
  limits.max_nodes = 100000000;
  const auto start = std::chrono::steady_clock::now();
  const auto r = stochastic_solution(model, build_tree(model), limits);
  const double t = seconds_since(start);
  if (!r.value) return {false, "no solution, status " + to_string(r.status)};
  const std::string shown = to_fixed(*r.value, 2);
  return {r.proven && shown == "351.61",
          "objective " + shown + " (" + to_exact_string(*r.value) + "), proven=" + (r.proven ? "yes" : "no") +
              ", nodes " + std::to_string(r.stats.nodes) + ", " + fmt_seconds(t)};
}

// 2. Static order-up-to policy.
Verdict production_robust() {
  const auto model = load_bundled("production_robust");
  const auto tree = build_tree(model);
  const auto start = std::chrono::steady_clock::now();
  const auto r = stochastic_solution(model, tree);
  const double t = seconds_since(start);
  if (!r.value) return {false, "no solution, status " + to_string(r.status)};
  const std::int64_t levels[] = {14, 21, 23, 20, 18};
  bool same_policy = true;
  std::string policy;
  Decisions reference;
  for (int p = 1; p <= 5; ++p) {
    const std::string up = "OrderUpTo[" + std::to_string(p) + "]";
    const std::string rep = "Replenish[" + std::to_string(p) + "]";
    const auto level = decision(r.decisions, up);
    const auto replenish = decision(r.decisions, rep);
    same_policy = same_policy && level == levels[p - 1] && replenish == 1;
    policy += (p > 1 ? "," : "") + std::to_string(level) + (replenish ? "" : "(no order)");
    reference.emplace_back(up, levels[p - 1]);
    reference.emplace_back(rep, 1);
  }
  bool policy_ok = same_policy;
  std::string tie;
  if (!same_policy) {
    // A different policy of equal cost is a tie, not a mismatch.
    const auto ref = solve_on_tree(model, tree, {}, reference);
    policy_ok = ref.value && *ref.value == *r.value;
    tie = policy_ok ? " (tie with [14,21,23,20,18])" : " (reference policy costs " +
                                                          (ref.value ? to_fixed(*ref.value, 2) : std::string("n/a")) + ")";
  }
  const bool value_ok = r.proven && *r.value == Rational(43970, 100);
  return {value_ok && policy_ok, "objective " + to_fixed(*r.value, 2) + ", proven=" + (r.proven ? "yes" : "no") +
                                     ", order-up-to [" + policy + "]" + tie + ", " + fmt_seconds(t)};
}

// 3. Mean/absolute-deviation objective.
Verdict production_mv() {
  const auto model = load_bundled("production_mv");
  SolveLimits limits;
  limits.max_seconds = 120;
  const auto start = std::chrono::steady_clock::now();
  const auto r = stochastic_solution(model, build_tree(model), limits);
  const double t = seconds_since(start);
  if (!r.value) return {false, "no incumbent within the time limit, status " + to_string(r.status)};
  const std::string shown = to_fixed(*r.value, 2);
  return {r.proven && shown == "353.06", std::string(r.proven ? "proven optimum " : "best incumbent ") + shown +
                                             " (target 353.06), nodes " + std::to_string(r.stats.nodes) + ", " +
                                             fmt_seconds(t)};
}

/// Portfolio optimum times 8, by enumerating every node decision. Returns in
/// hundredths: stock 25 or 6, bond 14 or 12 per market outcome.
std::optional<std::int64_t> portfolio_oracle() {
  constexpr std::int64_t stock[2] = {125, 106};
  constexpr std::int64_t bond[2] = {114, 112};
  // best[t][w]: optimal value from stage t with wealth w, scaled by 2^(4-t).
  std::vector<std::vector<std::optional<std::int64_t>>> best(5, std::vector<std::optional<std::int64_t>>(201));
  for (std::int64_t w = 100; w <= 200; ++w) {
    const std::int64_t excess = w - 150;
    if (excess > 50 || excess < -50) continue;
    best[4][static_cast<std::size_t>(w)] = excess >= 0 ? excess : 4 * excess;
  }
  for (int t = 3; t >= 1; --t) {
    for (std::int64_t w = 100; w <= 200; ++w) {
      if (t == 1 && w != 100) continue;
      std::optional<std::int64_t> top;
      for (std::int64_t s = 0; s <= w; ++s) {
        std::int64_t total = 0;
        bool ok = true;
        for (int k = 0; k < 2 && ok; ++k) {
          const std::int64_t cap = s * stock[k] + (w - s) * bond[k];
          std::optional<std::int64_t> branch;
          for (std::int64_t next = 100; next <= 200 && next * 100 <= cap; ++next) {
            const auto v = best[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(next)];
            if (v && (!branch || *v > *branch)) branch = v;
          }
          ok = branch.has_value();
          if (ok) total += *branch;
        }
        if (ok && (!top || total > *top)) top = total;
      }
      best[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)] = top;
    }
  }
  return best[1][100];
}

// 4. Portfolio against the enumeration oracle.
Verdict portfolio() {
  const auto oracle = portfolio_oracle();
  if (!oracle) return {false, "oracle found no solution"};
  const Rational expected(*oracle, 8);
  const auto model = load_bundled("portfolio");
  const auto start = std::chrono::steady_clock::now();
  const auto r = stochastic_solution(model, build_tree(model));
  const double t = seconds_since(start);
  if (!r.value) return {false, "no solution"};
  return {r.proven && *r.value == expected && t <= 60.0,
          "solver " + to_exact_string(*r.value) + ", oracle " + to_exact_string(expected) + ", " + fmt_seconds(t)};
}

std::string random_comparison(std::mt19937_64& rng) {
  const char* ops[] = {">=", "<=", "=", "!="};
  auto coef = [&] { return std::to_string(1 + static_cast<int>(rng() % 3)); };
  std::string lhs = coef() + "*x";
  lhs += (rng() % 2 ? " + " : " - ") + coef() + "*y";
  if (rng() % 2) lhs += (rng() % 2 ? " + " : " - ") + coef() + "*z";
  lhs += (rng() % 2 ? " + " : " - ") + std::string("d[1]");
  return lhs + " " + ops[rng() % 4] + " " + std::to_string(static_cast<int>(rng() % 7) - 3);
}

// 5. Chance constraints at threshold 1 against hard constraints.
Verdict chance_equivalence() {
  std::mt19937_64 rng(501);
  int identical = 0;
  int nonempty = 0;
  constexpr int kModels = 100;
  for (int trial = 0; trial < kModels; ++trial) {
    const std::size_t outcomes = 1 + rng() % 3;
    const auto values = testsupport::distinct_values(rng, outcomes, -3, 3);
    std::string decls = "range S [1..1];\nstoch int d[S] = [<" + testsupport::weighted_group(rng, values) + ">];\n";
    decls += "robust int x in 0.." + std::to_string(1 + rng() % 3) + ";\n";
    decls += "var int y in " + std::to_string(-static_cast<int>(rng() % 2)) + "..2;\n";
    decls += "robust int z in 0..2;\n";
    const std::string body = random_comparison(rng);
    const std::string extra = rng() % 2 ? "  x + z <= 3;\n" : "  z >= 0;\n";
    const auto chance = load_text(decls + "subject to {\n  prob(" + body + ") >= 1;\n" + extra + "};\n");
    const auto hard = load_text(decls + "subject to {\n  " + body + ";\n" + extra + "};\n");
    const auto a = testsupport::solution_set(compile(chance, build_tree(chance)).flat);
    const auto b = testsupport::solution_set(compile(hard, build_tree(hard)).flat);
    identical += a == b;
    nonempty += !a.empty();
  }
  return {identical == kModels, std::to_string(identical) + "/" + std::to_string(kModels) +
                                    " solution sets identical (" + std::to_string(nonempty) + " non-empty)"};
}

// 6. Reduction invariants on random trees.
Verdict reduction_properties() {
  std::mt19937_64 rng(601);
  constexpr int kTrees = 1000;
  int mass_ok = 0;
  int dgr_checked = 0;
  int dgr_ok = 0;
  int lhs_runs = 0;
  int lhs_ok = 0;
  for (int trial = 0; trial < kTrees; ++trial) {
    const auto tree = testsupport::random_tree(rng);
    const std::size_t n = tree.leaf_count();
    const std::size_t k = 1 + rng() % n;
    bool mass = true;
    for (const auto& r : {reduce_expected(tree), reduce_top_k(tree, k), reduce_sample_mc(tree, k, trial),
                          reduce_lhs(tree, k, trial), reduce_dgr(tree, k)}) {
      double total = 0;
      for (const auto& p : r.probabilities) total += to_double(p);
      mass = mass && std::abs(total - 1.0) <= 1e-9 && check_tree(r.tree).empty();
    }
    mass_ok += mass;
    if (n >= 2 && n <= 12) {
      std::vector<DgrStep> steps;
      reduce_dgr(tree, n - 1, &steps);
      ++dgr_checked;
      dgr_ok += steps.size() == 1 && steps[0].deleted == testsupport::brute_force_victim(tree);
    }
    LhsDrawLog log;
    reduce_lhs(tree, k, trial + 7, &log);
    ++lhs_runs;
    bool strata = true;
    for (const auto& cells : log.cells) strata = strata && std::set<std::size_t>(cells.begin(), cells.end()).size() == k;
    lhs_ok += strata;
  }
  return {mass_ok == kTrees && dgr_ok == dgr_checked && lhs_ok == lhs_runs,
          "mass " + std::to_string(mass_ok) + "/" + std::to_string(kTrees) + ", DGR step " + std::to_string(dgr_ok) +
              "/" + std::to_string(dgr_checked) + ", LHS strata " + std::to_string(lhs_ok) + "/" +
              std::to_string(lhs_runs)};
}

/// Two first-stage choices and per-scenario recourse that is feasible for any choice.
std::string random_recourse_model(std::mt19937_64& rng) {
  const std::size_t outcomes = 2 + rng() % 3;
  const auto values = testsupport::distinct_values(rng, outcomes, 0, 5);
  auto c = [&] { return std::to_string(static_cast<int>(rng() % 9) - 4); };
  std::string text = "range S [1..1];\nstoch int d[S] = [<" + testsupport::weighted_group(rng, values) + ">];\n";
  text += "robust int x1 in 0..3;\nrobust int x2 in 0..3;\nvar int y1 in 0..6;\nvar int y2 in 0..6;\n";
  text += rng() % 2 ? "maximize" : "minimize";
  text += " expected(" + c() + "*x1 + " + c() + "*x2 + " + c() + "*y1 + " + c() + "*y2 + " + c() +
          "*min(y1, d[1]) + " + c() + "*max(0, y2 - d[1]))\n";
  text += "subject to {\n  x1 + x2 <= 4;\n  y1 <= x1 + d[1];\n  y2 <= 2*x2;\n  y1 + y2 <= d[1] + 3;\n};\n";
  return text;
}

// 7. Information statistics.
Verdict information_statistics() {
  std::mt19937_64 rng(701);
  constexpr int kInstances = 100;
  int ordered = 0;
  int proven = 0;
  int positive_vss = 0;
  int positive_evpi = 0;
  for (int trial = 0; trial < kInstances; ++trial) {
    const auto model = load_text(random_recourse_model(rng));
    const auto st = evpi_vss(model, build_tree(model));
    if (!(st.ss.proven && st.wss.proven && st.evs.proven && st.evpi && st.vss)) continue;
    ++proven;
    const Rational sign = st.direction == Objective::Direction::Maximize ? 1 : -1;
    const Rational ss = sign * *st.ss.value;
    const Rational wss = sign * *st.wss.value;
    const Rational evs = sign * *st.evs.value;
    ordered += evs <= ss && ss <= wss && *st.evpi >= 0 && *st.vss >= 0;
    positive_vss += *st.vss > 0;
    positive_evpi += *st.evpi > 0;
  }
  const auto toy = load_bundled("payoff");
  const auto toy_stats = evpi_vss(toy, build_tree(toy));
  const bool toy_ok = toy_stats.evpi && *toy_stats.evpi == 1;
  return {proven == kInstances && ordered == kInstances && toy_ok,
          "EVS<=SS<=WSS " + std::to_string(ordered) + "/" + std::to_string(kInstances) + " (proven " +
              std::to_string(proven) + ", VSS>0 in " + std::to_string(positive_vss) + ", EVPI>0 in " +
              std::to_string(positive_evpi) + "), payoff toy EVPI " +
              (toy_stats.evpi ? to_exact_string(*toy_stats.evpi) : std::string("n/a"))};
}

// 8. Reduction error curve on the production model.
Verdict error_curve() {
  const auto model = load_bundled("production");
  const auto tree = build_tree(model);
  const std::vector<double> fractions{0.01, 0.05, 0.1, 0.25, 1.0};
  const std::vector<ReductionSpec::Kind> methods{ReductionSpec::Kind::Top, ReductionSpec::Kind::Sample,
                                                 ReductionSpec::Kind::Lhs, ReductionSpec::Kind::Dgr};
  const auto start = std::chrono::steady_clock::now();
  const auto curve = reduction_error_curve(model, tree, methods, fractions, kDefaultSeed);
  const double t = seconds_since(start);
  bool full_zero = true;
  int infeasible = 0;
  bool flags_ok = true;
  std::optional<Rational> previous_top;
  std::vector<std::string> notes;
  for (const auto& p : curve.points) {
    std::ostringstream at;
    at << method_name(p.method) << "@" << p.fraction;
    const std::string where = at.str();
    flags_ok = flags_ok && (p.feasible == p.error.has_value()) && (!p.error || (*p.error >= 0 && *p.error <= 1));
    if (!p.feasible) {
      ++infeasible;
      notes.push_back(where + " infeasible [" + decisions_text(p.decisions) + "]");
    }
    if (p.fraction == 1.0) full_zero = full_zero && p.error && *p.error == 0;
    if (p.method == ReductionSpec::Kind::Top && p.error) {
      if (previous_top && *p.error > *previous_top) {
        notes.push_back("top-k error rises to " + to_fixed(*p.error, 4) + " at " + where + " [" +
                        decisions_text(p.decisions) + "]");
      }
      previous_top = p.error;
    }
  }
  std::ostringstream detail;
  detail << "fraction 1.0 error 0 for all methods: " << (full_zero ? "yes" : "no") << ", " << curve.points.size()
         << " points, " << infeasible << " infeasible, " << fmt_seconds(t);
  for (const auto& p : curve.points) {
    detail << "\n      " << method_name(p.method) << " " << p.fraction << " kept=" << p.kept
           << " error=" << (p.error ? to_fixed(*p.error, 4) : std::string("infeasible"));
  }
  for (const auto& n : notes) detail << "\n      note: " << n;
  return {full_zero && flags_ok, detail.str()};
}

// 9. Byte-identical records output.
Verdict determinism() {
  const auto files = [](const std::string& name) {
    return std::vector<std::string>{testsupport::model_path(name + ".sopl"), testsupport::model_path(name + ".sdat")};
  };
  std::vector<std::vector<std::string>> commands;
  auto add = [&](const std::string& cmd, const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{cmd};
    for (const auto& f : files(name)) args.push_back(f);
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--format");
    args.push_back("records");
    commands.push_back(args);
  };
  add("solve", "portfolio", {});
  add("compile", "template_service", {});
  add("reduce", "production", {"--scenario", "lhs 100", "--seed", "11"});
  add("reduce", "production", {"--scenario", "sample 50", "--seed", "11"});
  add("analyze", "template", {"--curve", "top,sample,lhs,dgr", "--fractions", "0.34,0.67,1"});
  int identical = 0;
  int total = 0;
  for (const auto& args : commands) {
    std::string first;
    for (int trial = 0; trial < 20; ++trial) {
      std::ostringstream out;
      std::ostringstream err;
      run_cli(args, out, err);
      if (trial == 0) first = out.str();
      ++total;
      identical += out.str() == first && !first.empty();
    }
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) + " runs byte-identical over " +
                                  std::to_string(commands.size()) + " commands"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"production expected cost 351.61", production_expected},
      {"static order-up-to policy 439.70", production_robust},
      {"mean/deviation production 353.06", production_mv},
      {"portfolio matches enumeration oracle", portfolio},
      {"chance threshold 1 equals hard constraints", chance_equivalence},
      {"reduction properties", reduction_properties},
      {"information statistics", information_statistics},
      {"production error curve", error_curve},
      {"records determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
