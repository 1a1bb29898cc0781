#include "stochcp/cli.hpp"

#include "stochcp/analysis.hpp"
#include "stochcp/dsl.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace stochcp {

namespace {

struct RunConfig {
  std::string command;
  std::string model_path;
  std::string data_path;
  std::string scenario;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::uint64_t> max_nodes;
  std::optional<double> max_seconds;
  std::int64_t maxint = 1'000'000;
  std::string format = "text";
  std::string output;
  std::string curve;
  std::string fractions = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  bool skip_stats = false;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_nodes(const std::vector<int>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string method_name(ReductionSpec::Kind k) {
  switch (k) {
    case ReductionSpec::Kind::Expected: return "expected";
    case ReductionSpec::Kind::Top: return "top";
    case ReductionSpec::Kind::Sample: return "sample";
    case ReductionSpec::Kind::Lhs: return "lhs";
    case ReductionSpec::Kind::Dgr: return "dgr";
  }
  return "?";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out, std::ostream& err) : cfg_(std::move(cfg)), out_(out), err_(err) {}

  int run() {
    start_ = std::chrono::steady_clock::now();
    records_ = cfg_.format == "records";
    if (!load()) return kExitInputError;
    if (cfg_.command == "compile") return cmd_compile();
    if (cfg_.command == "solve") return cmd_solve();
    if (cfg_.command == "reduce") return cmd_reduce();
    return cmd_analyze();
  }

 private:
  bool load() {
    const std::string model_text = slurp(cfg_.model_path);
    const std::string data_text = slurp(cfg_.data_path);
    BindOptions opts;
    opts.maxint = cfg_.maxint;
    auto loaded = load_model(model_text, data_text, opts);
    for (const auto& d : loaded.diagnostics) err_ << d.format(cfg_.model_path) << "\n";
    if (!loaded.ok()) return false;
    model_ = std::move(*loaded.value);
    full_ = build_tree(model_);
    if (!cfg_.scenario.empty()) {
      spec_ = parse_reduction_spec(cfg_.scenario);
      if (!spec_) throw InputError("bad --scenario '" + cfg_.scenario + "'");
    } else if (model_.scenario_directive) {
      spec_ = model_.scenario_directive;
    }
    if (spec_) spec_->seed = cfg_.seed;
    tree_ = full_;
    if (spec_ && cfg_.command != "reduce") {
      reduced_ = reduce(full_, *spec_);
      tree_ = reduced_->tree;
    }
    return true;
  }

  SolveLimits limits() const {
    SolveLimits l;
    l.max_nodes = cfg_.max_nodes;
    l.max_seconds = cfg_.max_seconds;
    return l;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void header() {
    if (records_) {
      out_ << "record=run command=" << cfg_.command << " model=" << cfg_.model_path << " data=" << cfg_.data_path
           << " seed=" << cfg_.seed << "\n";
      out_ << "record=tree stages=" << full_.stages() << " scenarios=" << full_.leaf_count()
           << " nb_nodes=" << join_nodes(full_.nb_nodes(), ",") << "\n";
    } else {
      out_ << "command: " << cfg_.command << "\n";
      out_ << "model: " << cfg_.model_path << " / " << cfg_.data_path << "\n";
      out_ << "scenarios: " << full_.leaf_count() << " (stages " << full_.stages() << ", nodes per stage "
           << join_nodes(full_.nb_nodes(), " ") << ")\n";
    }
  }

  void reduction_report(const ReducedScenarioSet& r) {
    if (records_) {
      out_ << "record=reduction spec=" << std::quoted(spec_->describe()) << " kept=" << r.tree.leaf_count() << "\n";
      if (r.survivors.empty()) {
        out_ << "record=survivor index=expected probability=1\n";
      }
      for (std::size_t i = 0; i < r.survivors.size(); ++i) {
        out_ << "record=survivor index=" << r.survivors[i] + 1
             << " probability=" << to_exact_string(r.probabilities[i]) << "\n";
      }
    } else {
      out_ << "reduction: " << spec_->describe() << " -> " << r.tree.leaf_count() << " scenario(s)\n";
      if (r.survivors.empty()) out_ << "  expected-value scenario  p = 1\n";
      for (std::size_t i = 0; i < r.survivors.size(); ++i) {
        out_ << "  scenario " << r.survivors[i] + 1 << "  p = " << to_fixed(r.probabilities[i], 6) << "\n";
      }
    }
  }

  int cmd_compile() {
    const CompiledModel compiled = compile(model_, tree_);
    out_ << emit_flat(compiled);
    return kExitOk;
  }

  int cmd_solve() {
    header();
    if (reduced_) reduction_report(*reduced_);
    const CompiledModel compiled = compile(model_, tree_);
    const SolveResult r = solve(compiled.flat, limits());
    const auto& s = r.stats;
    if (records_) {
      out_ << "record=model vars=" << compiled.flat.vars.size() << " constraints=" << compiled.flat.constraints.size()
           << "\n";
      out_ << "record=result status=" << to_string(r.status) << " proven=" << bool_text(r.proven())
           << " limit_reached=" << bool_text(r.limit_reached);
      if (r.objective) {
        out_ << " objective=" << to_exact_string(*r.objective) << " objective_2dp=" << to_fixed(*r.objective, 2);
      }
      out_ << "\n";
      if (r.assignment) {
        for (const auto& c : compiled.first_stage) {
          out_ << "record=decision name=" << c.key << " value=" << (*r.assignment)[static_cast<std::size_t>(c.var)]
               << "\n";
        }
      }
      out_ << "record=stats nodes=" << s.nodes << " failures=" << s.failures << " choice_points=" << s.choice_points
           << " cache_hits=" << s.cache_hits << " cache_entries=" << s.cache_entries << "\n";
    } else {
      out_ << "flat model: " << compiled.flat.vars.size() << " variables, " << compiled.flat.constraints.size()
           << " constraints\n";
      out_ << "status: " << to_string(r.status) << (r.limit_reached ? " (limit reached)" : "") << "\n";
      if (r.objective) {
        out_ << "objective: " << to_fixed(*r.objective, 2) << " (" << to_exact_string(*r.objective) << ")\n";
      }
      if (r.assignment) {
        out_ << "first-period decisions:\n";
        for (const auto& c : compiled.first_stage) {
          out_ << "  " << c.key << " = " << (*r.assignment)[static_cast<std::size_t>(c.var)] << "\n";
        }
      }
      out_ << "stats: " << s.nodes << " nodes, " << s.failures << " failures, " << s.choice_points
           << " choice points, " << s.cache_hits << " cache hits\n";
      out_ << "time: " << std::fixed << std::setprecision(3) << elapsed() << " s\n";
    }
    return r.status == SolveStatus::Optimal || (r.status == SolveStatus::Satisfiable && !r.limit_reached)
               ? kExitOk
               : kExitNoSolution;
  }

  int cmd_reduce() {
    if (!spec_) throw InputError("reduce needs a scenario directive or --scenario");
    header();
    reduction_report(reduce(full_, *spec_));
    return kExitOk;
  }

  static std::string value_text(const SolvedValue& v) {
    if (!v.value) return to_string(v.status);
    return to_exact_string(*v.value);
  }

  int cmd_analyze() {
    header();
    if (reduced_) reduction_report(*reduced_);
    int code = kExitOk;
    if (!cfg_.skip_stats) {
      const InfoStats st = evpi_vss(model_, tree_, limits());
      auto opt = [](const std::optional<Rational>& r) { return r ? to_exact_string(*r) : std::string("n/a"); };
      if (records_) {
        out_ << "record=info ss=" << value_text(st.ss) << " wss=" << value_text(st.wss) << " evs=" << value_text(st.evs)
             << " evpi=" << opt(st.evpi) << " vss=" << opt(st.vss) << " proven="
             << bool_text(st.ss.proven && st.wss.proven && st.evs.proven) << "\n";
      } else {
        out_ << "SS:   " << value_text(st.ss) << "\n";
        out_ << "WSS:  " << value_text(st.wss) << "\n";
        out_ << "EVS:  " << value_text(st.evs) << (st.evs.value ? "" : " (fixing the expected-value decision)")
             << "\n";
        out_ << "EVPI: " << opt(st.evpi) << "\n";
        out_ << "VSS:  " << opt(st.vss) << "\n";
      }
      if (!st.ss.value || !st.ss.proven) code = kExitNoSolution;
    }
    if (!cfg_.curve.empty()) {
      std::vector<ReductionSpec::Kind> methods;
      for (const auto& m : split(cfg_.curve, ',')) {
        auto spec = parse_reduction_spec(m + " 1");
        if (!spec || spec->kind == ReductionSpec::Kind::Expected) throw InputError("bad curve method '" + m + "'");
        methods.push_back(spec->kind);
      }
      std::vector<double> fractions;
      for (const auto& f : split(cfg_.fractions, ',')) {
        double v = 0;
        try {
          v = std::stod(f);
        } catch (const std::exception&) {
          throw InputError("bad fraction '" + f + "'");
        }
        if (!(v > 0 && v <= 1)) throw InputError("fraction " + f + " outside (0,1]");
        fractions.push_back(v);
      }
      const ErrorCurve curve = reduction_error_curve(model_, tree_, methods, fractions, cfg_.seed, limits());
      if (records_) {
        out_ << "record=curve optimum=" << to_exact_string(curve.optimum)
             << " worst=" << (curve.worst ? to_exact_string(*curve.worst) : "n/a") << "\n";
      } else {
        out_ << "error curve (optimum " << to_fixed(curve.optimum, 2) << ", worst committed "
             << (curve.worst ? to_fixed(*curve.worst, 2) : "n/a") << "):\n";
        out_ << "  method  fraction  kept  feasible  committed  error\n";
      }
      for (const auto& p : curve.points) {
        std::ostringstream frac;
        frac << std::defaultfloat << p.fraction;
        if (records_) {
          out_ << "record=point method=" << method_name(p.method) << " fraction=" << frac.str() << " kept=" << p.kept
               << " feasible=" << bool_text(p.feasible)
               << " committed=" << (p.committed ? to_exact_string(*p.committed) : "n/a")
               << " error=" << (p.error ? to_fixed(*p.error, 6) : "n/a") << "\n";
        } else {
          out_ << "  " << std::left << std::setw(6) << method_name(p.method) << "  " << std::setw(8) << frac.str()
               << "  " << std::setw(4) << p.kept << "  " << std::setw(8) << (p.feasible ? "yes" : "NO") << "  "
               << std::setw(9) << (p.committed ? to_fixed(*p.committed, 2) : "-") << "  "
               << (p.error ? to_fixed(*p.error, 4) : "-") << std::right << "\n";
        }
      }
    }
    if (!records_) out_ << "time: " << std::fixed << std::setprecision(3) << elapsed() << " s\n";
    return code;
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  bool records_ = false;
  StochasticModel model_;
  ScenarioTree full_;
  ScenarioTree tree_;
  std::optional<ReductionSpec> spec_;
  std::optional<ReducedScenarioSet> reduced_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"stochcp: stochastic constraint models, scenario reduction and solving", "stochcp"};
  app.add_option("command", cfg.command, "solve | compile | reduce | analyze")
      ->required()
      ->check(CLI::IsMember({"solve", "compile", "reduce", "analyze"}));
  app.add_option("model", cfg.model_path, "model file (.sopl)")->required();
  app.add_option("data", cfg.data_path, "data file (.sdat)")->required();
  app.add_option("--scenario", cfg.scenario, "reduction override: expected | top k | sample k | lhs k | DGR k");
  app.add_option("--seed", cfg.seed, "seed for sample and lhs reductions")->capture_default_str();
  app.add_option("--max-nodes", cfg.max_nodes, "search node limit");
  app.add_option("--max-seconds", cfg.max_seconds, "wall time limit");
  app.add_option("--maxint", cfg.maxint, "value of maxint")->capture_default_str();
  app.add_option("--format", cfg.format, "text | records")->check(CLI::IsMember({"text", "records"}));
  app.add_option("--output,-o", cfg.output, "write the report here instead of stdout");
  app.add_option("--curve", cfg.curve, "analyze: error curve methods, e.g. top,lhs,dgr");
  app.add_option("--fractions", cfg.fractions, "analyze: comma-separated scenario fractions")->capture_default_str();
  app.add_flag("--skip-stats", cfg.skip_stats, "analyze: skip SS/WSS/EVS");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "usage: stochcp <solve|compile|reduce|analyze> model.sopl data.sdat [flags]\n";
    return kExitInputError;
  }

  std::ofstream file;
  if (!cfg.output.empty()) {
    file.open(cfg.output, std::ios::binary);
    if (!file) {
      err << "error: cannot write '" << cfg.output << "'\n";
      return kExitInputError;
    }
  }
  std::ostream& sink = cfg.output.empty() ? out : file;
  try {
    return Runner(cfg, sink, err).run();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ModelError& e) {
    err << cfg.model_path;
    if (e.span().line > 0) err << ":" << e.span().line << ":" << e.span().column;
    err << ": error: " << e.what() << " [" << e.code() << "]\n";
    return kExitInputError;
  } catch (const std::overflow_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace stochcp
