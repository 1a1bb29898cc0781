#pragma once

#include "stochcp/analysis.hpp"
#include "stochcp/compiler.hpp"
#include "stochcp/dsl.hpp"
#include "stochcp/reduction.hpp"
#include "stochcp/scenario_tree.hpp"
#include "stochcp/solver.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string model_path(const std::string& file) { return std::string(STOCHCP_MODELS_DIR) + "/" + file; }

inline stochcp::StochasticModel load_text(const std::string& model, const std::string& data = "") {
  auto r = stochcp::load_model(model, data);
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += d.format("<test>") + "\n";
    throw std::runtime_error("model does not load:\n" + msg + model);
  }
  return *r.value;
}

inline stochcp::StochasticModel load_bundled(const std::string& name) {
  return load_text(read_file(model_path(name + ".sopl")), read_file(model_path(name + ".sdat")));
}

/// Probabilities as small integer weights over a common denominator.
inline std::vector<int> random_weights(std::mt19937_64& rng, std::size_t n) {
  std::vector<int> w(n);
  for (auto& x : w) x = static_cast<int>(rng() % 4) + 1;
  return w;
}

inline std::string weighted_group(std::mt19937_64& rng, const std::vector<int>& values) {
  const auto w = random_weights(rng, values.size());
  int total = 0;
  for (int x : w) total += x;
  // Probabilities on a 1/1000 grid; the last entry takes the remainder.
  std::string out;
  int used = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const int milli = k + 1 == values.size() ? 1000 - used : w[k] * 1000 / total;
    used += milli;
    if (!out.empty()) out += ", ";
    out += std::to_string(values[k]) + "(" + std::to_string(milli / 1000) + "." +
           std::string(milli % 1000 < 100 ? (milli % 1000 < 10 ? "00" : "0") : "") + std::to_string(milli % 1000) + ")";
  }
  return out;
}

inline std::vector<int> distinct_values(std::mt19937_64& rng, std::size_t n, int lo, int hi) {
  std::vector<int> out;
  while (out.size() < n) {
    const int v = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

/// A random stochastic layer: `stages` stages, one or two stochastic variables,
/// independent distributions or (single variable) a conditional one. Returns declarations only.
inline std::string random_stoch_decls(std::mt19937_64& rng, int stages, int max_branch) {
  std::string out = "range Stage [1.." + std::to_string(stages) + "];\n";
  const int vars = 1 + static_cast<int>(rng() % 2);
  for (int v = 0; v < vars; ++v) {
    out += "stoch int s" + std::to_string(v) + "[Stage] = [";
    const bool conditional = vars == 1 && rng() % 2 == 0;
    if (!conditional) {
      for (int t = 0; t < stages; ++t) {
        if (t) out += ", ";
        const auto n = static_cast<std::size_t>(1 + rng() % static_cast<std::uint64_t>(max_branch));
        out += "<" + weighted_group(rng, distinct_values(rng, n, -9, 9)) + ">";
      }
    } else {
      std::size_t groups = 1;
      for (int t = 0; t < stages; ++t) {
        std::size_t next_groups = 0;
        for (std::size_t g = 0; g < groups; ++g) {
          const auto n = static_cast<std::size_t>(1 + rng() % static_cast<std::uint64_t>(max_branch));
          if (t || g) out += ", ";
          out += weighted_group(rng, distinct_values(rng, n, -9, 9));
          next_groups += n;
        }
        groups = next_groups;
      }
    }
    out += "];\n";
  }
  return out;
}

/// A random tree through the front end.
inline stochcp::ScenarioTree random_tree(std::mt19937_64& rng, int max_stages = 3, int max_branch = 3) {
  const int stages = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_stages));
  const std::string text = random_stoch_decls(rng, stages, max_branch) + "var int x in 0..1;\nsubject to { x >= 0; };\n";
  return stochcp::build_tree(load_text(text));
}

using Projection = std::map<std::string, std::int64_t>;

/// Every feasible assignment of the non-auxiliary flat variables, found by
/// enumerating them and checking the completed assignment constraint by constraint.
/// Auxiliary values come from propagation, or from a solve when propagation
/// leaves some open.
inline std::set<Projection> solution_set(const stochcp::DeterministicModel& m) {
  std::vector<int> free;
  for (std::size_t v = 0; v < m.vars.size(); ++v) {
    if (!m.vars[v].aux) free.push_back(static_cast<int>(v));
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> doms;
  for (const auto& v : m.vars) doms.emplace_back(v.lo, v.hi);
  std::set<Projection> out;
  std::vector<std::int64_t> point;
  for (int v : free) point.push_back(m.vars[static_cast<std::size_t>(v)].lo);
  while (true) {
    auto d = doms;
    for (std::size_t k = 0; k < free.size(); ++k) d[static_cast<std::size_t>(free[k])] = {point[k], point[k]};
    std::optional<std::vector<std::int64_t>> values;
    if (const auto fix = stochcp::propagate(m, &d)) {
      bool closed = true;
      std::vector<std::int64_t> vals;
      for (const auto& [lo, hi] : *fix) {
        closed = closed && lo == hi;
        vals.push_back(lo);
      }
      if (closed) {
        values = vals;
      } else {
        auto copy = m;
        copy.direction = stochcp::Objective::Direction::Satisfy;
        for (std::size_t v = 0; v < copy.vars.size(); ++v) {
          copy.vars[v].lo = (*fix)[v].first;
          copy.vars[v].hi = (*fix)[v].second;
        }
        values = stochcp::solve(copy).assignment;
      }
    }
    if (values && stochcp::evaluate(m, *values).feasible()) {
      Projection p;
      for (int v : free) p[m.vars[static_cast<std::size_t>(v)].name] = (*values)[static_cast<std::size_t>(v)];
      out.insert(std::move(p));
    }
    std::size_t k = 0;
    for (; k < free.size(); ++k) {
      if (point[k] < m.vars[static_cast<std::size_t>(free[k])].hi) {
        ++point[k];
        break;
      }
      point[k] = m.vars[static_cast<std::size_t>(free[k])].lo;
    }
    if (k == free.size()) break;
  }
  return out;
}

/// Size of the enumeration solution_set would perform.
inline double search_space(const stochcp::DeterministicModel& m) {
  double size = 1;
  for (const auto& v : m.vars) {
    if (!v.aux) size *= static_cast<double>(v.hi - v.lo + 1);
  }
  return size;
}

/// Leaf with the smallest probability times nearest-neighbour distance, exact,
/// by direct enumeration of every pair.
inline std::size_t brute_force_victim(const stochcp::ScenarioTree& tree) {
  const std::size_t n = tree.leaf_count();
  std::size_t victim = n;
  stochcp::Rational best;
  for (std::size_t s = 0; s < n; ++s) {
    const auto ps = stochcp::parameter_vector(tree, s);
    std::optional<stochcp::Rational> nearest;
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s) continue;
      const auto pt = stochcp::parameter_vector(tree, t);
      stochcp::Rational d2 = 0;
      for (std::size_t k = 0; k < ps.size(); ++k) d2 += (ps[k] - pt[k]) * (ps[k] - pt[k]);
      if (!nearest || d2 < *nearest) nearest = d2;
    }
    const stochcp::Rational p = tree.node(tree.leaf_node(s)).node_prob;
    const stochcp::Rational score = p * p * *nearest;
    if (victim == n || score < best) {
      victim = s;
      best = score;
    }
  }
  return victim;
}

}  // namespace testsupport
