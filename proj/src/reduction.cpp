#include "stochcp/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace stochcp {

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t x = next();
  while (x < threshold) x = next();
  return x % n;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
  return p;
}

namespace {

Rational leaf_prob(const ScenarioTree& tree, std::size_t leaf) { return tree.node(tree.leaf_node(leaf)).node_prob; }

ReducedScenarioSet finish(const ScenarioTree& tree, std::map<std::size_t, Rational> kept) {
  ReducedScenarioSet out;
  std::vector<std::pair<std::size_t, Rational>> survivors;
  for (auto& [leaf, p] : kept) {
    out.survivors.push_back(leaf);
    out.probabilities.push_back(p);
    survivors.emplace_back(leaf, p);
  }
  out.tree = tree.restrict_to(survivors);
  return out;
}

ReducedScenarioSet from_counts(const ScenarioTree& tree, const std::vector<std::size_t>& picks) {
  std::map<std::size_t, Rational> kept;
  for (auto leaf : picks) kept[leaf] += 1;
  for (auto& [leaf, p] : kept) p /= static_cast<long long>(picks.size());
  return finish(tree, std::move(kept));
}

void require_count(std::size_t count, std::size_t lo, std::size_t hi, const char* what) {
  if (count < lo || count > hi) {
    throw ModelError("bad-reduction", std::string(what) + " count " + std::to_string(count) + " outside " +
                                          std::to_string(lo) + ".." + std::to_string(hi));
  }
}

/// Index of the first cumulative weight strictly above u.
std::size_t inverse_cdf(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) {
    // Rounding slack at the top end: last cell with positive mass.
    std::size_t k = cum.size() - 1;
    while (k > 0 && cum[k - 1] == cum[k]) --k;
    return k;
  }
  return static_cast<std::size_t>(it - cum.begin());
}

}  // namespace

std::vector<Rational> parameter_vector(const ScenarioTree& tree, std::size_t leaf) {
  std::vector<Rational> out;
  for (int s = 2; s <= tree.stages() + 1; ++s) {
    const auto& n = tree.node(tree.node_at(s, leaf));
    out.insert(out.end(), n.values.begin(), n.values.end());
  }
  return out;
}

std::vector<std::vector<double>> scenario_distances(const ScenarioTree& tree) {
  const std::size_t n = tree.leaf_count();
  std::vector<std::vector<double>> coords;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> c;
    for (const auto& v : parameter_vector(tree, s)) c.push_back(to_double(v));
    coords.push_back(std::move(c));
  }
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double sum = 0;
      for (std::size_t k = 0; k < coords[a].size(); ++k) sum += (coords[a][k] - coords[b][k]) * (coords[a][k] - coords[b][k]);
      d[a][b] = d[b][a] = std::sqrt(sum);
    }
  }
  return d;
}

ReducedScenarioSet reduce_expected(const ScenarioTree& tree) {
  ReducedScenarioSet out;
  out.probabilities.push_back(1);
  out.tree = expected_value_tree(tree);
  return out;
}

ReducedScenarioSet reduce_top_k(const ScenarioTree& tree, std::size_t k) {
  const std::size_t n = tree.leaf_count();
  require_count(k, 1, n, "top");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Rational> probs;
  for (std::size_t s = 0; s < n; ++s) probs.push_back(leaf_prob(tree, s));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  Rational total = 0;
  for (std::size_t i = 0; i < k; ++i) total += probs[order[i]];
  std::map<std::size_t, Rational> kept;
  for (std::size_t i = 0; i < k; ++i) kept[order[i]] = probs[order[i]] / total;
  return finish(tree, std::move(kept));
}

ReducedScenarioSet reduce_sample_mc(const ScenarioTree& tree, std::size_t k, std::uint64_t seed) {
  require_count(k, 1, static_cast<std::size_t>(-1), "sample");
  std::vector<double> cum;
  double acc = 0;
  for (std::size_t s = 0; s < tree.leaf_count(); ++s) {
    acc += to_double(leaf_prob(tree, s));
    cum.push_back(acc);
  }
  Rng rng(seed);
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < k; ++i) picks.push_back(inverse_cdf(cum, rng.uniform() * acc));
  return from_counts(tree, picks);
}

ReducedScenarioSet reduce_lhs(const ScenarioTree& tree, std::size_t n, std::uint64_t seed, LhsDrawLog* log) {
  require_count(n, 1, static_cast<std::size_t>(-1), "lhs");
  const std::size_t leaves = tree.leaf_count();
  std::vector<std::vector<double>> leaf_coords;
  for (std::size_t s = 0; s < leaves; ++s) {
    std::vector<double> c;
    for (const auto& v : parameter_vector(tree, s)) c.push_back(to_double(v));
    leaf_coords.push_back(std::move(c));
  }
  const std::size_t dims = leaves ? leaf_coords[0].size() : 0;
  Rng rng(seed);
  std::vector<std::vector<double>> raw(n, std::vector<double>(dims, 0.0));
  if (log) log->cells.assign(dims, {});
  for (std::size_t i = 0; i < dims; ++i) {
    // Marginal distribution of coordinate i.
    std::map<Rational, Rational> marginal;
    for (std::size_t s = 0; s < leaves; ++s) {
      const int stage = static_cast<int>(i / tree.var_count()) + 2;
      const auto& node = tree.node(tree.node_at(stage, s));
      marginal[node.values[i % tree.var_count()]] += leaf_prob(tree, s);
    }
    std::vector<double> values;
    std::vector<double> cum;
    double acc = 0;
    for (const auto& [v, p] : marginal) {
      values.push_back(to_double(v));
      acc += to_double(p);
      cum.push_back(acc);
    }
    const auto perm = rng.permutation(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = rng.uniform();
      const double u = (static_cast<double>(perm[j]) + r) / static_cast<double>(n) * acc;
      raw[j][i] = values[inverse_cdf(cum, u)];
      if (log) log->cells[i].push_back(perm[j]);
    }
  }
  std::vector<std::size_t> picks;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t s = 0; s < leaves; ++s) {
      double d = 0;
      for (std::size_t i = 0; i < dims; ++i) d += (raw[j][i] - leaf_coords[s][i]) * (raw[j][i] - leaf_coords[s][i]);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    picks.push_back(best);
  }
  return from_counts(tree, picks);
}

ReducedScenarioSet reduce_dgr(const ScenarioTree& tree, std::size_t n, std::vector<DgrStep>* steps) {
  const std::size_t count = tree.leaf_count();
  require_count(n, 1, count, "DGR");
  // Exact arithmetic: coordinates and probabilities on common integer grids.
  std::vector<std::vector<Rational>> params;
  BigInt den = 1;
  BigInt pden = 1;
  for (std::size_t s = 0; s < count; ++s) {
    params.push_back(parameter_vector(tree, s));
    for (const auto& v : params.back()) den = lcm(den, denominator_of(v));
    pden = lcm(pden, denominator_of(leaf_prob(tree, s)));
  }
  std::vector<std::vector<BigInt>> coords;
  for (const auto& p : params) {
    std::vector<BigInt> c;
    for (const auto& v : p) c.push_back(numerator_of(v * Rational(den)));
    coords.push_back(std::move(c));
  }
  std::vector<BigInt> weight;
  for (std::size_t s = 0; s < count; ++s) weight.push_back(numerator_of(leaf_prob(tree, s) * Rational(pden)));
  std::vector<std::vector<BigInt>> dist2(count, std::vector<BigInt>(count));
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      BigInt sum = 0;
      for (std::size_t k = 0; k < coords[a].size(); ++k) {
        const BigInt d = coords[a][k] - coords[b][k];
        sum += d * d;
      }
      dist2[a][b] = dist2[b][a] = sum;
    }
  }
  std::vector<char> alive(count, 1);
  std::vector<std::size_t> nearest(count, 0);
  auto find_nearest = [&](std::size_t s) {
    std::size_t best = count;
    for (std::size_t t = 0; t < count; ++t) {
      if (t == s || !alive[t]) continue;
      if (best == count || dist2[s][t] < dist2[s][best]) best = t;
    }
    return best;
  };
  if (count > 1) {
    for (std::size_t s = 0; s < count; ++s) nearest[s] = find_nearest(s);
  }
  for (std::size_t remaining = count; remaining > n; --remaining) {
    std::size_t victim = count;
    BigInt victim_score;
    for (std::size_t s = 0; s < count; ++s) {
      if (!alive[s]) continue;
      // pi * d compared through its square: pi^2 * d^2.
      const BigInt score = weight[s] * weight[s] * dist2[s][nearest[s]];
      if (victim == count || score < victim_score) {
        victim = s;
        victim_score = score;
      }
    }
    const std::size_t absorber = nearest[victim];
    alive[victim] = 0;
    weight[absorber] += weight[victim];
    if (steps) steps->push_back({victim, absorber});
    for (std::size_t s = 0; s < count; ++s) {
      if (alive[s] && nearest[s] == victim) nearest[s] = find_nearest(s);
    }
  }
  std::map<std::size_t, Rational> kept;
  for (std::size_t s = 0; s < count; ++s) {
    if (alive[s]) kept[s] = Rational(weight[s]) / Rational(pden);
  }
  return finish(tree, std::move(kept));
}

ReducedScenarioSet reduce(const ScenarioTree& tree, const ReductionSpec& spec) {
  if (spec.kind == ReductionSpec::Kind::Expected) return reduce_expected(tree);
  if (!spec.count) throw ModelError("bad-reduction", "reduction '" + spec.describe() + "' needs a count");
  switch (spec.kind) {
    case ReductionSpec::Kind::Top: return reduce_top_k(tree, *spec.count);
    case ReductionSpec::Kind::Sample: return reduce_sample_mc(tree, *spec.count, spec.seed);
    case ReductionSpec::Kind::Lhs: return reduce_lhs(tree, *spec.count, spec.seed);
    case ReductionSpec::Kind::Dgr: return reduce_dgr(tree, *spec.count);
    case ReductionSpec::Kind::Expected: break;
  }
  return reduce_expected(tree);
}

}  // namespace stochcp
