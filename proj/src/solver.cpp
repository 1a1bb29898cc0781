#include "stochcp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace stochcp {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Satisfiable: return "satisfiable";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::ResourceLimit: return "resource-limit";
  }
  return "?";
}

namespace {

using i128 = __int128;
constexpr i128 kInf = static_cast<i128>(1) << 120;
constexpr i128 kWideDomain = 8;
constexpr std::int64_t kUnfixed = std::numeric_limits<std::int64_t>::min();

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i128 ceil_div(i128 a, i128 b) { return -floor_div(-a, b); }

/// Domains with an undo trail and a constraint propagation queue.
class Store {
 public:
  using Domains = std::vector<std::pair<std::int64_t, std::int64_t>>;

  explicit Store(const DeterministicModel& m, const Domains* domains = nullptr)
      : m_(m), watch_(m.vars.size()), inq_(m.constraints.size(), 0) {
    lo_.reserve(m.vars.size());
    hi_.reserve(m.vars.size());
    for (std::size_t v = 0; v < m.vars.size(); ++v) {
      lo_.push_back(domains ? (*domains)[v].first : m.vars[v].lo);
      hi_.push_back(domains ? (*domains)[v].second : m.vars[v].hi);
    }
    for (std::size_t c = 0; c < m.constraints.size(); ++c) {
      auto scope = m.constraints[c].scope();
      std::sort(scope.begin(), scope.end());
      scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
      for (int v : scope) watch_[static_cast<std::size_t>(v)].push_back(static_cast<int>(c));
      scopes_.push_back(std::move(scope));
    }
  }

  std::int64_t lo(int v) const { return lo_[static_cast<std::size_t>(v)]; }
  std::int64_t hi(int v) const { return hi_[static_cast<std::size_t>(v)]; }
  bool fixed(int v) const { return lo(v) == hi(v); }
  bool empty_domain() const {
    for (std::size_t v = 0; v < lo_.size(); ++v) {
      if (lo_[v] > hi_[v]) return true;
    }
    return false;
  }
  const std::vector<int>& watchers(int v) const { return watch_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& scope(int c) const { return scopes_[static_cast<std::size_t>(c)]; }
  Domains domains() const {
    Domains out;
    for (std::size_t v = 0; v < lo_.size(); ++v) out.emplace_back(lo_[v], hi_[v]);
    return out;
  }

  bool set_lo(int v, i128 x) {
    const auto i = static_cast<std::size_t>(v);
    if (x <= lo_[i]) return true;
    if (x > hi_[i]) return false;
    trail_.push_back({v, lo_[i], hi_[i]});
    lo_[i] = static_cast<std::int64_t>(x);
    touch(v);
    return true;
  }
  bool set_hi(int v, i128 x) {
    const auto i = static_cast<std::size_t>(v);
    if (x >= hi_[i]) return true;
    if (x < lo_[i]) return false;
    trail_.push_back({v, lo_[i], hi_[i]});
    hi_[i] = static_cast<std::int64_t>(x);
    touch(v);
    return true;
  }
  bool fix(int v, i128 x) { return set_lo(v, x) && set_hi(v, x); }

  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      const auto& t = trail_.back();
      lo_[static_cast<std::size_t>(t.var)] = t.lo;
      hi_[static_cast<std::size_t>(t.var)] = t.hi;
      trail_.pop_back();
    }
  }

  void enqueue_all() {
    for (std::size_t c = 0; c < m_.constraints.size(); ++c) enqueue(static_cast<int>(c));
  }

  bool propagate() {
    while (head_ < queue_.size()) {
      const int c = queue_[head_++];
      inq_[static_cast<std::size_t>(c)] = 0;
      if (!prop(m_.constraints[static_cast<std::size_t>(c)])) {
        for (std::size_t k = head_; k < queue_.size(); ++k) inq_[static_cast<std::size_t>(queue_[k])] = 0;
        queue_.clear();
        head_ = 0;
        return false;
      }
    }
    queue_.clear();
    head_ = 0;
    return true;
  }

  /// Holds for every assignment inside the current domains.
  bool entailed(int ci) const {
    const auto& c = m_.constraints[static_cast<std::size_t>(ci)];
    switch (c.kind) {
      case FlatConstraint::Kind::Linear: return truth(c.terms, c.op, c.rhs) == 1;
      case FlatConstraint::Kind::Reified: {
        if (!fixed(c.z)) return false;
        const int t = truth(c.terms, c.op, c.rhs);
        return t >= 0 && t == lo(c.z);
      }
      default:
        for (int v : scope(ci)) {
          if (!fixed(v)) return false;
        }
        return true;
    }
  }

 private:
  struct TrailEntry {
    int var;
    std::int64_t lo;
    std::int64_t hi;
  };

  void enqueue(int c) {
    if (inq_[static_cast<std::size_t>(c)]) return;
    inq_[static_cast<std::size_t>(c)] = 1;
    queue_.push_back(c);
  }
  void touch(int v) {
    for (int c : watch_[static_cast<std::size_t>(v)]) enqueue(c);
  }

  std::pair<i128, i128> sum_bounds(const std::vector<LinTerm>& terms) const {
    i128 mn = 0;
    i128 mx = 0;
    for (const auto& t : terms) {
      const i128 a = static_cast<i128>(t.coef) * lo(t.var);
      const i128 b = static_cast<i128>(t.coef) * hi(t.var);
      mn += std::min(a, b);
      mx += std::max(a, b);
    }
    return {mn, mx};
  }

  /// 1 entailed, 0 disentailed, -1 open.
  int truth(const std::vector<LinTerm>& terms, CmpOp op, std::int64_t rhs) const {
    const auto [mn, mx] = sum_bounds(terms);
    switch (op) {
      case CmpOp::Le:
        if (mx <= rhs) return 1;
        if (mn > rhs) return 0;
        return -1;
      case CmpOp::Eq:
        if (mn == mx && mn == rhs) return 1;
        if (rhs < mn || rhs > mx) return 0;
        return -1;
      case CmpOp::Ne:
        if (rhs < mn || rhs > mx) return 1;
        if (mn == mx && mn == rhs) return 0;
        return -1;
      default: return -1;
    }
  }

  /// sum(sign * coef * x) <= rhs
  bool prop_le(const std::vector<LinTerm>& terms, int sign, i128 rhs) {
    i128 mn = 0;
    for (const auto& t : terms) {
      const i128 a = static_cast<i128>(sign) * t.coef;
      mn += a > 0 ? a * lo(t.var) : a * hi(t.var);
    }
    if (mn > rhs) return false;
    const i128 margin = rhs - mn;
    for (const auto& t : terms) {
      const i128 a = static_cast<i128>(sign) * t.coef;
      const i128 width = static_cast<i128>(hi(t.var)) - lo(t.var);
      if ((a > 0 ? a : -a) * width <= margin) continue;
      if (a > 0) {
        const i128 step = a == 1 ? margin : margin / a;
        if (!set_hi(t.var, lo(t.var) + step)) return false;
      } else {
        const i128 step = a == -1 ? margin : margin / -a;
        if (!set_lo(t.var, hi(t.var) - step)) return false;
      }
    }
    return true;
  }

  bool prop_ne(const std::vector<LinTerm>& terms, i128 rhs) {
    int open = -1;
    i128 rest = 0;
    for (const auto& t : terms) {
      if (t.coef == 0) continue;
      if (fixed(t.var)) {
        rest += static_cast<i128>(t.coef) * lo(t.var);
      } else if (open >= 0) {
        return true;
      } else {
        open = static_cast<int>(&t - terms.data());
      }
    }
    if (open < 0) return rest != rhs;
    const auto& t = terms[static_cast<std::size_t>(open)];
    const i128 target = rhs - rest;
    if (target % t.coef != 0) return true;
    const i128 v = target / t.coef;
    if (v == lo(t.var)) return set_lo(t.var, v + 1);
    if (v == hi(t.var)) return set_hi(t.var, v - 1);
    return true;
  }

  bool enforce(const std::vector<LinTerm>& terms, CmpOp op, std::int64_t rhs, bool positive) {
    switch (op) {
      case CmpOp::Le: return positive ? prop_le(terms, 1, rhs) : prop_le(terms, -1, -static_cast<i128>(rhs) - 1);
      case CmpOp::Eq:
        return positive ? prop_le(terms, 1, rhs) && prop_le(terms, -1, -static_cast<i128>(rhs)) : prop_ne(terms, rhs);
      case CmpOp::Ne:
        return positive ? prop_ne(terms, rhs) : prop_le(terms, 1, rhs) && prop_le(terms, -1, -static_cast<i128>(rhs));
      default: return false;
    }
  }

  bool prop_product(const FlatConstraint& c) {
    const int x = c.args[0];
    const int y = c.args[1];
    const int z = c.z;
    const i128 p[4] = {static_cast<i128>(lo(x)) * lo(y), static_cast<i128>(lo(x)) * hi(y),
                       static_cast<i128>(hi(x)) * lo(y), static_cast<i128>(hi(x)) * hi(y)};
    if (!set_lo(z, *std::min_element(p, p + 4)) || !set_hi(z, *std::max_element(p, p + 4))) return false;
    if (lo(z) > 0 || hi(z) < 0) {
      for (int v : {x, y}) {
        if (lo(v) == 0 && !set_lo(v, 1)) return false;
        if (hi(v) == 0 && !set_hi(v, -1)) return false;
      }
    }
    // Division-based back-propagation, only when the divisor excludes zero.
    for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
      if (lo(b) <= 0 && hi(b) >= 0) continue;
      const i128 zs[2] = {lo(z), hi(z)};
      const i128 bs[2] = {lo(b), hi(b)};
      i128 nlo = kInf;
      i128 nhi = -kInf;
      for (i128 zv : zs) {
        for (i128 bv : bs) {
          nlo = std::min(nlo, ceil_div(zv, bv));
          nhi = std::max(nhi, floor_div(zv, bv));
        }
      }
      if (!set_lo(a, nlo) || !set_hi(a, nhi)) return false;
    }
    return true;
  }

  bool prop_min(const FlatConstraint& c) {
    i128 mlo = kInf;
    i128 mhi = kInf;
    for (int a : c.args) {
      mlo = std::min<i128>(mlo, lo(a));
      mhi = std::min<i128>(mhi, hi(a));
    }
    if (!set_lo(c.z, mlo) || !set_hi(c.z, mhi)) return false;
    int candidate = -1;
    int count = 0;
    for (int a : c.args) {
      if (!set_lo(a, lo(c.z))) return false;
      if (lo(a) <= hi(c.z)) {
        candidate = a;
        ++count;
      }
    }
    if (count == 0) return false;
    if (count == 1) return set_hi(candidate, hi(c.z));
    return true;
  }

  bool prop_max(const FlatConstraint& c) {
    i128 mlo = -kInf;
    i128 mhi = -kInf;
    for (int a : c.args) {
      mlo = std::max<i128>(mlo, lo(a));
      mhi = std::max<i128>(mhi, hi(a));
    }
    if (!set_lo(c.z, mlo) || !set_hi(c.z, mhi)) return false;
    int candidate = -1;
    int count = 0;
    for (int a : c.args) {
      if (!set_hi(a, hi(c.z))) return false;
      if (hi(a) >= lo(c.z)) {
        candidate = a;
        ++count;
      }
    }
    if (count == 0) return false;
    if (count == 1) return set_lo(candidate, lo(c.z));
    return true;
  }

  bool prop(const FlatConstraint& c) {
    switch (c.kind) {
      case FlatConstraint::Kind::Linear: return enforce(c.terms, c.op, c.rhs, true);
      case FlatConstraint::Kind::Reified: {
        if (!set_lo(c.z, 0) || !set_hi(c.z, 1)) return false;
        const int t = truth(c.terms, c.op, c.rhs);
        if (t >= 0) return fix(c.z, t);
        if (fixed(c.z)) return enforce(c.terms, c.op, c.rhs, lo(c.z) == 1);
        return true;
      }
      case FlatConstraint::Kind::Product: return prop_product(c);
      case FlatConstraint::Kind::Min: return prop_min(c);
      case FlatConstraint::Kind::Max: return prop_max(c);
    }
    return false;
  }

  const DeterministicModel& m_;
  std::vector<std::int64_t> lo_;
  std::vector<std::int64_t> hi_;
  std::vector<std::vector<int>> watch_;
  std::vector<std::vector<int>> scopes_;
  std::vector<TrailEntry> trail_;
  std::vector<int> queue_;
  std::size_t head_ = 0;
  std::vector<char> inq_;
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ k.size();
    for (auto x : k) {
      std::uint64_t z = static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      h ^= z ^ (z >> 31);
    }
    return static_cast<std::size_t>(h);
  }
};

struct LimitReached {};

class Search {
 public:
  Search(const DeterministicModel& m, const SolveLimits& limits)
      : m_(m), limits_(limits), st_(m), coef_(m.vars.size(), 0), var_stamp_(m.vars.size(), 0),
        con_stamp_(m.constraints.size(), 0), parent_(m.vars.size(), 0) {
    start_ = std::chrono::steady_clock::now();
    BigInt den = 1;
    for (const auto& [v, c] : m.objective) den = lcm(den, denominator_of(c));
    const int sign = m.direction == Objective::Direction::Maximize ? -1 : 1;
    for (const auto& [v, c] : m.objective) {
      const BigInt n = numerator_of(c * Rational(den));
      if (boost::multiprecision::abs(n) > BigInt(std::numeric_limits<std::int64_t>::max())) {
        throw std::overflow_error("objective coefficient exceeds the 64-bit range after scaling");
      }
      coef_[static_cast<std::size_t>(v)] += static_cast<i128>(sign) * static_cast<std::int64_t>(n);
    }
  }

  SolveResult run() {
    SolveResult out;
    try {
      out = run_inner();
    } catch (const LimitReached&) {
      out.status = SolveStatus::ResourceLimit;
      if (incumbent_) {
        out.status = SolveStatus::Satisfiable;
        out.assignment = incumbent_;
        out.objective = objective_value(m_, *incumbent_);
        limit_hit_ = true;
      }
    }
    stats_.seconds = elapsed();
    stats_.cache_entries = cache_.size();
    out.stats = stats_;
    return out;
  }

  bool limit_hit() const { return limit_hit_; }

 private:
  struct Result {
    bool exact = false;
    i128 value = 0;  // exact optimum, or a lower bound when not exact
    int var = -1;
    std::int64_t lo = 0;  // chosen subdomain of var
    std::int64_t hi = 0;
  };

  SolveResult run_inner() {
    SolveResult out;
    st_.enqueue_all();
    if (st_.empty_domain() || !st_.propagate()) {
      ++stats_.failures;
      out.status = SolveStatus::Infeasible;
      return out;
    }
    std::vector<int> all(m_.vars.size());
    std::iota(all.begin(), all.end(), 0);
    const auto comps = components(all);
    const bool spine = comps.size() == 1;
    for (const auto& comp : comps) {
      const Result r = solve_comp(comp, kInf, spine);
      if (!r.exact) {
        out.status = SolveStatus::Infeasible;
        return out;
      }
    }
    for (const auto& comp : comps) reconstruct(comp);
    std::vector<std::int64_t> values;
    for (std::size_t v = 0; v < m_.vars.size(); ++v) values.push_back(st_.lo(static_cast<int>(v)));
    out.status = m_.direction == Objective::Direction::Satisfy ? SolveStatus::Satisfiable : SolveStatus::Optimal;
    out.objective = objective_value(m_, values);
    out.assignment = std::move(values);
    return out;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void count_node() {
    ++stats_.nodes;
    if (limits_.max_nodes && stats_.nodes > *limits_.max_nodes) throw LimitReached{};
    if (limits_.max_seconds && (stats_.nodes & 63) == 0 && elapsed() > *limits_.max_seconds) throw LimitReached{};
  }

  int find(int v) {
    while (parent_[static_cast<std::size_t>(v)] != v) {
      parent_[static_cast<std::size_t>(v)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])];
      v = parent_[static_cast<std::size_t>(v)];
    }
    return v;
  }

  /// Connected components of the unfixed variables among `vars`, linked by
  /// constraints with two or more unfixed variables. Ordered by smallest id.
  std::vector<std::vector<int>> components(const std::vector<int>& vars) {
    const std::uint64_t epoch = ++epoch_;
    std::vector<int> open;
    for (int v : vars) {
      if (!st_.fixed(v)) {
        open.push_back(v);
        var_stamp_[static_cast<std::size_t>(v)] = epoch;
        parent_[static_cast<std::size_t>(v)] = v;
      }
    }
    for (int v : open) {
      for (int c : st_.watchers(v)) {
        if (con_stamp_[static_cast<std::size_t>(c)] == epoch) continue;
        con_stamp_[static_cast<std::size_t>(c)] = epoch;
        int first = -1;
        for (int u : st_.scope(c)) {
          if (st_.fixed(u) || var_stamp_[static_cast<std::size_t>(u)] != epoch) continue;
          if (first < 0) {
            first = find(u);
          } else {
            const int ru = find(u);
            if (ru != first) {
              if (ru < first) {
                parent_[static_cast<std::size_t>(first)] = ru;
                first = ru;
              } else {
                parent_[static_cast<std::size_t>(ru)] = first;
              }
            }
          }
        }
      }
    }
    std::vector<std::vector<int>> comps;
    std::unordered_map<int, std::size_t> slot;
    for (int v : open) {
      const int r = find(v);
      auto [it, fresh] = slot.emplace(r, comps.size());
      if (fresh) comps.emplace_back();
      comps[it->second].push_back(v);
    }
    for (auto& c : comps) std::sort(c.begin(), c.end());
    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return comps;
  }

  i128 lower_bound(const std::vector<int>& comp) const {
    i128 lb = 0;
    for (int v : comp) {
      const i128 c = coef_[static_cast<std::size_t>(v)];
      if (c > 0) lb += c * st_.lo(v);
      if (c < 0) lb += c * st_.hi(v);
    }
    return lb;
  }

  static void push128(std::vector<std::int64_t>& key, i128 x) {
    key.push_back(static_cast<std::int64_t>(x >> 64));
    key.push_back(static_cast<std::int64_t>(static_cast<std::uint64_t>(x)));
  }

  std::vector<std::int64_t> make_key(const std::vector<int>& comp) {
    std::vector<std::int64_t> key;
    key.reserve(comp.size() * 3 + 8);
    key.push_back(static_cast<std::int64_t>(comp.size()));
    for (int v : comp) {
      key.push_back(v);
      key.push_back(st_.lo(v));
      key.push_back(st_.hi(v));
    }
    const std::uint64_t epoch = ++epoch_;
    for (int v : comp) {
      for (int c : st_.watchers(v)) {
        if (con_stamp_[static_cast<std::size_t>(c)] == epoch) continue;
        con_stamp_[static_cast<std::size_t>(c)] = epoch;
        const auto& scope = st_.scope(c);
        if (std::none_of(scope.begin(), scope.end(), [&](int u) { return st_.fixed(u); })) continue;
        if (st_.entailed(c)) continue;
        const auto& fc = m_.constraints[static_cast<std::size_t>(c)];
        key.push_back(-1 - c);
        if (fc.kind == FlatConstraint::Kind::Linear || fc.kind == FlatConstraint::Kind::Reified) {
          i128 residual = fc.rhs;
          for (const auto& t : fc.terms) {
            if (st_.fixed(t.var)) residual -= static_cast<i128>(t.coef) * st_.lo(t.var);
          }
          push128(key, residual);
          if (fc.kind == FlatConstraint::Kind::Reified) key.push_back(st_.fixed(fc.z) ? st_.lo(fc.z) : kUnfixed);
        } else {
          for (int u : fc.scope()) key.push_back(st_.fixed(u) ? st_.lo(u) : kUnfixed);
        }
      }
    }
    return key;
  }

  int choose(const std::vector<int>& comp) const {
    int best = -1;
    auto rank = [&](int v) {
      const auto& fv = m_.vars[static_cast<std::size_t>(v)];
      return std::tuple(fv.priority, fv.aux ? 1 : 0, static_cast<i128>(st_.hi(v)) - st_.lo(v), v);
    };
    for (int v : comp) {
      if (st_.fixed(v)) continue;
      if (best < 0 || rank(v) < rank(best)) best = v;
    }
    return best;
  }

  void store(std::vector<std::int64_t> key, const Result& r) {
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      if (r.exact || (!it->second.exact && r.value > it->second.value)) it->second = r;
      return;
    }
    const std::size_t bytes = key.size() * sizeof(std::int64_t) + 96;
    if (cache_bytes_ + bytes > limits_.cache_bytes) return;
    cache_bytes_ += bytes;
    cache_.emplace(std::move(key), r);
  }

  /// Optimum of the component's objective part if it is below `budget`;
  /// otherwise a lower bound >= budget (kInf when infeasible).
  /// `spine`: every other variable is fixed, so a complete branch here is a full solution.
  Result solve_comp(const std::vector<int>& comp, i128 budget, bool spine) {
    auto key = make_key(comp);
    if (auto it = cache_.find(key); it != cache_.end()) {
      if (it->second.exact || it->second.value >= budget) {
        ++stats_.cache_hits;
        return it->second;
      }
    }
    ++stats_.choice_points;
    const int x = choose(comp);
    const std::int64_t xlo = st_.lo(x);
    const std::int64_t xhi = st_.hi(x);
    i128 best = kInf;
    std::pair<std::int64_t, std::int64_t> best_range{0, 0};
    i128 lb_all = kInf;
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    if (static_cast<i128>(xhi) - xlo >= kWideDomain) {
      const std::int64_t mid = static_cast<std::int64_t>(floor_div(static_cast<i128>(xlo) + xhi, 2));
      ranges = {{xlo, mid}, {mid + 1, xhi}};
    }
    const std::size_t count = ranges.empty() ? static_cast<std::size_t>(xhi - xlo) + 1 : ranges.size();
    for (std::size_t k = 0; k < count; ++k) {
      const auto [a, b] = ranges.empty() ? std::pair{xlo + static_cast<std::int64_t>(k), xlo + static_cast<std::int64_t>(k)}
                                         : ranges[k];
      count_node();
      const std::size_t mark = st_.mark();
      if (!st_.set_lo(x, a) || !st_.set_hi(x, b) || !st_.propagate()) {
        ++stats_.failures;
        st_.undo(mark);
        continue;
      }
      i128 fixed_part = 0;
      for (int v : comp) {
        if (st_.fixed(v)) fixed_part += coef_[static_cast<std::size_t>(v)] * st_.lo(v);
      }
      const auto subs = components(comp);
      std::vector<i128> lbs;
      i128 lb_rest = 0;
      for (const auto& s : subs) {
        lbs.push_back(lower_bound(s));
        lb_rest += lbs.back();
      }
      const i128 thresh = std::min(budget, best);
      if (fixed_part + lb_rest >= thresh) {
        lb_all = std::min(lb_all, fixed_part + lb_rest);
      } else {
        i128 acc = fixed_part;
        bool complete = true;
        for (std::size_t k = 0; k < subs.size(); ++k) {
          lb_rest -= lbs[k];
          const Result r = solve_comp(subs[k], thresh - acc - lb_rest, spine && subs.size() == 1);
          if (!r.exact) {
            lb_all = std::min(lb_all, r.value >= kInf ? kInf : acc + r.value + lb_rest);
            complete = false;
            break;
          }
          acc += r.value;
          if (acc + lb_rest >= thresh && k + 1 < subs.size()) {
            lb_all = std::min(lb_all, acc + lb_rest);
            complete = false;
            break;
          }
        }
        if (complete) {
          lb_all = std::min(lb_all, acc);
          if (acc < thresh) {
            best = acc;
            best_range = {a, b};
            if (spine) capture(subs);
          }
        }
      }
      st_.undo(mark);
    }
    Result r;
    if (best < budget) {
      r.exact = true;
      r.value = best;
      r.var = x;
      r.lo = best_range.first;
      r.hi = best_range.second;
    } else {
      r.value = std::max(lb_all, budget);
      if (lb_all >= kInf) r.value = kInf;
    }
    store(std::move(key), r);
    return r;
  }

  /// Fixes every variable of the component to its cached optimal values.
  void reconstruct(const std::vector<int>& comp) {
    auto key = make_key(comp);
    Result r;
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.exact) {
      r = it->second;
    } else {
      r = solve_comp(comp, kInf, false);
    }
    if (!r.exact) throw std::logic_error("reconstruction reached an infeasible component");
    if (!st_.set_lo(r.var, r.lo) || !st_.set_hi(r.var, r.hi) || !st_.propagate()) throw std::logic_error("reconstruction failed to propagate");
    for (const auto& s : components(comp)) reconstruct(s);
  }

  void capture(const std::vector<std::vector<int>>& subs) {
    const std::size_t mark = st_.mark();
    for (const auto& s : subs) reconstruct(s);
    std::vector<std::int64_t> values;
    i128 value = 0;
    for (std::size_t v = 0; v < m_.vars.size(); ++v) {
      values.push_back(st_.lo(static_cast<int>(v)));
      value += coef_[v] * values.back();
    }
    if (!incumbent_ || value < incumbent_value_) {
      incumbent_ = std::move(values);
      incumbent_value_ = value;
    }
    st_.undo(mark);
  }

  const DeterministicModel& m_;
  SolveLimits limits_;
  Store st_;
  std::vector<i128> coef_;
  std::vector<std::uint64_t> var_stamp_;
  std::vector<std::uint64_t> con_stamp_;
  std::vector<int> parent_;
  std::uint64_t epoch_ = 0;
  std::unordered_map<std::vector<std::int64_t>, Result, KeyHash> cache_;
  std::size_t cache_bytes_ = 0;
  SolveStats stats_;
  std::chrono::steady_clock::time_point start_;
  bool limit_hit_ = false;
  std::optional<std::vector<std::int64_t>> incumbent_;
  i128 incumbent_value_ = kInf;
};

}  // namespace

SolveResult solve(const DeterministicModel& model, const SolveLimits& limits) {
  Search search(model, limits);
  SolveResult r = search.run();
  r.limit_reached = search.limit_hit() || r.status == SolveStatus::ResourceLimit;
  return r;
}

std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> propagate(
    const DeterministicModel& model, const std::vector<std::pair<std::int64_t, std::int64_t>>* domains) {
  Store st(model, domains);
  if (st.empty_domain()) return std::nullopt;
  st.enqueue_all();
  if (!st.propagate()) return std::nullopt;
  return st.domains();
}

Evaluation evaluate(const DeterministicModel& model, const std::vector<std::int64_t>& values) {
  if (values.size() != model.vars.size()) {
    throw std::invalid_argument("partial assignment: " + std::to_string(values.size()) + " of " +
                                std::to_string(model.vars.size()) + " variables");
  }
  Evaluation out;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto& fv = model.vars[v];
    if (values[v] < fv.lo || values[v] > fv.hi) {
      out.violations.push_back(fv.name + " = " + std::to_string(values[v]) + " outside " + std::to_string(fv.lo) +
                               ".." + std::to_string(fv.hi));
    }
  }
  for (std::size_t c = 0; c < model.constraints.size(); ++c) {
    const auto& fc = model.constraints[c];
    if (!satisfied(fc, values)) {
      out.violations.push_back("constraint " + std::to_string(c) + " (" + fc.origin + "): " + describe(model, fc));
    }
  }
  out.objective = objective_value(model, values);
  return out;
}

}  // namespace stochcp
