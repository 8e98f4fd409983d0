#include "ivm/enclosureness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "ivm/error.hpp"

namespace ivm {

double LambdaReport::value() const {
  if (per_tuple.empty()) return 1.0;
  return std::max(1.0, static_cast<double>(total) / static_cast<double>(per_tuple.size()));
}

std::vector<UpdateEvent> order_events(std::span<const UpdateEvent> events, bool deletes_first) {
  std::vector<UpdateEvent> out(events.begin(), events.end());
  std::stable_sort(out.begin(), out.end(), [&](const UpdateEvent& a, const UpdateEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.sign == b.sign) return false;
    return deletes_first ? a.sign == Sign::Delete : a.sign == Sign::Insert;
  });
  return out;
}

std::vector<Lifespan> lifespans(std::span<const UpdateEvent> events) {
  struct Key {
    std::string rel;
    Tuple t;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return std::hash<std::string>()(k.rel) ^ TupleHash()(k.t); }
  };
  std::vector<Lifespan> out;
  std::unordered_map<Key, std::size_t, KeyHash> open;  // → index in out
  std::unordered_map<Key, bool, KeyHash> seen;
  for (const auto& ev : events) {
    Key k{ev.relation, ev.tuple};
    if (ev.sign == Sign::Insert) {
      if (open.count(k)) continue;
      open.emplace(k, out.size());
      out.push_back({{ev.timestamp, kPlusInfinity}, ev.relation, ev.tuple});
      seen[k] = true;
    } else {
      if (auto it = open.find(k); it != open.end()) {
        out[it->second].span.end = ev.timestamp;
        open.erase(it);
      } else if (!seen.count(k)) {
        out.push_back({{kMinusInfinity, ev.timestamp}, ev.relation, ev.tuple});
        seen[k] = true;
      }
    }
  }
  return out;
}

SequenceClass classify_sequence(const std::vector<Lifespan>& spans) {
  SequenceClass c;
  c.insertion_only = std::all_of(spans.begin(), spans.end(), [](const Lifespan& l) { return l.span.end == kPlusInfinity; });
  c.deletion_only = std::all_of(spans.begin(), spans.end(), [](const Lifespan& l) { return l.span.start == kMinusInfinity; });
  std::vector<Interval> v;
  for (const auto& l : spans) v.push_back(l.span);
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
  // Earlier starts must end strictly earlier; tuples never deleted tie at +inf.
  c.fifo = true;
  std::int64_t max_prev_end = kMinusInfinity;
  bool have_prev = false;
  for (std::size_t i = 0; i < v.size() && c.fifo;) {
    std::size_t j = i;
    while (j < v.size() && v[j].start == v[i].start) {
      if (have_prev && !(max_prev_end < v[j].end || (max_prev_end == kPlusInfinity && v[j].end == kPlusInfinity))) {
        c.fifo = false;
      }
      ++j;
    }
    for (std::size_t k = i; k < j; ++k) max_prev_end = std::max(max_prev_end, v[k].end);
    have_prev = true;
    i = j;
  }
  return c;
}

std::uint64_t max_disjoint(std::vector<Interval> iv) {
  std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
    return a.end != b.end ? a.end < b.end : a.start < b.start;
  });
  std::uint64_t n = 0;
  bool any = false;
  std::int64_t last = 0;
  for (const auto& i : iv) {
    if (!any || i.start > last) {
      ++n;
      last = i.end;
      any = true;
    }
  }
  return n;
}

namespace {

struct Cand {
  Interval iv;
  std::uint32_t owner;
};

class OwnerSearch {
 public:
  OwnerSearch(std::vector<Cand> c, std::uint64_t budget) : c_(std::move(c)), budget_(budget) {
    std::uint32_t owners = 0;
    for (const auto& x : c_) owners = std::max(owners, x.owner + 1);
    used_.assign(owners, kFree);
    reserved_at_.assign(owners, kNoIndex);
    where_.assign(owners, {kNoIndex, kNoIndex});
    for (std::size_t i = 0; i < c_.size(); ++i) {
      auto& w = where_[c_[i].owner];
      (w.first == kNoIndex ? w.first : w.second) = i;
    }
  }

  OwnerSchedule run() {
    best_ = greedy();
    ceiling_ = relax(0, false, 0);
    if (best_ < ceiling_) lagrange();
    if (best_ < ceiling_) rec(0, false, 0, 0);
    if (!aborted_) ceiling_ = best_;
    return {best_, ceiling_, !aborted_};
  }

 private:
  static constexpr std::size_t kNoIndex = ~std::size_t{0};

  bool fits(std::size_t j, bool any, std::int64_t last) const { return !any || c_[j].iv.start > last; }

  // Dualizes "one interval per owner" with multipliers on owners holding two
  // disjoint intervals; each subproblem is weighted interval scheduling.
  // Tightens ceiling_ and, from repaired subproblem solutions, best_.
  void lagrange() {
    const std::size_t n = c_.size();
    std::vector<std::size_t> pred(n);  // number of intervals ending before c_[j] starts
    for (std::size_t j = 0; j < n; ++j) {
      pred[j] = static_cast<std::size_t>(
          std::lower_bound(c_.begin(), c_.end(), c_[j].iv.start, [](const Cand& x, std::int64_t v) { return x.iv.end < v; }) -
          c_.begin());
    }
    std::vector<char> split(used_.size(), 0);
    for (const auto& [a, b] : where_) {
      if (b != kNoIndex && (c_[a].iv.end < c_[b].iv.start || c_[b].iv.end < c_[a].iv.start)) split[c_[a].owner] = 1;
    }
    std::vector<double> mu(used_.size(), 0.0), dp(n + 1);
    std::vector<char> take(n), pick(n);
    std::vector<int> hits(used_.size());
    double step = 0.5;
    for (int it = 0; it < 300 && best_ < ceiling_; ++it) {
      dp[0] = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double with = 1.0 - mu[c_[j].owner] + dp[pred[j]];
        take[j] = with > dp[j];
        dp[j + 1] = take[j] ? with : dp[j];
      }
      std::fill(pick.begin(), pick.end(), 0);
      std::fill(hits.begin(), hits.end(), 0);
      for (std::size_t j = n; j > 0;) {
        if (take[j - 1]) {
          pick[j - 1] = 1;
          ++hits[c_[j - 1].owner];
          j = pred[j - 1];
        } else {
          --j;
        }
      }
      double bound = dp[n];
      for (double m : mu) bound += m;
      ceiling_ = std::min(ceiling_, static_cast<std::uint64_t>(std::floor(bound + 1e-9)));
      // Repair: keep the first interval of an owner picked twice.
      std::vector<char> seen(used_.size(), 0);
      std::uint64_t feasible = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (pick[j] && !seen[c_[j].owner]) {
          seen[c_[j].owner] = 1;
          ++feasible;
        }
      }
      best_ = std::max(best_, feasible);
      double norm = 0;
      for (std::size_t o = 0; o < mu.size(); ++o) {
        if (split[o]) norm += (hits[o] - 1.0) * (hits[o] - 1.0);
      }
      if (norm == 0) break;
      const double t = step * std::max(1.0, bound - static_cast<double>(best_)) / norm;
      for (std::size_t o = 0; o < mu.size(); ++o) {
        if (split[o]) mu[o] = std::clamp(mu[o] + t * (hits[o] - 1.0), 0.0, 1.0);
      }
      if (it % 30 == 29) step *= 0.5;
    }
  }

  // Earliest-end greedy taking each owner once: a feasible solution.
  std::uint64_t greedy() const {
    std::vector<char> taken(used_.size(), 0);
    std::uint64_t n = 0;
    bool any = false;
    std::int64_t last = 0;
    for (std::size_t j = 0; j < c_.size(); ++j) {
      if (fits(j, any, last) && !taken[c_[j].owner]) {
        taken[c_[j].owner] = 1;
        ++n;
        any = true;
        last = c_[j].iv.end;
      }
    }
    return n;
  }

  bool blocked(std::size_t j) const {
    const char u = used_[c_[j].owner];
    return u == kUsed || (u == kReserved && reserved_at_[c_[j].owner] != j);
  }

  // Earliest-end greedy over unblocked intervals: an upper bound.
  std::uint64_t relax(std::size_t j, bool any, std::int64_t last) const {
    std::uint64_t n = 0;
    for (; j < c_.size(); ++j) {
      if (fits(j, any, last) && !blocked(j)) {
        ++n;
        any = true;
        last = c_[j].iv.end;
      }
    }
    return n;
  }

  void rec(std::size_t pos, bool any, std::int64_t last, std::uint64_t count) {
    if (best_ >= ceiling_) return;
    if (aborted_ || ++nodes_ > budget_) {
      aborted_ = true;
      return;
    }
    // A reserved interval that no longer fits kills the branch.
    for (std::size_t r : reserved_) {
      if (used_[c_[r].owner] == kReserved && !fits(r, any, last)) return;
    }
    std::size_t j = pos;
    while (j < c_.size() && (!fits(j, any, last) || blocked(j))) ++j;
    if (j == c_.size()) {
      best_ = std::max(best_, count);
      return;
    }
    if (count + relax(j, any, last) <= best_) return;
    const std::uint32_t o = c_[j].owner;
    const auto [a, b] = where_[o];
    const std::size_t other = a == j ? b : a;
    const char before = used_[o];
    used_[o] = kUsed;
    rec(j + 1, true, c_[j].iv.end, count + 1);
    used_[o] = before;
    // Skipping j only pays off if the owner's later disjoint interval is used;
    // otherwise swapping j into the solution is as good.
    if (before == kFree && other != kNoIndex && other > j && c_[other].iv.start > c_[j].iv.end) {
      used_[o] = kReserved;
      reserved_at_[o] = other;
      reserved_.push_back(other);
      rec(j + 1, any, last, count);
      reserved_.pop_back();
      used_[o] = kFree;
    }
  }

  static constexpr char kFree = 0, kUsed = 1, kReserved = 2;
  std::vector<Cand> c_;
  std::vector<char> used_;
  std::vector<std::size_t> reserved_at_;
  std::vector<std::size_t> reserved_;
  std::vector<std::pair<std::size_t, std::size_t>> where_;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  std::uint64_t best_ = 0;
  std::uint64_t ceiling_ = 0;
  bool aborted_ = false;
};

}  // namespace

OwnerSchedule max_disjoint_one_per_owner(std::vector<std::pair<Interval, std::uint32_t>> candidates,
                                         std::uint64_t budget) {
  // Owners are renumbered densely; duplicate intervals of one owner collapse.
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  std::vector<Cand> c;
  std::vector<std::vector<Interval>> per_owner;
  for (const auto& [iv, o] : candidates) {
    auto [it, fresh] = dense.emplace(o, static_cast<std::uint32_t>(per_owner.size()));
    if (fresh) per_owner.emplace_back();
    auto& mine = per_owner[it->second];
    if (std::find(mine.begin(), mine.end(), iv) != mine.end()) continue;
    if (mine.size() == 2) continue;
    mine.push_back(iv);
    c.push_back({iv, it->second});
  }
  // When no owner has two disjoint intervals, a disjoint set never uses an owner
  // twice and plain interval scheduling is exact.
  bool split = false;
  for (const auto& mine : per_owner) {
    if (mine.size() == 2 && (mine[0].end < mine[1].start || mine[1].end < mine[0].start)) split = true;
  }
  std::sort(c.begin(), c.end(), [](const Cand& a, const Cand& b) {
    return a.iv.end != b.iv.end ? a.iv.end < b.iv.end : a.iv.start < b.iv.start;
  });
  if (!split) {
    std::vector<Interval> iv;
    for (const auto& x : c) iv.push_back(x.iv);
    const std::uint64_t n = max_disjoint(std::move(iv));
    return {n, n, true};
  }
  return OwnerSearch(std::move(c), budget).run();
}

namespace {

struct ByStart {
  std::vector<std::pair<Interval, std::uint32_t>> items;  // sorted by start
  void finish() {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
  }
  // Items whose interval lies inside `host`.
  template <class Fn>
  void inside(const Interval& host, Fn&& fn) const {
    auto it = std::lower_bound(items.begin(), items.end(), host.start,
                               [](const auto& x, std::int64_t s) { return x.first.start < s; });
    for (; it != items.end() && it->first.start <= host.end; ++it) {
      if (it->first.end <= host.end) fn(*it);
    }
  }
};

template <class Body>
void for_each_tuple(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

void summarize(LambdaReport& r, const std::vector<Lifespan>& spans) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> acc;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    r.total += r.per_tuple[i];
    auto& a = acc[spans[i].relation];
    a.first += r.per_tuple[i];
    ++a.second;
  }
  for (const auto& [rel, a] : acc) r.per_relation[rel] = static_cast<double>(a.first) / static_cast<double>(a.second);
}

std::vector<int> node_per_span(const std::vector<Lifespan>& spans, const FreeConnexJoinTree& tree, const Query& q) {
  std::vector<int> out;
  for (const auto& l : spans) {
    auto rel = q.relation_index(l.relation);
    std::optional<int> node = rel ? tree.node_of_relation(*rel) : std::nullopt;
    if (!node) throw Error(ErrorCode::UnmappedRelation, l.relation);
    out.push_back(*node);
  }
  return out;
}

}  // namespace

LambdaReport classic_lambda(const std::vector<Lifespan>& spans, Exec exec) {
  LambdaReport r;
  r.per_tuple.assign(spans.size(), 0);
  ByStart all;
  for (std::size_t i = 0; i < spans.size(); ++i) all.items.push_back({spans[i].span, static_cast<std::uint32_t>(i)});
  all.finish();
  for_each_tuple(spans.size(), exec, [&](std::size_t i) {
    const Interval host = spans[i].span;
    std::vector<Interval> inner;
    all.inside(host, [&](const auto& x) {
      if (x.first != host) inner.push_back(x.first);
    });
    r.per_tuple[i] = max_disjoint(std::move(inner));
  });
  summarize(r, spans);
  r.upper_total = r.total;
  return r;
}

std::vector<EffectiveLifespan> effective_lifespans(const std::vector<Lifespan>& spans,
                                                   const FreeConnexJoinTree& tree, const Query& q) {
  const auto node = node_per_span(spans, tree, q);
  // Finite insertion and deletion times of tuples strictly below each node.
  std::vector<std::vector<std::int64_t>> ins(tree.nodes.size()), dels(tree.nodes.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (int p = tree.nodes[static_cast<std::size_t>(node[i])].parent; p >= 0;
         p = tree.nodes[static_cast<std::size_t>(p)].parent) {
      if (spans[i].span.start != kMinusInfinity) ins[static_cast<std::size_t>(p)].push_back(spans[i].span.start);
      if (spans[i].span.end != kPlusInfinity) dels[static_cast<std::size_t>(p)].push_back(spans[i].span.end);
    }
  }
  for (auto& v : ins) std::sort(v.begin(), v.end());
  for (auto& v : dels) std::sort(v.begin(), v.end());
  std::vector<EffectiveLifespan> out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Interval s = spans[i].span;
    const auto& d = dels[static_cast<std::size_t>(node[i])];
    const auto& a = ins[static_cast<std::size_t>(node[i])];
    EffectiveLifespan e{s, s};
    if (auto it = std::upper_bound(d.begin(), d.end(), s.start); it != d.end()) e.forward.end = std::min(s.end, *it);
    if (auto it = std::lower_bound(a.begin(), a.end(), s.end); it != a.begin()) {
      e.backward.start = std::max(s.start, *std::prev(it));
    }
    out.push_back(e);
  }
  return out;
}

LambdaReport tree_lambda(const std::vector<Lifespan>& spans, const FreeConnexJoinTree& tree, const Query& q,
                         Exec exec) {
  const auto node = node_per_span(spans, tree, q);
  const auto eff = effective_lifespans(spans, tree, q);
  // Candidate intervals of tuples strictly below each node.
  std::vector<ByStart> below(tree.nodes.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (int p = tree.nodes[static_cast<std::size_t>(node[i])].parent; p >= 0;
         p = tree.nodes[static_cast<std::size_t>(p)].parent) {
      auto& b = below[static_cast<std::size_t>(p)].items;
      b.push_back({eff[i].forward, static_cast<std::uint32_t>(i)});
      if (!(eff[i].backward == eff[i].forward)) b.push_back({eff[i].backward, static_cast<std::uint32_t>(i)});
    }
  }
  for (auto& b : below) b.finish();

  LambdaReport r;
  r.per_tuple.assign(spans.size(), 0);
  std::vector<std::uint64_t> upper(spans.size(), 0);
  for_each_tuple(spans.size(), exec, [&](std::size_t i) {
    std::vector<std::pair<Interval, std::uint32_t>> cands;
    below[static_cast<std::size_t>(node[i])].inside(spans[i].span, [&](const auto& x) { cands.push_back(x); });
    const OwnerSchedule s = max_disjoint_one_per_owner(std::move(cands));
    r.per_tuple[i] = s.value;
    upper[i] = s.upper;
  });
  summarize(r, spans);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    r.upper_total += upper[i];
    r.inexact_tuples += upper[i] != r.per_tuple[i];
  }
  r.exact = r.inexact_tuples == 0;
  return r;
}

}  // namespace ivm
