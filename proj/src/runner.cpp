#include "ivm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "ivm/aggregation.hpp"
#include "ivm/enumeration.hpp"
#include "ivm/error.hpp"
#include "ivm/io.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/oracle.hpp"
#include "ivm/workload.hpp"

namespace ivm {

namespace {

Tuple mask(const Tuple& t, const std::vector<std::size_t>& keep) {
  Tuple out;
  out.reserve(keep.size());
  for (std::size_t k : keep) out.push_back(t[k]);
  return out;
}

bool same_value(const Ring& ring, const RingValue& a, const RingValue& b) {
  if (ring.exact()) return a == b;
  const double x = std::get<double>(a), y = std::get<double>(b);
  return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
}

std::string describe(const std::set<Tuple>& s) {
  std::string out = "{";
  for (const auto& t : s) {
    if (out.size() > 1) out += ' ';
    out += to_string(t);
    if (out.size() > 400) return out + " ...}";
  }
  return out + "}";
}

class Verifier {
 public:
  Verifier(const Query& extended, RunReport& r, std::size_t limit)
      : ext_(extended), oracle_(ext_), r_(r), limit_(limit) {}

  bool active() const { return !r_.verify_disabled; }

  SignedResults apply(const UpdateEvent& ev) {
    SignedResults d = oracle_delta(oracle_, ev, ext_);
    if (oracle_.total_tuples() > limit_) r_.verify_disabled = true;
    return d;
  }

  const OracleState& state() const { return oracle_; }

  void expect(bool ok, const std::string& what) {
    ++r_.checks;
    if (ok) return;
    if (r_.mismatches++ == 0) r_.first_mismatch = what;
  }

 private:
  const Query& ext_;
  OracleState oracle_;
  RunReport& r_;
  std::size_t limit_;
};

}  // namespace

RunReport run(const Query& q, const std::vector<UpdateEvent>& trace, const RunOptions& opt) {
  using Clock = std::chrono::steady_clock;
  RunReport r;
  r.events = trace.size();
  if (opt.mode == RunMode::Aggregate && !q.ring) {
    throw Error(ErrorCode::RingMismatch, "aggregate mode needs a query with an aggregate");
  }

  const FreeConnexExtension ext = make_free_connex(q);
  const Query& eq = ext.query;
  const bool masked = !ext.added.empty();
  for (AttrId a : ext.added) r.added_output += (r.added_output.empty() ? "" : ",") + eq.attr_names[a];

  FreeConnexJoinTree tree;
  if (opt.tree_index) {
    auto trees = enumerate_trees(eq);
    if (*opt.tree_index >= trees.size()) {
      throw Error(ErrorCode::MalformedQuery, "tree index " + std::to_string(*opt.tree_index) + " out of range (" +
                                                 std::to_string(trees.size()) + " trees)");
    }
    tree = trees[*opt.tree_index];
  } else {
    UpdateCounts counts;
    const std::vector<UpdateEvent> head(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(std::min(opt.prefix, trace.size())));
    for (const auto& ev : expand_events(eq, head)) ++counts[ev.relation];
    tree = choose_plan_tree(eq, counts);
  }
  r.tree = tree.canonical(eq);

  std::optional<Ring> ring;
  if (q.ring) ring = Ring(*q.ring);
  // Deltas are enumerated in delta mode, and in every mode under verification.
  const bool deltas = opt.mode == RunMode::Delta || opt.verify;
  Engine engine(eq, tree, opt.mode == RunMode::Aggregate ? ring : std::nullopt, deltas);

  std::optional<Verifier> verifier;
  if (opt.verify) verifier.emplace(eq, r, opt.verify_limit);

  const std::size_t every = opt.full_every ? opt.full_every : std::max<std::size_t>(1, (trace.size() + 9) / 10);
  std::vector<double> latencies;
  latencies.reserve(trace.size());

  auto aggregate_check = [&](bool report) {
    auto groups = group_annotations(engine);
    if (report) {
      ++r.full_enumerations;
      r.last_full_size = groups.size();
      if (opt.out && !eq.output.empty()) {
        for (const auto& [t, w] : groups) {
          *opt.out << "# aggregate";
          for (const auto& v : t) *opt.out << ' ' << v.to_string();
          *opt.out << ' ' << to_string(w) << '\n';
        }
      }
    }
    if (verifier && verifier->active()) {
      auto want = oracle_aggregate(verifier->state(), eq, *ring);
      bool ok = want.size() == groups.size();
      for (std::size_t i = 0; ok && i < groups.size(); ++i) {
        auto it = want.find(groups[i].first);
        ok = it != want.end() && same_value(*ring, it->second, groups[i].second);
      }
      verifier->expect(ok, "aggregate mismatch");
    }
  };

  auto full_check = [&]() {
    if (opt.mode == RunMode::Aggregate) {
      aggregate_check(true);
      return;
    }
    ++r.full_enumerations;
    auto cursor = full_enum(engine);
    std::set<Tuple> got;
    std::uint64_t n = 0;
    Tuple t;
    if (opt.out) *opt.out << "# full " << r.full_enumerations << '\n';
    while (cursor.next(t)) {
      ++n;
      Tuple out = masked ? mask(t, ext.keep) : t;
      if (opt.out) *opt.out << delta_line(Sign::Insert, out) << '\n';
      if (verifier) got.insert(std::move(out));
    }
    r.max_full_delay_ops = std::max(r.max_full_delay_ops, cursor.stats().max_ops);
    r.last_full_size = n;
    if (verifier && verifier->active()) {
      std::set<Tuple> want;
      for (const auto& w : oracle_query(verifier->state(), eq)) want.insert(masked ? mask(w, ext.keep) : w);
      const bool ok = got == want && (masked || n == got.size());
      verifier->expect(ok, "full result mismatch: engine " + describe(got) + " oracle " + describe(want));
    }
  };

  const auto start = Clock::now();
  std::size_t logical = 0;
  for (const auto& lev : trace) {
    ++logical;
    if (opt.out && opt.mode == RunMode::Delta) *opt.out << "# event " << logical << '\n';
    const auto t0 = Clock::now();
    // Physical events of this logical one are contiguous in `physical`.
    const auto copies = expand_events(eq, {lev});
    for (const auto& ev : copies) {
      ++r.physical_updates;
      std::set<Tuple> got;
      std::uint64_t emitted = 0;
      PropagationRecord rec = engine.apply(ev);
      if (deltas) {
        DeltaBatch batch = delta_enum(engine, rec, find_witnesses(engine, rec));
        Tuple t;
        while (batch.next(t)) {
          ++emitted;
          if (opt.mode == RunMode::Delta && opt.out) {
            *opt.out << delta_line(rec.sign, masked ? mask(t, ext.keep) : t) << '\n';
          }
          if (verifier) got.insert(t);
        }
        r.max_delta_delay_ops = std::max(r.max_delta_delay_ops, batch.stats().max_ops);
        update_live_views(engine, batch);
      } else {
        complete_update(engine);
      }
      r.delta_tuples += emitted;
      if (rec.ignored) ++r.ignored;
      if (verifier && verifier->active()) {
        SignedResults want = verifier->apply(ev);
        const bool ok = got == want.tuples && emitted == got.size() && (got.empty() || want.sign == rec.sign);
        verifier->expect(ok, "delta mismatch at event " + std::to_string(logical) + " (" + sign_char(ev.sign) + ev.relation +
                                 to_string(ev.tuple) + "): engine " + describe(got) + " oracle " + describe(want.tuples));
      }
      std::size_t base = 0, rows = 0, views = 0;
      for (const auto& s : engine.view_sizes()) {
        base += s.base;
        rows += s.rows;
        views += s.vs + s.vp + s.live;
      }
      r.peak_base_tuples = std::max(r.peak_base_tuples, base);
      r.peak_view_tuples = std::max(r.peak_view_tuples, views);
      if (base > 0) r.peak_view_to_input_ratio = std::max(r.peak_view_to_input_ratio, static_cast<double>(views) / static_cast<double>(base));
      if (opt.check_space && views > 3 * rows) ++r.space_violations;
    }
    latencies.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    if (opt.mode == RunMode::Aggregate && eq.output.empty() && opt.out) {
      *opt.out << "# aggregate " << to_string(aggregate_scalar(engine)) << '\n';
    }
    if (opt.mode != RunMode::Delta && logical % every == 0) {
      full_check();
    } else if (opt.mode == RunMode::Aggregate && verifier && verifier->active()) {
      aggregate_check(false);
    }
  }
  if (opt.mode != RunMode::Delta && (trace.empty() || logical % every != 0)) full_check();
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.counter_changes = engine.counter_change_total();
  r.verified = opt.verify && r.mismatches == 0;
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    auto at = [&](double p) { return latencies[std::min(latencies.size() - 1, static_cast<std::size_t>(p * static_cast<double>(latencies.size())))]; };
    r.latency_p50_us = at(0.5);
    r.latency_p99_us = at(0.99);
    r.latency_max_us = latencies.back();
  }
  return r;
}

void write_metrics(std::ostream& os, const RunReport& r) {
  os << "tree=" << r.tree << '\n'
     << "added_output=" << r.added_output << '\n'
     << "events=" << r.events << '\n'
     << "physical_updates=" << r.physical_updates << '\n'
     << "ignored=" << r.ignored << '\n'
     << "delta_tuples=" << r.delta_tuples << '\n'
     << "full_enumerations=" << r.full_enumerations << '\n'
     << "last_full_size=" << r.last_full_size << '\n'
     << "counter_changes=" << r.counter_changes << '\n'
     << "peak_base_tuples=" << r.peak_base_tuples << '\n'
     << "peak_view_tuples=" << r.peak_view_tuples << '\n'
     << "max_delta_delay_ops=" << r.max_delta_delay_ops << '\n'
     << "max_full_delay_ops=" << r.max_full_delay_ops << '\n'
     << "space_violations=" << r.space_violations << '\n'
     << "peak_view_to_input_ratio=" << r.peak_view_to_input_ratio << '\n'
     << "seconds=" << r.seconds << '\n'
     << "latency_p50_us=" << r.latency_p50_us << '\n'
     << "latency_p99_us=" << r.latency_p99_us << '\n'
     << "latency_max_us=" << r.latency_max_us << '\n'
     << "verify_checks=" << r.checks << '\n'
     << "verify_mismatches=" << r.mismatches << '\n'
     << "verify_disabled=" << (r.verify_disabled ? 1 : 0) << '\n';
  if (!r.first_mismatch.empty()) os << "first_mismatch=" << r.first_mismatch << '\n';
}

}  // namespace ivm
