#include "ivm/enumeration.hpp"

#include <algorithm>
#include <stdexcept>

#include "engine_access.hpp"
#include "ivm/error.hpp"

namespace ivm {

namespace detail {

void EngineAccess::finish(Engine& e) {
  auto& nodes = e.nodes_;
  auto at = [&](int id) -> NodeState& { return nodes[static_cast<std::size_t>(id)]; };
  const int root = e.tree_.root;

  // Root projections switch to the post-update state first: live maintenance
  // below reads the parent's live view after the update.
  for (const auto& pv : e.pending_visible_) {
    if (pv.node != root) continue;
    NodeState& n = at(root);
    YEntry& y = n.yentries[pv.entry];
    const int before = y.visible;
    y.visible += pv.delta;
    if (before == 0 && y.visible > 0) {
      e.enum_add(n, pv.entry);
      e.live_add(n, pv.entry);
    } else if (before > 0 && y.visible == 0) {
      e.enum_remove(n, pv.entry);
      e.live_remove(n, pv.entry);
    }
  }

  auto& queue = e.pending_live_;
  std::vector<int> rank(nodes.size());
  for (std::size_t i = 0; i < e.topdown_.size(); ++i) rank[static_cast<std::size_t>(e.topdown_[i])] = static_cast<int>(i);
  std::stable_sort(queue.begin(), queue.end(),
                   [&](const auto& a, const auto& b) { return rank[static_cast<std::size_t>(a.first)] < rank[static_cast<std::size_t>(b.first)]; });
  for (const auto& [id, entry] : queue) {
    NodeState& n = at(id);
    YEntry& y = n.yentries[entry];
    y.queued = false;
    if (e.flight_sign_ == Sign::Insert) {
      if (!y.live) {
        y.live = true;
        e.live_add(n, entry);
      }
      continue;
    }
    if (!y.live) continue;
    bool still = y.count > 0;
    if (still) {
      const NodeState& p = at(n.parent);
      const auto& lb = p.live_bucket[static_cast<std::size_t>(n.connex_slot_in_parent)];
      still = lb.count(project(y.values, n.y_key_pos)) > 0;
    }
    if (!still) {
      y.live = false;
      e.live_remove(n, entry);
    }
  }

  for (const auto& pv : e.pending_visible_) {
    if (pv.node == root) continue;
    NodeState& n = at(pv.node);
    YEntry& y = n.yentries[pv.entry];
    if (y.visible > 0 && (y.visible += pv.delta) == 0) e.enum_remove(n, pv.entry);
  }

  auto purge = [&](int id, std::uint32_t entry) {
    NodeState& n = at(id);
    const YEntry& y = n.yentries[entry];
    if (y.in_use && y.count == 0 && y.visible == 0 && !y.live) e.release_yentry(n, entry);
  };
  for (const auto& pv : e.pending_visible_) purge(pv.node, pv.entry);
  for (const auto& [id, entry] : queue) purge(id, entry);

  e.pending_visible_.clear();
  queue.clear();
  e.in_flight_ = false;
  ++e.epoch_;
}

void Odometer::push(Level l) {
  if (level_of_.empty()) level_of_.assign(nodes_->size(), -1);
  level_of_[static_cast<std::size_t>(l.node)] = static_cast<int>(levels_.size());
  levels_.push_back(l);
}

void Odometer::add_fixed(int node, std::uint32_t entry) {
  Level l;
  l.node = node;
  l.src = Source::Fixed;
  l.fixed = entry;
  push(l);
}

void Odometer::add_live(int node, int slot, int dep, const std::vector<int>* keypos) {
  Level l;
  l.node = node;
  l.src = Source::Live;
  l.slot = slot;
  l.dep = dep;
  l.keypos = keypos;
  push(l);
}

void Odometer::add_enum(int node, int dep, const std::vector<int>* keypos) {
  Level l;
  l.node = node;
  l.src = Source::Enum;
  l.dep = dep;
  l.keypos = keypos;
  push(l);
}

void Odometer::add_subtrees(int node, int exclude) {
  const NodeState& n = (*nodes_)[static_cast<std::size_t>(node)];
  const int dep = level_of_[static_cast<std::size_t>(node)];
  for (std::size_t j = 0; j < n.connex_children.size(); ++j) {
    const int c = n.connex_children[j];
    if (c == exclude) continue;
    add_enum(c, dep, &n.connex_child_key_ypos[j]);
    add_subtrees(c, -1);
  }
}

bool Odometer::init(std::size_t i, std::uint64_t& ops) {
  Level& l = levels_[i];
  ++ops;
  if (l.src == Source::Fixed) {
    l.cur = l.fixed;
    return true;
  }
  const NodeState& n = (*nodes_)[static_cast<std::size_t>(l.node)];
  Tuple key;
  if (l.dep >= 0) {
    const Level& d = levels_[static_cast<std::size_t>(l.dep)];
    const NodeState& dn = (*nodes_)[static_cast<std::size_t>(d.node)];
    key = project(dn.yentries[d.cur].values, *l.keypos);
  }
  const auto& map = l.src == Source::Enum ? n.enum_bucket : n.live_bucket[static_cast<std::size_t>(l.slot)];
  auto it = map.find(key);
  if (it == map.end() || it->second.empty()) return false;
  l.bucket = &it->second;
  l.idx = 0;
  l.cur = it->second[0];
  return true;
}

bool Odometer::next(std::uint64_t& ops) {
  if (done_) return false;
  const std::size_t k = levels_.size();
  if (!started_) {
    started_ = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (!init(i, ops)) {
        // Only the first bucket may legitimately be empty (no results at all).
        if (i > 0) throw std::logic_error("enumeration reached a dead end");
        done_ = true;
        return false;
      }
    }
    return true;
  }
  for (std::size_t i = k; i-- > 0;) {
    Level& l = levels_[i];
    ++ops;
    if (l.src == Source::Fixed || l.idx + 1 >= l.bucket->size()) continue;
    l.cur = (*l.bucket)[++l.idx];
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!init(j, ops)) throw std::logic_error("enumeration reached a dead end");
    }
    return true;
  }
  done_ = true;
  return false;
}

}  // namespace detail

namespace {

using detail::EngineAccess;

void assemble(const Engine& engine, const detail::Odometer& odo, Tuple& out) {
  const auto& nodes = EngineAccess::nodes(engine);
  const auto& src = EngineAccess::out_src(engine);
  out.resize(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) {
    const auto& n = nodes[static_cast<std::size_t>(src[k].first)];
    out[k] = n.yentries[odo.entry_at(src[k].first)].values[static_cast<std::size_t>(src[k].second)];
  }
}

void record_yield(DelayStats& s) {
  s.max_ops = std::max(s.max_ops, s.ops);
  s.ops = 0;
  ++s.yields;
}

}  // namespace

ResultCursor full_enum(const Engine& engine) {
  if (engine.in_flight()) throw Error(ErrorCode::UpdateInFlight, "finish the update before enumerating");
  ResultCursor c;
  c.engine_ = &engine;
  c.epoch_ = engine.epoch();
  c.odo_ = detail::Odometer(&EngineAccess::nodes(engine));
  const int root = engine.tree().root;
  c.odo_.add_enum(root, -1, nullptr);
  c.odo_.add_subtrees(root, -1);
  return c;
}

bool ResultCursor::next(Tuple& out) {
  if (!engine_) return false;
  if (engine_->epoch() != epoch_) throw Error(ErrorCode::CursorInvalidated, "engine changed");
  if (!odo_.next(stats_.ops)) return false;
  assemble(*engine_, odo_, out);
  record_yield(stats_);
  return true;
}

std::optional<Tuple> ResultCursor::next() {
  Tuple t;
  if (!next(t)) return std::nullopt;
  return t;
}

std::vector<WitnessTuple> find_witnesses(const Engine& engine, const PropagationRecord& rec) {
  if (!engine.live_views()) throw std::logic_error("witnesses need live views");
  std::vector<WitnessTuple> out;
  if (rec.ignored) return out;
  const auto& nodes = EngineAccess::nodes(engine);
  for (const auto& cand : rec.candidates) {
    const auto& n = nodes[static_cast<std::size_t>(cand.node)];
    const auto& y = n.yentries[cand.entry];
    if (n.parent < 0) {
      out.push_back({y.values, cand.node, WitnessKind::Root, cand.entry});
      continue;
    }
    const Tuple key = project(y.values, n.y_key_pos);
    const auto& p = nodes[static_cast<std::size_t>(n.parent)];
    // Joins the parent's live view as it was before this update...
    if (!p.live_bucket[static_cast<std::size_t>(n.connex_slot_in_parent)].count(key)) continue;
    // ...and the change stopped here: the key is still in vp after a deletion.
    // For an insertion the live probe already implies the key was present.
    if (rec.sign == Sign::Delete && !n.vp.count(key)) continue;
    out.push_back({y.values, cand.node, WitnessKind::Midway, cand.entry});
  }
  return out;
}

DeltaBatch delta_enum(Engine& engine, const PropagationRecord& rec, std::vector<WitnessTuple> witnesses) {
  if (!engine.live_views()) throw std::logic_error("delta enumeration needs live views");
  DeltaBatch b;
  b.engine_ = &engine;
  b.sign_ = rec.sign;
  b.epoch_ = engine.epoch();
  if (!rec.ignored && rec.epoch != engine.epoch()) {
    throw Error(ErrorCode::CursorInvalidated, "record belongs to an earlier update");
  }
  b.witnesses_ = std::move(witnesses);
  b.done_ = rec.ignored || b.witnesses_.empty();
  return b;
}

void DeltaBatch::start_witness() {
  const auto& nodes = EngineAccess::nodes(*engine_);
  const WitnessTuple& w = witnesses_[wi_];
  odo_ = detail::Odometer(&nodes);
  odo_.add_fixed(w.node, w.entry);
  std::vector<std::pair<int, int>> path;  // (ancestor, child on the path)
  int child = w.node;
  int dep = 0;
  for (int p = nodes[static_cast<std::size_t>(child)].parent; p >= 0;
       child = p, p = nodes[static_cast<std::size_t>(p)].parent) {
    const auto& c = nodes[static_cast<std::size_t>(child)];
    odo_.add_live(p, c.connex_slot_in_parent, dep, &c.y_key_pos);
    dep = static_cast<int>(odo_.levels().size()) - 1;
    path.emplace_back(p, child);
  }
  odo_.add_subtrees(w.node, -1);
  for (const auto& [p, c] : path) odo_.add_subtrees(p, c);
  stats_.ops += odo_.levels().size();
  active_ = true;
}

bool DeltaBatch::next(Tuple& out) {
  if (done_) return false;
  if (engine_->epoch() != epoch_) throw Error(ErrorCode::CursorInvalidated, "engine changed");
  auto& nodes = EngineAccess::nodes(*engine_);
  while (wi_ < witnesses_.size()) {
    if (!active_) start_witness();
    if (odo_.next(stats_.ops)) {
      assemble(*engine_, odo_, out);
      // Entries whose liveness may change are queued for update_live_views.
      auto& queue = EngineAccess::pending_live(*engine_);
      for (const auto& l : odo_.levels()) {
        auto& n = nodes[static_cast<std::size_t>(l.node)];
        if (!n.keeps_live || n.parent < 0) continue;
        auto& y = n.yentries[l.cur];
        if (y.queued || y.live == (sign_ == Sign::Insert)) continue;
        y.queued = true;
        queue.emplace_back(l.node, l.cur);
      }
      record_yield(stats_);
      return true;
    }
    active_ = false;
    ++wi_;
  }
  done_ = true;
  return false;
}

std::optional<Tuple> DeltaBatch::next() {
  Tuple t;
  if (!next(t)) return std::nullopt;
  return t;
}

void complete_update(Engine& engine) {
  if (engine.live_views()) throw std::logic_error("complete_update needs an engine without live views");
  if (engine.in_flight()) EngineAccess::finish(engine);
}

void update_live_views(Engine& engine, DeltaBatch& batch) {
  if (!engine.in_flight()) return;
  Tuple t;
  while (batch.next(t)) {
  }
  EngineAccess::finish(engine);
}

}  // namespace ivm
