#include "ivm/engine.hpp"

#include <algorithm>
#include <sstream>

#include "ivm/error.hpp"

namespace ivm {

using detail::kNone;
using detail::Row;
using detail::YEntry;

namespace {

std::vector<int> positions_of(const std::vector<AttrId>& layout, AttrSet s) {
  std::vector<int> out;
  for (AttrId a : attrs_of(s)) {
    auto it = std::find(layout.begin(), layout.end(), a);
    out.push_back(static_cast<int>(it - layout.begin()));
  }
  return out;
}

template <class Map>
void bucket_push(Map& m, const Tuple& key, std::uint32_t id, std::uint32_t& slot) {
  auto& b = m[key];
  slot = static_cast<std::uint32_t>(b.size());
  b.push_back(id);
}

}  // namespace

Engine::Engine(Query q, FreeConnexJoinTree tree, std::optional<Ring> ring, bool live_views)
    : query_(std::move(q)), tree_(std::move(tree)), ring_(ring), live_views_(live_views) {
  if (auto check = verify_tree(tree_, query_); !check.ok) {
    throw Error(ErrorCode::NotFreeConnex, "invalid join tree: " + check.violation);
  }
  const AttrSet y = query_.output_set;
  nodes_.resize(tree_.nodes.size());
  node_of_relation_.assign(query_.relations.size(), -1);
  for (const auto& tn : tree_.nodes) {
    Node& n = node(tn.id);
    n.id = tn.id;
    n.kind = tn.kind;
    n.relation = tn.relation;
    n.parent = tn.parent;
    n.children = tn.children;
    n.connex = tn.in_connex;
    if (tn.kind == NodeKind::Input) {
      n.attrs = query_.relations[tn.relation].attrs;
      node_of_relation_[tn.relation] = tn.id;
    } else {
      n.attrs = attrs_of(tn.attrs);
    }
    n.key_pos = positions_of(n.attrs, tn.key);
    for (int c : tn.children) {
      n.child_key_pos.push_back(positions_of(n.attrs, tree_.nodes[static_cast<std::size_t>(c)].key));
    }
    if (n.kind == NodeKind::Input) n.child_index.resize(n.children.size());
    if (n.connex) {
      const AttrSet ye = tn.attrs & y;
      n.y_pos = positions_of(n.attrs, ye);
      const auto ylayout = attrs_of(ye);
      n.y_key_pos = positions_of(ylayout, tn.key);
      for (std::size_t i = 0; i < tn.children.size(); ++i) {
        const auto& c = tree_.nodes[static_cast<std::size_t>(tn.children[i])];
        if (c.in_connex) {
          n.connex_children.push_back(c.id);
          n.connex_child_key_ypos.push_back(positions_of(ylayout, c.key));
        } else {
          n.plain_children.push_back(static_cast<int>(i));
        }
      }
      n.keeps_live = !n.connex_children.empty();
      n.live_bucket.resize(n.connex_children.size());
    } else {
      for (std::size_t i = 0; i < tn.children.size(); ++i) n.plain_children.push_back(static_cast<int>(i));
    }
  }
  for (auto& n : nodes_) {
    if (n.parent < 0) continue;
    const Node& p = node(n.parent);
    n.slot_in_parent = static_cast<int>(std::find(p.children.begin(), p.children.end(), n.id) - p.children.begin());
    auto it = std::find(p.connex_children.begin(), p.connex_children.end(), n.id);
    if (it != p.connex_children.end()) n.connex_slot_in_parent = static_cast<int>(it - p.connex_children.begin());
  }
  topdown_ = tree_.preorder();
  for (AttrId a : query_.output) {
    for (int id : topdown_) {
      const auto& tn = tree_.nodes[static_cast<std::size_t>(id)];
      if (!tn.in_connex || !(tn.attrs & attr_bit(a))) continue;
      const auto ylayout = attrs_of(tn.attrs & y);
      out_src_.emplace_back(id, static_cast<int>(std::find(ylayout.begin(), ylayout.end(), a) - ylayout.begin()));
      break;
    }
  }
}

int Engine::node_of(std::string_view relation) const {
  auto r = query_.relation_index(relation);
  if (!r) throw Error(ErrorCode::UnknownRelation, std::string(relation));
  return node_of_relation_[*r];
}

// ---- rows and indexes ----

std::uint32_t Engine::alloc_row(Node& n, Tuple values) {
  std::uint32_t rid;
  if (!n.free_rows.empty()) {
    rid = n.free_rows.back();
    n.free_rows.pop_back();
    n.rows[rid] = Row{};
  } else {
    rid = static_cast<std::uint32_t>(n.rows.size());
    n.rows.emplace_back();
  }
  Row& row = n.rows[rid];
  row.values = std::move(values);
  row.slot.assign(n.kind == NodeKind::Input ? n.children.size() : 0, kNone);
  if (ring_) row.weight = row.ws = ring_->one();
  n.row_of.emplace(row.values, rid);
  return rid;
}

void Engine::free_row(Node& n, std::uint32_t rid) {
  n.row_of.erase(n.rows[rid].values);
  n.rows[rid] = Row{};
  n.free_rows.push_back(rid);
}

void Engine::index_row(Node& n, std::uint32_t rid) {
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    Tuple key = project(n.rows[rid].values, n.child_key_pos[i]);
    if (!joinable(key)) continue;
    bucket_push(n.child_index[i], key, rid, n.rows[rid].slot[i]);
  }
}

void Engine::unindex_row(Node& n, std::uint32_t rid) {
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const std::uint32_t slot = n.rows[rid].slot[i];
    if (slot == kNone) continue;
    auto it = n.child_index[i].find(project(n.rows[rid].values, n.child_key_pos[i]));
    auto& b = it->second;
    const std::uint32_t moved = b.back();
    b[slot] = moved;
    n.rows[moved].slot[i] = slot;
    b.pop_back();
    if (b.empty()) n.child_index[i].erase(it);
  }
}

// ---- y-projection entries and their buckets ----

std::uint32_t Engine::acquire_yentry(Node& n, const Tuple& y) {
  if (auto it = n.yentry_of.find(y); it != n.yentry_of.end()) return it->second;
  std::uint32_t id;
  if (!n.free_y.empty()) {
    id = n.free_y.back();
    n.free_y.pop_back();
    n.yentries[id] = YEntry{};
  } else {
    id = static_cast<std::uint32_t>(n.yentries.size());
    n.yentries.emplace_back();
  }
  YEntry& e = n.yentries[id];
  e.values = y;
  e.in_use = true;
  e.live_slot.assign(n.connex_children.size(), kNone);
  if (ring_) e.weight = ring_->zero();
  n.yentry_of.emplace(y, id);
  return id;
}

void Engine::release_yentry(Node& n, std::uint32_t id) {
  n.yentry_of.erase(n.yentries[id].values);
  n.yentries[id] = YEntry{};
  n.free_y.push_back(id);
}

void Engine::enum_add(Node& n, std::uint32_t id) {
  bucket_push(n.enum_bucket, project(n.yentries[id].values, n.y_key_pos), id, n.yentries[id].enum_slot);
}

void Engine::enum_remove(Node& n, std::uint32_t id) {
  auto it = n.enum_bucket.find(project(n.yentries[id].values, n.y_key_pos));
  auto& b = it->second;
  const std::uint32_t slot = n.yentries[id].enum_slot;
  const std::uint32_t moved = b.back();
  b[slot] = moved;
  n.yentries[moved].enum_slot = slot;
  b.pop_back();
  n.yentries[id].enum_slot = kNone;
  if (b.empty()) n.enum_bucket.erase(it);
}

void Engine::live_add(Node& n, std::uint32_t id) {
  if (!live_views_) return;
  ++n.live_size;
  for (std::size_t j = 0; j < n.connex_children.size(); ++j) {
    bucket_push(n.live_bucket[j], project(n.yentries[id].values, n.connex_child_key_ypos[j]), id,
                n.yentries[id].live_slot[j]);
  }
}

void Engine::live_remove(Node& n, std::uint32_t id) {
  if (!live_views_) return;
  --n.live_size;
  for (std::size_t j = 0; j < n.connex_children.size(); ++j) {
    auto it = n.live_bucket[j].find(project(n.yentries[id].values, n.connex_child_key_ypos[j]));
    auto& b = it->second;
    const std::uint32_t slot = n.yentries[id].live_slot[j];
    const std::uint32_t moved = b.back();
    b[slot] = moved;
    n.yentries[moved].live_slot[j] = slot;
    b.pop_back();
    n.yentries[id].live_slot[j] = kNone;
    if (b.empty()) n.live_bucket[j].erase(it);
  }
}

// ---- propagation ----

PropagationRecord Engine::apply(const UpdateEvent& ev) {
  if (in_flight_) throw Error(ErrorCode::UpdateInFlight, "previous update not finished");
  PropagationRecord rec;
  rec.sign = ev.sign;
  const auto rel = query_.relation_index(ev.relation);
  if (!rel) throw Error(ErrorCode::UnknownRelation, ev.relation);
  const Relation& r = query_.relations[*rel];
  if (ev.tuple.size() != r.attrs.size()) {
    throw Error(ErrorCode::ParseError, "arity mismatch for relation " + ev.relation);
  }
  const int e = node_of_relation_[*rel];
  rec.origin = e;
  Node& n = node(e);

  auto it = n.row_of.find(ev.tuple);
  if (ev.sign == Sign::Insert) {
    if (it != n.row_of.end() || !r.accepts(ev.tuple)) {
      rec.ignored = true;
      return rec;
    }
  } else if (it == n.row_of.end()) {
    rec.ignored = true;
    return rec;
  }

  std::optional<RingValue> weight;
  if (ring_) {
    if (ev.annotation) {
      ring_->check(*ev.annotation);
      weight = *ev.annotation;
    } else {
      weight = r.annotation_column ? ring_->lift(ev.tuple[*r.annotation_column]) : ring_->one();
    }
  }

  ++epoch_;
  rec_ = &rec;
  if (ev.sign == Sign::Insert) {
    const std::uint32_t rid = alloc_row(n, ev.tuple);
    if (weight) n.rows[rid].weight = *weight;
    ++n.base_size;
    index_row(n, rid);
    int count = 0;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const Tuple key = project(ev.tuple, n.child_key_pos[i]);
      if (joinable(key) && node(n.children[i]).vp.count(key)) {
        ++count;
        ++rec.counter_changes;
      }
    }
    n.rows[rid].count = count;
    if (static_cast<std::size_t>(count) == n.children.size()) enter_vs(e, rid);
  } else {
    const std::uint32_t rid = it->second;
    if (n.rows[rid].in_vs) leave_vs(e, rid);
    unindex_row(n, rid);
    free_row(n, rid);
    --n.base_size;
  }
  rec_ = nullptr;
  counter_total_ += rec.counter_changes;
  rec.epoch = epoch_;
  in_flight_ = true;
  flight_sign_ = ev.sign;
  return rec;
}

RingValue Engine::compute_ws(const Node& n, const Row& row) const {
  RingValue w = n.kind == NodeKind::Input ? row.weight : ring_->one();
  for (int i : n.plain_children) {
    const Node& c = node(n.children[static_cast<std::size_t>(i)]);
    w = ring_->mul(w, c.vp.at(project(row.values, n.child_key_pos[static_cast<std::size_t>(i)])).weight);
  }
  return w;
}

void Engine::enter_vs(int e, std::uint32_t rid) {
  Node& n = node(e);
  Row& row = n.rows[rid];
  row.in_vs = true;
  ++n.vs_size;
  rec_->vs_changes.push_back({e, row.values, Sign::Insert});
  if (ring_) row.ws = compute_ws(n, row);
  if (n.connex) {
    const std::uint32_t yid = acquire_yentry(n, project(row.values, n.y_pos));
    n.rows[rid].yentry = yid;
    YEntry& ye = n.yentries[yid];
    ++ye.count;
    if (ring_) ye.weight = ring_->add(ye.weight, row.ws);
    if (ye.count == 1) rec_->candidates.push_back({e, yid});
    if (n.parent < 0) {
      pending_visible_.push_back({e, yid, +1});
    } else if (++ye.visible == 1) {
      enum_add(n, yid);
    }
  }
  if (n.parent < 0) return;
  Tuple key = project(n.rows[rid].values, n.key_pos);
  if (!joinable(key)) return;
  auto& vpe = n.vp[key];
  ++vpe.count;
  ++rec_->counter_changes;
  if (ring_) vpe.weight = vpe.count == 1 ? n.rows[rid].ws : ring_->add(vpe.weight, n.rows[rid].ws);
  if (vpe.count == 1) {
    rec_->vp_changes.push_back({e, key, Sign::Insert});
    p_update(n.parent, n.slot_in_parent, key, Sign::Insert);
  } else if (ring_ && !n.connex) {
    value_changed(e, key);
  }
}

void Engine::leave_vs(int e, std::uint32_t rid) {
  Node& n = node(e);
  Row& row = n.rows[rid];
  row.in_vs = false;
  --n.vs_size;
  rec_->vs_changes.push_back({e, row.values, Sign::Delete});
  if (n.connex) {
    const std::uint32_t yid = row.yentry;
    row.yentry = kNone;
    YEntry& ye = n.yentries[yid];
    --ye.count;
    if (ring_) ye.weight = ring_->sub(ye.weight, row.ws);
    if (ye.count == 0) rec_->candidates.push_back({e, yid});
    pending_visible_.push_back({e, yid, -1});
  }
  if (n.parent < 0) return;
  Tuple key = project(row.values, n.key_pos);
  if (!joinable(key)) return;
  auto it = n.vp.find(key);
  --it->second.count;
  ++rec_->counter_changes;
  if (ring_) it->second.weight = ring_->sub(it->second.weight, row.ws);
  if (it->second.count == 0) {
    n.vp.erase(it);
    rec_->vp_changes.push_back({e, key, Sign::Delete});
    p_update(n.parent, n.slot_in_parent, key, Sign::Delete);
  } else if (ring_ && !n.connex) {
    value_changed(e, key);
  }
}

void Engine::p_update(int p, int child_slot, const Tuple& key, Sign sign) {
  Node& n = node(p);
  const auto full = static_cast<std::int32_t>(n.children.size());
  if (n.kind == NodeKind::Generalized) {
    std::uint32_t rid;
    if (auto it = n.row_of.find(key); it != n.row_of.end()) {
      rid = it->second;
    } else {
      rid = alloc_row(n, key);
    }
    ++rec_->counter_changes;
    if (sign == Sign::Insert) {
      if (++n.rows[rid].count == full) enter_vs(p, rid);
    } else {
      if (n.rows[rid].count-- == full) leave_vs(p, rid);
      if (n.rows[rid].count == 0) free_row(n, rid);
    }
    return;
  }
  auto it = n.child_index[static_cast<std::size_t>(child_slot)].find(key);
  if (it == n.child_index[static_cast<std::size_t>(child_slot)].end()) return;
  // Recursion only touches ancestors, so this bucket is stable while we scan it.
  const auto& bucket = it->second;
  for (std::size_t i = 0; i < bucket.size(); ++i) {
    const std::uint32_t rid = bucket[i];
    ++rec_->counter_changes;
    if (sign == Sign::Insert) {
      if (++n.rows[rid].count == full) enter_vs(p, rid);
    } else {
      if (n.rows[rid].count-- == full) leave_vs(p, rid);
    }
  }
}

// The weight of vp(child)[key] changed without a membership change.
void Engine::value_changed(int child, const Tuple& key) {
  const Node& c = node(child);
  const int p = c.parent;
  Node& n = node(p);
  auto touch = [&](std::uint32_t rid) {
    Row& row = n.rows[rid];
    if (!row.in_vs) return;
    const RingValue fresh = compute_ws(n, row);
    const RingValue delta = ring_->sub(fresh, row.ws);
    if (ring_->is_zero(delta)) return;
    row.ws = fresh;
    if (n.connex) {
      auto& ye = n.yentries[row.yentry];
      ye.weight = ring_->add(ye.weight, delta);
    }
    if (n.parent < 0) return;
    Tuple pk = project(row.values, n.key_pos);
    if (!joinable(pk)) return;
    auto& vpe = n.vp.at(pk);
    vpe.weight = ring_->add(vpe.weight, delta);
    if (!n.connex) value_changed(p, pk);
  };
  if (n.kind == NodeKind::Generalized) {
    if (auto it = n.row_of.find(key); it != n.row_of.end()) touch(it->second);
    return;
  }
  auto& index = n.child_index[static_cast<std::size_t>(c.slot_in_parent)];
  auto it = index.find(key);
  if (it == index.end()) return;
  for (std::uint32_t rid : it->second) touch(rid);
}

// ---- introspection ----

std::vector<ViewSize> Engine::view_sizes() const {
  std::vector<ViewSize> out;
  for (const auto& n : nodes_) {
    ViewSize s;
    s.base = n.kind == NodeKind::Input ? n.base_size : 0;
    s.rows = n.kind == NodeKind::Input ? n.base_size : n.row_of.size();
    s.vs = n.vs_size;
    s.vp = n.vp.size();
    s.live = n.keeps_live || n.parent < 0 ? n.live_size : 0;
    out.push_back(s);
  }
  return out;
}

std::vector<RowView> Engine::rows(int id) const {
  std::vector<RowView> out;
  for (const auto& [values, rid] : node(id).row_of) {
    const Row& row = node(id).rows[rid];
    out.push_back({values, row.count, row.in_vs, row.weight, row.ws});
  }
  std::sort(out.begin(), out.end(), [](const RowView& a, const RowView& b) { return a.values < b.values; });
  return out;
}

std::vector<Tuple> Engine::vs(int id) const {
  std::vector<Tuple> out;
  for (const auto& [values, rid] : node(id).row_of) {
    if (node(id).rows[rid].in_vs) out.push_back(values);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<Tuple, int>> Engine::vp(int id) const {
  std::vector<std::pair<Tuple, int>> out;
  for (const auto& [key, e] : node(id).vp) out.emplace_back(key, e.count);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<RingValue> Engine::vp_weight(int id, const Tuple& key) const {
  auto it = node(id).vp.find(key);
  if (it == node(id).vp.end()) return std::nullopt;
  return it->second.weight;
}

std::vector<Tuple> Engine::live(int id) const {
  const Node& n = node(id);
  std::vector<Tuple> out;
  for (const auto& e : n.yentries) {
    if (!e.in_use) continue;
    if (n.parent < 0 ? e.visible > 0 : e.live) out.push_back(e.values);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Engine::audit() const {
  std::ostringstream err;
  for (const auto& n : nodes_) {
    std::size_t vs_count = 0;
    detail::TupleMap<int> expect_vp;
    detail::TupleMap<int> expect_y;
    for (const auto& [values, rid] : n.row_of) {
      const Row& row = n.rows[rid];
      int count = 0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const Tuple key = project(values, n.child_key_pos[i]);
        if (joinable(key) && node(n.children[i]).vp.count(key)) ++count;
      }
      if (count != row.count) err << "node " << n.id << ": stale count for " << to_string(values) << "\n";
      const bool in = static_cast<std::size_t>(count) == n.children.size();
      if (in != row.in_vs) err << "node " << n.id << ": vs membership wrong for " << to_string(values) << "\n";
      if (!row.in_vs) continue;
      ++vs_count;
      if (n.parent >= 0) {
        const Tuple key = project(values, n.key_pos);
        if (joinable(key)) ++expect_vp[key];
      }
      if (n.connex) ++expect_y[project(values, n.y_pos)];
    }
    if (vs_count != n.vs_size) err << "node " << n.id << ": vs size drift\n";
    if (expect_vp.size() != n.vp.size()) err << "node " << n.id << ": vp size mismatch\n";
    for (const auto& [key, c] : expect_vp) {
      auto it = n.vp.find(key);
      if (it == n.vp.end() || it->second.count != c) {
        err << "node " << n.id << ": vp count wrong for " << to_string(key) << "\n";
      }
    }
    if (n.connex) {
      for (const auto& [y, c] : expect_y) {
        auto it = n.yentry_of.find(y);
        if (it == n.yentry_of.end() || n.yentries[it->second].count != c) {
          err << "node " << n.id << ": y-projection count wrong for " << to_string(y) << "\n";
        }
      }
      for (const auto& e : n.yentries) {
        if (e.in_use && e.count > 0 && !expect_y.count(e.values)) {
          err << "node " << n.id << ": phantom y-projection " << to_string(e.values) << "\n";
        }
        if (!in_flight_ && e.in_use && e.visible != e.count) {
          err << "node " << n.id << ": visibility lag outside an update\n";
        }
      }
    }
  }
  return err.str();
}

}  // namespace ivm
