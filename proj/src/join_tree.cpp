#include "ivm/join_tree.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "ivm/error.hpp"

namespace ivm {

namespace {

using Mask = std::uint32_t;  // set of relation indexes

constexpr std::size_t kEnumerationCap = 20000;

void for_each_partition(Mask mask, std::vector<Mask>& blocks,
                        const std::function<void(const std::vector<Mask>&)>& fn) {
  if (mask == 0) {
    fn(blocks);
    return;
  }
  const Mask low = mask & (~mask + 1);
  const Mask rest = mask & ~low;
  // Every subset of `rest`, joined with the lowest element, forms the next block.
  Mask sub = rest;
  while (true) {
    blocks.push_back(low | sub);
    for_each_partition(rest & ~sub, blocks, fn);
    blocks.pop_back();
    if (sub == 0) break;
    sub = (sub - 1) & rest;
  }
}

class Hypergraph {
 public:
  explicit Hypergraph(const Query& q) {
    for (const auto& r : q.relations) edges_.push_back(r.attr_set);
    full_ = static_cast<Mask>((std::uint64_t{1} << edges_.size()) - 1);
  }

  AttrSet attrs(Mask m) const {
    AttrSet s = 0;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (m & (Mask{1} << i)) s |= edges_[i];
    }
    return s;
  }
  // Attributes a block shares with the rest of the query.
  AttrSet iface(Mask m) const { return attrs(m) & attrs(full_ & ~m); }
  AttrSet edge(std::size_t i) const { return edges_[i]; }
  Mask full() const { return full_; }
  std::size_t size() const { return edges_.size(); }

 private:
  std::vector<AttrSet> edges_;
  Mask full_ = 0;
};

template <class T, class Fn>
void for_each_product(const std::vector<const std::vector<T>*>& lists, std::vector<T>& pick,
                      const Fn& fn) {
  if (pick.size() == lists.size()) {
    fn(pick);
    return;
  }
  for (const auto& item : *lists[pick.size()]) {
    pick.push_back(item);
    for_each_product(lists, pick, fn);
    pick.pop_back();
  }
}

// ---- shapes: the recursive form produced by the enumerator ----

struct Shape;
using ShapePtr = std::shared_ptr<const Shape>;

struct Shape {
  bool generalized = false;
  std::size_t relation = 0;
  AttrSet attrs = 0;
  std::vector<ShapePtr> kids;
};

class ShapeEnumerator {
 public:
  ShapeEnumerator(const Query& q, std::size_t cap) : g_(q), cap_(cap) {}

  // Trees over the relations in `mask`. Generalized roots are allowed only at the
  // top of the tree or below another generalized node.
  const std::vector<ShapePtr>& trees(Mask mask, bool gen_root) {
    const auto key = std::make_pair(mask, gen_root);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<ShapePtr> out;
    input_rooted(mask, out);
    if (gen_root && std::popcount(mask) >= 2) generalized_rooted(mask, out);
    return memo_.emplace(key, std::move(out)).first->second;
  }

  bool truncated() const { return truncated_; }

 private:
  bool full(const std::vector<ShapePtr>& out) {
    if (out.size() < cap_) return false;
    truncated_ = true;
    return true;
  }

  void input_rooted(Mask mask, std::vector<ShapePtr>& out) {
    const AttrSet need = g_.iface(mask);
    for (std::size_t r = 0; r < g_.size(); ++r) {
      const Mask bit = Mask{1} << r;
      if (!(mask & bit) || !subset_of(need, g_.edge(r))) continue;
      const Mask rest = mask & ~bit;
      if (rest == 0) {
        out.push_back(std::make_shared<Shape>(Shape{false, r, g_.edge(r), {}}));
        if (full(out)) return;
        continue;
      }
      std::vector<Mask> blocks;
      for_each_partition(rest, blocks, [&](const std::vector<Mask>& part) {
        if (full(out)) return;
        std::vector<const std::vector<ShapePtr>*> lists;
        for (Mask b : part) {
          if (!subset_of(g_.iface(b), g_.edge(r))) return;
        }
        for (Mask b : part) {
          const auto& l = trees(b, false);
          if (l.empty()) return;
          lists.push_back(&l);
        }
        std::vector<ShapePtr> pick;
        for_each_product(lists, pick, [&](const std::vector<ShapePtr>& kids) {
          if (full(out)) return;
          out.push_back(std::make_shared<Shape>(Shape{false, r, g_.edge(r), kids}));
        });
      });
      if (full(out)) return;
    }
  }

  void generalized_rooted(Mask mask, std::vector<ShapePtr>& out) {
    const AttrSet need = g_.iface(mask);
    std::vector<Mask> blocks;
    for_each_partition(mask, blocks, [&](const std::vector<Mask>& part) {
      if (part.size() < 2 || full(out)) return;
      std::vector<const std::vector<ShapePtr>*> lists;
      for (Mask b : part) {
        const auto& l = trees(b, true);
        if (l.empty()) return;
        lists.push_back(&l);
      }
      std::vector<ShapePtr> pick;
      for_each_product(lists, pick, [&](const std::vector<ShapePtr>& kids) {
        if (full(out)) return;
        AttrSet g = ~AttrSet{0};
        for (const auto& k : kids) g &= k->attrs;
        if (!subset_of(need, g)) return;
        for (std::size_t i = 0; i < kids.size(); ++i) {
          if (!subset_of(g_.iface(part[i]), g)) return;
          // A generalized child equal to its parent is redundant.
          if (kids[i]->generalized && kids[i]->attrs == g) return;
        }
        out.push_back(std::make_shared<Shape>(Shape{true, 0, g, kids}));
      });
    });
  }

  Hypergraph g_;
  std::size_t cap_;
  bool truncated_ = false;
  std::map<std::pair<Mask, bool>, std::vector<ShapePtr>> memo_;
};

std::string canonical_of(const FreeConnexJoinTree& t, int id, const Query& q) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  std::string s = n.kind == NodeKind::Input ? q.relations[n.relation].name
                                            : "[" + q.describe_attrs(n.attrs) + "]";
  if (n.children.empty()) return s;
  std::vector<std::string> kids;
  for (int c : n.children) kids.push_back(canonical_of(t, c, q));
  std::sort(kids.begin(), kids.end());
  s += "(";
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (i) s += " ";
    s += kids[i];
  }
  return s + ")";
}

FreeConnexJoinTree from_shape(const ShapePtr& root) {
  FreeConnexJoinTree t;
  std::function<int(const ShapePtr&, int)> add = [&](const ShapePtr& s, int parent) {
    const int id = static_cast<int>(t.nodes.size());
    TreeNode n;
    n.id = id;
    n.kind = s->generalized ? NodeKind::Generalized : NodeKind::Input;
    n.relation = s->relation;
    n.attrs = s->attrs;
    n.parent = parent;
    t.nodes.push_back(n);
    for (const auto& k : s->kids) {
      const int c = add(k, id);
      t.nodes[static_cast<std::size_t>(id)].children.push_back(c);
    }
    return id;
  };
  t.root = add(root, -1);
  assign_keys(t);
  return t;
}

bool covers_output(const FreeConnexJoinTree& t, AttrSet y) {
  AttrSet covered = 0;
  for (const auto& n : t.nodes) {
    if (n.in_connex) covered |= n.attrs;
  }
  return subset_of(y, covered);
}

// Renumbers nodes in preorder with children sorted by canonical form, so equal
// trees get identical node ids.
FreeConnexJoinTree normalize(const FreeConnexJoinTree& t, const Query& q) {
  FreeConnexJoinTree out;
  std::function<int(int, int)> add = [&](int old, int parent) {
    const int id = static_cast<int>(out.nodes.size());
    TreeNode n = t.nodes[static_cast<std::size_t>(old)];
    n.id = id;
    n.parent = parent;
    n.children.clear();
    out.nodes.push_back(n);
    std::vector<std::pair<std::string, int>> kids;
    for (int c : t.nodes[static_cast<std::size_t>(old)].children) {
      kids.emplace_back(canonical_of(t, c, q), c);
    }
    std::sort(kids.begin(), kids.end());
    for (const auto& [_, c] : kids) {
      const int nc = add(c, id);
      out.nodes[static_cast<std::size_t>(id)].children.push_back(nc);
    }
    return id;
  };
  out.root = add(t.root, -1);
  return out;
}

std::vector<FreeConnexJoinTree> all_trees(const Query& q, std::size_t cap) {
  if (q.relations.size() > 20) throw Error(ErrorCode::MalformedQuery, "too many relations");
  ShapeEnumerator en(q, cap);
  Hypergraph g(q);
  std::vector<ShapePtr> tops = en.trees(g.full(), true);
  // A single generalized node over root ∩ y placed above an input root.
  const std::size_t base = tops.size();
  for (std::size_t i = 0; i < base; ++i) {
    const auto& s = tops[i];
    if (s->generalized) continue;
    const AttrSet gattrs = s->attrs & q.output_set;
    if (gattrs != 0 && gattrs != s->attrs) {
      tops.push_back(std::make_shared<Shape>(Shape{true, 0, gattrs, {s}}));
    }
  }
  std::set<std::string> seen;
  std::vector<std::pair<std::tuple<int, std::size_t, std::string>, FreeConnexJoinTree>> keyed;
  for (const auto& s : tops) {
    FreeConnexJoinTree t = from_shape(s);
    mark_maximal_connex(t, q.output_set);
    if (!covers_output(t, q.output_set)) continue;
    t = normalize(t, q);
    std::string canon = t.canonical(q);
    if (!seen.insert(canon).second) continue;
    keyed.push_back({{t.height(), t.generalized_count(), canon}, std::move(t)});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FreeConnexJoinTree> out;
  for (auto& [_, t] : keyed) out.push_back(std::move(t));
  return out;
}

// ---- signatures: what the parent needs to know about a subtree ----

struct Signature {
  AttrSet root = 0;
  bool generalized = false;
  AttrSet covered = 0;  // y-attributes reachable through connex nodes if the root is connex
  int height = 0;
  friend auto operator<=>(const Signature&, const Signature&) = default;
};

class SignatureSearch {
 public:
  SignatureSearch(const Query& q, AttrSet y) : g_(q), y_(y) {}

  const std::vector<Signature>& sigs(Mask mask, bool gen_root) {
    const auto key = std::make_pair(mask, gen_root);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::set<Signature> out;
    const AttrSet need = g_.iface(mask);
    for (std::size_t r = 0; r < g_.size(); ++r) {
      const Mask bit = Mask{1} << r;
      if (!(mask & bit) || !subset_of(need, g_.edge(r))) continue;
      const AttrSet ra = g_.edge(r);
      const Mask rest = mask & ~bit;
      if (rest == 0) {
        out.insert({ra, false, ra & y_, 1});
        continue;
      }
      std::vector<Mask> blocks;
      for_each_partition(rest, blocks, [&](const std::vector<Mask>& part) {
        std::vector<const std::vector<Signature>*> lists;
        for (Mask b : part) {
          if (!subset_of(g_.iface(b), ra)) return;
          const auto& l = sigs(b, false);
          if (l.empty()) return;
          lists.push_back(&l);
        }
        std::vector<Signature> pick;
        for_each_product(lists, pick, [&](const std::vector<Signature>& kids) {
          out.insert(combine(ra, false, kids));
        });
      });
    }
    if (gen_root && std::popcount(mask) >= 2) {
      std::vector<Mask> blocks;
      for_each_partition(mask, blocks, [&](const std::vector<Mask>& part) {
        if (part.size() < 2) return;
        std::vector<const std::vector<Signature>*> lists;
        for (Mask b : part) {
          const auto& l = sigs(b, true);
          if (l.empty()) return;
          lists.push_back(&l);
        }
        std::vector<Signature> pick;
        for_each_product(lists, pick, [&](const std::vector<Signature>& kids) {
          AttrSet gattrs = ~AttrSet{0};
          for (const auto& k : kids) gattrs &= k.root;
          if (!subset_of(need, gattrs)) return;
          for (std::size_t i = 0; i < kids.size(); ++i) {
            if (!subset_of(g_.iface(part[i]), gattrs)) return;
            if (kids[i].generalized && kids[i].root == gattrs) return;
          }
          out.insert(combine(gattrs, true, kids));
        });
      });
    }
    return memo_.emplace(key, std::vector<Signature>(out.begin(), out.end())).first->second;
  }

  Mask full() const { return g_.full(); }

 private:
  Signature combine(AttrSet root, bool generalized, const std::vector<Signature>& kids) const {
    Signature s{root, generalized, root & y_, generalized ? 0 : 1};
    int h = 0;
    for (const auto& k : kids) {
      if (subset_of(k.root & root, y_)) s.covered |= k.covered;
      h = std::max(h, k.height);
    }
    s.height += h;
    return s;
  }

  Hypergraph g_;
  AttrSet y_;
  std::map<std::pair<Mask, bool>, std::vector<Signature>> memo_;
};

}  // namespace

int FreeConnexJoinTree::height() const {
  int best = 0;
  std::function<void(int, int)> walk = [&](int id, int depth) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    const int d = depth + (n.kind == NodeKind::Input ? 1 : 0);
    best = std::max(best, d);
    for (int c : n.children) walk(c, d);
  };
  if (!nodes.empty()) walk(root, 0);
  return best;
}

std::size_t FreeConnexJoinTree::generalized_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.kind == NodeKind::Generalized; }));
}

std::string FreeConnexJoinTree::canonical(const Query& q) const {
  return nodes.empty() ? std::string() : canonical_of(*this, root, q);
}

std::optional<int> FreeConnexJoinTree::node_of_relation(std::size_t relation) const {
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Input && n.relation == relation) return n.id;
  }
  return std::nullopt;
}

std::vector<int> FreeConnexJoinTree::preorder() const {
  std::vector<int> out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& kids = nodes[static_cast<std::size_t>(id)].children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

int FreeConnexJoinTree::input_depth(int id) const {
  int d = 0;
  for (int p = nodes[static_cast<std::size_t>(id)].parent; p >= 0;
       p = nodes[static_cast<std::size_t>(p)].parent) {
    if (nodes[static_cast<std::size_t>(p)].kind == NodeKind::Input) ++d;
  }
  return d;
}

bool FreeConnexJoinTree::is_strict_descendant(int id, int ancestor) const {
  for (int p = nodes[static_cast<std::size_t>(id)].parent; p >= 0;
       p = nodes[static_cast<std::size_t>(p)].parent) {
    if (p == ancestor) return true;
  }
  return false;
}

void assign_keys(FreeConnexJoinTree& t) {
  for (auto& n : t.nodes) {
    n.key = n.parent < 0 ? 0 : n.attrs & t.nodes[static_cast<std::size_t>(n.parent)].attrs;
  }
}

void mark_maximal_connex(FreeConnexJoinTree& t, AttrSet y) {
  for (int id : t.preorder()) {
    auto& n = t.nodes[static_cast<std::size_t>(id)];
    n.in_connex = n.parent < 0 ||
                  (t.nodes[static_cast<std::size_t>(n.parent)].in_connex && subset_of(n.key, y));
  }
}

FreeConnexJoinTree build_tree(const Query& q, const std::vector<NodeSpec>& specs) {
  FreeConnexJoinTree t;
  t.root = -1;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    TreeNode n;
    n.id = static_cast<int>(i);
    n.parent = s.parent;
    if (!s.relation.empty()) {
      auto r = q.relation_index(s.relation);
      if (!r) throw Error(ErrorCode::UnknownRelation, s.relation);
      n.kind = NodeKind::Input;
      n.relation = *r;
      n.attrs = q.relations[*r].attr_set;
    } else {
      n.kind = NodeKind::Generalized;
      for (const auto& a : s.attrs) {
        auto id = q.attr(a);
        if (!id) throw Error(ErrorCode::MalformedQuery, "unknown attribute '" + a + "'");
        n.attrs |= attr_bit(*id);
      }
    }
    if (s.parent < 0) t.root = n.id;
    t.nodes.push_back(n);
  }
  for (const auto& n : t.nodes) {
    if (n.parent >= 0) t.nodes[static_cast<std::size_t>(n.parent)].children.push_back(n.id);
  }
  if (t.root < 0) throw Error(ErrorCode::MalformedQuery, "tree without a root");
  assign_keys(t);
  mark_maximal_connex(t, q.output_set);
  return t;
}

TreeCheck verify_tree(const FreeConnexJoinTree& t, const Query& q) {
  auto fail = [](std::string why) { return TreeCheck{false, std::move(why)}; };
  const auto n = t.nodes.size();
  if (n == 0 || t.root < 0 || static_cast<std::size_t>(t.root) >= n) return fail("structure: no root");
  // Structure: parent links form a single tree rooted at `root`.
  std::vector<int> seen(n, 0);
  for (int id : t.preorder()) {
    if (id < 0 || static_cast<std::size_t>(id) >= n || seen[static_cast<std::size_t>(id)]++) {
      return fail("structure: not a tree");
    }
    for (int c : t.nodes[static_cast<std::size_t>(id)].children) {
      if (c < 0 || static_cast<std::size_t>(c) >= n || t.nodes[static_cast<std::size_t>(c)].parent != id) {
        return fail("structure: inconsistent parent link");
      }
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(n)) {
    return fail("structure: unreachable node");
  }
  if (t.nodes[static_cast<std::size_t>(t.root)].parent != -1) return fail("structure: root has a parent");

  // cover
  std::vector<int> placed(q.relations.size(), 0);
  for (const auto& node : t.nodes) {
    if (node.kind == NodeKind::Input) {
      if (node.relation >= q.relations.size()) return fail("cover: unknown relation");
      if (node.attrs != q.relations[node.relation].attr_set) {
        return fail("cover: attributes of " + q.relations[node.relation].name + " differ");
      }
      ++placed[node.relation];
    } else if (node.children.empty()) {
      return fail("cover: generalized leaf " + q.describe_attrs(node.attrs));
    }
  }
  for (std::size_t r = 0; r < placed.size(); ++r) {
    if (placed[r] != 1) return fail("cover: relation " + q.relations[r].name + " placed " +
                                    std::to_string(placed[r]) + " times");
  }

  // connect: every attribute has exactly one topmost node containing it.
  for (AttrId a : attrs_of(q.all_attrs())) {
    int tops = 0;
    for (const auto& node : t.nodes) {
      if (!(node.attrs & attr_bit(a))) continue;
      if (node.parent < 0 || !(t.nodes[static_cast<std::size_t>(node.parent)].attrs & attr_bit(a))) ++tops;
    }
    if (tops != 1) return fail("connect: " + q.attr_names[a]);
  }

  for (const auto& node : t.nodes) {
    if (node.kind != NodeKind::Generalized) continue;
    for (int c : node.children) {
      if (!subset_of(node.attrs, t.nodes[static_cast<std::size_t>(c)].attrs)) {
        return fail("guard: " + q.describe_attrs(node.attrs));
      }
    }
    for (int p = node.parent; p >= 0; p = t.nodes[static_cast<std::size_t>(p)].parent) {
      if (t.nodes[static_cast<std::size_t>(p)].kind == NodeKind::Input) {
        return fail("above: " + q.describe_attrs(node.attrs));
      }
    }
  }

  for (const auto& node : t.nodes) {
    const AttrSet expect =
        node.parent < 0 ? 0 : node.attrs & t.nodes[static_cast<std::size_t>(node.parent)].attrs;
    if (node.key != expect) return fail("structure: stale key");
  }

  // connex
  if (!t.nodes[static_cast<std::size_t>(t.root)].in_connex) return fail("connex: root not in subtree");
  AttrSet covered = 0;
  for (const auto& node : t.nodes) {
    if (!node.in_connex) continue;
    if (node.parent >= 0 && !t.nodes[static_cast<std::size_t>(node.parent)].in_connex) {
      return fail("connex: subtree not connected");
    }
    if (!subset_of(node.key, q.output_set)) return fail("connex: key outside output");
    covered |= node.attrs;
  }
  if (!subset_of(q.output_set, covered)) return fail("connex: output not covered");
  return {};
}

std::uint64_t score_tree(const FreeConnexJoinTree& t, const Query& q, const UpdateCounts& counts) {
  std::uint64_t s = 0;
  for (const auto& node : t.nodes) {
    if (node.kind != NodeKind::Input) continue;
    std::uint64_t n = 1;
    if (auto it = counts.find(q.relations[node.relation].name); it != counts.end()) n = it->second;
    s += static_cast<std::uint64_t>(t.input_depth(node.id)) * n;
  }
  return s;
}

std::vector<FreeConnexJoinTree> enumerate_trees(const Query& q, std::size_t limit) {
  auto trees = all_trees(q, kEnumerationCap);
  if (trees.empty()) {
    if (!classify(q).acyclic) throw Error(ErrorCode::NotAcyclic, "query is cyclic");
    throw Error(ErrorCode::NotFreeConnex, "no free-connex join tree");
  }
  if (trees.size() > limit) trees.resize(limit);
  return trees;
}

FreeConnexJoinTree choose_plan_tree(const Query& q, const UpdateCounts& counts) {
  auto trees = enumerate_trees(q, kEnumerationCap);
  std::size_t best = 0;
  std::uint64_t best_score = score_tree(trees[0], q, counts);
  // Candidates are already sorted by the tie-break order.
  for (std::size_t i = 1; i < trees.size(); ++i) {
    const auto s = score_tree(trees[i], q, counts);
    if (s < best_score) {
      best = i;
      best_score = s;
    }
  }
  return trees[best];
}

std::string render_tree(const FreeConnexJoinTree& t, const Query& q) {
  std::ostringstream os;
  std::function<void(int, int)> walk = [&](int id, int depth) {
    const auto& n = t.nodes[static_cast<std::size_t>(id)];
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (n.kind == NodeKind::Input) {
      os << "input " << q.relations[n.relation].name;
    } else {
      os << "generalized";
    }
    os << " attrs=" << q.describe_attrs(n.attrs) << " key=" << q.describe_attrs(n.key)
       << (n.in_connex ? " connex" : "") << "\n";
    for (int c : n.children) walk(c, depth + 1);
  };
  walk(t.root, 0);
  return os.str();
}

std::optional<int> min_free_connex_height(const Query& q, AttrSet y) {
  if (q.relations.size() > 20) throw Error(ErrorCode::MalformedQuery, "too many relations");
  SignatureSearch search(q, y);
  std::optional<int> best;
  for (const auto& s : search.sigs(search.full(), true)) {
    if (subset_of(y, s.covered) && (!best || s.height < *best)) best = s.height;
  }
  return best;
}

QueryClass classify(const Query& q) {
  QueryClass c;
  c.acyclic = min_free_connex_height(q, q.all_attrs()).has_value();
  if (!c.acyclic) return c;
  const auto h = min_free_connex_height(q, q.output_set);
  c.free_connex = h.has_value();
  c.q_hierarchical = h && *h == 1;
  return c;
}

}  // namespace ivm
