#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivm/detail/node_state.hpp"
#include "ivm/join_tree.hpp"
#include "ivm/query.hpp"
#include "ivm/ring.hpp"

namespace ivm {

enum class Sign : std::int8_t { Insert = 1, Delete = -1 };

inline char sign_char(Sign s) { return s == Sign::Insert ? '+' : '-'; }

struct UpdateEvent {
  std::string relation;
  Tuple tuple;
  Sign sign = Sign::Insert;
  std::int64_t timestamp = 0;
  std::optional<RingValue> annotation;
};

struct ViewChange {
  int node = 0;
  Tuple tuple;
  Sign sign = Sign::Insert;
};

// A y-projection at a connex node that appeared (insert) or vanished (delete).
struct WitnessCandidate {
  int node = 0;
  std::uint32_t entry = 0;
};

struct PropagationRecord {
  bool ignored = false;
  Sign sign = Sign::Insert;
  int origin = -1;
  std::vector<ViewChange> vs_changes;
  std::vector<ViewChange> vp_changes;
  std::vector<WitnessCandidate> candidates;
  std::uint64_t counter_changes = 0;
  std::uint64_t epoch = 0;
};

struct ViewSize {
  std::size_t base = 0;  // input tuples stored at the node
  std::size_t rows = 0;  // tuples of the node's relation; for a generalized node, its candidate keys
  std::size_t vs = 0;
  std::size_t vp = 0;
  std::size_t live = 0;
  friend bool operator==(const ViewSize&, const ViewSize&) = default;
};

struct RowView {
  Tuple values;
  int count = 0;
  bool in_vs = false;
  RingValue weight{};
  RingValue ws{};
};

// Join-free plan over a free-connex join tree: semi-join views, projection views
// with derivation counts, and per connex node the y-projections used for
// enumeration. Single writer.
class Engine {
 public:
  // Without live views the engine supports full enumeration only, and updates
  // are completed by complete_update() instead of delta enumeration.
  Engine(Query q, FreeConnexJoinTree tree, std::optional<Ring> ring = std::nullopt, bool live_views = true);

  const Query& query() const { return query_; }
  const FreeConnexJoinTree& tree() const { return tree_; }
  bool annotated() const { return ring_.has_value(); }
  bool live_views() const { return live_views_; }
  const Ring& ring() const { return *ring_; }

  // Propagates one update on a physical relation. Deletions stay visible to
  // enumeration until update_live_views() completes the update.
  PropagationRecord apply(const UpdateEvent& ev);

  bool in_flight() const { return in_flight_; }
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t counter_change_total() const { return counter_total_; }

  std::vector<ViewSize> view_sizes() const;
  int node_of(std::string_view relation) const;

  std::vector<RowView> rows(int node) const;
  std::vector<Tuple> vs(int node) const;
  std::vector<std::pair<Tuple, int>> vp(int node) const;
  std::optional<RingValue> vp_weight(int node, const Tuple& key) const;
  // Live view of a maintained node; for the root, its current y-projections.
  std::vector<Tuple> live(int node) const;

  // Empty string if every counter and view invariant holds.
  std::string audit() const;

 private:
  friend struct detail::EngineAccess;

  using Node = detail::NodeState;

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::uint32_t alloc_row(Node& n, Tuple values);
  void free_row(Node& n, std::uint32_t rid);
  void index_row(Node& n, std::uint32_t rid);
  void unindex_row(Node& n, std::uint32_t rid);

  void enter_vs(int e, std::uint32_t rid);
  void leave_vs(int e, std::uint32_t rid);
  void p_update(int p, int child_slot, const Tuple& key, Sign sign);
  void value_changed(int child, const Tuple& key);
  RingValue compute_ws(const Node& n, const detail::Row& row) const;

  std::uint32_t acquire_yentry(Node& n, const Tuple& y);
  void release_yentry(Node& n, std::uint32_t id);
  void enum_add(Node& n, std::uint32_t id);
  void enum_remove(Node& n, std::uint32_t id);
  void live_add(Node& n, std::uint32_t id);
  void live_remove(Node& n, std::uint32_t id);

  struct PendingVisible {
    int node;
    std::uint32_t entry;
    int delta;
  };

  Query query_;
  FreeConnexJoinTree tree_;
  std::optional<Ring> ring_;
  bool live_views_ = true;
  std::vector<Node> nodes_;
  std::vector<int> node_of_relation_;
  std::vector<int> topdown_;  // preorder
  // Output attribute k is read from position .second of the y-projection at node .first.
  std::vector<std::pair<int, int>> out_src_;

  PropagationRecord* rec_ = nullptr;  // record of the update being applied
  bool in_flight_ = false;
  Sign flight_sign_ = Sign::Insert;
  std::vector<PendingVisible> pending_visible_;
  std::vector<std::pair<int, std::uint32_t>> pending_live_;
  std::uint64_t epoch_ = 0;
  std::uint64_t counter_total_ = 0;
};

}  // namespace ivm
