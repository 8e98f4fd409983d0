#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ivm/join_tree.hpp"
#include "ivm/ring.hpp"
#include "ivm/value.hpp"

namespace ivm::detail {

inline constexpr std::uint32_t kNone = ~std::uint32_t{0};

template <class T>
using TupleMap = std::unordered_map<Tuple, T, TupleHash>;

using IdBucket = std::vector<std::uint32_t>;

// A base tuple of an input node, or a counted key of a generalized node.
struct Row {
  Tuple values;
  std::int32_t count = 0;  // children whose vp holds this row's key
  bool in_vs = false;
  std::vector<std::uint32_t> slot;  // position in each child_index bucket
  std::uint32_t yentry = kNone;     // y-projection entry while in vs (connex nodes)
  RingValue weight{};
  RingValue ws{};
};

struct VpEntry {
  std::int32_t count = 0;  // derivations: vs rows with this key
  RingValue weight{};
};

// One tuple of π_{y∩e} V_s at a connex node.
struct YEntry {
  Tuple values;
  std::int32_t count = 0;    // vs rows projecting here, current state
  std::int32_t visible = 0;  // the same count as seen by enumeration; lags on deferred changes
  bool live = false;
  bool queued = false;  // already scheduled for live maintenance or purge
  bool in_use = false;
  std::uint32_t enum_slot = kNone;
  std::vector<std::uint32_t> live_slot;
  RingValue weight{};
};

struct NodeState {
  // plan
  int id = 0;
  NodeKind kind = NodeKind::Input;
  std::size_t relation = 0;
  int parent = -1;
  int slot_in_parent = -1;
  int connex_slot_in_parent = -1;
  std::vector<AttrId> attrs;  // tuple layout
  std::vector<int> children;
  std::vector<int> key_pos;
  std::vector<std::vector<int>> child_key_pos;
  bool connex = false;
  bool keeps_live = false;  // connex node with connex children
  std::vector<int> y_pos;
  std::vector<int> y_key_pos;  // key(e) inside the y-projection
  std::vector<int> connex_children;
  std::vector<std::vector<int>> connex_child_key_ypos;  // key(child) inside the y-projection
  std::vector<int> plain_children;                      // indexes into children

  // state
  std::vector<Row> rows;
  std::vector<std::uint32_t> free_rows;
  TupleMap<std::uint32_t> row_of;
  std::vector<TupleMap<IdBucket>> child_index;
  TupleMap<VpEntry> vp;
  std::vector<YEntry> yentries;
  std::vector<std::uint32_t> free_y;
  TupleMap<std::uint32_t> yentry_of;
  TupleMap<IdBucket> enum_bucket;               // key(e) → visible entries
  std::vector<TupleMap<IdBucket>> live_bucket;  // per connex child: key(child) → live entries
  std::size_t base_size = 0;
  std::size_t vs_size = 0;
  std::size_t live_size = 0;
};

struct EngineAccess;

}  // namespace ivm::detail
