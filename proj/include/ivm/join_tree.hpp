#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ivm/query.hpp"

namespace ivm {

enum class NodeKind { Input, Generalized };

struct TreeNode {
  int id = 0;
  NodeKind kind = NodeKind::Input;
  std::size_t relation = 0;  // meaningful for input nodes only
  AttrSet attrs = 0;
  int parent = -1;
  std::vector<int> children;
  AttrSet key = 0;  // attrs ∩ parent attrs
  bool in_connex = false;
};

struct FreeConnexJoinTree {
  std::vector<TreeNode> nodes;
  int root = 0;

  // Maximum number of input nodes on a root-to-leaf path.
  int height() const;
  std::size_t generalized_count() const;
  std::string canonical(const Query& q) const;
  std::optional<int> node_of_relation(std::size_t relation) const;
  // Parents before children.
  std::vector<int> preorder() const;
  // Number of input-node ancestors of `id`, excluding itself.
  int input_depth(int id) const;
  bool is_strict_descendant(int id, int ancestor) const;
};

// Hand-built trees: a node is an input relation when `relation` is set,
// otherwise a generalized node over `attrs`. `parent` indexes into the list.
struct NodeSpec {
  std::string relation;
  std::vector<std::string> attrs;
  int parent = -1;
};

// Fills children and keys and marks the maximal connex subtree. Does not verify.
FreeConnexJoinTree build_tree(const Query& q, const std::vector<NodeSpec>& nodes);
void assign_keys(FreeConnexJoinTree& tree);
// A node joins the connex subtree when every key on its path to the root lies in y.
void mark_maximal_connex(FreeConnexJoinTree& tree, AttrSet y);

struct TreeCheck {
  bool ok = true;
  std::string violation;  // names the first violated property
};

TreeCheck verify_tree(const FreeConnexJoinTree& tree, const Query& q);

using UpdateCounts = std::map<std::string, std::uint64_t>;

// Sum over input nodes of (input ancestors) × (update count, default 1).
std::uint64_t score_tree(const FreeConnexJoinTree& tree, const Query& q,
                         const UpdateCounts& counts = {});

// Distinct valid trees ordered by (height, generalized nodes, canonical form).
// Throws NotAcyclic or NotFreeConnex when there is none.
std::vector<FreeConnexJoinTree> enumerate_trees(const Query& q, std::size_t limit = 256);

// Minimum score; ties by height, generalized nodes, canonical form.
FreeConnexJoinTree choose_plan_tree(const Query& q, const UpdateCounts& counts = {});

std::string render_tree(const FreeConnexJoinTree& tree, const Query& q);

// Minimum height over free-connex trees for output `y`, if any exists.
std::optional<int> min_free_connex_height(const Query& q, AttrSet y);

}  // namespace ivm
