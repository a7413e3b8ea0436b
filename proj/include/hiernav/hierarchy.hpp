#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hiernav {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

enum class Granularity { fine, medium, coarse };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view s);

// Immutable rooted label tree. Node 0 is the root and every parent id is
// smaller than its child's id, so a forward scan over ids is a pre-order
// compatible topological walk.
class Hierarchy {
 public:
  Hierarchy() = default;

  // Builds from parallel name/parent arrays. parents[0] must be kNoNode and
  // parents[i] < i for every other node.
  static Hierarchy from_parents(std::vector<std::string> names, std::vector<NodeId> parents);

  std::size_t size() const { return names_.size(); }
  NodeId root() const { return 0; }

  const std::string& name(NodeId n) const;
  NodeId parent(NodeId n) const;
  const std::vector<NodeId>& children(NodeId n) const;
  int depth(NodeId n) const;
  bool is_leaf(NodeId n) const;

  // Throws ValidationError for unknown names.
  NodeId id(std::string_view name) const;
  NodeId find(std::string_view name) const;  // kNoNode when absent

  // Leaves and internal nodes in ascending id order.
  const std::vector<NodeId>& leaves() const { return leaves_; }
  const std::vector<NodeId>& internals() const { return internals_; }

  // Dense index of a leaf within leaves() / an internal node within internals().
  int leaf_index(NodeId n) const;
  int internal_index(NodeId n) const;

  // Position of `child` within children(parent(child)).
  int child_position(NodeId child) const;

  int max_depth() const { return max_depth_; }
  // Number of leaves in the subtree rooted at n (1 for a leaf).
  int leaf_count(NodeId n) const;

  bool is_ancestor_or_equal(NodeId a, NodeId n) const;

  void check(NodeId n) const;

  friend bool operator==(const Hierarchy& a, const Hierarchy& b) {
    return a.names_ == b.names_ && a.parents_ == b.parents_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<NodeId> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<int> depth_;
  std::vector<int> leaf_count_;
  std::vector<int> dense_index_;
  std::vector<int> child_position_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> internals_;
  std::unordered_map<std::string, NodeId> by_name_;
  int max_depth_ = 0;
};

// Text format: one node per line, "name<TAB>parent", root parent "-",
// lines starting with '#' and blank lines ignored.
Hierarchy parse_hierarchy(std::string_view text);
std::string write_hierarchy(const Hierarchy& h);

// Strict ancestors, root first; empty for the root.
std::vector<NodeId> ancestors(const Hierarchy& h, NodeId n);
NodeId lca(const Hierarchy& h, NodeId a, NodeId b);
int hierarchy_distance(const Hierarchy& h, NodeId a, NodeId b);

struct DistanceSplit {
  int pred_dist = 0;
  int gt_dist = 0;
  friend bool operator==(const DistanceSplit&, const DistanceSplit&) = default;
};
DistanceSplit distance_decomposition(const Hierarchy& h, NodeId pred, NodeId gt);

// Removes every node with exactly one child (the root included) until none
// remain. Surviving nodes attach to their nearest surviving ancestor.
Hierarchy prune_single_child(const Hierarchy& h);

// Shannon entropy (nats) of a nonnegative mass vector; zero mass entries
// contribute nothing, an all-zero vector has entropy 0.
double mass_entropy(std::span<const double> masses);

// Repeatedly merges the non-root internal node whose children carry the
// least-entropic mass distribution into its parent until exactly
// target_internal internal nodes remain. leaf_counts maps leaf name to its
// training sample count; missing leaves count as zero.
Hierarchy entropy_prune(const Hierarchy& h, const std::map<std::string, double>& leaf_counts,
                        int target_internal);

struct Holdout {
  std::string node;
  Granularity granularity = Granularity::fine;
};

// Ground-truth targets for held-out classes: each held-out leaf name maps to
// the closest of its original ancestors that survives in the ID hierarchy.
struct OodGroundTruthMap {
  std::map<std::string, NodeId> target;
  std::map<std::string, Granularity> granularity;
};

struct HoldoutResult {
  Hierarchy id_hierarchy;
  OodGroundTruthMap map;
};

// Removes each holdout subtree, drops internal nodes left without children,
// then prunes single-child nodes.
HoldoutResult holdout_split(const Hierarchy& h, std::span<const Holdout> holdouts);

std::string write_ground_truth_map(const OodGroundTruthMap& map, const Hierarchy& id_hierarchy);
OodGroundTruthMap parse_ground_truth_map(std::string_view text, const Hierarchy& id_hierarchy);

}  // namespace hiernav
