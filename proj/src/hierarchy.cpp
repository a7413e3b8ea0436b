#include "hiernav/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiernav/error.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::fine: return "fine";
    case Granularity::medium: return "medium";
    case Granularity::coarse: return "coarse";
  }
  return "fine";
}

Granularity parse_granularity(std::string_view s) {
  if (s == "fine") return Granularity::fine;
  if (s == "medium") return Granularity::medium;
  if (s == "coarse") return Granularity::coarse;
  throw ValidationError("unknown granularity '" + std::string(s) + "'");
}

namespace {

void check_name(const std::string& name) {
  if (name.empty()) throw ValidationError("empty node name");
  if (name.find_first_of("\t\n\r") != std::string::npos)
    throw ValidationError("node name '" + name + "' contains a tab or newline");
  if (name == "-" || name == "*") throw ValidationError("reserved node name '" + name + "'");
}

}  // namespace

Hierarchy Hierarchy::from_parents(std::vector<std::string> names, std::vector<NodeId> parents) {
  if (names.empty()) throw ValidationError("hierarchy has no nodes");
  if (names.size() != parents.size()) throw ValidationError("names/parents size mismatch");
  if (names.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()))
    throw ValidationError("hierarchy too large");
  const int n = static_cast<int>(names.size());
  if (parents[0] != kNoNode) throw ValidationError("node 0 must be the root");

  Hierarchy h;
  h.children_.resize(n);
  h.depth_.assign(n, 0);
  h.child_position_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    check_name(names[i]);
    if (!h.by_name_.emplace(names[i], i).second)
      throw ValidationError("duplicate node name '" + names[i] + "'");
    if (i == 0) continue;
    const NodeId p = parents[i];
    if (p < 0 || p >= i)
      throw ValidationError("node '" + names[i] + "' must have a parent with a smaller id");
    h.child_position_[i] = static_cast<int>(h.children_[p].size());
    h.children_[p].push_back(i);
    h.depth_[i] = h.depth_[p] + 1;
    h.max_depth_ = std::max(h.max_depth_, h.depth_[i]);
  }
  h.leaf_count_.assign(n, 0);
  for (int i = n - 1; i >= 0; --i) {
    if (h.children_[i].empty()) h.leaf_count_[i] = 1;
    if (i > 0) h.leaf_count_[parents[i]] += h.leaf_count_[i];
  }
  h.dense_index_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (h.children_[i].empty()) {
      h.dense_index_[i] = static_cast<int>(h.leaves_.size());
      h.leaves_.push_back(i);
    } else {
      h.dense_index_[i] = static_cast<int>(h.internals_.size());
      h.internals_.push_back(i);
    }
  }
  h.names_ = std::move(names);
  h.parents_ = std::move(parents);
  return h;
}

void Hierarchy::check(NodeId n) const {
  if (n < 0 || static_cast<std::size_t>(n) >= names_.size())
    throw ValidationError("unknown node id " + std::to_string(n));
}

const std::string& Hierarchy::name(NodeId n) const {
  check(n);
  return names_[n];
}

NodeId Hierarchy::parent(NodeId n) const {
  check(n);
  return parents_[n];
}

const std::vector<NodeId>& Hierarchy::children(NodeId n) const {
  check(n);
  return children_[n];
}

int Hierarchy::depth(NodeId n) const {
  check(n);
  return depth_[n];
}

bool Hierarchy::is_leaf(NodeId n) const {
  check(n);
  return children_[n].empty();
}

NodeId Hierarchy::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? kNoNode : it->second;
}

NodeId Hierarchy::id(std::string_view name) const {
  NodeId n = find(name);
  if (n == kNoNode) throw ValidationError("unknown node '" + std::string(name) + "'");
  return n;
}

int Hierarchy::leaf_index(NodeId n) const {
  if (!is_leaf(n)) throw ValidationError("node '" + names_[n] + "' is not a leaf");
  return dense_index_[n];
}

int Hierarchy::internal_index(NodeId n) const {
  if (is_leaf(n)) throw ValidationError("node '" + names_[n] + "' is not internal");
  return dense_index_[n];
}

int Hierarchy::child_position(NodeId child) const {
  check(child);
  return child_position_[child];
}

int Hierarchy::leaf_count(NodeId n) const {
  check(n);
  return leaf_count_[n];
}

bool Hierarchy::is_ancestor_or_equal(NodeId a, NodeId n) const {
  check(a);
  check(n);
  while (n != kNoNode && n >= a) {
    if (n == a) return true;
    n = parents_[n];
  }
  return false;
}

Hierarchy parse_hierarchy(std::string_view text) {
  struct Entry {
    std::string name;
    std::string parent;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::size_t> index;
  const auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::string_view line = all[i];
    if (text::trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string_view> fields;
    if (line.find('\t') != std::string_view::npos) {
      fields = text::split(line, '\t');
    } else {
      // Space-separated fallback for hand-written files.
      std::size_t p = 0;
      while (p < line.size()) {
        while (p < line.size() && line[p] == ' ') ++p;
        std::size_t q = p;
        while (q < line.size() && line[q] != ' ') ++q;
        if (q > p) fields.push_back(line.substr(p, q - p));
        p = q;
      }
    }
    if (fields.size() != 2) throw ParseError(i + 1, "expected 'name<TAB>parent'");
    Entry e{std::string(text::trim(fields[0])), std::string(text::trim(fields[1])), i + 1};
    try {
      check_name(e.name);
    } catch (const ValidationError& err) {
      throw ParseError(e.line, err.what());
    }
    if (!index.emplace(e.name, entries.size()).second)
      throw ParseError(e.line, "duplicate node name '" + e.name + "'");
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw ValidationError("hierarchy file is empty");

  std::size_t root = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    if (e.parent == "-") {
      if (root != entries.size())
        throw ParseError(e.line, "multiple roots ('" + entries[root].name + "' and '" + e.name + "')");
      root = i;
    } else if (!index.contains(e.parent)) {
      throw ParseError(e.line, "unknown parent '" + e.parent + "'");
    }
  }
  if (root == entries.size()) throw ValidationError("hierarchy has no root (parent '-')");

  // Every node must reach the root by following parents.
  std::vector<int> state(entries.size(), 0);  // 0 unseen, 1 on stack, 2 reaches root
  state[root] = 2;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    while (state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      cur = index.at(entries[cur].parent);
    }
    if (state[cur] == 1) throw ParseError(entries[cur].line, "cycle through node '" + entries[cur].name + "'");
    for (std::size_t c : chain) state[c] = 2;
  }

  std::vector<std::string> names;
  std::vector<NodeId> parents;
  names.reserve(entries.size());
  parents.reserve(entries.size());
  if (root != 0) throw ParseError(entries[root].line, "root must precede every other node");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    names.push_back(entries[i].name);
    if (i == root) {
      parents.push_back(kNoNode);
      continue;
    }
    const std::size_t p = index.at(entries[i].parent);
    if (p > i) throw ParseError(entries[i].line, "parent '" + entries[i].parent + "' must precede its child");
    parents.push_back(static_cast<NodeId>(p));
  }
  return Hierarchy::from_parents(std::move(names), std::move(parents));
}

std::string write_hierarchy(const Hierarchy& h) {
  std::string out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const NodeId n = static_cast<NodeId>(i);
    out += h.name(n);
    out += '\t';
    out += n == h.root() ? std::string("-") : h.name(h.parent(n));
    out += '\n';
  }
  return out;
}

std::vector<NodeId> ancestors(const Hierarchy& h, NodeId n) {
  h.check(n);
  std::vector<NodeId> out;
  for (NodeId p = h.parent(n); p != kNoNode; p = h.parent(p)) out.push_back(p);
  std::reverse(out.begin(), out.end());
  return out;
}

NodeId lca(const Hierarchy& h, NodeId a, NodeId b) {
  h.check(a);
  h.check(b);
  while (a != b) {
    // Parent ids are smaller, so stepping the larger id never overshoots.
    if (a > b)
      a = h.parent(a);
    else
      b = h.parent(b);
  }
  return a;
}

int hierarchy_distance(const Hierarchy& h, NodeId a, NodeId b) {
  const NodeId c = lca(h, a, b);
  return h.depth(a) + h.depth(b) - 2 * h.depth(c);
}

DistanceSplit distance_decomposition(const Hierarchy& h, NodeId pred, NodeId gt) {
  const NodeId c = lca(h, pred, gt);
  return {h.depth(pred) - h.depth(c), h.depth(gt) - h.depth(c)};
}

namespace {

// Keeps the flagged nodes, attaching each to its nearest kept ancestor.
// Exactly one kept node may lack a kept ancestor; it becomes the root.
Hierarchy rebuild(const Hierarchy& h, const std::vector<bool>& keep) {
  const std::size_t n = h.size();
  std::vector<NodeId> new_id(n, kNoNode);
  std::vector<NodeId> nearest_kept(n, kNoNode);  // nearest kept ancestor-or-self
  std::vector<std::string> names;
  std::vector<NodeId> parents;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId node = static_cast<NodeId>(i);
    const NodeId p = h.parent(node);
    const NodeId kept_above = p == kNoNode ? kNoNode : nearest_kept[p];
    if (keep[i]) {
      if (kept_above == kNoNode && !names.empty())
        throw ValidationError("pruning would disconnect the hierarchy at '" + h.name(node) + "'");
      new_id[i] = static_cast<NodeId>(names.size());
      names.push_back(h.name(node));
      parents.push_back(kept_above == kNoNode ? kNoNode : new_id[kept_above]);
      nearest_kept[i] = node;
    } else {
      nearest_kept[i] = kept_above;
    }
  }
  return Hierarchy::from_parents(std::move(names), std::move(parents));
}

}  // namespace

Hierarchy prune_single_child(const Hierarchy& h) {
  // Splicing a single-child node leaves its parent's child count unchanged,
  // so a single pass reaches the fixpoint.
  std::vector<bool> keep(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) keep[i] = h.children(static_cast<NodeId>(i)).size() != 1;
  return rebuild(h, keep);
}

double mass_entropy(std::span<const double> masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (total <= 0.0) return 0.0;
  double e = 0.0;
  for (double m : masses) {
    if (m <= 0.0) continue;
    const double p = m / total;
    e -= p * std::log(p);
  }
  return e;
}

Hierarchy entropy_prune(const Hierarchy& h, const std::map<std::string, double>& leaf_counts,
                        int target_internal) {
  if (target_internal < 1) throw ValidationError("target internal count must be >= 1");
  const int current_internal = static_cast<int>(h.internals().size());
  if (target_internal > current_internal)
    throw ValidationError("target internal count " + std::to_string(target_internal) +
                          " exceeds current " + std::to_string(current_internal));
  for (const auto& [name, count] : leaf_counts) {
    if (!(count >= 0.0) || !std::isfinite(count))
      throw ValidationError("leaf count for '" + name + "' must be finite and nonnegative");
  }

  Hierarchy cur = h;
  while (static_cast<int>(cur.internals().size()) > target_internal) {
    std::vector<double> mass(cur.size(), 0.0);
    for (NodeId leaf : cur.leaves()) {
      auto it = leaf_counts.find(cur.name(leaf));
      if (it != leaf_counts.end()) mass[leaf] = it->second;
    }
    for (NodeId n = static_cast<NodeId>(cur.size()) - 1; n > 0; --n) mass[cur.parent(n)] += mass[n];

    NodeId best = kNoNode;
    double best_entropy = std::numeric_limits<double>::infinity();
    std::vector<double> child_mass;
    for (NodeId n : cur.internals()) {
      if (n == cur.root()) continue;
      child_mass.clear();
      for (NodeId c : cur.children(n)) child_mass.push_back(mass[c]);
      const double e = mass_entropy(child_mass);
      if (e < best_entropy) {
        best_entropy = e;
        best = n;
      }
    }
    if (best == kNoNode) break;
    std::vector<bool> keep(cur.size(), true);
    keep[best] = false;
    cur = rebuild(cur, keep);
  }
  return cur;
}

HoldoutResult holdout_split(const Hierarchy& h, std::span<const Holdout> holdouts) {
  const std::size_t n = h.size();
  std::vector<NodeId> roots;
  for (const Holdout& ho : holdouts) {
    const NodeId r = h.id(ho.node);
    if (r == h.root()) throw ValidationError("cannot hold out the root '" + ho.node + "'");
    roots.push_back(r);
  }
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (i != j && h.is_ancestor_or_equal(roots[i], roots[j]))
        throw ValidationError("nested holdouts: '" + h.name(roots[i]) + "' contains '" + h.name(roots[j]) + "'");
    }
  }

  // owner[i] = index of the holdout whose subtree contains node i, or -1.
  std::vector<int> owner(n, -1);
  for (std::size_t k = 0; k < roots.size(); ++k) owner[roots[k]] = static_cast<int>(k);
  for (std::size_t i = 1; i < n; ++i) {
    const NodeId node = static_cast<NodeId>(i);
    if (owner[i] < 0) owner[i] = owner[h.parent(node)];
  }

  std::vector<bool> keep(n);
  for (std::size_t i = 0; i < n; ++i) keep[i] = owner[i] < 0;
  // Internal nodes whose children were all removed go too.
  for (NodeId node = static_cast<NodeId>(n) - 1; node >= 0; --node) {
    if (!keep[node] || h.is_leaf(node)) continue;
    const auto& ch = h.children(node);
    if (std::none_of(ch.begin(), ch.end(), [&](NodeId c) { return keep[c]; })) keep[node] = false;
  }
  int kept_leaves = 0;
  for (NodeId leaf : h.leaves()) kept_leaves += keep[leaf] ? 1 : 0;
  if (kept_leaves < 2)
    throw ValidationError("holdout leaves only " + std::to_string(kept_leaves) + " in-distribution leaves; need >= 2");

  HoldoutResult result;
  result.id_hierarchy = prune_single_child(rebuild(h, keep));
  for (NodeId leaf : h.leaves()) {
    if (owner[leaf] < 0) continue;
    NodeId target = kNoNode;
    for (NodeId a = h.parent(leaf); a != kNoNode && target == kNoNode; a = h.parent(a))
      target = result.id_hierarchy.find(h.name(a));
    if (target == kNoNode) target = result.id_hierarchy.root();
    result.map.target[h.name(leaf)] = target;
    result.map.granularity[h.name(leaf)] = holdouts[owner[leaf]].granularity;
  }
  return result;
}

std::string write_ground_truth_map(const OodGroundTruthMap& map, const Hierarchy& id_hierarchy) {
  std::string out;
  for (const auto& [leaf, target] : map.target) {
    out += leaf;
    out += '\t';
    out += id_hierarchy.name(target);
    out += '\t';
    out += to_string(map.granularity.at(leaf));
    out += '\n';
  }
  return out;
}

OodGroundTruthMap parse_ground_truth_map(std::string_view contents, const Hierarchy& id_hierarchy) {
  OodGroundTruthMap map;
  const auto all = text::lines(contents);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]).empty() || all[i].front() == '#') continue;
    const auto f = text::split(all[i], '\t');
    if (f.size() != 3) throw ParseError(i + 1, "expected 'leaf<TAB>id_node<TAB>granularity'");
    try {
      const std::string leaf(f[0]);
      map.target[leaf] = id_hierarchy.id(f[1]);
      map.granularity[leaf] = parse_granularity(f[2]);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return map;
}

}  // namespace hiernav
