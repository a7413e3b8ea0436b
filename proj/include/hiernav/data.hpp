#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiernav/hierarchy.hpp"

namespace hiernav {

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

// Feature rows with leaf labels. Labels are node ids of the hierarchy the
// dataset was read or generated against.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;  // row-major, size() * dim
  std::vector<NodeId> labels;
  std::vector<Split> splits;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  void add(std::span<const double> x, NodeId label, Split split);
  Dataset subset(Split split) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Complete tree, branching[l] children per node at depth l. Names are
// "n<depth>_<index>" with index counted left to right within the level.
Hierarchy generate_synthetic_hierarchy(std::span<const int> branching);

struct SamplesPerLeaf {
  int train = 1;
  int val = 0;
  int test = 0;
};

struct FeatureSpec {
  std::size_t dim = 32;
  // Scale of the Gaussian offset from parent to child mean at depth l+1;
  // the last entry repeats for deeper levels.
  std::vector<double> level_scales{1.0};
  double noise_scale = 1.0;
  SamplesPerLeaf per_leaf;
  std::uint64_t seed = 0;
};

struct SyntheticFeatures {
  Dataset data;
  std::vector<double> means;  // node-major, h.size() * dim
};

// Hierarchical Gaussian diffusion: root mean 0, each child mean is its
// parent's plus isotropic noise at the level scale, samples scatter around
// their leaf mean with noise_scale. Means are drawn first in id order, then
// samples leaf by leaf (train, val, test).
SyntheticFeatures generate_synthetic_features(const Hierarchy& h, const FeatureSpec& spec);

struct DepthBand {
  Granularity granularity = Granularity::fine;
  int min_depth = 1;
  int max_depth = 1;
  double probability = 0.0;
};

struct SplitSpec {
  std::vector<DepthBand> bands;
  std::uint64_t seed = 0;
};

// Independent per-node draws in each depth band (nodes in id order, bands in
// the given order). Nested selections resolve to the shallower node.
std::vector<Holdout> select_holdout_subtrees(const Hierarchy& h, const SplitSpec& spec);

std::string write_split_file(std::span<const Holdout> holdouts);
std::vector<Holdout> parse_split_file(std::string_view contents);

// Format: "dim=<d>" then "leaf<TAB>v1,...,vd" per sample. A third column
// with the split tag is written only when some sample is not train.
std::string write_dataset(const Dataset& ds, const Hierarchy& h);
Dataset read_dataset(std::string_view contents, const Hierarchy& h);

// Re-expresses labels by name in another hierarchy.
Dataset relabel(const Dataset& ds, const Hierarchy& from, const Hierarchy& to);

struct PartitionedData {
  Dataset id;   // labels in the ID hierarchy
  Dataset ood;  // labels in the source hierarchy (held-out leaves)
};
PartitionedData partition(const Dataset& ds, const Hierarchy& source, const HoldoutResult& split);

}  // namespace hiernav
