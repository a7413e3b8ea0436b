#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiernav/data.hpp"
#include "hiernav/hierarchy.hpp"
#include "hiernav/model.hpp"

namespace hiernav {

struct ScoredPair {
  double score = 0.0;
  bool positive = false;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0,0) origin
  std::uint64_t false_positives = 0;
  std::uint64_t true_positives = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // thresholds descending, (0,0) to (1,1)
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;

  // Trapezoidal area, evaluated on integer counts so that it matches the
  // pairwise rank statistic bit for bit.
  double auc() const;
};

// ROC over pooled (score, label) pairs. Equal scores move together.
RocCurve node_micro_roc(std::span<const ScoredPair> pairs);

enum class ThresholdMode { node_wise, path_wise };
std::string_view to_string(ThresholdMode m);
ThresholdMode parse_threshold_mode(std::string_view s);

// Score cutoffs on path probability. A node passes when its path
// probability is >= the threshold of its parent's classifier.
struct ThresholdTable {
  ThresholdMode mode = ThresholdMode::node_wise;
  double tnr_target = 0.95;
  std::string score_kind = "path_probability";
  double global = 0.0;                 // path_wise threshold, also the node_wise fallback
  std::vector<double> per_node;        // node_wise, by node id (leaves unused)
  std::vector<NodeId> fallback_nodes;  // node_wise nodes that took the global value

  double threshold_for(NodeId internal) const;
};

// Smallest cutoff t in [0,1] such that at least tnr_target of the negative
// scores fall strictly below t; scores equal to t pass. tnr_target = 0 yields 0.
double tnr_threshold(std::span<const double> negatives, double tnr_target);

// One-vs-rest pairs per internal node (indexed by internal index): every
// sample whose label path crosses node n contributes one pair per child c of
// n, scored by Pr(c | x) and positive iff c lies on the label path.
std::vector<std::vector<ScoredPair>> calibration_pairs(const ModelParams& params, const Hierarchy& h,
                                                       const Dataset& id_val);

// Per-sample pieces needed for repeated thresholding.
struct SamplePaths {
  NodeId leaf = kNoNode;            // predicted leaf
  std::vector<double> probability;  // Pr(n | x) by node id
};
std::vector<SamplePaths> sample_paths(const ModelParams& params, const Hierarchy& h, const Dataset& ds);

std::vector<std::vector<ScoredPair>> calibration_pairs(const Hierarchy& h, std::span<const SamplePaths> samples,
                                                       std::span<const NodeId> labels);

// With allow_fallback, nodes lacking calibration data get the pooled
// threshold and are listed in fallback_nodes; otherwise they raise
// ComputeError naming the nodes.
ThresholdTable calibrate_pairs(const Hierarchy& h, std::span<const std::vector<ScoredPair>> pairs, double tnr_target,
                               ThresholdMode mode, bool allow_fallback = false);

ThresholdTable calibrate(const ModelParams& params, const Hierarchy& h, const Dataset& id_val, double tnr_target,
                         ThresholdMode mode, bool allow_fallback = false);

// Walks root -> predicted leaf and stops at the parent of the first node that
// misses its threshold. Returns the root when even depth-1 fails.
NodeId stop_node(const Hierarchy& h, const SamplePaths& sample, const ThresholdTable& table);
NodeId hierarchical_infer(const ModelParams& params, const Hierarchy& h, std::span<const double> x,
                          const ThresholdTable& table);

// CSV "node_name,threshold,tnr_target,mode,score_kind"; path_wise uses "*".
std::string write_threshold_table(const ThresholdTable& table, const Hierarchy& h);
ThresholdTable read_threshold_table(std::string_view contents, const Hierarchy& h);

}  // namespace hiernav
