#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiernav/hierarchy.hpp"
#include "hiernav/inference.hpp"

namespace hiernav {

// Probability that a random ID score outranks a random OOD score, ties
// counting one half. Exact: the rank sum is accumulated in integers.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores, bool higher_is_id);

// AUROC of each granularity pool against the ID pool; pools without samples
// stay empty rather than reporting a number.
struct GranularityAuroc {
  std::optional<double> fine;
  std::optional<double> medium;
  std::optional<double> coarse;
  std::optional<double> overall;

  std::optional<double> get(Granularity g) const;
};

GranularityAuroc granularity_report(std::span<const double> id_scores, std::span<const double> ood_scores,
                                    std::span<const Granularity> ood_granularity, bool higher_is_id);

struct ErrorModes {
  std::uint64_t correct = 0;
  std::uint64_t standard_error = 0;
  std::uint64_t under_prediction = 0;
  std::uint64_t over_prediction = 0;

  std::uint64_t total() const { return correct + standard_error + under_prediction + over_prediction; }
};

struct Outcomes {
  std::size_t count = 0;
  double accuracy = 0.0;           // exact node match
  double ancestor_accuracy = 0.0;  // prediction is an ancestor-or-equal of the ground truth
  double avg_distance = 0.0;
  // confusion[gt_dist][pred_dist], both distances to the common ancestor.
  std::vector<std::vector<std::uint64_t>> confusion;
  ErrorModes modes;
};

Outcomes hierarchical_outcomes(std::span<const NodeId> preds, std::span<const NodeId> gts, const Hierarchy& h);

// CSV grid with gt distance down the rows and prediction distance across.
std::string write_confusion(const Outcomes& o);

// Samples prepared for repeated calibration and inference.
struct SweepPools {
  std::span<const SamplePaths> calibration;
  std::span<const NodeId> calibration_labels;
  std::span<const SamplePaths> id;
  std::span<const NodeId> id_truth;
  std::span<const SamplePaths> ood;
  std::span<const NodeId> ood_truth;  // mapped ID-hierarchy nodes
};

struct SweepPoint {
  double tnr = 0.0;
  ThresholdMode mode = ThresholdMode::node_wise;
  bool failed = false;  // calibration failed; metrics are NaN
  std::string error;
  double id_accuracy = 0.0;
  double ood_accuracy = 0.0;
  double id_distance = 0.0;
  double ood_distance = 0.0;
  std::vector<NodeId> id_predictions;
  std::vector<NodeId> ood_predictions;
};

// Recalibrates at every grid value in each mode (node_wise points first) and
// infers on both pools.
std::vector<SweepPoint> tnr_sweep(const Hierarchy& h, const SweepPools& pools, std::span<const double> tnr_grid,
                                  std::span<const ThresholdMode> modes);

// CSV "tnr,mode,id_acc,ood_acc,id_hdist,ood_hdist".
std::string write_sweep(std::span<const SweepPoint> points);

// Per-node micro-ROC areas from three pair sources: ID samples only, ID and
// OOD samples, and ID and OOD samples that survive a path-wise threshold at
// the node. An OOD sample contributes at every internal node on the path to
// its mapped ground truth; the child toward the ground truth is its positive,
// and at the ground truth node itself all children are negative.
struct NodeMicroRoc {
  NodeId node = kNoNode;
  std::optional<double> id_only;
  std::optional<double> id_ood;
  std::optional<double> id_ood_thresholded;
};

std::vector<NodeMicroRoc> micro_roc_analysis(const Hierarchy& h, const SweepPools& pools,
                                             const ThresholdTable& path_table);

std::string write_micro_roc(std::span<const NodeMicroRoc> rows, const Hierarchy& h);

}  // namespace hiernav
