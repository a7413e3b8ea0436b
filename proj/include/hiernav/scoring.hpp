#pragma once

#include <span>
#include <string>
#include <vector>

#include "hiernav/data.hpp"
#include "hiernav/hierarchy.hpp"
#include "hiernav/model.hpp"

namespace hiernav {

struct PathNodeScore {
  NodeId node = kNoNode;
  double path_probability = 1.0;  // Pr(node | x)
  double entropy = 0.0;           // entropy of node's child distribution
};

// OOD scores along the prediction path. Higher path probability and lower
// entropy both indicate in-distribution inputs.
struct PathScore {
  NodeId predicted_leaf = kNoNode;
  double path_probability = 0.0;
  double h_mean = 0.0;
  double h_min = 0.0;
  std::vector<PathNodeScore> per_node;  // internal ancestors of the leaf, root first
};

double node_path_probability(const NodeDistributions& nd, const Hierarchy& h, NodeId n);

PathScore score_distributions(const NodeDistributions& nd, const Hierarchy& h);
PathScore score_sample(const ModelParams& params, const Hierarchy& h, std::span<const double> x);

// Maximum softmax probability of the flat head.
double msp_score(const ModelParams& params, std::span<const double> x);

enum class Metric { path_probability, h_mean, h_min, msp };
std::string_view to_string(Metric m);
// True when larger values mean "more in-distribution".
bool higher_is_id(Metric m);

struct ScoredSample {
  PathScore path;            // empty when the model has no hierarchical heads
  double msp = 0.0;          // NaN when the model has no flat head
  NodeId flat_leaf = kNoNode;
};

double metric_value(const ScoredSample& s, Metric m);

std::vector<ScoredSample> score_dataset(const ModelParams& params, const Hierarchy& h, const Dataset& ds);

// CSV "sample_index,predicted_leaf_name,path_prob,h_mean,h_min[,msp]".
std::string write_scores(std::span<const ScoredSample> scores, const Hierarchy& h, bool with_msp);

}  // namespace hiernav
