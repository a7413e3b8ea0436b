#include "hiernav/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiernav/error.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

double node_path_probability(const NodeDistributions& nd, const Hierarchy& h, NodeId n) {
  h.check(n);
  double p = 1.0;
  for (NodeId c = n; c != h.root(); c = h.parent(c)) p *= nd.child_probability(h, c);
  return p;
}

PathScore score_distributions(const NodeDistributions& nd, const Hierarchy& h) {
  PathScore s;
  s.predicted_leaf = predict_leaf(nd, h);
  const std::vector<NodeId> path = ancestors(h, s.predicted_leaf);
  double prob = 1.0;
  double sum = 0.0;
  s.h_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const NodeId n = path[i];
    const double e = entropy(nd.of(h, n));
    s.per_node.push_back({n, prob, e});
    sum += e;
    s.h_min = std::min(s.h_min, e);
    const NodeId next = i + 1 < path.size() ? path[i + 1] : s.predicted_leaf;
    prob *= nd.child_probability(h, next);
  }
  s.path_probability = prob;
  s.h_mean = sum / static_cast<double>(path.size());
  return s;
}

PathScore score_sample(const ModelParams& params, const Hierarchy& h, std::span<const double> x) {
  return score_distributions(forward(params, h, x), h);
}

double msp_score(const ModelParams& params, std::span<const double> x) {
  const auto p = flat_forward(params, x);
  return *std::max_element(p.begin(), p.end());
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::path_probability: return "path_prob";
    case Metric::h_mean: return "h_mean";
    case Metric::h_min: return "h_min";
    case Metric::msp: return "msp";
  }
  return "path_prob";
}

bool higher_is_id(Metric m) { return m == Metric::path_probability || m == Metric::msp; }

double metric_value(const ScoredSample& s, Metric m) {
  switch (m) {
    case Metric::path_probability: return s.path.path_probability;
    case Metric::h_mean: return s.path.h_mean;
    case Metric::h_min: return s.path.h_min;
    case Metric::msp: return s.msp;
  }
  return s.path.path_probability;
}

std::vector<ScoredSample> score_dataset(const ModelParams& params, const Hierarchy& h, const Dataset& ds) {
  std::vector<ScoredSample> out;
  out.reserve(ds.size());
  ForwardCache cache;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    forward_into(params, h, ds.row(i), cache);
    ScoredSample s;
    if (!params.heads.empty()) s.path = score_distributions(cache.nodes, h);
    s.msp = std::numeric_limits<double>::quiet_NaN();
    if (params.flat_head) {
      const auto it = std::max_element(cache.flat.begin(), cache.flat.end());
      s.msp = *it;
      s.flat_leaf = h.leaves()[static_cast<std::size_t>(it - cache.flat.begin())];
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_scores(std::span<const ScoredSample> scores, const Hierarchy& h, bool with_msp) {
  std::string out = with_msp ? "sample_index,predicted_leaf_name,path_prob,h_mean,h_min,msp\n"
                             : "sample_index,predicted_leaf_name,path_prob,h_mean,h_min\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const PathScore& p = scores[i].path;
    if (p.predicted_leaf != kNoNode) {
      out += std::to_string(i) + "," + h.name(p.predicted_leaf) + "," + text::format_double(p.path_probability) +
             "," + text::format_double(p.h_mean) + "," + text::format_double(p.h_min);
    } else {
      out += std::to_string(i) + "," + h.name(scores[i].flat_leaf) + ",nan,nan,nan";
    }
    if (with_msp) out += "," + text::format_double(scores[i].msp);
    out += "\n";
  }
  return out;
}

}  // namespace hiernav
