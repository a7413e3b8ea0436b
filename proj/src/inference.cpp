#include "hiernav/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiernav/error.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

double RocCurve::auc() const {
  if (positives == 0 || negatives == 0) throw ValidationError("AUC needs both classes");
  std::uint64_t twice_area = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const RocPoint& a = points[i - 1];
    const RocPoint& b = points[i];
    twice_area += (b.false_positives - a.false_positives) * (b.true_positives + a.true_positives);
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

RocCurve node_micro_roc(std::span<const ScoredPair> pairs) {
  RocCurve curve;
  for (const ScoredPair& p : pairs) {
    if (std::isnan(p.score)) throw ValidationError("NaN score in ROC input");
    (p.positive ? curve.positives : curve.negatives) += 1;
  }
  if (curve.positives == 0 || curve.negatives == 0) throw ValidationError("ROC needs both positive and negative pairs");

  std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });
  const double P = static_cast<double>(curve.positives);
  const double N = static_cast<double>(curve.negatives);
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity(), 0, 0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double s = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == s; ++i) (sorted[i].positive ? tp : fp) += 1;
    curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, s, fp, tp});
  }
  return curve;
}

std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::node_wise ? "node_wise" : "path_wise"; }

ThresholdMode parse_threshold_mode(std::string_view s) {
  if (s == "node_wise" || s == "node") return ThresholdMode::node_wise;
  if (s == "path_wise" || s == "path") return ThresholdMode::path_wise;
  throw ValidationError("unknown threshold mode '" + std::string(s) + "'");
}

double ThresholdTable::threshold_for(NodeId internal) const {
  if (mode == ThresholdMode::path_wise) return global;
  if (internal < 0 || static_cast<std::size_t>(internal) >= per_node.size() || std::isnan(per_node[internal]))
    throw ValidationError("threshold table has no entry for node id " + std::to_string(internal));
  return per_node[internal];
}

double tnr_threshold(std::span<const double> negatives, double tnr_target) {
  if (!(tnr_target >= 0.0 && tnr_target < 1.0)) throw ValidationError("TNR target must lie in [0,1)");
  if (negatives.empty()) throw ValidationError("no negative scores to calibrate on");
  std::vector<double> sorted(negatives.begin(), negatives.end());
  std::sort(sorted.begin(), sorted.end());
  const double needed = tnr_target * static_cast<double>(sorted.size());
  const auto k = static_cast<std::size_t>(std::ceil(needed - 1e-9));
  if (k == 0) return 0.0;
  // All of the k smallest negatives must fall strictly below t.
  const double t = std::nextafter(sorted[k - 1], std::numeric_limits<double>::infinity());
  return std::clamp(t, 0.0, 1.0);
}

std::vector<SamplePaths> sample_paths(const ModelParams& params, const Hierarchy& h, const Dataset& ds) {
  std::vector<SamplePaths> out;
  out.reserve(ds.size());
  ForwardCache cache;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    forward_into(params, h, ds.row(i), cache);
    out.push_back({predict_leaf(cache.nodes, h), node_path_probabilities(cache.nodes, h)});
  }
  return out;
}

std::vector<std::vector<ScoredPair>> calibration_pairs(const Hierarchy& h, std::span<const SamplePaths> samples,
                                                       std::span<const NodeId> labels) {
  if (samples.size() != labels.size()) throw ValidationError("sample/label count mismatch");
  std::vector<std::vector<ScoredPair>> pairs(h.internals().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const NodeId y = labels[i];
    for (NodeId on = y; on != h.root(); on = h.parent(on)) {
      const NodeId n = h.parent(on);
      auto& bucket = pairs[h.internal_index(n)];
      for (NodeId c : h.children(n)) bucket.push_back({samples[i].probability[c], c == on});
    }
  }
  return pairs;
}

std::vector<std::vector<ScoredPair>> calibration_pairs(const ModelParams& params, const Hierarchy& h,
                                                       const Dataset& id_val) {
  return calibration_pairs(h, sample_paths(params, h, id_val), id_val.labels);
}

ThresholdTable calibrate_pairs(const Hierarchy& h, std::span<const std::vector<ScoredPair>> pairs, double tnr_target,
                               ThresholdMode mode, bool allow_fallback) {
  if (pairs.size() != h.internals().size()) throw ValidationError("calibration pairs must cover every internal node");
  if (!(tnr_target >= 0.0 && tnr_target < 1.0)) throw ValidationError("TNR target must lie in [0,1)");
  ThresholdTable table;
  table.mode = mode;
  table.tnr_target = tnr_target;

  std::vector<double> pooled;
  for (const auto& bucket : pairs) {
    for (const ScoredPair& p : bucket) {
      if (!p.positive) pooled.push_back(p.score);
    }
  }
  if (pooled.empty()) throw ComputeError("no calibration pairs available");
  table.global = tnr_threshold(pooled, tnr_target);
  if (mode == ThresholdMode::path_wise) return table;

  table.per_node.assign(h.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<NodeId> missing;
  std::vector<double> negatives;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const NodeId n = h.internals()[i];
    negatives.clear();
    // Pairs arrive in blocks of k, one block per visiting sample.
    const std::size_t k = h.children(n).size();
    std::size_t visits = 0;
    std::size_t first_target = k;
    bool distinct = false;
    for (std::size_t j = 0; j < pairs[i].size(); ++j) {
      const ScoredPair& p = pairs[i][j];
      if (!p.positive) {
        negatives.push_back(p.score);
        continue;
      }
      ++visits;
      if (first_target == k)
        first_target = j % k;
      else if (j % k != first_target)
        distinct = true;
    }
    if (visits < 2 || !distinct) {
      missing.push_back(n);
      table.per_node[n] = table.global;
      continue;
    }
    table.per_node[n] = tnr_threshold(negatives, tnr_target);
  }
  if (!missing.empty() && !allow_fallback) {
    std::string names;
    for (NodeId n : missing) names += (names.empty() ? "" : ", ") + h.name(n);
    throw ComputeError("insufficient calibration data at node(s): " + names);
  }
  table.fallback_nodes = std::move(missing);
  return table;
}

ThresholdTable calibrate(const ModelParams& params, const Hierarchy& h, const Dataset& id_val, double tnr_target,
                         ThresholdMode mode, bool allow_fallback) {
  if (id_val.size() == 0) throw ValidationError("calibration set is empty");
  return calibrate_pairs(h, calibration_pairs(params, h, id_val), tnr_target, mode, allow_fallback);
}

NodeId stop_node(const Hierarchy& h, const SamplePaths& sample, const ThresholdTable& table) {
  if (sample.probability.size() != h.size()) throw ValidationError("sample does not match hierarchy");
  if (table.mode == ThresholdMode::node_wise && table.per_node.size() != h.size())
    throw ValidationError("threshold table does not match hierarchy");
  const std::vector<NodeId> path = ancestors(h, sample.leaf);
  for (std::size_t i = 1; i <= path.size(); ++i) {
    const NodeId node = i < path.size() ? path[i] : sample.leaf;
    const NodeId parent = path[i - 1];
    if (sample.probability[node] < table.threshold_for(parent)) return parent;
  }
  return sample.leaf;
}

NodeId hierarchical_infer(const ModelParams& params, const Hierarchy& h, std::span<const double> x,
                          const ThresholdTable& table) {
  const NodeDistributions nd = forward(params, h, x);
  return stop_node(h, {predict_leaf(nd, h), node_path_probabilities(nd, h)}, table);
}

std::string write_threshold_table(const ThresholdTable& table, const Hierarchy& h) {
  std::string out = "node_name,threshold,tnr_target,mode,score_kind\n";
  const std::string tail =
      "," + text::format_double(table.tnr_target) + "," + std::string(to_string(table.mode)) + "," + table.score_kind + "\n";
  if (table.mode == ThresholdMode::path_wise) {
    out += "*," + text::format_double(table.global) + tail;
    return out;
  }
  out += "*," + text::format_double(table.global) + tail;
  for (NodeId n : h.internals()) out += h.name(n) + "," + text::format_double(table.threshold_for(n)) + tail;
  return out;
}

ThresholdTable read_threshold_table(std::string_view contents, const Hierarchy& h) {
  const auto all = text::lines(contents);
  ThresholdTable table;
  bool have_mode = false;
  bool have_global = false;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string_view line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line.starts_with("node_name,")) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 5) throw ParseError(i + 1, "expected 5 columns");
    double thr = 0.0;
    double tnr = 0.0;
    if (!text::parse_double(f[1], thr) || !(thr >= 0.0 && thr <= 1.0))
      throw ParseError(i + 1, "threshold must be a number in [0,1]");
    if (!text::parse_double(f[2], tnr) || !(tnr >= 0.0 && tnr < 1.0)) throw ParseError(i + 1, "bad tnr_target");
    ThresholdMode mode;
    try {
      mode = parse_threshold_mode(f[3]);
    } catch (const ValidationError& e) {
      throw ParseError(i + 1, e.what());
    }
    if (f[4] != "path_probability") throw ParseError(i + 1, "unsupported score kind '" + std::string(f[4]) + "'");
    if (have_mode && (mode != table.mode || tnr != table.tnr_target))
      throw ParseError(i + 1, "mixed modes or TNR targets in one table");
    table.mode = mode;
    table.tnr_target = tnr;
    have_mode = true;
    if (f[0] == "*") {
      table.global = thr;
      have_global = true;
      continue;
    }
    if (mode == ThresholdMode::path_wise) throw ParseError(i + 1, "path_wise tables hold only the '*' row");
    const NodeId n = h.find(f[0]);
    if (n == kNoNode || h.is_leaf(n)) throw ParseError(i + 1, "unknown internal node '" + std::string(f[0]) + "'");
    if (table.per_node.empty()) table.per_node.assign(h.size(), std::numeric_limits<double>::quiet_NaN());
    table.per_node[n] = thr;
  }
  if (!have_mode) throw ValidationError("threshold table is empty");
  if (table.mode == ThresholdMode::path_wise && !have_global) throw ValidationError("path_wise table lacks '*' row");
  if (table.mode == ThresholdMode::node_wise) {
    if (table.per_node.empty()) table.per_node.assign(h.size(), std::numeric_limits<double>::quiet_NaN());
    for (NodeId n : h.internals()) {
      if (std::isnan(table.per_node[n])) {
        if (!have_global) throw ValidationError("threshold table has no entry for node '" + h.name(n) + "'");
        table.per_node[n] = table.global;
        table.fallback_nodes.push_back(n);
      }
    }
  }
  return table;
}

}  // namespace hiernav
