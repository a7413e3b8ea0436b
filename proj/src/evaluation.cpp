#include "hiernav/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiernav/error.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> oriented(std::span<const double> s, bool higher_is_id) {
  std::vector<double> out;
  out.reserve(s.size());
  for (double v : s) {
    if (std::isnan(v)) throw ValidationError("NaN score in AUROC input");
    out.push_back(higher_is_id ? v : -v);
  }
  return out;
}

std::optional<double> auroc_if_possible(std::span<const ScoredPair> pairs) {
  bool pos = false;
  bool neg = false;
  for (const ScoredPair& p : pairs) (p.positive ? pos : neg) = true;
  if (!pos || !neg) return std::nullopt;
  return node_micro_roc(pairs).auc();
}

std::string optional_cell(const std::optional<double>& v) { return v ? text::format_double(*v) : "absent"; }

}  // namespace

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores, bool higher_is_id) {
  if (id_scores.empty() || ood_scores.empty()) throw ValidationError("AUROC needs nonempty ID and OOD score lists");
  const std::vector<double> id = oriented(id_scores, higher_is_id);
  std::vector<double> ood = oriented(ood_scores, higher_is_id);
  std::sort(ood.begin(), ood.end());
  std::uint64_t twice_wins = 0;
  for (double x : id) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), x);
    const auto hi = std::upper_bound(lo, ood.end(), x);
    twice_wins += 2 * static_cast<std::uint64_t>(lo - ood.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

std::optional<double> GranularityAuroc::get(Granularity g) const {
  switch (g) {
    case Granularity::fine:
      return fine;
    case Granularity::medium:
      return medium;
    case Granularity::coarse:
      return coarse;
  }
  return std::nullopt;
}

GranularityAuroc granularity_report(std::span<const double> id_scores, std::span<const double> ood_scores,
                                    std::span<const Granularity> ood_granularity, bool higher_is_id) {
  if (ood_scores.size() != ood_granularity.size()) throw ValidationError("OOD scores and granularity tags differ in length");
  if (id_scores.empty()) throw ValidationError("ID score pool is empty");
  GranularityAuroc report;
  std::vector<double> pools[3];
  for (std::size_t i = 0; i < ood_scores.size(); ++i)
    pools[static_cast<int>(ood_granularity[i])].push_back(ood_scores[i]);
  std::optional<double>* slots[3] = {&report.fine, &report.medium, &report.coarse};
  for (int g = 0; g < 3; ++g) {
    if (!pools[g].empty()) *slots[g] = auroc(id_scores, pools[g], higher_is_id);
  }
  if (!ood_scores.empty()) report.overall = auroc(id_scores, ood_scores, higher_is_id);
  return report;
}

Outcomes hierarchical_outcomes(std::span<const NodeId> preds, std::span<const NodeId> gts, const Hierarchy& h) {
  if (preds.size() != gts.size()) throw ValidationError("prediction and ground-truth lists differ in length");
  Outcomes o;
  o.count = preds.size();
  const std::size_t side = static_cast<std::size_t>(h.max_depth()) + 1;
  o.confusion.assign(side, std::vector<std::uint64_t>(side, 0));
  std::uint64_t exact = 0;
  std::uint64_t ancestor = 0;
  std::uint64_t distance = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const DistanceSplit d = distance_decomposition(h, preds[i], gts[i]);
    o.confusion[d.gt_dist][d.pred_dist] += 1;
    distance += static_cast<std::uint64_t>(d.pred_dist + d.gt_dist);
    if (d.pred_dist == 0 && d.gt_dist == 0) {
      ++o.modes.correct;
      ++exact;
      ++ancestor;
    } else if (d.pred_dist == 0) {
      ++o.modes.under_prediction;
      ++ancestor;
    } else if (d.gt_dist == 0) {
      ++o.modes.over_prediction;
    } else {
      ++o.modes.standard_error;
    }
  }
  if (o.count > 0) {
    const double n = static_cast<double>(o.count);
    o.accuracy = static_cast<double>(exact) / n;
    o.ancestor_accuracy = static_cast<double>(ancestor) / n;
    o.avg_distance = static_cast<double>(distance) / n;
  } else {
    o.accuracy = o.ancestor_accuracy = o.avg_distance = kNaN;
  }
  return o;
}

std::string write_confusion(const Outcomes& o) {
  std::string out = "gt_dist\\pred_dist";
  for (std::size_t p = 0; p < o.confusion.size(); ++p) out += "," + std::to_string(p);
  out += "\n";
  for (std::size_t g = 0; g < o.confusion.size(); ++g) {
    out += std::to_string(g);
    for (std::uint64_t v : o.confusion[g]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

std::vector<SweepPoint> tnr_sweep(const Hierarchy& h, const SweepPools& pools, std::span<const double> tnr_grid,
                                  std::span<const ThresholdMode> modes) {
  if (pools.id.size() != pools.id_truth.size() || pools.ood.size() != pools.ood_truth.size())
    throw ValidationError("sweep pools and ground truth differ in length");
  for (std::size_t i = 0; i < tnr_grid.size(); ++i) {
    if (!(tnr_grid[i] >= 0.0 && tnr_grid[i] < 1.0)) throw ValidationError("TNR grid values must lie in [0,1)");
    if (i > 0 && tnr_grid[i] < tnr_grid[i - 1]) throw ValidationError("TNR grid must be sorted");
  }
  const auto pairs = calibration_pairs(h, pools.calibration, pools.calibration_labels);
  std::vector<SweepPoint> out;
  for (ThresholdMode mode : modes) {
    for (double tnr : tnr_grid) {
      SweepPoint pt;
      pt.tnr = tnr;
      pt.mode = mode;
      ThresholdTable table;
      try {
        table = calibrate_pairs(h, pairs, tnr, mode);
      } catch (const ComputeError& e) {
        pt.failed = true;
        pt.error = e.what();
        pt.id_accuracy = pt.ood_accuracy = pt.id_distance = pt.ood_distance = kNaN;
        out.push_back(std::move(pt));
        continue;
      }
      for (const SamplePaths& s : pools.id) pt.id_predictions.push_back(stop_node(h, s, table));
      for (const SamplePaths& s : pools.ood) pt.ood_predictions.push_back(stop_node(h, s, table));
      const Outcomes id = hierarchical_outcomes(pt.id_predictions, pools.id_truth, h);
      const Outcomes ood = hierarchical_outcomes(pt.ood_predictions, pools.ood_truth, h);
      pt.id_accuracy = id.accuracy;
      pt.id_distance = id.avg_distance;
      pt.ood_accuracy = ood.accuracy;
      pt.ood_distance = ood.avg_distance;
      out.push_back(std::move(pt));
    }
  }
  return out;
}

std::string write_sweep(std::span<const SweepPoint> points) {
  std::string out = "tnr,mode,id_acc,ood_acc,id_hdist,ood_hdist\n";
  for (const SweepPoint& p : points) {
    out += text::format_double(p.tnr) + "," + std::string(to_string(p.mode));
    for (double v : {p.id_accuracy, p.ood_accuracy, p.id_distance, p.ood_distance}) out += "," + text::format_double(v);
    out += "\n";
  }
  return out;
}

std::vector<NodeMicroRoc> micro_roc_analysis(const Hierarchy& h, const SweepPools& pools,
                                             const ThresholdTable& path_table) {
  if (pools.id.size() != pools.id_truth.size() || pools.ood.size() != pools.ood_truth.size())
    throw ValidationError("micro-ROC pools and ground truth differ in length");
  const std::size_t m = h.internals().size();
  std::vector<std::vector<ScoredPair>> id_pairs(m);
  std::vector<std::vector<ScoredPair>> all_pairs(m);
  std::vector<std::vector<ScoredPair>> kept_pairs(m);

  auto add = [&](const SamplePaths& s, NodeId truth, bool truth_is_label) {
    const NodeId stop = stop_node(h, s, path_table);
    std::vector<NodeId> path = ancestors(h, truth);
    if (!h.is_leaf(truth)) path.push_back(truth);
    for (std::size_t i = 0; i < path.size(); ++i) {
      const NodeId n = path[i];
      const NodeId toward = i + 1 < path.size() ? path[i + 1] : (h.is_leaf(truth) ? truth : kNoNode);
      const bool survives = stop != n && h.is_ancestor_or_equal(n, stop);
      const int idx = h.internal_index(n);
      for (NodeId c : h.children(n)) {
        const ScoredPair p{s.probability[c], c == toward};
        if (truth_is_label) id_pairs[idx].push_back(p);
        all_pairs[idx].push_back(p);
        if (survives) kept_pairs[idx].push_back(p);
      }
    }
  };
  for (std::size_t i = 0; i < pools.id.size(); ++i) add(pools.id[i], pools.id_truth[i], true);
  for (std::size_t i = 0; i < pools.ood.size(); ++i) add(pools.ood[i], pools.ood_truth[i], false);

  std::vector<NodeMicroRoc> out;
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({h.internals()[i], auroc_if_possible(id_pairs[i]), auroc_if_possible(all_pairs[i]),
                   auroc_if_possible(kept_pairs[i])});
  }
  return out;
}

std::string write_micro_roc(std::span<const NodeMicroRoc> rows, const Hierarchy& h) {
  std::string out = "node_name,auroc_id,auroc_id_ood,auroc_id_ood_thresholded\n";
  for (const NodeMicroRoc& r : rows) {
    out += h.name(r.node) + "," + optional_cell(r.id_only) + "," + optional_cell(r.id_ood) + "," +
           optional_cell(r.id_ood_thresholded) + "\n";
  }
  return out;
}

}  // namespace hiernav
