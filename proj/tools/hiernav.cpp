#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hiernav/bench.hpp"
#include "hiernav/data.hpp"
#include "hiernav/error.hpp"
#include "hiernav/evaluation.hpp"
#include "hiernav/hierarchy.hpp"
#include "hiernav/inference.hpp"
#include "hiernav/model.hpp"
#include "hiernav/scoring.hpp"
#include "hiernav/text.hpp"
#include "hiernav/training.hpp"

namespace fs = std::filesystem;
using namespace hiernav;

namespace {

Hierarchy load_hierarchy(const std::string& path) {
  try {
    return parse_hierarchy(text::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

Dataset load_dataset(const std::string& path, const Hierarchy& h) {
  try {
    return read_dataset(text::read_file(path), h);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

ModelParams load_model(const std::string& path, const Hierarchy& h) {
  try {
    return read_model(text::read_file(path), h);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void check_output_file(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw ValidationError("output directory does not exist: " + parent.string());
}

void prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ValidationError("cannot create output directory: " + dir);
}

void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-")
    std::cout << contents;
  else
    text::write_file(path, contents);
}

Dataset select_split(const Dataset& ds, const std::string& split) {
  if (split == "all") return ds;
  return ds.subset(parse_split(split));
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (std::string_view part : text::split(s, ',')) {
    part = text::trim(part);
    if constexpr (std::is_same_v<T, double>) {
      double v = 0.0;
      if (!text::parse_double(part, v)) throw ValidationError(std::string("bad ") + what + " value '" + std::string(part) + "'");
      out.push_back(v);
    } else {
      long long v = 0;
      if (!text::parse_int(part, v)) throw ValidationError(std::string("bad ") + what + " value '" + std::string(part) + "'");
      out.push_back(static_cast<T>(v));
    }
  }
  return out;
}

DepthBand parse_band(const std::string& s) {
  const auto f = text::split(s, ':');
  if (f.size() != 4) throw ValidationError("band must be granularity:min_depth:max_depth:probability, got '" + s + "'");
  DepthBand b;
  b.granularity = parse_granularity(f[0]);
  long long lo = 0;
  long long hi = 0;
  if (!text::parse_int(f[1], lo) || !text::parse_int(f[2], hi) || !text::parse_double(f[3], b.probability))
    throw ValidationError("malformed band '" + s + "'");
  b.min_depth = static_cast<int>(lo);
  b.max_depth = static_cast<int>(hi);
  return b;
}

struct OodInputs {
  Hierarchy source;
  OodGroundTruthMap map;
  Dataset data;
  std::vector<NodeId> truth;
  std::vector<Granularity> granularity;
};

OodInputs load_ood(const std::string& source_path, const std::string& map_path, const std::string& data_path,
                   const Hierarchy& id_h) {
  OodInputs o;
  o.source = load_hierarchy(source_path);
  o.map = parse_ground_truth_map(text::read_file(map_path), id_h);
  o.data = load_dataset(data_path, o.source);
  for (NodeId label : o.data.labels) {
    const std::string& name = o.source.name(label);
    const auto it = o.map.target.find(name);
    if (it == o.map.target.end()) throw ValidationError("OOD sample label '" + name + "' is not in the ground-truth map");
    o.truth.push_back(it->second);
    o.granularity.push_back(o.map.granularity.at(name));
  }
  return o;
}

std::string hierarchy_stats(const Hierarchy& h) {
  std::size_t single = 0;
  for (NodeId n : h.internals()) single += h.children(n).size() == 1;
  std::string out = "nodes\t" + std::to_string(h.size()) + "\n";
  out += "leaves\t" + std::to_string(h.leaves().size()) + "\n";
  out += "internals\t" + std::to_string(h.internals().size()) + "\n";
  out += "max_depth\t" + std::to_string(h.max_depth()) + "\n";
  out += "single_child_nodes\t" + std::to_string(single) + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical softmax classification with OOD inference at variable granularity"};
  app.require_subcommand(1);

  // hierarchy
  auto* hier = app.add_subcommand("hierarchy", "Hierarchy preparation");
  hier->require_subcommand(1);
  std::string h_in, h_out, h_data;
  int h_target = 0;
  auto* prune = hier->add_subcommand("prune", "Remove every single-child node");
  prune->add_option("--in", h_in, "Hierarchy file")->required();
  prune->add_option("--out", h_out, "Output hierarchy file")->required();
  auto* eprune = hier->add_subcommand("entropy-prune", "Merge low-entropy internal nodes");
  eprune->add_option("--in", h_in, "Hierarchy file")->required();
  eprune->add_option("--data", h_data, "Dataset supplying training leaf counts")->required();
  eprune->add_option("--target", h_target, "Internal node count to keep")->required();
  eprune->add_option("--out", h_out, "Output hierarchy file")->required();
  auto* stats = hier->add_subcommand("stats", "Print node counts");
  stats->add_option("--in", h_in, "Hierarchy file")->required();
  stats->add_option("--out", h_out, "Output file (default stdout)");

  // data gen
  auto* data = app.add_subcommand("data", "Synthetic data");
  data->require_subcommand(1);
  auto* gen = data->add_subcommand("gen", "Generate a synthetic hierarchy and features");
  std::string g_branching = "3,3,3,3", g_scales = "0.4,0.3,0.2,0.15", g_hier_out, g_out;
  std::size_t g_dim = 32;
  double g_noise = 0.1;
  int g_train = 30, g_val = 10, g_test = 20;
  std::uint64_t g_seed = 0;
  gen->add_option("--branching", g_branching, "Children per node at each depth, comma separated")->capture_default_str();
  gen->add_option("--dim", g_dim, "Feature dimension")->capture_default_str();
  gen->add_option("--scales", g_scales, "Mean offset scale per depth, comma separated")->capture_default_str();
  gen->add_option("--noise", g_noise, "Sample noise scale")->capture_default_str();
  gen->add_option("--train", g_train, "Training samples per leaf")->capture_default_str();
  gen->add_option("--val", g_val, "Validation samples per leaf")->capture_default_str();
  gen->add_option("--test", g_test, "Test samples per leaf")->capture_default_str();
  gen->add_option("--seed", g_seed, "Random seed")->required();
  gen->add_option("--hierarchy-out", g_hier_out, "Output hierarchy file")->required();
  gen->add_option("--out", g_out, "Output dataset file")->required();

  // split make
  auto* split = app.add_subcommand("split", "Holdout splits");
  split->require_subcommand(1);
  auto* make = split->add_subcommand("make", "Select holdout subtrees and build the ID hierarchy");
  std::string s_hier, s_data, s_out, s_id_out, s_map_out, s_id_data_out, s_ood_data_out, s_holdouts;
  std::vector<std::string> s_bands;
  std::uint64_t s_seed = 0;
  make->add_option("--hierarchy", s_hier, "Source hierarchy file")->required();
  make->add_option("--band", s_bands, "granularity:min_depth:max_depth:probability (repeatable)");
  make->add_option("--holdouts", s_holdouts, "Existing split file to apply instead of drawing");
  make->add_option("--seed", s_seed, "Random seed for drawing holdouts");
  make->add_option("--out", s_out, "Output split file")->required();
  make->add_option("--id-hierarchy-out", s_id_out, "Output ID hierarchy")->required();
  make->add_option("--map-out", s_map_out, "Output OOD ground-truth map")->required();
  make->add_option("--data", s_data, "Dataset to partition (labels in the source hierarchy)");
  make->add_option("--id-data-out", s_id_data_out, "ID part of --data");
  make->add_option("--ood-data-out", s_ood_data_out, "OOD part of --data");

  // train
  auto* train = app.add_subcommand("train", "Train a hierarchical or flat classifier");
  std::string t_hier, t_data, t_out, t_log, t_milestones = "10,20";
  double t_alpha = 1.0, t_beta = 0.0;
  int t_trunk = 1;
  std::size_t t_hidden = 0;
  bool t_flat = false;
  std::uint64_t t_seed = 0;
  TrainConfig tcfg;
  train->add_option("--hierarchy", t_hier, "Hierarchy file")->required();
  train->add_option("--data", t_data, "Dataset file; rows tagged train are used")->required();
  train->add_option("--out", t_out, "Output model file")->required();
  train->add_option("--log", t_log, "Training log CSV");
  train->add_option("--seed", t_seed, "Random seed")->required();
  train->add_option("--alpha", t_alpha, "Weight of the path cross-entropy")->capture_default_str();
  train->add_option("--beta", t_beta, "Weight of the off-path uniformity loss")->capture_default_str();
  train->add_option("--trunk-layers", t_trunk, "Hidden layers before the heads (0-3)")->capture_default_str();
  train->add_option("--hidden", t_hidden, "Hidden width (0: max(64, 2 x leaves))")->capture_default_str();
  train->add_flag("--flat", t_flat, "Train a flat softmax baseline instead");
  train->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  train->add_option("--momentum", tcfg.momentum)->capture_default_str();
  train->add_option("--weight-decay", tcfg.weight_decay)->capture_default_str();
  train->add_option("--lr-decay", tcfg.lr_decay)->capture_default_str();
  train->add_option("--milestones", t_milestones, "Epochs at which the learning rate decays")->capture_default_str();

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "Compute TNR thresholds from ID validation data");
  std::string c_hier, c_model, c_data, c_out, c_mode = "node", c_split = "val";
  double c_tnr = 0.95;
  bool c_fallback = false;
  calib->add_option("--hierarchy", c_hier, "ID hierarchy file")->required();
  calib->add_option("--model", c_model, "Model file")->required();
  calib->add_option("--data", c_data, "ID dataset file")->required();
  calib->add_option("--split", c_split, "Rows to calibrate on (train|val|test|all)")->capture_default_str();
  calib->add_option("--tnr", c_tnr, "Target true negative rate")->capture_default_str();
  calib->add_option("--mode", c_mode, "node or path")->capture_default_str();
  calib->add_flag("--fallback", c_fallback, "Use the pooled threshold at nodes lacking data");
  calib->add_option("--out", c_out, "Output threshold CSV")->required();

  // score
  auto* score = app.add_subcommand("score", "Path probability and entropy scores per sample");
  std::string sc_hier, sc_model, sc_data, sc_out, sc_split = "all";
  score->add_option("--hierarchy", sc_hier, "Hierarchy of the dataset labels")->required();
  score->add_option("--model", sc_model, "Model file")->required();
  score->add_option("--data", sc_data, "Dataset file")->required();
  score->add_option("--split", sc_split, "Rows to score (train|val|test|all)")->capture_default_str();
  score->add_option("--out", sc_out, "Output scores CSV (default stdout)");

  // infer
  auto* infer = app.add_subcommand("infer", "Predict at the deepest confident node");
  std::string i_hier, i_model, i_data, i_thr, i_out, i_split = "all", i_data_hier;
  infer->add_option("--hierarchy", i_hier, "ID hierarchy file")->required();
  infer->add_option("--model", i_model, "Model file")->required();
  infer->add_option("--thresholds", i_thr, "Threshold CSV")->required();
  infer->add_option("--data", i_data, "Dataset file")->required();
  infer->add_option("--data-hierarchy", i_data_hier, "Hierarchy of the dataset labels (default --hierarchy)");
  infer->add_option("--split", i_split, "Rows to infer on (train|val|test|all)")->capture_default_str();
  infer->add_option("--out", i_out, "Output predictions CSV (default stdout)");

  // eval and sweep share the ID/OOD inputs
  std::string e_hier, e_model, e_id, e_ood, e_source, e_map, e_out, e_thr, e_split = "test";
  std::string w_grid = "0.5,0.8,0.9,0.95,0.99";
  auto add_eval_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--hierarchy", e_hier, "ID hierarchy file")->required();
    cmd->add_option("--model", e_model, "Model file")->required();
    cmd->add_option("--id-data", e_id, "ID dataset file")->required();
    cmd->add_option("--split", e_split, "ID rows to evaluate (train|val|test|all)")->capture_default_str();
    cmd->add_option("--ood-data", e_ood, "OOD dataset (labels in the source hierarchy)")->required();
    cmd->add_option("--source-hierarchy", e_source, "Hierarchy before the holdout split")->required();
    cmd->add_option("--map", e_map, "OOD ground-truth map")->required();
    cmd->add_option("--out", e_out, "Output directory")->required();
  };
  auto* eval = app.add_subcommand("eval", "AUROC per granularity and hierarchical outcomes");
  add_eval_inputs(eval);
  eval->add_option("--thresholds", e_thr, "Threshold CSV for hierarchical outcomes (default: leaf predictions)");
  auto* sweep = app.add_subcommand("sweep", "Accuracy and hierarchy distance across TNR targets");
  add_eval_inputs(sweep);
  sweep->add_option("--tnr-grid", w_grid, "Comma separated TNR targets")->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "End-to-end synthetic benchmark");
  BenchConfig bcfg;
  std::string b_out;
  bench->add_option("--seed", bcfg.seed, "First seed")->required();
  bench->add_option("--seeds", bcfg.seed_count, "Number of consecutive seeds")->capture_default_str();
  bench->add_option("--epochs", bcfg.train.epochs)->capture_default_str();
  bench->add_option("--out", b_out, "Report directory")->required();
  std::string b_scales, b_betas;
  bench->add_option("--scales", b_scales, "Mean offset scale per depth, comma separated");
  bench->add_option("--noise", bcfg.features.noise_scale, "Sample noise scale")->capture_default_str();
  bench->add_option("--hidden", bcfg.model.hidden, "Hidden width")->capture_default_str();
  bench->add_option("--lr", bcfg.train.learning_rate)->capture_default_str();
  bench->add_option("--trunk-layers", bcfg.model.trunk_layers)->capture_default_str();
  bench->add_option("--train-per-leaf", bcfg.features.per_leaf.train)->capture_default_str();
  bench->add_option("--betas", b_betas, "Comma separated beta values for the hierarchical models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (prune->parsed()) {
      const Hierarchy h = load_hierarchy(h_in);
      check_output_file(h_out);
      text::write_file(h_out, write_hierarchy(prune_single_child(h)));
    } else if (eprune->parsed()) {
      const Hierarchy h = load_hierarchy(h_in);
      const Dataset ds = load_dataset(h_data, h);
      check_output_file(h_out);
      std::map<std::string, double> counts;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.splits[i] == Split::train) counts[h.name(ds.labels[i])] += 1.0;
      }
      text::write_file(h_out, write_hierarchy(entropy_prune(h, counts, h_target)));
    } else if (stats->parsed()) {
      const Hierarchy h = load_hierarchy(h_in);
      if (!h_out.empty()) check_output_file(h_out);
      emit(h_out, hierarchy_stats(h));
    } else if (gen->parsed()) {
      check_output_file(g_hier_out);
      check_output_file(g_out);
      const auto branching = parse_list<int>(g_branching, "branching");
      const Hierarchy h = generate_synthetic_hierarchy(branching);
      FeatureSpec spec;
      spec.dim = g_dim;
      spec.level_scales = parse_list<double>(g_scales, "scale");
      spec.noise_scale = g_noise;
      spec.per_leaf = {g_train, g_val, g_test};
      spec.seed = g_seed;
      const SyntheticFeatures f = generate_synthetic_features(h, spec);
      text::write_file(g_hier_out, write_hierarchy(h));
      text::write_file(g_out, write_dataset(f.data, h));
    } else if (make->parsed()) {
      const Hierarchy h = load_hierarchy(s_hier);
      for (const std::string& p : {s_out, s_id_out, s_map_out, s_id_data_out, s_ood_data_out}) {
        if (!p.empty()) check_output_file(p);
      }
      if (!s_data.empty() && (s_id_data_out.empty() || s_ood_data_out.empty()))
        throw ValidationError("--data needs both --id-data-out and --ood-data-out");
      std::optional<Dataset> ds;
      if (!s_data.empty()) ds = load_dataset(s_data, h);
      std::vector<Holdout> holdouts;
      if (!s_holdouts.empty()) {
        holdouts = parse_split_file(text::read_file(s_holdouts));
      } else {
        if (make->count("--seed") == 0) throw ValidationError("--seed is required when drawing holdouts");
        SplitSpec spec;
        for (const std::string& b : s_bands) spec.bands.push_back(parse_band(b));
        spec.seed = s_seed;
        holdouts = select_holdout_subtrees(h, spec);
      }
      const HoldoutResult result = holdout_split(h, holdouts);
      text::write_file(s_out, write_split_file(holdouts));
      text::write_file(s_id_out, write_hierarchy(result.id_hierarchy));
      text::write_file(s_map_out, write_ground_truth_map(result.map, result.id_hierarchy));
      if (ds) {
        const PartitionedData parts = partition(*ds, h, result);
        text::write_file(s_id_data_out, write_dataset(parts.id, result.id_hierarchy));
        text::write_file(s_ood_data_out, write_dataset(parts.ood, h));
      }
    } else if (train->parsed()) {
      const Hierarchy h = load_hierarchy(t_hier);
      const Dataset ds = load_dataset(t_data, h);
      check_output_file(t_out);
      if (!t_log.empty()) check_output_file(t_log);
      tcfg.milestones = parse_list<int>(t_milestones, "milestone");
      tcfg.seed = t_seed;
      tcfg.validate();
      ModelConfig mcfg;
      mcfg.trunk_layers = t_trunk;
      mcfg.hidden = t_hidden;
      mcfg.hierarchical = !t_flat;
      mcfg.flat = t_flat;
      mcfg.seed = t_seed;
      LossConfig loss;
      loss.alpha = t_alpha;
      loss.beta = t_beta;
      loss.flat = t_flat;
      loss.validate(h);
      const TrainResult r = train_sgd(init_model(h, ds.dim, mcfg), ds, tcfg, loss, h);
      text::write_file(t_out, write_model(r.params, h));
      if (!t_log.empty()) text::write_file(t_log, write_training_log(r.log));
    } else if (calib->parsed()) {
      const Hierarchy h = load_hierarchy(c_hier);
      const ModelParams params = load_model(c_model, h);
      const Dataset ds = select_split(load_dataset(c_data, h), c_split);
      check_output_file(c_out);
      const ThresholdTable table = calibrate(params, h, ds, c_tnr, parse_threshold_mode(c_mode), c_fallback);
      for (NodeId n : table.fallback_nodes)
        std::cerr << "warning: node " << h.name(n) << " uses the pooled threshold\n";
      text::write_file(c_out, write_threshold_table(table, h));
    } else if (score->parsed()) {
      const Hierarchy h = load_hierarchy(sc_hier);
      const ModelParams params = load_model(sc_model, h);
      const Dataset ds = select_split(load_dataset(sc_data, h), sc_split);
      if (!sc_out.empty()) check_output_file(sc_out);
      const auto scores = score_dataset(params, h, ds);
      emit(sc_out, write_scores(scores, h, params.flat_head.has_value()));
    } else if (infer->parsed()) {
      const Hierarchy h = load_hierarchy(i_hier);
      const Hierarchy data_h = i_data_hier.empty() ? h : load_hierarchy(i_data_hier);
      const ModelParams params = load_model(i_model, h);
      const ThresholdTable table = read_threshold_table(text::read_file(i_thr), h);
      const Dataset ds = select_split(load_dataset(i_data, data_h), i_split);
      if (!i_out.empty()) check_output_file(i_out);
      std::string out = "sample_index,predicted_leaf,prediction,depth\n";
      const auto paths = sample_paths(params, h, ds);
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const NodeId stop = stop_node(h, paths[i], table);
        out += std::to_string(i) + "," + h.name(paths[i].leaf) + "," + h.name(stop) + "," + std::to_string(h.depth(stop)) +
               "\n";
      }
      emit(i_out, out);
    } else if (eval->parsed() || sweep->parsed()) {
      const Hierarchy h = load_hierarchy(e_hier);
      const ModelParams params = load_model(e_model, h);
      const Dataset id = select_split(load_dataset(e_id, h), e_split);
      const OodInputs ood = load_ood(e_source, e_map, e_ood, h);
      std::optional<ThresholdTable> table;
      if (!e_thr.empty()) table = read_threshold_table(text::read_file(e_thr), h);
      const std::vector<double> grid = parse_list<double>(w_grid, "TNR");
      prepare_output_dir(e_out);
      const fs::path dir(e_out);
      if (eval->parsed()) {
        const auto id_scores = score_dataset(params, h, id);
        const auto ood_scores = score_dataset(params, h, ood.data);
        std::vector<Metric> metrics;
        if (!params.heads.empty()) metrics = {Metric::path_probability, Metric::h_mean, Metric::h_min};
        if (params.flat_head) metrics.push_back(Metric::msp);
        std::string auroc_csv = "metric,fine,medium,coarse,overall\n";
        for (Metric m : metrics) {
          std::vector<double> a;
          std::vector<double> b;
          for (const auto& s : id_scores) a.push_back(metric_value(s, m));
          for (const auto& s : ood_scores) b.push_back(metric_value(s, m));
          const GranularityAuroc g = granularity_report(a, b, ood.granularity, higher_is_id(m));
          auto cell = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string("absent"); };
          auroc_csv += std::string(to_string(m)) + "," + cell(g.fine) + "," + cell(g.medium) + "," + cell(g.coarse) +
                       "," + cell(g.overall) + "\n";
        }
        std::vector<NodeId> id_pred;
        std::vector<NodeId> ood_pred;
        if (!params.heads.empty()) {
          ThresholdTable t = table.value_or(ThresholdTable{ThresholdMode::path_wise, 0.0, "path_probability", 0.0, {}, {}});
          for (const auto& s : sample_paths(params, h, id)) id_pred.push_back(stop_node(h, s, t));
          for (const auto& s : sample_paths(params, h, ood.data)) ood_pred.push_back(stop_node(h, s, t));
        } else {
          for (const auto& s : id_scores) id_pred.push_back(s.flat_leaf);
          for (const auto& s : ood_scores) ood_pred.push_back(s.flat_leaf);
        }
        std::string acc = "pool,accuracy,ancestor_accuracy,avg_hdist,correct,standard_error,under_prediction,over_prediction\n";
        for (const auto& [pool, preds, gts] :
             {std::tuple{"id", &id_pred, &id.labels}, std::tuple{"ood", &ood_pred, &ood.truth}}) {
          const Outcomes o = hierarchical_outcomes(*preds, *gts, h);
          acc += std::string(pool) + "," + text::format_double(o.accuracy) + "," +
                 text::format_double(o.ancestor_accuracy) + "," + text::format_double(o.avg_distance) + "," +
                 std::to_string(o.modes.correct) + "," + std::to_string(o.modes.standard_error) + "," +
                 std::to_string(o.modes.under_prediction) + "," + std::to_string(o.modes.over_prediction) + "\n";
          text::write_file((dir / ("confusion_" + std::string(pool) + ".csv")).string(), write_confusion(o));
        }
        text::write_file((dir / "auroc.csv").string(), auroc_csv);
        text::write_file((dir / "outcomes.csv").string(), acc);
      } else {
        if (params.heads.empty()) throw ValidationError("sweep needs a hierarchical model");
        const Dataset full = load_dataset(e_id, h);
        const Dataset val = full.subset(Split::val);
        const auto val_paths = sample_paths(params, h, val);
        const auto id_paths = sample_paths(params, h, id);
        const auto ood_paths = sample_paths(params, h, ood.data);
        const SweepPools pools{val_paths, val.labels, id_paths, id.labels, ood_paths, ood.truth};
        const ThresholdMode modes[] = {ThresholdMode::node_wise, ThresholdMode::path_wise};
        const auto points = tnr_sweep(h, pools, grid, modes);
        for (const SweepPoint& p : points) {
          if (p.failed) std::cerr << "warning: TNR " << p.tnr << " " << to_string(p.mode) << ": " << p.error << "\n";
        }
        text::write_file((dir / "sweep.csv").string(), write_sweep(points));
      }
    } else if (bench->parsed()) {
      prepare_output_dir(b_out);
      if (!b_scales.empty()) bcfg.features.level_scales = parse_list<double>(b_scales, "scale");
      if (!b_betas.empty()) bcfg.betas = parse_list<double>(b_betas, "beta");
      const BenchResult result = run_bench(bcfg);
      for (const auto& [name, contents] : bench_reports(result))
        text::write_file((fs::path(b_out) / name).string(), contents);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
