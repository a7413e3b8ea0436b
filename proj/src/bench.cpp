#include "hiernav/bench.hpp"

#include <future>

#include "hiernav/error.hpp"
#include "hiernav/inference.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Holdout> choose_holdouts(const Hierarchy& h, const BenchConfig& cfg, std::uint64_t seed) {
  SplitSpec spec;
  spec.bands = {cfg.coarse_band, cfg.fine_band};
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    spec.seed = derive_seed(seed, 1000 + attempt);
    std::vector<Holdout> picked;
    try {
      picked = select_holdout_subtrees(h, spec);
    } catch (const ComputeError&) {
      continue;
    }
    int coarse = 0;
    int fine = 0;
    for (const Holdout& ho : picked) (ho.granularity == Granularity::coarse ? coarse : fine) += 1;
    if (coarse == cfg.coarse_holdouts && fine >= cfg.min_fine_holdouts) return picked;
  }
  throw ComputeError("could not draw a holdout set with the requested coarse/fine counts");
}

std::vector<NodeId> ood_truth(const Dataset& ood, const Hierarchy& source, const OodGroundTruthMap& map) {
  std::vector<NodeId> out;
  out.reserve(ood.size());
  for (NodeId label : ood.labels) out.push_back(map.target.at(source.name(label)));
  return out;
}

std::vector<Granularity> ood_granularity(const Dataset& ood, const Hierarchy& source, const OodGroundTruthMap& map) {
  std::vector<Granularity> out;
  out.reserve(ood.size());
  for (NodeId label : ood.labels) out.push_back(map.granularity.at(source.name(label)));
  return out;
}

std::vector<double> metric_column(std::span<const ScoredSample> s, Metric m) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const ScoredSample& x : s) out.push_back(metric_value(x, m));
  return out;
}

BenchSeedRun run_seed(const BenchConfig& cfg, std::uint64_t seed) {
  BenchSeedRun run;
  run.seed = seed;
  const Hierarchy source = generate_synthetic_hierarchy(cfg.branching);
  FeatureSpec fspec = cfg.features;
  fspec.seed = derive_seed(seed, 1);
  const Dataset all = generate_synthetic_features(source, fspec).data;

  run.holdouts = choose_holdouts(source, cfg, derive_seed(seed, 2));
  const HoldoutResult split = holdout_split(source, run.holdouts);
  run.id_hierarchy = split.id_hierarchy;
  const Hierarchy& h = run.id_hierarchy;
  const PartitionedData parts = partition(all, source, split);

  const Dataset id_val = parts.id.subset(Split::val);
  const Dataset id_test = parts.id.subset(Split::test);
  const Dataset ood = parts.ood.subset(Split::test);
  const std::vector<NodeId> truth = ood_truth(ood, source, split.map);
  const std::vector<Granularity> gran = ood_granularity(ood, source, split.map);

  TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(seed, 3);

  for (double beta : cfg.betas) {
    BenchModelRun m;
    m.beta = beta;
    m.name = "hsc_b" + text::format_double(beta);
    ModelConfig mcfg = cfg.model;
    mcfg.hierarchical = true;
    mcfg.flat = false;
    mcfg.seed = derive_seed(seed, 4);
    LossConfig loss;
    loss.alpha = cfg.alpha;
    loss.beta = beta;
    TrainResult trained = train_sgd(init_model(h, all.dim, mcfg), parts.id, tcfg, loss, h);
    m.log = std::move(trained.log);
    const ModelParams& params = trained.params;

    const auto id_scores = score_dataset(params, h, id_test);
    const auto ood_scores = score_dataset(params, h, ood);
    for (Metric metric : {Metric::path_probability, Metric::h_mean, Metric::h_min}) {
      m.auroc[metric] = granularity_report(metric_column(id_scores, metric), metric_column(ood_scores, metric), gran,
                                           higher_is_id(metric));
    }

    const auto val_paths = sample_paths(params, h, id_val);
    const auto id_paths = sample_paths(params, h, id_test);
    const auto ood_paths = sample_paths(params, h, ood);
    const SweepPools pools{val_paths, id_val.labels, id_paths, id_test.labels, ood_paths, truth};
    const ThresholdMode modes[] = {ThresholdMode::node_wise, ThresholdMode::path_wise};
    m.sweep = tnr_sweep(h, pools, cfg.tnr_grid, modes);

    const auto pairs = calibration_pairs(h, val_paths, id_val.labels);
    const ThresholdTable node_table = calibrate_pairs(h, pairs, cfg.report_tnr, ThresholdMode::node_wise, true);
    const ThresholdTable path_table = calibrate_pairs(h, pairs, cfg.report_tnr, ThresholdMode::path_wise);
    std::vector<NodeId> id_pred;
    std::vector<NodeId> ood_pred;
    for (const SamplePaths& s : id_paths) id_pred.push_back(stop_node(h, s, node_table));
    for (const SamplePaths& s : ood_paths) ood_pred.push_back(stop_node(h, s, node_table));
    m.id_outcomes = hierarchical_outcomes(id_pred, id_test.labels, h);
    m.ood_outcomes = hierarchical_outcomes(ood_pred, truth, h);
    m.micro_roc = micro_roc_analysis(h, pools, path_table);
    run.models.push_back(std::move(m));
  }

  if (cfg.flat_baseline) {
    BenchModelRun m;
    m.name = "flat";
    m.flat = true;
    ModelConfig mcfg = cfg.model;
    mcfg.hierarchical = false;
    mcfg.flat = true;
    mcfg.seed = derive_seed(seed, 4);
    LossConfig loss;
    loss.flat = true;
    TrainResult trained = train_sgd(init_model(h, all.dim, mcfg), parts.id, tcfg, loss, h);
    m.log = std::move(trained.log);
    const auto id_scores = score_dataset(trained.params, h, id_test);
    const auto ood_scores = score_dataset(trained.params, h, ood);
    m.auroc[Metric::msp] =
        granularity_report(metric_column(id_scores, Metric::msp), metric_column(ood_scores, Metric::msp), gran, true);
    std::vector<NodeId> id_pred;
    std::vector<NodeId> ood_pred;
    for (const ScoredSample& s : id_scores) id_pred.push_back(s.flat_leaf);
    for (const ScoredSample& s : ood_scores) ood_pred.push_back(s.flat_leaf);
    m.id_outcomes = hierarchical_outcomes(id_pred, id_test.labels, h);
    m.ood_outcomes = hierarchical_outcomes(ood_pred, truth, h);
    run.models.push_back(std::move(m));
  }
  return run;
}

std::string cell(const std::optional<double>& v) { return v ? text::format_double(*v) : "absent"; }

std::string modes_row(const ErrorModes& m) {
  return std::to_string(m.correct) + "," + std::to_string(m.standard_error) + "," + std::to_string(m.under_prediction) +
         "," + std::to_string(m.over_prediction);
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  if (cfg.seed_count < 1) throw ValidationError("bench needs at least one seed");
  if (cfg.betas.empty() && !cfg.flat_baseline) throw ValidationError("bench has no models to train");
  cfg.train.validate();
  std::vector<std::future<BenchSeedRun>> jobs;
  for (int i = 0; i < cfg.seed_count; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    jobs.push_back(std::async(std::launch::async, [&cfg, seed] { return run_seed(cfg, seed); }));
  }
  BenchResult result;
  for (auto& job : jobs) result.runs.push_back(job.get());
  return result;
}

std::map<std::string, std::string> bench_reports(const BenchResult& result) {
  std::map<std::string, std::string> files;
  std::string auroc_csv = "seed,model,metric,fine,medium,coarse,overall\n";
  std::string modes_csv = "seed,model,pool,correct,standard_error,under_prediction,over_prediction\n";
  std::string accuracy_csv = "seed,model,pool,accuracy,ancestor_accuracy,avg_hdist\n";
  std::string holdouts_csv = "seed,node,granularity\n";
  for (const BenchSeedRun& run : result.runs) {
    const std::string seed = std::to_string(run.seed);
    for (const Holdout& ho : run.holdouts)
      holdouts_csv += seed + "," + ho.node + "," + std::string(to_string(ho.granularity)) + "\n";
    for (const BenchModelRun& m : run.models) {
      for (const auto& [metric, g] : m.auroc) {
        auroc_csv += seed + "," + m.name + "," + std::string(to_string(metric)) + "," + cell(g.fine) + "," +
                     cell(g.medium) + "," + cell(g.coarse) + "," + cell(g.overall) + "\n";
      }
      for (const auto& [pool, o] : {std::pair{"id", &m.id_outcomes}, std::pair{"ood", &m.ood_outcomes}}) {
        modes_csv += seed + "," + m.name + "," + pool + "," + modes_row(o->modes) + "\n";
        accuracy_csv += seed + "," + m.name + "," + pool + "," + text::format_double(o->accuracy) + "," +
                        text::format_double(o->ancestor_accuracy) + "," + text::format_double(o->avg_distance) + "\n";
        files["confusion_seed" + seed + "_" + m.name + "_" + pool + ".csv"] = write_confusion(*o);
      }
      if (!m.sweep.empty()) files["sweep_seed" + seed + "_" + m.name + ".csv"] = write_sweep(m.sweep);
      if (!m.micro_roc.empty())
        files["micro_roc_seed" + seed + "_" + m.name + ".csv"] = write_micro_roc(m.micro_roc, run.id_hierarchy);
      files["train_log_seed" + seed + "_" + m.name + ".csv"] = write_training_log(m.log);
    }
  }
  files["auroc.csv"] = auroc_csv;
  files["error_modes.csv"] = modes_csv;
  files["accuracy.csv"] = accuracy_csv;
  files["holdouts.csv"] = holdouts_csv;
  return files;
}

}  // namespace hiernav
