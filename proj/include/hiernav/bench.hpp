#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hiernav/data.hpp"
#include "hiernav/evaluation.hpp"
#include "hiernav/hierarchy.hpp"
#include "hiernav/model.hpp"
#include "hiernav/scoring.hpp"
#include "hiernav/training.hpp"

namespace hiernav {

// End-to-end synthetic benchmark: generate a hierarchy and features, hold
// out a coarse subtree and several fine leaves, train hierarchical models for
// each beta plus a flat baseline, and evaluate them.
struct BenchConfig {
  std::uint64_t seed = 7;
  int seed_count = 3;  // seeds seed, seed+1, ...
  std::vector<int> branching{3, 3, 3, 3};
  FeatureSpec features{32, {0.4, 0.3, 0.2, 0.15}, 0.1, {30, 10, 20}, 0};
  DepthBand coarse_band{Granularity::coarse, 1, 1, 0.34};
  DepthBand fine_band{Granularity::fine, 4, 4, 0.1};
  int coarse_holdouts = 1;  // exactly this many
  int min_fine_holdouts = 3;
  ModelConfig model{2, 256, true, false, 0};
  TrainConfig train{30, 64, 0.3};
  std::vector<double> betas{0.0, 0.2};
  double alpha = 1.0;
  bool flat_baseline = true;
  std::vector<double> tnr_grid{0.5, 0.8, 0.9, 0.95, 0.99};
  double report_tnr = 0.95;  // confusion matrices and micro-ROC threshold
};

struct BenchModelRun {
  std::string name;  // "hsc_b<beta>" or "flat"
  double beta = 0.0;
  bool flat = false;
  std::map<Metric, GranularityAuroc> auroc;
  std::vector<SweepPoint> sweep;
  std::vector<NodeMicroRoc> micro_roc;
  Outcomes id_outcomes;   // node_wise at report_tnr
  Outcomes ood_outcomes;
  std::vector<EpochLog> log;
};

struct BenchSeedRun {
  std::uint64_t seed = 0;
  Hierarchy id_hierarchy;
  std::vector<Holdout> holdouts;
  std::vector<BenchModelRun> models;
};

struct BenchResult {
  std::vector<BenchSeedRun> runs;
};

BenchResult run_bench(const BenchConfig& cfg);

// Report file name -> contents.
std::map<std::string, std::string> bench_reports(const BenchResult& result);

}  // namespace hiernav
