#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hiernav/bench.hpp"
#include "hiernav/evaluation.hpp"
#include "hiernav/inference.hpp"
#include "hiernav/training.hpp"
#include "support.hpp"

using namespace hiernav;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check, double budget_s = 0.0) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0.0 && secs > budget_s) {
    v.pass = false;
    v.detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + " s budget)";
  }
  if (!v.pass) ++failures;
  std::printf("%s C%d %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Dataset random_dataset(const Hierarchy& h, std::size_t dim, std::size_t rows, std::mt19937_64& rng) {
  Dataset ds;
  ds.dim = dim;
  std::uniform_int_distribution<std::size_t> leaf(0, h.leaves().size() - 1);
  for (std::size_t i = 0; i < rows; ++i)
    ds.add(hiernav::testing::random_vector(rng, dim), h.leaves()[leaf(rng)], Split::train);
  return ds;
}

Verdict normalization() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 2 + static_cast<int>(rng() % 80));
    const std::size_t dim = 1 + rng() % 16;
    ModelParams m = init_model(h, dim, ModelConfig{static_cast<int>(rng() % 3), 8, true, false, rng()});
    for (double* p : hiernav::testing::parameter_slots(m)) *p *= 4.0;
    const auto x = hiernav::testing::random_vector(rng, dim, 3.0);
    const NodeDistributions nd = forward(m, h, x);
    // Path products summed independently of leaf_posteriors.
    double brute = 0.0;
    for (NodeId leaf : h.leaves()) {
      double p = 1.0;
      for (NodeId n = leaf; n != h.root(); n = h.parent(n)) p *= nd.child_probability(h, n);
      brute += p;
    }
    const auto post = leaf_posteriors(nd, h);
    const double lib = std::accumulate(post.begin(), post.end(), 0.0);
    worst = std::max({worst, std::abs(brute - 1.0), std::abs(lib - 1.0)});
  }
  return {worst <= 1e-9, "1000 triples, max |sum - 1| = " + fmt(worst)};
}

Verdict gradient_oracle() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> coef(0.1, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 3 + static_cast<int>(rng() % 24), true);
    if (h.size() > 30) {
      --t;
      continue;
    }
    const std::size_t dim = 1 + rng() % 16;
    ModelParams m = init_model(h, dim, ModelConfig{static_cast<int>(rng() % 3), 1 + rng() % 8, true, false, rng()});
    for (double* p : hiernav::testing::parameter_slots(m)) *p *= 2.0;
    const Dataset ds = random_dataset(h, dim, 1 + rng() % 4, rng);
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    LossConfig cfg;
    cfg.alpha = coef(rng);
    cfg.beta = coef(rng);
    const std::vector<double> analytic = hiernav::testing::flatten(backward(m, ds, rows, cfg, h).grad);
    std::vector<double> numeric;
    const double step = 1e-5;
    for (double* p : hiernav::testing::parameter_slots(m)) {
      const double keep = *p;
      *p = keep + step;
      const double up = batch_objective(m, ds, rows, cfg, h);
      *p = keep - step;
      const double down = batch_objective(m, ds, rows, cfg, h);
      *p = keep;
      numeric.push_back((up - down) / (2 * step));
    }
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nb += numeric[i] * numeric[i];
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nb));
    if (scale > 0.0) worst = std::max(worst, std::sqrt(diff) / scale);
  }
  return {worst <= 1e-4, "50 instances, max relative error = " + fmt(worst)};
}

Verdict auroc_oracle() {
  std::mt19937_64 rng(303);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> id(1 + rng() % 200), ood(1 + rng() % 200);
    const int levels = 1 + static_cast<int>(rng() % 40);
    for (double& v : id) v = static_cast<double>(rng() % levels) / levels;
    for (double& v : ood) v = static_cast<double>(rng() % levels) / levels;
    const bool dir = (t & 1) == 0;
    std::uint64_t twice = 0;
    for (double a : id) {
      for (double b : ood) {
        const double x = dir ? a : -a;
        const double y = dir ? b : -b;
        twice += x > y ? 2 : x == y ? 1 : 0;
      }
    }
    const double brute = static_cast<double>(twice) / (2.0 * static_cast<double>(id.size() * ood.size()));
    if (auroc(id, ood, dir) != brute) ++mismatches;
  }
  return {mismatches == 0, "100 score sets, mismatches = " + std::to_string(mismatches)};
}

Verdict threshold_monotonicity() {
  const std::vector<int> b{3, 3, 3};
  const Hierarchy h = generate_synthetic_hierarchy(b);
  const SyntheticFeatures f = generate_synthetic_features(h, FeatureSpec{16, {0.4, 0.3, 0.2}, 0.15, {20, 10, 4}, 404});
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 32;
  tc.seed = 4;
  LossConfig lc;
  lc.beta = 0.2;
  const ModelParams m = train_sgd(init_model(h, 16, ModelConfig{1, 64, true, false, 4}), f.data, tc, lc, h).params;
  const Dataset val = f.data.subset(Split::val);
  const Dataset test = f.data.subset(Split::test);
  const auto paths = sample_paths(m, h, test);
  const std::size_t samples = std::min<std::size_t>(100, test.size());
  std::vector<NodeId> prev;
  int violations = 0;
  int stopped_early = 0;
  for (double tnr : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const ThresholdTable table = calibrate(m, h, val, tnr, ThresholdMode::node_wise);
    std::vector<NodeId> cur;
    for (std::size_t i = 0; i < samples; ++i) {
      const NodeId p = hierarchical_infer(m, h, test.row(i), table);
      if (!h.is_ancestor_or_equal(p, paths[i].leaf)) ++violations;
      if (!prev.empty() && !h.is_ancestor_or_equal(p, prev[i])) ++violations;
      if (tnr == 0.99 && !h.is_leaf(p)) ++stopped_early;
      cur.push_back(p);
    }
    prev = cur;
  }
  return {violations == 0 && samples == 100,
          std::to_string(samples) + " samples x 5 TNRs, violations = " + std::to_string(violations) +
              ", non-leaf at 0.99 = " + std::to_string(stopped_early)};
}

const BenchModelRun* find_model(const BenchSeedRun& run, const std::string& name) {
  for (const BenchModelRun& m : run.models) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

double mean_auroc(const BenchResult& r, const std::string& model, Metric metric, Granularity g) {
  double s = 0.0;
  for (const BenchSeedRun& run : r.runs) s += find_model(run, model)->auroc.at(metric).get(g).value();
  return s / static_cast<double>(r.runs.size());
}

Verdict trend(const BenchResult& r) {
  bool ok = true;
  std::string detail;
  for (const char* model : {"hsc_b0", "hsc_b0.2"}) {
    for (Metric metric : {Metric::path_probability, Metric::h_min}) {
      const double coarse = mean_auroc(r, model, metric, Granularity::coarse);
      const double fine = mean_auroc(r, model, metric, Granularity::fine);
      ok = ok && coarse - fine >= 0.05;
      detail += std::string(model) + "/" + std::string(to_string(metric)) + " coarse " + fmt(coarse) + " fine " +
                fmt(fine) + "; ";
    }
  }
  return {ok, detail};
}

Verdict ablation(const BenchResult& r) {
  bool ok = true;
  std::string detail;
  for (Metric metric : {Metric::path_probability, Metric::h_mean, Metric::h_min}) {
    const double b0 = mean_auroc(r, "hsc_b0", metric, Granularity::coarse);
    const double b2 = mean_auroc(r, "hsc_b0.2", metric, Granularity::coarse);
    ok = ok && b2 >= b0 - 0.01;
    detail += std::string(to_string(metric)) + " beta0 " + fmt(b0) + " beta0.2 " + fmt(b2) + "; ";
  }
  return {ok, "coarse means: " + detail};
}

Verdict sweep(const BenchResult& r) {
  bool ok = true;
  double worst_ood = -INFINITY, worst_id = 0.0;
  for (const BenchSeedRun& run : r.runs) {
    for (const char* model : {"hsc_b0", "hsc_b0.2"}) {
      const BenchModelRun* m = find_model(run, model);
      const SweepPoint* lo = nullptr;
      const SweepPoint* hi = nullptr;
      for (const SweepPoint& p : m->sweep) {
        if (p.mode != ThresholdMode::node_wise) continue;
        if (p.tnr == 0.5) lo = &p;
        if (p.tnr == 0.99) hi = &p;
      }
      if (!lo || !hi || lo->failed || hi->failed) return {false, "missing sweep point for " + std::string(model)};
      worst_ood = std::max(worst_ood, hi->ood_distance - lo->ood_distance);
      worst_id = std::max(worst_id, std::abs(hi->id_distance - lo->id_distance));
      ok = ok && hi->ood_distance <= lo->ood_distance && std::abs(hi->id_distance - lo->id_distance) <= 0.1;
    }
  }
  return {ok, "max OOD change (0.99 minus 0.5) = " + fmt(worst_ood) + ", max |ID change| = " + fmt(worst_id)};
}

Verdict micro_roc(const BenchResult& r) {
  bool ok = true;
  double worst = 1.0;
  for (const BenchSeedRun& run : r.runs) {
    for (const char* model : {"hsc_b0", "hsc_b0.2"}) {
      const BenchModelRun* m = find_model(run, model);
      std::size_t recovered = 0;
      for (const NodeMicroRoc& n : m->micro_roc) {
        if (n.id_ood && n.id_ood_thresholded && *n.id_ood_thresholded >= *n.id_ood) ++recovered;
      }
      const double frac = static_cast<double>(recovered) / static_cast<double>(m->micro_roc.size());
      worst = std::min(worst, frac);
      ok = ok && frac >= 0.8;
    }
  }
  return {ok, "lowest fraction of nodes with thresholded >= unthresholded AUROC = " + fmt(worst)};
}

Verdict memorization() {
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nb\tr\nx\ta\ny\ta\nz\tb\nw\tb\n");
  Dataset ds;
  ds.dim = 4;
  ds.add(std::vector<double>{0.5, -0.3, 0.8, 0.1}, h.id("x"), Split::train);
  ds.add(std::vector<double>{-0.4, 0.9, 0.2, -0.7}, h.id("z"), Split::train);
  ds.add(std::vector<double>{0.3, 0.3, -0.9, 0.6}, h.id("w"), Split::train);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = ds.size();
  tc.milestones = {67, 133};
  tc.seed = 9;
  LossConfig lc;
  const ModelParams m = train_sgd(init_model(h, 4, ModelConfig{1, 0, true, false, 9}), ds, tc, lc, h).params;
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) loss += soft_loss(forward(m, h, ds.row(i)), ds.labels[i], lc, h);
  loss /= static_cast<double>(ds.size());
  return {loss < 0.01, "soft loss after 200 epochs = " + fmt(loss)};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Verdict reproducibility() {
  const fs::path base = fs::temp_directory_path() / ("hiernav_accept_" + std::to_string(::getpid()));
  fs::remove_all(base);
  std::map<std::string, std::string> runs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = base / ("run" + std::to_string(i));
    const std::string cmd = std::string(HIERNAV_CLI) + " bench --seed 7 --out " + out.string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      fs::remove_all(base);
      return {false, "bench exited abnormally"};
    }
    runs[i] = read_tree(out);
  }
  fs::remove_all(base);
  std::size_t differing = 0;
  for (const auto& [name, body] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != body) ++differing;
  }
  const bool same = differing == 0 && runs[0].size() == runs[1].size() && !runs[0].empty();
  return {same, std::to_string(runs[0].size()) + " report files, differing = " + std::to_string(differing)};
}

}  // namespace

int main() {
  report(1, "normalization", normalization, 10.0);
  report(2, "gradient oracle", gradient_oracle, 30.0);
  report(3, "auroc oracle", auroc_oracle);
  report(4, "threshold monotonicity", threshold_monotonicity);

  BenchResult bench;
  const auto start = std::chrono::steady_clock::now();
  std::string bench_error;
  try {
    bench = run_bench(BenchConfig{});
  } catch (const std::exception& e) {
    bench_error = e.what();
  }
  const double bench_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("bench: %zu seeds in %.2f s\n", bench.runs.size(), bench_secs);
  auto with_bench = [&](Verdict (*fn)(const BenchResult&)) {
    return [&, fn]() -> Verdict {
      if (!bench_error.empty()) return {false, "bench failed: " + bench_error};
      return fn(bench);
    };
  };
  report(5, "coarse vs fine trend", [&] {
    Verdict v = with_bench(trend)();
    if (bench_secs > 300.0) {
      v.pass = false;
      v.detail += " (bench over 5 min)";
    }
    return v;
  });
  report(6, "loss ablation direction", with_bench(ablation));
  report(7, "tnr sweep behaviour", with_bench(sweep));
  report(8, "micro-roc recovery", with_bench(micro_roc));
  report(9, "memorization", memorization);
  report(10, "reproducibility", reproducibility);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
