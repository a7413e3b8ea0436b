#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiernav/data.hpp"
#include "hiernav/hierarchy.hpp"
#include "hiernav/model.hpp"

namespace hiernav {

// Probabilities are floored here inside logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

// W_n = (leaves below n) / (all leaves), indexed by node id. Root gets 1.
std::vector<double> node_weights(const Hierarchy& h);

struct LossConfig {
  double alpha = 1.0;
  double beta = 0.0;
  std::vector<double> node_weights;  // by node id; empty means node_weights(h)
  bool flat = false;                 // train the flat head with plain cross-entropy

  void validate(const Hierarchy& h) const;
};

// Weighted cross-entropy of each child choice along the label's path.
double soft_loss(const NodeDistributions& nd, NodeId y, const LossConfig& cfg, const Hierarchy& h);
// Cross-entropy from uniform at every internal node off the label's path.
double other_loss(const NodeDistributions& nd, NodeId y, const Hierarchy& h);
double total_loss(const NodeDistributions& nd, NodeId y, const LossConfig& cfg, const Hierarchy& h);
double flat_loss(std::span<const double> probs, int leaf_index);

using Gradients = ModelParams;
Gradients zeros_like(const ModelParams& params);

struct BackwardResult {
  Gradients grad;
  double loss = 0.0;  // batch-mean loss, without the weight-decay term
};

// Exact gradient of mean(total_loss) + weight_decay/2 * |theta|^2 over the
// given rows of ds.
BackwardResult backward(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> rows,
                        const LossConfig& cfg, const Hierarchy& h, double weight_decay = 0.0);

// The scalar objective whose gradient backward() returns.
double batch_objective(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> rows,
                       const LossConfig& cfg, const Hierarchy& h, double weight_decay = 0.0);

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_decay = 0.1;
  std::vector<int> milestones{10, 20};
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(int epoch) const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // NaN when the dataset has no val split
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Mini-batch SGD with momentum and weight decay on the train split. Rows are
// reshuffled every epoch from a generator seeded with cfg.seed.
TrainResult train_sgd(ModelParams params, const Dataset& ds, const TrainConfig& cfg, const LossConfig& loss,
                      const Hierarchy& h);

// Leaf accuracy of the hierarchical (or flat, if no heads) predictor.
double leaf_accuracy(const ModelParams& params, const Dataset& ds, const Hierarchy& h);

std::string write_training_log(std::span<const EpochLog> log);

}  // namespace hiernav
