#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiernav/hierarchy.hpp"

namespace hiernav {

// Affine map y = W x + b with W stored row-major (out x in).
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  Dense() = default;
  Dense(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  std::size_t parameter_count() const { return weights.size() + bias.size(); }
  friend bool operator==(const Dense&, const Dense&) = default;
};

// Shared rectified trunk feeding one softmax head per internal node and an
// optional flat softmax head over all leaves.
struct ModelParams {
  std::size_t input_dim = 0;
  std::vector<Dense> trunk;
  std::vector<Dense> heads;  // indexed by Hierarchy::internal_index
  std::optional<Dense> flat_head;

  std::size_t feature_dim() const { return trunk.empty() ? input_dim : trunk.back().out; }
  std::size_t parameter_count() const;
  bool all_finite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ModelConfig {
  int trunk_layers = 1;     // 0..3
  std::size_t hidden = 0;   // 0 selects max(64, 2 * leaf count)
  bool hierarchical = true;
  bool flat = false;
  std::uint64_t seed = 0;
};

// Weights and biases drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
ModelParams init_model(const Hierarchy& h, std::size_t input_dim, const ModelConfig& cfg);

// Child distributions of every internal node, packed by internal index.
class NodeDistributions {
 public:
  NodeDistributions() = default;
  explicit NodeDistributions(const Hierarchy& h);

  std::span<const double> of_index(int internal_index) const;
  std::span<double> of_index(int internal_index);
  std::span<const double> of(const Hierarchy& h, NodeId internal) const {
    return of_index(h.internal_index(internal));
  }
  std::size_t internal_count() const { return offset_.empty() ? 0 : offset_.size() - 1; }
  // p(child | parent(child))
  double child_probability(const Hierarchy& h, NodeId child) const;

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offset_;
};

// Numerically stable softmax (max-subtracted).
void softmax(std::span<const double> logits, std::span<double> out);

// Shannon entropy in nats; zero probabilities contribute nothing.
double entropy(std::span<const double> p);

// Activations kept for backpropagation: layer_inputs[l] is the input to trunk
// layer l, features is the trunk output.
struct ForwardCache {
  std::vector<std::vector<double>> layer_inputs;
  std::vector<double> features;
  NodeDistributions nodes;
  std::vector<double> flat;
};

void forward_into(const ModelParams& params, const Hierarchy& h, std::span<const double> x, ForwardCache& cache);

NodeDistributions forward(const ModelParams& params, const Hierarchy& h, std::span<const double> x);

// Pr(n | x) for every node, as products of child probabilities from the root.
std::vector<double> node_path_probabilities(const NodeDistributions& nd, const Hierarchy& h);

// Distribution over leaves, indexed by Hierarchy::leaf_index.
std::vector<double> leaf_posteriors(const NodeDistributions& nd, const Hierarchy& h);

// Most probable leaf; ties go to the lowest node id.
NodeId predict_leaf(const NodeDistributions& nd, const Hierarchy& h);

// Flat softmax over leaves (indexed by Hierarchy::leaf_index).
std::vector<double> flat_forward(const ModelParams& params, std::span<const double> x);

std::string write_model(const ModelParams& params, const Hierarchy& h);
ModelParams read_model(std::string_view contents, const Hierarchy& h);

}  // namespace hiernav
