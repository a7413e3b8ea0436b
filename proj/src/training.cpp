#include "hiernav/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hiernav/error.hpp"
#include "hiernav/kernels.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

std::vector<double> node_weights(const Hierarchy& h) {
  const double total = static_cast<double>(h.leaves().size());
  std::vector<double> w(h.size());
  for (std::size_t n = 0; n < h.size(); ++n) w[n] = h.leaf_count(static_cast<NodeId>(n)) / total;
  return w;
}

void LossConfig::validate(const Hierarchy& h) const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  if (node_weights.empty()) return;
  if (node_weights.size() != h.size()) throw ValidationError("node weights must cover every node");
  for (NodeId n : h.internals()) {
    const double w = node_weights[n];
    if (!(w > 0.0 && w <= 1.0)) throw ValidationError("node weight for '" + h.name(n) + "' outside (0,1]");
  }
  if (node_weights[h.root()] != 1.0) throw ValidationError("root node weight must be 1");
}

namespace {

void check_label(const Hierarchy& h, NodeId y) {
  h.check(y);
  if (!h.is_leaf(y)) throw ValidationError("label '" + h.name(y) + "' is not a leaf");
}

double neg_log(double p) { return -std::log(std::max(p, kProbabilityFloor)); }

double uniform_cross_entropy(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += neg_log(v);
  return s / static_cast<double>(p.size());
}

// on_path[internal index] = child position taken by the label, or -1.
void label_path(const Hierarchy& h, NodeId y, std::vector<int>& on_path) {
  on_path.assign(h.internals().size(), -1);
  for (NodeId c = y; c != h.root(); c = h.parent(c)) on_path[h.internal_index(h.parent(c))] = h.child_position(c);
}

}  // namespace

double soft_loss(const NodeDistributions& nd, NodeId y, const LossConfig& cfg, const Hierarchy& h) {
  check_label(h, y);
  const std::vector<double> computed = cfg.node_weights.empty() ? node_weights(h) : std::vector<double>{};
  const std::vector<double>& w = cfg.node_weights.empty() ? computed : cfg.node_weights;
  double loss = 0.0;
  for (NodeId c = y; c != h.root(); c = h.parent(c)) {
    const NodeId n = h.parent(c);
    loss += w[n] * neg_log(nd.of(h, n)[h.child_position(c)]);
  }
  return loss;
}

double other_loss(const NodeDistributions& nd, NodeId y, const Hierarchy& h) {
  check_label(h, y);
  std::vector<int> on_path;
  label_path(h, y, on_path);
  double loss = 0.0;
  for (std::size_t i = 0; i < on_path.size(); ++i) {
    if (on_path[i] < 0) loss += uniform_cross_entropy(nd.of_index(static_cast<int>(i)));
  }
  return loss;
}

double total_loss(const NodeDistributions& nd, NodeId y, const LossConfig& cfg, const Hierarchy& h) {
  double loss = 0.0;
  if (cfg.alpha != 0.0) loss += cfg.alpha * soft_loss(nd, y, cfg, h);
  if (cfg.beta != 0.0) loss += cfg.beta * other_loss(nd, y, h);
  return loss;
}

double flat_loss(std::span<const double> probs, int leaf_index) {
  if (leaf_index < 0 || static_cast<std::size_t>(leaf_index) >= probs.size())
    throw ValidationError("flat label out of range");
  return neg_log(probs[leaf_index]);
}

Gradients zeros_like(const ModelParams& params) {
  Gradients g = params;
  auto zero = [](Dense& d) {
    std::fill(d.weights.begin(), d.weights.end(), 0.0);
    std::fill(d.bias.begin(), d.bias.end(), 0.0);
  };
  for (Dense& d : g.trunk) zero(d);
  for (Dense& d : g.heads) zero(d);
  if (g.flat_head) zero(*g.flat_head);
  return g;
}

namespace {

template <typename Fn>
void for_each_dense(ModelParams& a, const ModelParams& b, Fn fn) {
  for (std::size_t i = 0; i < a.trunk.size(); ++i) fn(a.trunk[i], b.trunk[i]);
  for (std::size_t i = 0; i < a.heads.size(); ++i) fn(a.heads[i], b.heads[i]);
  if (a.flat_head) fn(*a.flat_head, *b.flat_head);
}

double squared_norm(const ModelParams& p) {
  double s = 0.0;
  auto add = [&](const Dense& d) {
    s += kernels::dot(d.weights, d.weights);
    s += kernels::dot(d.bias, d.bias);
  };
  for (const Dense& d : p.trunk) add(d);
  for (const Dense& d : p.heads) add(d);
  if (p.flat_head) add(*p.flat_head);
  return s;
}

void check_rows(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> rows,
                const LossConfig& cfg, const Hierarchy& h) {
  if (rows.empty()) throw ValidationError("empty batch");
  if (ds.dim != params.input_dim) throw ValidationError("dataset dimension does not match model");
  if (cfg.flat && !params.flat_head) throw ValidationError("flat loss requires a flat head");
  if (!cfg.flat && params.heads.size() != h.internals().size())
    throw ValidationError("hierarchical loss requires one head per internal node");
  cfg.validate(h);
  for (std::size_t r : rows) {
    if (r >= ds.size()) throw ValidationError("batch row out of range");
    check_label(h, ds.labels[r]);
  }
}

// Per-sample gradient accumulation with reusable buffers.
class GradientAccumulator {
 public:
  GradientAccumulator(const ModelParams& params, const LossConfig& cfg, const Hierarchy& h)
      : params_(params), cfg_(cfg), h_(h), weights_(cfg.node_weights.empty() ? node_weights(h) : cfg.node_weights) {}

  // Adds scale * d(loss)/d(theta) for one sample to grad; returns the loss.
  double add(std::span<const double> x, NodeId y, double scale, Gradients& grad) {
    forward_into(params_, h_, x, cache_);
    dfeat_.assign(params_.feature_dim(), 0.0);
    double loss = 0.0;
    if (cfg_.flat) {
      const int k = h_.leaf_index(y);
      loss = flat_loss(cache_.flat, k);
      g_.assign(cache_.flat.begin(), cache_.flat.end());
      g_[k] -= 1.0;
      for (double& v : g_) v *= scale;
      accumulate_head(params_.flat_head.value(), *grad.flat_head);
    } else {
      label_path(h_, y, on_path_);
      for (std::size_t i = 0; i < on_path_.size(); ++i) {
        const auto p = cache_.nodes.of_index(static_cast<int>(i));
        const int c = on_path_[i];
        if (c >= 0) {
          if (cfg_.alpha == 0.0) continue;
          const double w = cfg_.alpha * weights_[h_.internals()[i]];
          loss += w * neg_log(p[c]);
          g_.assign(p.begin(), p.end());
          g_[c] -= 1.0;
          for (double& v : g_) v *= w * scale;
        } else {
          if (cfg_.beta == 0.0) continue;
          loss += cfg_.beta * uniform_cross_entropy(p);
          const double u = 1.0 / static_cast<double>(p.size());
          g_.resize(p.size());
          for (std::size_t j = 0; j < p.size(); ++j) g_[j] = cfg_.beta * scale * (p[j] - u);
        }
        accumulate_head(params_.heads[i], grad.heads[i]);
      }
    }
    backprop_trunk(grad);
    return loss;
  }

 private:
  void accumulate_head(const Dense& head, Dense& g) {
    kernels::outer_acc(g.weights, g_, cache_.features);
    kernels::axpy(1.0, g_, g.bias);
    if (!params_.trunk.empty()) kernels::affine_transpose_acc(head.weights, g_, dfeat_);
  }

  void backprop_trunk(Gradients& grad) {
    const std::size_t layers = params_.trunk.size();
    for (std::size_t l = layers; l-- > 0;) {
      const std::vector<double>& out = l + 1 == layers ? cache_.features : cache_.layer_inputs[l + 1];
      for (std::size_t k = 0; k < dfeat_.size(); ++k) {
        if (out[k] <= 0.0) dfeat_[k] = 0.0;
      }
      Dense& g = grad.trunk[l];
      kernels::outer_acc(g.weights, dfeat_, cache_.layer_inputs[l]);
      kernels::axpy(1.0, dfeat_, g.bias);
      if (l == 0) break;
      din_.assign(params_.trunk[l].in, 0.0);
      kernels::affine_transpose_acc(params_.trunk[l].weights, dfeat_, din_);
      std::swap(dfeat_, din_);
    }
  }

  const ModelParams& params_;
  const LossConfig& cfg_;
  const Hierarchy& h_;
  std::vector<double> weights_;
  ForwardCache cache_;
  std::vector<int> on_path_;
  std::vector<double> g_;
  std::vector<double> dfeat_;
  std::vector<double> din_;
};

}  // namespace

BackwardResult backward(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> rows,
                        const LossConfig& cfg, const Hierarchy& h, double weight_decay) {
  check_rows(params, ds, rows, cfg, h);
  BackwardResult out{zeros_like(params), 0.0};
  GradientAccumulator acc(params, cfg, h);
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) out.loss += acc.add(ds.row(r), ds.labels[r], scale, out.grad);
  out.loss *= scale;
  if (!std::isfinite(out.loss)) throw ComputeError("non-finite loss in backward pass");
  if (weight_decay != 0.0) {
    for_each_dense(out.grad, params, [&](Dense& g, const Dense& p) {
      kernels::axpy(weight_decay, p.weights, g.weights);
      kernels::axpy(weight_decay, p.bias, g.bias);
    });
  }
  return out;
}

double batch_objective(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> rows,
                       const LossConfig& cfg, const Hierarchy& h, double weight_decay) {
  check_rows(params, ds, rows, cfg, h);
  ForwardCache cache;
  double loss = 0.0;
  for (std::size_t r : rows) {
    forward_into(params, h, ds.row(r), cache);
    loss += cfg.flat ? flat_loss(cache.flat, h.leaf_index(ds.labels[r])) : total_loss(cache.nodes, ds.labels[r], cfg, h);
  }
  loss /= static_cast<double>(rows.size());
  if (weight_decay != 0.0) loss += 0.5 * weight_decay * squared_norm(params);
  return loss;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size == 0) throw ValidationError("batch size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("weight decay must be >= 0");
  if (!(lr_decay > 0.0) || !std::isfinite(lr_decay)) throw ValidationError("lr decay factor must be > 0");
  if (!std::is_sorted(milestones.begin(), milestones.end())) throw ValidationError("milestones must be ascending");
  for (int m : milestones) {
    if (m <= 0) throw ValidationError("milestones must be positive");
  }
}

double TrainConfig::lr_at(int epoch) const {
  double lr = learning_rate;
  for (int m : milestones) {
    if (epoch >= m) lr *= lr_decay;
  }
  return lr;
}

double leaf_accuracy(const ModelParams& params, const Dataset& ds, const Hierarchy& h) {
  if (ds.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  ForwardCache cache;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    forward_into(params, h, ds.row(i), cache);
    NodeId pred;
    if (!params.heads.empty()) {
      pred = predict_leaf(cache.nodes, h);
    } else {
      const auto it = std::max_element(cache.flat.begin(), cache.flat.end());
      pred = h.leaves()[static_cast<std::size_t>(it - cache.flat.begin())];
    }
    correct += pred == ds.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

TrainResult train_sgd(ModelParams params, const Dataset& ds, const TrainConfig& cfg, const LossConfig& loss,
                      const Hierarchy& h) {
  cfg.validate();
  loss.validate(h);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits[i] == Split::train) rows.push_back(i);
  }
  if (rows.empty()) throw ValidationError("training split is empty");
  const Dataset val = ds.subset(Split::val);

  std::mt19937_64 rng(cfg.seed);
  Gradients velocity = zeros_like(params);
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    std::shuffle(rows.begin(), rows.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < rows.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(rows.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(rows.data() + start, end - start);
      BackwardResult b;
      try {
        b = backward(params, ds, batch, loss, h);
      } catch (const ComputeError&) {
        throw ComputeError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      epoch_loss += b.loss * static_cast<double>(batch.size());
      auto step = [&](Dense& p, const Dense& g, Dense& v) {
        kernels::momentum_step(p.weights, g.weights, v.weights, lr, cfg.momentum, cfg.weight_decay);
        kernels::momentum_step(p.bias, g.bias, v.bias, lr, cfg.momentum, cfg.weight_decay);
      };
      for (std::size_t i = 0; i < params.trunk.size(); ++i) step(params.trunk[i], b.grad.trunk[i], velocity.trunk[i]);
      for (std::size_t i = 0; i < params.heads.size(); ++i) step(params.heads[i], b.grad.heads[i], velocity.heads[i]);
      if (params.flat_head) step(*params.flat_head, *b.grad.flat_head, *velocity.flat_head);
    }
    epoch_loss /= static_cast<double>(rows.size());
    if (!std::isfinite(epoch_loss) || !params.all_finite())
      throw ComputeError("training diverged at epoch " + std::to_string(epoch) + " (non-finite parameters)");
    result.log.push_back({epoch, lr, epoch_loss, leaf_accuracy(params, val, h)});
  }
  result.params = std::move(params);
  return result;
}

std::string write_training_log(std::span<const EpochLog> log) {
  std::string out = "epoch,lr,train_loss,val_accuracy\n";
  for (const EpochLog& e : log) {
    out += std::to_string(e.epoch) + "," + text::format_double(e.lr) + "," + text::format_double(e.train_loss) + "," +
           (std::isnan(e.val_accuracy) ? std::string("nan") : text::format_double(e.val_accuracy)) + "\n";
  }
  return out;
}

}  // namespace hiernav
