#include "hiernav/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hiernav/error.hpp"
#include "hiernav/kernels.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Dense& d : trunk) n += d.parameter_count();
  for (const Dense& d : heads) n += d.parameter_count();
  if (flat_head) n += flat_head->parameter_count();
  return n;
}

bool ModelParams::all_finite() const {
  auto finite = [](const Dense& d) {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(d.weights.begin(), d.weights.end(), ok) && std::all_of(d.bias.begin(), d.bias.end(), ok);
  };
  return std::all_of(trunk.begin(), trunk.end(), finite) && std::all_of(heads.begin(), heads.end(), finite) &&
         (!flat_head || finite(*flat_head));
}

namespace {

void init_dense(Dense& d, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : d.weights) w = u(rng);
  for (double& b : d.bias) b = u(rng);
}

}  // namespace

ModelParams init_model(const Hierarchy& h, std::size_t input_dim, const ModelConfig& cfg) {
  if (input_dim == 0) throw ValidationError("input dimension must be >= 1");
  if (cfg.trunk_layers < 0 || cfg.trunk_layers > 3) throw ValidationError("trunk layers must be in 0..3");
  if (!cfg.hierarchical && !cfg.flat) throw ValidationError("model needs at least one head kind");
  const std::size_t hidden = cfg.hidden ? cfg.hidden : std::max<std::size_t>(64, 2 * h.leaves().size());

  std::mt19937_64 rng(cfg.seed);
  ModelParams p;
  p.input_dim = input_dim;
  std::size_t width = input_dim;
  for (int l = 0; l < cfg.trunk_layers; ++l) {
    p.trunk.emplace_back(width, hidden);
    init_dense(p.trunk.back(), rng);
    width = hidden;
  }
  if (cfg.hierarchical) {
    for (NodeId n : h.internals()) {
      p.heads.emplace_back(width, h.children(n).size());
      init_dense(p.heads.back(), rng);
    }
  }
  if (cfg.flat) {
    p.flat_head.emplace(width, h.leaves().size());
    init_dense(*p.flat_head, rng);
  }
  return p;
}

NodeDistributions::NodeDistributions(const Hierarchy& h) {
  offset_.reserve(h.internals().size() + 1);
  offset_.push_back(0);
  for (NodeId n : h.internals()) offset_.push_back(offset_.back() + h.children(n).size());
  values_.assign(offset_.back(), 0.0);
}

std::span<const double> NodeDistributions::of_index(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= internal_count())
    throw ValidationError("missing node distribution for internal index " + std::to_string(i));
  return {values_.data() + offset_[i], offset_[i + 1] - offset_[i]};
}

std::span<double> NodeDistributions::of_index(int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= internal_count())
    throw ValidationError("missing node distribution for internal index " + std::to_string(i));
  return {values_.data() + offset_[i], offset_[i + 1] - offset_[i]};
}

double NodeDistributions::child_probability(const Hierarchy& h, NodeId child) const {
  return of(h, h.parent(child))[h.child_position(child)];
}

void softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.size() != out.size() || logits.empty()) throw ValidationError("softmax size mismatch");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
}

double entropy(std::span<const double> p) {
  double e = 0.0;
  for (double v : p) {
    if (v > 0.0) e -= v * std::log(v);
  }
  return e;
}

namespace {

void trunk_forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache) {
  if (x.size() != params.input_dim)
    throw ValidationError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(params.input_dim));
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("non-finite input feature");
  }
  cache.layer_inputs.resize(params.trunk.size());
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < params.trunk.size(); ++l) {
    const Dense& layer = params.trunk[l];
    cache.layer_inputs[l] = std::move(act);
    act.assign(layer.out, 0.0);
    kernels::affine(layer.weights, layer.bias, cache.layer_inputs[l], act);
    for (double& v : act) v = std::max(v, 0.0);
  }
  cache.features = std::move(act);
}

void flat_head_forward(const ModelParams& params, ForwardCache& cache) {
  const Dense& head = *params.flat_head;
  std::vector<double> logits(head.out);
  kernels::affine(head.weights, head.bias, cache.features, logits);
  cache.flat.resize(head.out);
  softmax(logits, cache.flat);
}

}  // namespace

void forward_into(const ModelParams& params, const Hierarchy& h, std::span<const double> x, ForwardCache& cache) {
  trunk_forward(params, x, cache);

  if (!params.heads.empty()) {
    if (params.heads.size() != h.internals().size())
      throw ValidationError("model has " + std::to_string(params.heads.size()) + " heads, hierarchy has " +
                            std::to_string(h.internals().size()) + " internal nodes");
    if (cache.nodes.internal_count() != h.internals().size()) cache.nodes = NodeDistributions(h);
    std::vector<double> logits;
    for (std::size_t i = 0; i < params.heads.size(); ++i) {
      const Dense& head = params.heads[i];
      auto out = cache.nodes.of_index(static_cast<int>(i));
      if (head.out != out.size()) throw ValidationError("head size does not match child count");
      logits.resize(head.out);
      kernels::affine(head.weights, head.bias, cache.features, logits);
      softmax(logits, out);
    }
  }
  if (params.flat_head) flat_head_forward(params, cache);
}

NodeDistributions forward(const ModelParams& params, const Hierarchy& h, std::span<const double> x) {
  if (params.heads.empty()) throw ValidationError("model has no hierarchical heads");
  ForwardCache cache;
  forward_into(params, h, x, cache);
  return std::move(cache.nodes);
}

std::vector<double> node_path_probabilities(const NodeDistributions& nd, const Hierarchy& h) {
  std::vector<double> prob(h.size(), 1.0);
  for (NodeId n = 1; n < static_cast<NodeId>(h.size()); ++n) prob[n] = prob[h.parent(n)] * nd.child_probability(h, n);
  return prob;
}

std::vector<double> leaf_posteriors(const NodeDistributions& nd, const Hierarchy& h) {
  const auto prob = node_path_probabilities(nd, h);
  std::vector<double> out;
  out.reserve(h.leaves().size());
  for (NodeId leaf : h.leaves()) out.push_back(prob[leaf]);
  return out;
}

NodeId predict_leaf(const NodeDistributions& nd, const Hierarchy& h) {
  const auto post = leaf_posteriors(nd, h);
  std::size_t best = 0;
  for (std::size_t i = 1; i < post.size(); ++i) {
    if (post[i] > post[best]) best = i;
  }
  return h.leaves()[best];
}

std::vector<double> flat_forward(const ModelParams& params, std::span<const double> x) {
  if (!params.flat_head) throw ValidationError("model has no flat head");
  ForwardCache cache;
  trunk_forward(params, x, cache);
  flat_head_forward(params, cache);
  return std::move(cache.flat);
}

namespace {

void write_values(std::string& out, char tag, const std::vector<double>& v) {
  out += tag;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += i ? ',' : '\t';
    out += text::format_double(v[i]);
  }
  out += '\n';
}

void write_dense(std::string& out, const Dense& d) {
  write_values(out, 'w', d.weights);
  write_values(out, 'b', d.bias);
}

class LineReader {
 public:
  explicit LineReader(std::string_view contents) : lines_(text::lines(contents)) {}

  std::vector<std::string_view> next_fields() {
    while (pos_ < lines_.size() && (lines_[pos_].empty() || lines_[pos_].front() == '#')) ++pos_;
    if (pos_ >= lines_.size()) throw ParseError(pos_ + 1, "unexpected end of model file");
    return text::split(lines_[pos_++], '\t');
  }
  std::size_t line() const { return pos_; }
  bool done() {
    while (pos_ < lines_.size() && (lines_[pos_].empty() || lines_[pos_].front() == '#')) ++pos_;
    return pos_ >= lines_.size();
  }

  std::size_t read_size(std::string_view s) {
    long long v = 0;
    if (!text::parse_int(s, v) || v < 0) throw ParseError(line(), "bad size '" + std::string(s) + "'");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> read_values(char tag, std::size_t expected) {
    auto f = next_fields();
    if (f.empty() || f[0].size() != 1 || f[0][0] != tag)
      throw ParseError(line(), std::string("expected '") + tag + "' row");
    std::vector<double> v;
    if (expected == 0) return v;
    if (f.size() != 2) throw ParseError(line(), "malformed value row");
    for (std::string_view s : text::split(f[1], ',')) {
      double x = 0.0;
      if (!text::parse_double(s, x)) throw ParseError(line(), "malformed number '" + std::string(s) + "'");
      v.push_back(x);
    }
    if (v.size() != expected)
      throw ParseError(line(), "expected " + std::to_string(expected) + " values, got " + std::to_string(v.size()));
    return v;
  }

  Dense read_dense(std::size_t out, std::size_t in) {
    Dense d(in, out);
    d.weights = read_values('w', in * out);
    d.bias = read_values('b', out);
    return d;
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string write_model(const ModelParams& params, const Hierarchy& h) {
  std::string out = "hiernav-model\t1\n";
  out += "input_dim\t" + std::to_string(params.input_dim) + "\n";
  out += "trunk\t" + std::to_string(params.trunk.size()) + "\n";
  for (const Dense& d : params.trunk) {
    out += "layer\t" + std::to_string(d.out) + "\t" + std::to_string(d.in) + "\n";
    write_dense(out, d);
  }
  out += "heads\t" + std::to_string(params.heads.size()) + "\n";
  for (std::size_t i = 0; i < params.heads.size(); ++i) {
    const Dense& d = params.heads[i];
    out += "head\t" + h.name(h.internals()[i]) + "\t" + std::to_string(d.out) + "\t" + std::to_string(d.in) + "\n";
    write_dense(out, d);
  }
  if (params.flat_head) {
    const Dense& d = *params.flat_head;
    out += "flat\t" + std::to_string(d.out) + "\t" + std::to_string(d.in) + "\n";
    out += "leaves";
    for (NodeId leaf : h.leaves()) out += "\t" + h.name(leaf);
    out += "\n";
    write_dense(out, d);
  } else {
    out += "flat\tnone\n";
  }
  return out;
}

ModelParams read_model(std::string_view contents, const Hierarchy& h) {
  LineReader in(contents);
  ModelParams p;
  auto f = in.next_fields();
  if (f.size() != 2 || f[0] != "hiernav-model" || f[1] != "1")
    throw ParseError(in.line(), "not a version-1 model file");
  f = in.next_fields();
  if (f.size() != 2 || f[0] != "input_dim") throw ParseError(in.line(), "expected input_dim");
  p.input_dim = in.read_size(f[1]);
  f = in.next_fields();
  if (f.size() != 2 || f[0] != "trunk") throw ParseError(in.line(), "expected trunk");
  const std::size_t layers = in.read_size(f[1]);
  std::size_t width = p.input_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    f = in.next_fields();
    if (f.size() != 3 || f[0] != "layer") throw ParseError(in.line(), "expected layer");
    const std::size_t out = in.read_size(f[1]);
    const std::size_t inw = in.read_size(f[2]);
    if (inw != width) throw ParseError(in.line(), "layer input width mismatch");
    p.trunk.push_back(in.read_dense(out, inw));
    width = out;
  }
  f = in.next_fields();
  if (f.size() != 2 || f[0] != "heads") throw ParseError(in.line(), "expected heads");
  const std::size_t heads = in.read_size(f[1]);
  if (heads != 0 && heads != h.internals().size())
    throw ParseError(in.line(), "model has " + std::to_string(heads) + " heads, hierarchy has " +
                                    std::to_string(h.internals().size()) + " internal nodes");
  std::vector<std::optional<Dense>> slots(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    f = in.next_fields();
    if (f.size() != 4 || f[0] != "head") throw ParseError(in.line(), "expected head");
    const NodeId n = h.find(f[1]);
    if (n == kNoNode || h.is_leaf(n))
      throw ParseError(in.line(), "head for unknown internal node '" + std::string(f[1]) + "'");
    const int idx = h.internal_index(n);
    if (slots[idx]) throw ParseError(in.line(), "duplicate head '" + std::string(f[1]) + "'");
    const std::size_t out = in.read_size(f[2]);
    const std::size_t inw = in.read_size(f[3]);
    if (out != h.children(n).size() || inw != width)
      throw ParseError(in.line(), "head '" + std::string(f[1]) + "' has wrong shape");
    slots[idx] = in.read_dense(out, inw);
  }
  for (auto& s : slots) p.heads.push_back(std::move(*s));
  f = in.next_fields();
  if (f.size() == 2 && f[0] == "flat" && f[1] == "none") {
  } else if (f.size() == 3 && f[0] == "flat") {
    const std::size_t out = in.read_size(f[1]);
    const std::size_t inw = in.read_size(f[2]);
    if (out != h.leaves().size() || inw != width) throw ParseError(in.line(), "flat head has wrong shape");
    auto names = in.next_fields();
    if (names.size() != out + 1 || names[0] != "leaves") throw ParseError(in.line(), "expected leaves row");
    for (std::size_t i = 0; i < out; ++i) {
      if (names[i + 1] != h.name(h.leaves()[i]))
        throw ParseError(in.line(), "flat head leaf order does not match hierarchy");
    }
    p.flat_head = in.read_dense(out, inw);
  } else {
    throw ParseError(in.line(), "expected flat head row");
  }
  if (!in.done()) throw ParseError(in.line() + 1, "trailing content in model file");
  if (p.heads.empty() && !p.flat_head) throw ValidationError("model file has no heads");
  return p;
}

}  // namespace hiernav
