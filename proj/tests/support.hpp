#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hiernav/hierarchy.hpp"
#include "hiernav/model.hpp"

namespace hiernav::testing {

// 0 -> {1, 2}, 1 -> {3, 4}
inline Hierarchy small_tree() { return parse_hierarchy("r\t-\na\tr\nb\tr\nx\ta\ny\ta\n"); }

// Random parent < child trees. With no_single_child, nodes that end up with
// exactly one child get a second leaf.
inline Hierarchy random_tree(std::mt19937_64& rng, int nodes, bool no_single_child = false) {
  std::vector<std::string> names{"n0"};
  std::vector<NodeId> parents{kNoNode};
  for (int i = 1; i < nodes; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    names.push_back("n" + std::to_string(i));
    parents.push_back(pick(rng));
  }
  if (nodes == 1) {
    names.push_back("n1");
    parents.push_back(0);
  }
  if (no_single_child) {
    std::vector<int> count(names.size(), 0);
    for (std::size_t i = 1; i < parents.size(); ++i) ++count[parents[i]];
    const std::size_t n = names.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (count[i] == 1) {
        names.push_back("n" + std::to_string(names.size()));
        parents.push_back(static_cast<NodeId>(i));
      }
    }
  }
  return Hierarchy::from_parents(names, parents);
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Reference entropy, written independently of the library.
inline double entropy_nats(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) {
    if (v > 0) s -= v * std::log(v);
  }
  return s;
}

// Unweighted all-pairs edge distances by Floyd-Warshall.
inline std::vector<std::vector<int>> brute_distances(const Hierarchy& h) {
  const std::size_t n = h.size();
  const int inf = 1 << 28;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    if (i > 0) {
      const auto p = static_cast<std::size_t>(h.parent(static_cast<NodeId>(i)));
      d[i][p] = d[p][i] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Every scalar parameter, trunk first, then heads, then the flat head.
inline std::vector<double*> parameter_slots(ModelParams& m) {
  std::vector<double*> out;
  auto add = [&](Dense& d) {
    for (double& w : d.weights) out.push_back(&w);
    for (double& b : d.bias) out.push_back(&b);
  };
  for (Dense& d : m.trunk) add(d);
  for (Dense& d : m.heads) add(d);
  if (m.flat_head) add(*m.flat_head);
  return out;
}

inline std::vector<double> flatten(ModelParams m) {
  std::vector<double> out;
  for (double* p : parameter_slots(m)) out.push_back(*p);
  return out;
}

// Model with no trunk and one input fixed at 1, so head weights act as logits.
inline ModelParams logit_model(const Hierarchy& h, bool flat = false) {
  ModelParams m = init_model(h, 1, ModelConfig{0, 0, true, flat, 0});
  for (double* p : parameter_slots(m)) *p = 0.0;
  return m;
}

}  // namespace hiernav::testing
