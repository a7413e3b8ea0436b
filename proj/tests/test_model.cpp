#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "hiernav/data.hpp"
#include "hiernav/error.hpp"
#include "hiernav/model.hpp"
#include "support.hpp"

using namespace hiernav;
using hiernav::testing::logit_model;
using hiernav::testing::small_tree;

namespace {

// Leaf posteriors by enumerating every root-to-leaf path product.
std::map<NodeId, double> brute_posteriors(const NodeDistributions& nd, const Hierarchy& h) {
  std::map<NodeId, double> out;
  for (NodeId leaf : h.leaves()) {
    double p = 1.0;
    for (NodeId n = leaf; n != h.root(); n = h.parent(n)) p *= nd.child_probability(h, n);
    out[leaf] = p;
  }
  return out;
}

NodeDistributions random_distributions(const Hierarchy& h, std::mt19937_64& rng) {
  NodeDistributions nd(h);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (std::size_t i = 0; i < nd.internal_count(); ++i) {
    auto p = nd.of_index(static_cast<int>(i));
    double s = 0.0;
    for (double& v : p) s += (v = u(rng));
    for (double& v : p) v /= s;
  }
  return nd;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("head softmax matches hand arithmetic") {
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nb\tr\n");
  ModelParams m = logit_model(h, true);
  m.heads[0].weights = {std::log(3.0), 0.0};
  m.flat_head->weights = {std::log(9.0), 0.0};
  const std::vector<double> x{1.0};
  const NodeDistributions nd = forward(m, h, x);
  CHECK(nd.of(h, 0)[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(nd.of(h, 0)[1] == doctest::Approx(0.25).epsilon(1e-12));
  const auto flat = flat_forward(m, x);
  CHECK(flat[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(flat[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero parameters give uniform distributions") {
  const std::vector<int> b{3, 4};
  const Hierarchy h = generate_synthetic_hierarchy(b);
  ModelParams m = init_model(h, 5, ModelConfig{1, 16, true, true, 3});
  for (double* p : hiernav::testing::parameter_slots(m)) *p = 0.0;
  const std::vector<double> x{1, -2, 3, 0.5, 7};
  const NodeDistributions nd = forward(m, h, x);
  for (NodeId n : h.internals()) {
    for (double p : nd.of(h, n)) CHECK(p == doctest::Approx(1.0 / static_cast<double>(h.children(n).size())));
  }
  for (double p : leaf_posteriors(nd, h)) CHECK(p == doctest::Approx(1.0 / 12.0));
  for (double p : flat_forward(m, x)) CHECK(p == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("softmax is shift invariant and stable") {
  const std::vector<double> a{1.0, 2.0, -3.0};
  const std::vector<double> b{1001.0, 1002.0, 997.0};
  std::vector<double> pa(3), pb(3);
  softmax(a, pa);
  softmax(b, pb);
  double z = 0.0;
  for (double v : a) z += std::exp(v);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pa[i] == doctest::Approx(std::exp(a[i]) / z).epsilon(1e-12));
    CHECK(pb[i] == doctest::Approx(pa[i]).epsilon(1e-12));
  }
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nb\tr\nc\tr\n");
  ModelParams m = logit_model(h, true);
  m.heads[0].bias = {0.3, -1.0, 2.0};
  m.flat_head->bias = {0.3, -1.0, 2.0};
  ModelParams shifted = m;
  for (double& v : shifted.heads[0].bias) v += 50.0;
  for (double& v : shifted.flat_head->bias) v -= 50.0;
  const std::vector<double> x{1.0};
  const auto p = forward(m, h, x);
  const auto q = forward(shifted, h, x);
  const auto fp = flat_forward(m, x);
  const auto fq = flat_forward(shifted, x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p.of(h, 0)[i] == doctest::Approx(q.of(h, 0)[i]).epsilon(1e-12));
    CHECK(fp[i] == doctest::Approx(fq[i]).epsilon(1e-12));
  }
}

TEST_CASE("leaf posteriors are path products") {
  const Hierarchy h = small_tree();
  NodeDistributions nd(h);
  auto p0 = nd.of_index(h.internal_index(0));
  p0[0] = 0.6;
  p0[1] = 0.4;
  auto p1 = nd.of_index(h.internal_index(1));
  p1[0] = 0.5;
  p1[1] = 0.5;
  const auto post = leaf_posteriors(nd, h);
  CHECK(post[h.leaf_index(3)] == doctest::Approx(0.3));
  CHECK(post[h.leaf_index(4)] == doctest::Approx(0.3));
  CHECK(post[h.leaf_index(2)] == doctest::Approx(0.4));
  CHECK(predict_leaf(nd, h) == 2);

  p0[0] = 1.0;
  p0[1] = 0.0;
  p1[0] = 0.0;
  p1[1] = 1.0;
  CHECK(leaf_posteriors(nd, h)[h.leaf_index(4)] == 1.0);
  CHECK(predict_leaf(nd, h) == 4);
}

TEST_CASE("node path probabilities") {
  const Hierarchy h = small_tree();
  NodeDistributions nd(h);
  auto p0 = nd.of_index(h.internal_index(0));
  p0[0] = 0.6;
  p0[1] = 0.4;
  auto p1 = nd.of_index(h.internal_index(1));
  p1[0] = 0.5;
  p1[1] = 0.5;
  const auto pr = node_path_probabilities(nd, h);
  CHECK(pr[0] == 1.0);
  CHECK(pr[1] == doctest::Approx(0.6));
  CHECK(pr[3] == doctest::Approx(0.3));
}

TEST_CASE("predict_leaf breaks exact ties by lowest id") {
  const Hierarchy h = small_tree();
  NodeDistributions nd(h);
  auto p0 = nd.of_index(h.internal_index(0));
  p0[0] = 0.8;
  p0[1] = 0.2;
  auto p1 = nd.of_index(h.internal_index(1));
  p1[0] = 0.5;
  p1[1] = 0.5;
  CHECK(predict_leaf(nd, h) == 3);
}

TEST_CASE("posteriors normalize and argmax matches enumeration on random trees") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 2 + t % 60);
    const NodeDistributions nd = random_distributions(h, rng);
    const auto post = leaf_posteriors(nd, h);
    const auto brute = brute_posteriors(nd, h);
    double sum = 0.0;
    NodeId best = kNoNode;
    double best_p = -1.0;
    for (const auto& [leaf, p] : brute) {
      CHECK(post[h.leaf_index(leaf)] == doctest::Approx(p).epsilon(1e-12));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
      if (p > best_p) best_p = p, best = leaf;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(predict_leaf(nd, h) == best);
  }
}

TEST_CASE("permuting head rows permutes child probabilities") {
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nb\tr\nc\tr\n");
  ModelParams m = init_model(h, 4, ModelConfig{1, 8, true, false, 21});
  ModelParams p = m;
  const std::size_t cols = m.heads[0].in;
  const std::vector<std::size_t> perm{2, 0, 1};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < cols; ++c) p.heads[0].weights[r * cols + c] = m.heads[0].weights[perm[r] * cols + c];
    p.heads[0].bias[r] = m.heads[0].bias[perm[r]];
  }
  const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  const auto a = forward(m, h, x);
  const auto b = forward(p, h, x);
  for (std::size_t r = 0; r < 3; ++r) CHECK(b.of(h, 0)[r] == a.of(h, 0)[perm[r]]);
}

TEST_CASE("forward rejects bad inputs") {
  const Hierarchy h = small_tree();
  const ModelParams m = init_model(h, 3, ModelConfig{1, 8, true, false, 0});
  CHECK_THROWS_AS(forward(m, h, std::vector<double>{1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(forward(m, h, std::vector<double>{1.0, NAN, 2.0}), ValidationError);
  CHECK_THROWS_AS(flat_forward(m, std::vector<double>{1.0, 2.0, 3.0}), ValidationError);
  CHECK_THROWS_AS(init_model(h, 3, ModelConfig{4, 8, true, false, 0}), ValidationError);
  CHECK_THROWS_AS(init_model(h, 0, ModelConfig{}), ValidationError);
}

TEST_CASE("initialization is bounded by fan-in and seeded") {
  const std::vector<int> b{3, 3};
  const Hierarchy h = generate_synthetic_hierarchy(b);
  const ModelParams m = init_model(h, 10, ModelConfig{2, 0, true, true, 5});
  CHECK(m.trunk.size() == 2);
  CHECK(m.trunk[0].out == 64);
  for (const Dense& d : m.trunk) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
    for (double w : d.weights) CHECK(std::abs(w) <= bound);
  }
  CHECK(init_model(h, 10, ModelConfig{2, 0, true, true, 5}) == m);
  CHECK_FALSE(init_model(h, 10, ModelConfig{2, 0, true, true, 6}) == m);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const std::vector<int> b{2, 3};
  const Hierarchy h = generate_synthetic_hierarchy(b);
  for (int layers = 0; layers <= 3; ++layers) {
    ModelParams m = init_model(h, 6, ModelConfig{layers, 9, true, layers % 2 == 1, static_cast<std::uint64_t>(layers)});
    std::mt19937_64 rng(layers);
    for (double* p : hiernav::testing::parameter_slots(m)) *p = std::ldexp(*p, static_cast<int>(rng() % 40) - 20);
    const ModelParams back = read_model(write_model(m, h), h);
    CHECK(back == m);
  }
}

TEST_CASE("checkpoint reader rejects mismatches") {
  const std::vector<int> b{2, 3};
  const Hierarchy h = generate_synthetic_hierarchy(b);
  const std::string text = write_model(init_model(h, 3, ModelConfig{1, 4, true, false, 0}), h);
  const std::vector<int> other{3, 2};
  CHECK_THROWS_AS(read_model(text, generate_synthetic_hierarchy(other)), ParseError);
  CHECK_THROWS_AS(read_model("junk\n", h), ParseError);
  CHECK_THROWS_AS(read_model(text.substr(0, text.size() / 2), h), ParseError);
}

}  // TEST_SUITE
