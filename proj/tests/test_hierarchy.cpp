#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hiernav/error.hpp"
#include "hiernav/hierarchy.hpp"
#include "support.hpp"

using namespace hiernav;
using hiernav::testing::small_tree;

namespace {

std::set<std::string> leaf_names(const Hierarchy& h) {
  std::set<std::string> out;
  for (NodeId n : h.leaves()) out.insert(h.name(n));
  return out;
}

const char* kBirds =
    "animal\t-\n"
    "bird\tanimal\n"
    "fish\tanimal\n"
    "junco\tbird\n"
    "robin\tbird\n"
    "wren\tbird\n"
    "salmon\tfish\n"
    "trout\tfish\n";

}  // namespace

TEST_SUITE("hierarchy") {

TEST_CASE("parse minimal trees") {
  const Hierarchy a = parse_hierarchy("r -\na r\nb r");
  CHECK(a.size() == 3);
  CHECK(a.name(a.root()) == "r");
  CHECK(leaf_names(a) == std::set<std::string>{"a", "b"});

  const Hierarchy b = parse_hierarchy("r -\na r\nx a\ny a\nb r");
  CHECK(leaf_names(b) == std::set<std::string>{"x", "y", "b"});
  CHECK(b.internals() == std::vector<NodeId>{0, 1});
  CHECK(b.id("b") == 4);
}

TEST_CASE("parse skips comments and blank lines") {
  const Hierarchy h = parse_hierarchy("# taxonomy\n\nr\t-\n# leaves\na\tr\nb\tr\n");
  CHECK(h.size() == 3);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_hierarchy("r -\na q"), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy(""), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy("# only a comment\n"), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy("r -\na r\na r"), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy("r -\ns -\na r"), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy("a b\nb a"), ValidationError);
  CHECK_THROWS_AS(parse_hierarchy("a r\nr -"), ValidationError);

  try {
    parse_hierarchy("r\t-\na\tr\nb\tq\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("write and parse round trip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 2 + i * 3);
    CHECK(parse_hierarchy(write_hierarchy(h)) == h);
  }
}

TEST_CASE("ancestors") {
  const Hierarchy h = small_tree();
  CHECK(ancestors(h, 3) == std::vector<NodeId>{0, 1});
  CHECK(ancestors(h, 0).empty());
  CHECK(ancestors(h, 2) == std::vector<NodeId>{0});
  CHECK_THROWS_AS(ancestors(h, 9), ValidationError);
}

TEST_CASE("lca and distance") {
  const Hierarchy h = small_tree();
  CHECK(lca(h, 3, 4) == 1);
  CHECK(lca(h, 3, 3) == 3);
  CHECK(lca(h, 3, 2) == 0);
  CHECK(hierarchy_distance(h, 3, 4) == 2);
  CHECK(hierarchy_distance(h, 3, 3) == 0);
  CHECK(hierarchy_distance(h, 3, 2) == 3);
  CHECK_THROWS_AS(lca(h, -1, 2), ValidationError);
}

TEST_CASE("distance decomposition error cases") {
  const Hierarchy h = small_tree();
  CHECK(distance_decomposition(h, 3, 4) == DistanceSplit{1, 1});
  CHECK(distance_decomposition(h, 1, 3) == DistanceSplit{0, 1});
  CHECK(distance_decomposition(h, 3, 1) == DistanceSplit{1, 0});
}

TEST_CASE("distance properties on random trees") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 25; ++t) {
    std::uniform_int_distribution<int> size(2, 200);
    const Hierarchy h = hiernav::testing::random_tree(rng, size(rng));
    const auto brute = hiernav::testing::brute_distances(h);
    const int n = static_cast<int>(h.size());
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const int d = hierarchy_distance(h, a, b);
        REQUIRE(d == brute[a][b]);
        REQUIRE(d == hierarchy_distance(h, b, a));
        REQUIRE((d == 0) == (a == b));
        const DistanceSplit s = distance_decomposition(h, a, b);
        REQUIRE(s.pred_dist + s.gt_dist == d);
      }
    }
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int k = 0; k < 500; ++k) {
      const int a = pick(rng), b = pick(rng), c = pick(rng);
      REQUIRE(hierarchy_distance(h, a, c) <= hierarchy_distance(h, a, b) + hierarchy_distance(h, b, c));
    }
  }
}

TEST_CASE("prune single-child chain") {
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nx\ta\ny\tr\n");
  const Hierarchy p = prune_single_child(h);
  CHECK(p.size() == 3);
  CHECK(p.name(p.parent(p.id("x"))) == "r");

  const Hierarchy chain = parse_hierarchy("r\t-\na\tr\nx\ta\n");
  const Hierarchy q = prune_single_child(chain);
  CHECK(q.size() == 1);
  CHECK(q.name(q.root()) == "x");
}

TEST_CASE("prune collapses a single-child root") {
  const Hierarchy h = parse_hierarchy("r\t-\na\tr\nx\ta\ny\ta\n");
  const Hierarchy p = prune_single_child(h);
  CHECK(p.name(p.root()) == "a");
  CHECK(leaf_names(p) == std::set<std::string>{"x", "y"});
}

TEST_CASE("prune is idempotent and keeps leaves and LCA structure") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    std::uniform_int_distribution<int> size(2, 120);
    const Hierarchy h = hiernav::testing::random_tree(rng, size(rng));
    const Hierarchy p = prune_single_child(h);
    CHECK(prune_single_child(p) == p);
    CHECK(leaf_names(p) == leaf_names(h));
    for (NodeId n : p.internals()) CHECK(p.children(n).size() >= 2);
    for (NodeId n = 1; n < static_cast<NodeId>(p.size()); ++n) CHECK(p.parent(n) < n);

    // The pruned LCA of two leaves is the nearest surviving ancestor-or-equal
    // of their original LCA.
    const auto& leaves = h.leaves();
    for (std::size_t i = 0; i < leaves.size() && i < 12; ++i) {
      for (std::size_t j = i + 1; j < leaves.size() && j < 12; ++j) {
        NodeId orig = lca(h, leaves[i], leaves[j]);
        while (p.find(h.name(orig)) == kNoNode) orig = h.parent(orig);
        const NodeId got = lca(p, p.id(h.name(leaves[i])), p.id(h.name(leaves[j])));
        CHECK(p.name(got) == h.name(orig));
      }
    }
  }
}

TEST_CASE("mass entropy matches an independent oracle") {
  const std::vector<double> even{50, 50};
  const std::vector<double> skew{99, 1};
  CHECK(mass_entropy(even) == doctest::Approx(hiernav::testing::entropy_nats({0.5, 0.5})).epsilon(1e-12));
  CHECK(mass_entropy(skew) == doctest::Approx(hiernav::testing::entropy_nats({0.99, 0.01})).epsilon(1e-12));
  CHECK(mass_entropy(even) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(mass_entropy(skew) == doctest::Approx(0.0560).epsilon(1e-2));
  CHECK(mass_entropy(std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("entropy prune merges the least entropic node first") {
  const Hierarchy h = parse_hierarchy("r\t-\nA\tr\nB\tr\na1\tA\na2\tA\nb1\tB\nb2\tB\n");
  const std::map<std::string, double> counts{{"a1", 50}, {"a2", 50}, {"b1", 99}, {"b2", 1}};
  const Hierarchy p = entropy_prune(h, counts, 2);
  CHECK(p.find("B") == kNoNode);
  CHECK(p.find("A") != kNoNode);
  CHECK(p.name(p.parent(p.id("b1"))) == "r");
  CHECK(leaf_names(p) == leaf_names(h));
}

TEST_CASE("entropy prune ties go to the lowest id") {
  const Hierarchy h = parse_hierarchy("r\t-\nA\tr\nB\tr\na1\tA\na2\tA\nb1\tB\nb2\tB\n");
  const std::map<std::string, double> counts{{"a1", 5}, {"a2", 5}, {"b1", 5}, {"b2", 5}};
  const Hierarchy p = entropy_prune(h, counts, 2);
  CHECK(p.find("A") == kNoNode);
  CHECK(p.find("B") != kNoNode);
}

TEST_CASE("entropy prune identity and errors") {
  const Hierarchy h = small_tree();
  const std::map<std::string, double> counts{{"x", 1}, {"y", 2}, {"b", 3}};
  CHECK(entropy_prune(h, counts, 2) == h);
  CHECK_THROWS_AS(entropy_prune(h, counts, 3), ValidationError);
  CHECK_THROWS_AS(entropy_prune(h, counts, 0), ValidationError);
}

TEST_CASE("entropy prune reaches the target on random trees") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 40, true);
    std::map<std::string, double> counts;
    std::uniform_int_distribution<int> c(1, 50);
    for (NodeId n : h.leaves()) counts[h.name(n)] = c(rng);
    const int target = 1 + static_cast<int>(rng() % h.internals().size());
    const Hierarchy p = entropy_prune(h, counts, target);
    CHECK(static_cast<int>(p.internals().size()) == target);
    CHECK(leaf_names(p) == leaf_names(h));
  }
}

TEST_CASE("holdout maps junco to bird") {
  const Hierarchy h = parse_hierarchy(kBirds);
  const std::vector<Holdout> ho{{"junco", Granularity::fine}};
  const HoldoutResult r = holdout_split(h, ho);
  CHECK(r.id_hierarchy.find("junco") == kNoNode);
  CHECK(r.id_hierarchy.name(r.map.target.at("junco")) == "bird");
  CHECK(r.map.granularity.at("junco") == Granularity::fine);
}

TEST_CASE("holdout of a depth-1 subtree maps to the root") {
  const Hierarchy h = parse_hierarchy(kBirds);
  const std::vector<Holdout> ho{{"fish", Granularity::coarse}};
  const HoldoutResult r = holdout_split(h, ho);
  CHECK(r.map.target.at("salmon") == r.id_hierarchy.root());
  CHECK(r.map.target.at("trout") == r.id_hierarchy.root());
}

TEST_CASE("holdout errors") {
  const Hierarchy h = parse_hierarchy(kBirds);
  const std::vector<Holdout> nested{{"bird", Granularity::coarse}, {"junco", Granularity::fine}};
  CHECK_THROWS_AS(holdout_split(h, nested), ValidationError);
  const std::vector<Holdout> everything{{"bird", Granularity::coarse}, {"fish", Granularity::coarse}};
  CHECK_THROWS_AS(holdout_split(h, everything), ValidationError);
  const std::vector<Holdout> root{{"animal", Granularity::coarse}};
  CHECK_THROWS_AS(holdout_split(h, root), ValidationError);
}

TEST_CASE("holdout targets are original ancestors of removed leaves") {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    const Hierarchy h = hiernav::testing::random_tree(rng, 60, true);
    std::vector<Holdout> ho;
    for (NodeId n = 1; n < static_cast<NodeId>(h.size()) && ho.size() < 3; ++n) {
      if (rng() % 7 != 0) continue;
      bool nested = false;
      for (const Holdout& o : ho) {
        const NodeId m = h.id(o.node);
        nested = nested || h.is_ancestor_or_equal(m, n) || h.is_ancestor_or_equal(n, m);
      }
      if (!nested) ho.push_back({h.name(n), Granularity::fine});
    }
    HoldoutResult r;
    try {
      r = holdout_split(h, ho);
    } catch (const ValidationError&) {
      continue;
    }
    for (const auto& [leaf, target] : r.map.target) {
      const NodeId original = h.id(r.id_hierarchy.name(target));
      bool any_survivor = false;
      for (NodeId a : ancestors(h, h.id(leaf))) any_survivor = any_survivor || r.id_hierarchy.find(h.name(a)) != kNoNode;
      if (any_survivor) {
        CHECK(h.is_ancestor_or_equal(original, h.id(leaf)));
        CHECK(original != h.id(leaf));
      } else {
        // The original root collapsed away; the ID root stands in.
        CHECK(target == r.id_hierarchy.root());
      }
      ++checked;
    }
    const OodGroundTruthMap back = parse_ground_truth_map(write_ground_truth_map(r.map, r.id_hierarchy), r.id_hierarchy);
    CHECK(back.target == r.map.target);
    CHECK(back.granularity == r.map.granularity);
  }
  CHECK(checked > 0);
}

}  // TEST_SUITE
