#include "hiernav/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hiernav/error.hpp"
#include "hiernav/text.hpp"

namespace hiernav {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

void Dataset::add(std::span<const double> x, NodeId label, Split split) {
  if (x.size() != dim)
    throw ValidationError("feature vector has " + std::to_string(x.size()) + " values, expected " +
                          std::to_string(dim));
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
  splits.push_back(split);
}

Dataset Dataset::subset(Split split) const {
  Dataset out;
  out.dim = dim;
  for (std::size_t i = 0; i < size(); ++i) {
    if (splits[i] == split) out.add(row(i), labels[i], splits[i]);
  }
  return out;
}

Hierarchy generate_synthetic_hierarchy(std::span<const int> branching) {
  if (branching.empty()) throw ValidationError("branching needs at least one level");
  for (int b : branching) {
    if (b < 2) throw ValidationError("branching factor " + std::to_string(b) + " < 2");
  }
  std::vector<std::string> names{"n0_0"};
  std::vector<NodeId> parents{kNoNode};
  std::vector<NodeId> level{0};
  for (std::size_t l = 0; l < branching.size(); ++l) {
    std::vector<NodeId> next;
    int index = 0;
    for (NodeId p : level) {
      for (int c = 0; c < branching[l]; ++c) {
        next.push_back(static_cast<NodeId>(names.size()));
        names.push_back("n" + std::to_string(l + 1) + "_" + std::to_string(index++));
        parents.push_back(p);
      }
    }
    level = std::move(next);
  }
  return Hierarchy::from_parents(std::move(names), std::move(parents));
}

SyntheticFeatures generate_synthetic_features(const Hierarchy& h, const FeatureSpec& spec) {
  if (spec.dim == 0) throw ValidationError("feature dimension must be >= 1");
  if (spec.level_scales.empty()) throw ValidationError("need at least one level scale");
  for (double s : spec.level_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("level scales must be finite and > 0");
  }
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale))
    throw ValidationError("noise scale must be finite and >= 0");
  const SamplesPerLeaf& pl = spec.per_leaf;
  if (pl.train < 1 || pl.val < 0 || pl.test < 0) throw ValidationError("per-leaf train count must be >= 1");

  const std::size_t d = spec.dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticFeatures out;
  out.means.assign(h.size() * d, 0.0);
  for (NodeId n = 1; n < static_cast<NodeId>(h.size()); ++n) {
    const std::size_t level = static_cast<std::size_t>(h.depth(n)) - 1;
    const double scale = spec.level_scales[std::min(level, spec.level_scales.size() - 1)];
    const double* pm = &out.means[static_cast<std::size_t>(h.parent(n)) * d];
    double* m = &out.means[static_cast<std::size_t>(n) * d];
    for (std::size_t k = 0; k < d; ++k) m[k] = pm[k] + scale * normal(rng);
  }

  Dataset& ds = out.data;
  ds.dim = d;
  std::vector<double> x(d);
  for (NodeId leaf : h.leaves()) {
    const double* m = &out.means[static_cast<std::size_t>(leaf) * d];
    const std::pair<Split, int> groups[] = {{Split::train, pl.train}, {Split::val, pl.val}, {Split::test, pl.test}};
    for (const auto& [split, count] : groups) {
      for (int s = 0; s < count; ++s) {
        for (std::size_t k = 0; k < d; ++k) x[k] = m[k] + spec.noise_scale * normal(rng);
        ds.add(x, leaf, split);
      }
    }
  }
  return out;
}

std::vector<Holdout> select_holdout_subtrees(const Hierarchy& h, const SplitSpec& spec) {
  for (std::size_t i = 0; i < spec.bands.size(); ++i) {
    const DepthBand& b = spec.bands[i];
    if (b.min_depth < 1 || b.max_depth < b.min_depth)
      throw ValidationError("depth band " + std::to_string(b.min_depth) + "-" + std::to_string(b.max_depth) +
                            " invalid (root depth 0 cannot be held out)");
    if (!(b.probability >= 0.0 && b.probability <= 1.0))
      throw ValidationError("band probability must lie in [0,1]");
    for (std::size_t j = 0; j < i; ++j) {
      const DepthBand& o = spec.bands[j];
      if (b.min_depth <= o.max_depth && o.min_depth <= b.max_depth)
        throw ValidationError("depth bands overlap");
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> band_of(h.size(), -1);
  for (std::size_t i = 0; i < spec.bands.size(); ++i) {
    const DepthBand& b = spec.bands[i];
    for (NodeId n = 1; n < static_cast<NodeId>(h.size()); ++n) {
      const int dep = h.depth(n);
      if (dep < b.min_depth || dep > b.max_depth) continue;
      if (unit(rng) < b.probability) band_of[n] = static_cast<int>(i);
    }
  }

  std::vector<Holdout> out;
  std::vector<bool> covered(h.size(), false);
  for (NodeId n = 1; n < static_cast<NodeId>(h.size()); ++n) {
    covered[n] = covered[h.parent(n)];
    if (band_of[n] < 0 || covered[n]) continue;
    covered[n] = true;
    out.push_back({h.name(n), spec.bands[band_of[n]].granularity});
  }

  int kept = 0;
  for (NodeId leaf : h.leaves()) kept += covered[leaf] ? 0 : 1;
  if (kept < 2)
    throw ComputeError("holdout selection leaves " + std::to_string(kept) +
                       " in-distribution leaves; re-seed or lower the probabilities");
  return out;
}

std::string write_split_file(std::span<const Holdout> holdouts) {
  std::string out;
  for (const Holdout& ho : holdouts) {
    out += ho.node;
    out += '\t';
    out += to_string(ho.granularity);
    out += '\n';
  }
  return out;
}

std::vector<Holdout> parse_split_file(std::string_view contents) {
  std::vector<Holdout> out;
  const auto all = text::lines(contents);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]).empty() || all[i].front() == '#') continue;
    const auto f = text::split(all[i], '\t');
    if (f.size() != 2) throw ParseError(i + 1, "expected 'node<TAB>granularity'");
    try {
      out.push_back({std::string(f[0]), parse_granularity(f[1])});
    } catch (const ValidationError& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return out;
}

std::string write_dataset(const Dataset& ds, const Hierarchy& h) {
  const bool with_split = std::any_of(ds.splits.begin(), ds.splits.end(), [](Split s) { return s != Split::train; });
  std::string out = "dim=" + std::to_string(ds.dim) + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += h.name(ds.labels[i]);
    out += '\t';
    const auto x = ds.row(i);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k) out += ',';
      out += text::format_double(x[k]);
    }
    if (with_split) {
      out += '\t';
      out += to_string(ds.splits[i]);
    }
    out += '\n';
  }
  return out;
}

Dataset read_dataset(std::string_view contents, const Hierarchy& h) {
  const auto all = text::lines(contents);
  Dataset ds;
  std::size_t i = 0;
  while (i < all.size() && (text::trim(all[i]).empty() || all[i].front() == '#')) ++i;
  if (i == all.size()) throw ValidationError("dataset is empty (missing 'dim=<d>' header)");
  {
    const std::string_view head = text::trim(all[i]);
    long long d = 0;
    if (!head.starts_with("dim=") || !text::parse_int(head.substr(4), d) || d < 1)
      throw ParseError(i + 1, "expected 'dim=<d>' header with d >= 1");
    ds.dim = static_cast<std::size_t>(d);
  }
  std::vector<double> x(ds.dim);
  for (++i; i < all.size(); ++i) {
    const std::string_view line = all[i];
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 2 && f.size() != 3) throw ParseError(i + 1, "expected 'leaf<TAB>v1,...,vd[<TAB>split]'");
    const NodeId label = h.find(f[0]);
    if (label == kNoNode) throw ParseError(i + 1, "unknown leaf '" + std::string(f[0]) + "'");
    if (!h.is_leaf(label)) throw ParseError(i + 1, "label '" + std::string(f[0]) + "' is not a leaf");
    const auto values = text::split(f[1], ',');
    if (values.size() != ds.dim)
      throw ParseError(i + 1, "row has " + std::to_string(values.size()) + " features, expected " +
                                  std::to_string(ds.dim));
    for (std::size_t k = 0; k < ds.dim; ++k) {
      if (!text::parse_double(text::trim(values[k]), x[k]) || !std::isfinite(x[k]))
        throw ParseError(i + 1, "malformed number '" + std::string(values[k]) + "'");
    }
    Split split = Split::train;
    if (f.size() == 3) {
      try {
        split = parse_split(text::trim(f[2]));
      } catch (const ValidationError& e) {
        throw ParseError(i + 1, e.what());
      }
    }
    ds.add(x, label, split);
  }
  return ds;
}

Dataset relabel(const Dataset& ds, const Hierarchy& from, const Hierarchy& to) {
  Dataset out = ds;
  for (NodeId& label : out.labels) label = to.id(from.name(label));
  return out;
}

PartitionedData partition(const Dataset& ds, const Hierarchy& source, const HoldoutResult& split) {
  PartitionedData out;
  out.id.dim = ds.dim;
  out.ood.dim = ds.dim;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string& name = source.name(ds.labels[i]);
    if (split.map.target.contains(name)) {
      out.ood.add(ds.row(i), ds.labels[i], ds.splits[i]);
    } else {
      out.id.add(ds.row(i), split.id_hierarchy.id(name), ds.splits[i]);
    }
  }
  return out;
}

}  // namespace hiernav
