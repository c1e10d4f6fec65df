#pragma once

// Random sample trees for property tests.

#include <cstddef>
#include <string>
#include <vector>

#include "hmill/datanode.hpp"
#include "hmill/model.hpp"
#include "hmill/nn.hpp"
#include "hmill/rng.hpp"
#include "synthetic.hpp"

namespace gen {

struct Shape {
  enum Kind { Array, Bag, Product } kind = Array;
  std::size_t dim = 1;
  bool weighted = false;
  std::vector<std::string> keys;
  std::vector<Shape> children;
};

inline std::size_t pick(hmill::Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(hmill::uniform_index(rng, hi - lo + 1));
}

inline Shape array_shape(hmill::Rng& rng, std::size_t max_dim) {
  Shape s;
  s.dim = pick(rng, 1, max_dim);
  return s;
}

/// `levels` counts bag/product nodes on the deepest root-to-leaf path. The
/// first child of every inner node continues that path, so the depth is
/// always reached.
inline Shape random_shape(hmill::Rng& rng, std::size_t levels, std::size_t max_dim) {
  if (levels == 0) return array_shape(rng, max_dim);
  Shape s;
  if (levels % 2 == 0) {
    s.kind = Shape::Bag;
    s.weighted = rng() % 2 == 0;
    s.children.push_back(random_shape(rng, levels - 1, max_dim));
    return s;
  }
  s.kind = Shape::Product;
  const std::size_t width = pick(rng, 1, 3);
  for (std::size_t i = 0; i < width; ++i) {
    s.keys.push_back(std::string(1, static_cast<char>('a' + i)));
    if (i == 0) {
      s.children.push_back(random_shape(rng, levels - 1, max_dim));
    } else if (levels >= 3 && rng() % 2 == 0) {
      s.children.push_back(random_shape(rng, 2, max_dim));
    } else {
      s.children.push_back(array_shape(rng, max_dim));
    }
  }
  return s;
}

struct DataOptions {
  double missing = 0.2;   // leaf columns and product children
  double empty = 0.2;     // bags
  std::size_t max_bag = 4;
};

inline hmill::DataNode random_data(const Shape& s, std::size_t n, hmill::Rng& rng,
                                   const DataOptions& o = {}) {
  using hmill::DataNode;
  if (s.kind == Shape::Array) {
    hmill::Matrix x(s.dim, n);
    std::vector<std::uint8_t> missing(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      missing[j] = synth::uniform01(rng) < o.missing;
      for (std::size_t r = 0; r < s.dim; ++r) x(r, j) = missing[j] ? 0.0 : hmill::standard_normal(rng);
    }
    return DataNode::array(std::move(x), std::move(missing));
  }
  if (s.kind == Shape::Bag) {
    std::vector<std::size_t> lengths(n);
    std::size_t total = 0;
    for (auto& len : lengths) {
      len = synth::uniform01(rng) < o.empty ? 0 : pick(rng, 1, o.max_bag);
      total += len;
    }
    auto child = random_data(s.children[0], total, rng, o);
    std::optional<std::vector<double>> w;
    if (s.weighted) {
      w.emplace();
      for (std::size_t i = 0; i < total; ++i) w->push_back(0.5 + 1.5 * synth::uniform01(rng));
    }
    return DataNode::bag(std::move(child), hmill::BagIndices::from_lengths(lengths), std::move(w));
  }
  std::vector<std::pair<std::string, DataNode>> children;
  std::vector<std::vector<std::uint8_t>> missing;
  for (std::size_t i = 0; i < s.children.size(); ++i) {
    children.emplace_back(s.keys[i], random_data(s.children[i], n, rng, o));
    std::vector<std::uint8_t> flags(n);
    for (auto& f : flags) f = synth::uniform01(rng) < o.missing;
    missing.push_back(std::move(flags));
  }
  return DataNode::product(std::move(children), std::move(missing), n);
}

/// Moves psi and aggregation parameters away from their initial values (and
/// biases away from zero) so that every parameter kind is exercised.
inline void perturb(hmill::ModelNode& m, hmill::Rng& rng) {
  hmill::visit_parameters(m, [&](std::span<double> block, hmill::ParamKind kind) {
    if (kind == hmill::ParamKind::Weight) return;
    const double scale = kind == hmill::ParamKind::Bias ? 0.1 : (kind == hmill::ParamKind::AggCenter ? 0.5 : 1.0);
    for (auto& v : block) v = scale * hmill::standard_normal(rng);
  });
}

}  // namespace gen
