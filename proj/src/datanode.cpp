#include "hmill/datanode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmill/error.hpp"

namespace hmill {

std::string child_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string instance_path(const std::string& parent) { return parent + "[]"; }

// ---------------------------------------------------------------------------
// BagIndices

BagIndices BagIndices::from_lengths(std::span<const std::size_t> lengths) {
  BagIndices out;
  out.offsets_.reserve(lengths.size() + 1);
  for (std::size_t len : lengths) out.offsets_.push_back(out.offsets_.back() + len);
  out.indices_.resize(out.offsets_.back());
  std::iota(out.indices_.begin(), out.indices_.end(), std::size_t{0});
  return out;
}

BagIndices BagIndices::from_lists(const std::vector<std::vector<std::size_t>>& lists) {
  BagIndices out;
  out.offsets_.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    out.indices_.insert(out.indices_.end(), l.begin(), l.end());
    out.offsets_.push_back(out.indices_.size());
  }
  return out;
}

std::vector<std::vector<std::size_t>> BagIndices::to_lists() const {
  std::vector<std::vector<std::size_t>> out(count());
  for (std::size_t b = 0; b < count(); ++b) {
    auto s = bag(b);
    out[b].assign(s.begin(), s.end());
  }
  return out;
}

bool BagIndices::partitions(std::size_t n) const {
  if (indices_.size() != n) return false;
  std::vector<std::uint8_t> seen(n, 0);
  for (std::size_t i : indices_) {
    if (i >= n || seen[i]) return false;
    seen[i] = 1;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Construction

std::size_t ProductData::find(const std::string& key) const {
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - keys.begin());
}

DataNode DataNode::array(Matrix x, std::vector<std::uint8_t> missing) {
  if (!missing.empty() && missing.size() != x.cols()) {
    throw StructureError("", "missing flags (" + std::to_string(missing.size()) +
                                 ") do not match " + std::to_string(x.cols()) +
                                 " columns");
  }
  require_finite(x, "array data");
  if (std::none_of(missing.begin(), missing.end(), [](auto f) { return f != 0; })) {
    missing.clear();
  }
  return DataNode{ArrayData{std::move(x), std::move(missing)}};
}

DataNode DataNode::bag(DataNode child, BagIndices bags,
                       std::optional<std::vector<double>> weights) {
  const std::size_t n = nobs(child);
  if (!bags.partitions(n)) {
    throw StructureError("", "bag indices do not partition the " + std::to_string(n) +
                                 " child observations");
  }
  if (weights) {
    if (weights->size() != n) {
      throw StructureError("", "expected " + std::to_string(n) + " bag weights, got " +
                                   std::to_string(weights->size()));
    }
    for (double w : *weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw StructureError("", "bag weights must be positive and finite");
      }
    }
  }
  return DataNode{BagData{std::move(child), std::move(bags), std::move(weights)}};
}

DataNode DataNode::product(std::vector<std::pair<std::string, DataNode>> children,
                           std::vector<std::vector<std::uint8_t>> missing, std::size_t n) {
  if (missing.empty()) missing.resize(children.size());
  if (missing.size() != children.size()) {
    throw StructureError("", "missing flag lists do not match product children");
  }
  std::vector<std::size_t> order(children.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return children[a].first < children[b].first;
  });
  ProductData p;
  p.n = children.empty() ? n : nobs(children.front().second);
  for (std::size_t i : order) {
    auto& [key, child] = children[i];
    if (!p.keys.empty() && p.keys.back() == key) {
      throw StructureError(key, "duplicate product key");
    }
    if (nobs(child) != p.n) {
      throw StructureError(key, "child has " + std::to_string(nobs(child)) +
                                    " observations, expected " + std::to_string(p.n));
    }
    auto flags = std::move(missing[i]);
    if (!flags.empty() && flags.size() != p.n) {
      throw StructureError(key, "missing flags do not match observation count");
    }
    if (std::none_of(flags.begin(), flags.end(), [](auto f) { return f != 0; })) {
      flags.clear();
    }
    p.keys.push_back(key);
    p.children.push_back(std::move(child));
    p.missing.push_back(std::move(flags));
  }
  return DataNode{std::move(p)};
}

std::size_t nobs(const DataNode& node) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ArrayData>) {
          return n.x.cols();
        } else if constexpr (std::is_same_v<T, BagData>) {
          return n.bags.count();
        } else {
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (nobs(n.children[i]) != n.n) {
              throw StructureError(n.keys[i], "product children disagree on observation count");
            }
          }
          return n.n;
        }
      },
      node.node);
}

// ---------------------------------------------------------------------------
// Structure checks

namespace {

const char* kind_name(const DataNode& n) {
  return n.is_array() ? "array" : n.is_bag() ? "bag" : "product";
}

}  // namespace

void check_compatible(const DataNode& a, const DataNode& b, const std::string& path) {
  if (a.node.index() != b.node.index()) {
    throw StructureError(path, std::string("node kinds differ: ") + kind_name(a) + " vs " +
                                   kind_name(b));
  }
  if (a.is_array()) {
    if (a.as_array().x.rows() != b.as_array().x.rows()) {
      throw StructureError(path, "array dimensions differ: " +
                                     std::to_string(a.as_array().x.rows()) + " vs " +
                                     std::to_string(b.as_array().x.rows()));
    }
  } else if (a.is_bag()) {
    check_compatible(*a.as_bag().child, *b.as_bag().child, instance_path(path));
  } else {
    const auto& pa = a.as_product();
    const auto& pb = b.as_product();
    if (pa.keys != pb.keys) throw StructureError(path, "product keys differ");
    for (std::size_t i = 0; i < pa.keys.size(); ++i) {
      check_compatible(pa.children[i], pb.children[i], child_path(path, pa.keys[i]));
    }
  }
}

void validate(const DataNode& node, const std::string& path) {
  try {
    if (node.is_array()) {
      const auto& a = node.as_array();
      if (!a.missing.empty() && a.missing.size() != a.x.cols()) {
        throw StructureError(path, "missing flags do not match columns");
      }
      require_finite(a.x, "array data");
    } else if (node.is_bag()) {
      const auto& b = node.as_bag();
      validate(*b.child, instance_path(path));
      (void)DataNode::bag(*b.child, b.bags, b.weights);
    } else {
      const auto& p = node.as_product();
      if (p.keys.size() != p.children.size() || p.missing.size() != p.children.size()) {
        throw StructureError(path, "product arrays are inconsistent");
      }
      if (!std::is_sorted(p.keys.begin(), p.keys.end()) ||
          std::adjacent_find(p.keys.begin(), p.keys.end()) != p.keys.end()) {
        throw StructureError(path, "product keys must be sorted and unique");
      }
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        validate(p.children[i], child_path(path, p.keys[i]));
        if (nobs(p.children[i]) != p.n || (!p.missing[i].empty() && p.missing[i].size() != p.n)) {
          throw StructureError(child_path(path, p.keys[i]), "observation count mismatch");
        }
      }
    }
  } catch (const StructureError& e) {
    if (!e.path().empty() || path.empty()) throw;
    throw StructureError(path, e.what());
  } catch (const ShapeError& e) {
    throw StructureError(path, e.what());
  }
}

// ---------------------------------------------------------------------------
// merge

namespace {

std::vector<std::uint8_t> concat_flags(std::span<const std::vector<std::uint8_t>* const> flags,
                                       std::span<const std::size_t> counts) {
  bool any = false;
  for (auto* f : flags) any = any || !f->empty();
  if (!any) return {};
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]->empty()) {
      out.insert(out.end(), counts[i], 0);
    } else {
      out.insert(out.end(), flags[i]->begin(), flags[i]->end());
    }
  }
  return out;
}

DataNode merge_impl(std::span<const DataNode* const> nodes) {
  const DataNode& first = *nodes.front();
  std::vector<std::size_t> counts;
  for (auto* n : nodes) counts.push_back(nobs(*n));

  if (first.is_array()) {
    std::vector<Matrix> xs;
    std::vector<const std::vector<std::uint8_t>*> flags;
    for (auto* n : nodes) {
      xs.push_back(n->as_array().x);
      flags.push_back(&n->as_array().missing);
    }
    Matrix x = hcat(xs);
    return DataNode{ArrayData{std::move(x), concat_flags(flags, counts)}};
  }

  if (first.is_bag()) {
    std::vector<const DataNode*> children;
    std::vector<std::size_t> offsets{0};
    std::vector<std::size_t> indices;
    bool weighted = false;
    for (auto* n : nodes) weighted = weighted || n->as_bag().weights.has_value();
    std::vector<double> weights;
    std::size_t shift = 0;
    for (auto* n : nodes) {
      const auto& b = n->as_bag();
      children.push_back(&*b.child);
      for (std::size_t k = 0; k < b.bags.count(); ++k) {
        for (std::size_t i : b.bags.bag(k)) indices.push_back(i + shift);
        offsets.push_back(indices.size());
      }
      const std::size_t nchild = b.bags.instance_count();
      if (weighted) {
        if (b.weights) {
          weights.insert(weights.end(), b.weights->begin(), b.weights->end());
        } else {
          weights.insert(weights.end(), nchild, 1.0);
        }
      }
      shift += nchild;
    }
    std::vector<std::vector<std::size_t>> lists;
    lists.reserve(offsets.size() - 1);
    for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
      lists.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(offsets[k]),
                         indices.begin() + static_cast<std::ptrdiff_t>(offsets[k + 1]));
    }
    BagData out{merge_impl(children), BagIndices::from_lists(lists), std::nullopt};
    if (weighted) out.weights = std::move(weights);
    return DataNode{std::move(out)};
  }

  const auto& p0 = first.as_product();
  ProductData out;
  out.keys = p0.keys;
  out.n = 0;
  for (auto c : counts) out.n += c;
  for (std::size_t i = 0; i < p0.keys.size(); ++i) {
    std::vector<const DataNode*> children;
    std::vector<const std::vector<std::uint8_t>*> flags;
    for (auto* n : nodes) {
      children.push_back(&n->as_product().children[i]);
      flags.push_back(&n->as_product().missing[i]);
    }
    out.children.push_back(merge_impl(children));
    out.missing.push_back(concat_flags(flags, counts));
  }
  return DataNode{std::move(out)};
}

}  // namespace

DataNode merge(std::span<const DataNode> nodes) {
  if (nodes.empty()) throw StructureError("", "merge of an empty list");
  for (std::size_t i = 1; i < nodes.size(); ++i) check_compatible(nodes[0], nodes[i]);
  std::vector<const DataNode*> ptrs;
  ptrs.reserve(nodes.size());
  for (const auto& n : nodes) ptrs.push_back(&n);
  return merge_impl(ptrs);
}

DataNode merge(const DataNode& a, const DataNode& b) {
  check_compatible(a, b);
  const DataNode* ptrs[] = {&a, &b};
  return merge_impl(ptrs);
}

// ---------------------------------------------------------------------------
// slice

namespace {

std::vector<std::uint8_t> gather_flags(const std::vector<std::uint8_t>& flags,
                                       std::span<const std::size_t> obs) {
  if (flags.empty()) return {};
  std::vector<std::uint8_t> out;
  out.reserve(obs.size());
  bool any = false;
  for (std::size_t j : obs) {
    out.push_back(flags[j]);
    any = any || flags[j];
  }
  if (!any) out.clear();
  return out;
}

DataNode slice_impl(const DataNode& node, std::span<const std::size_t> obs) {
  if (node.is_array()) {
    const auto& a = node.as_array();
    return DataNode{ArrayData{select_cols(a.x, obs), gather_flags(a.missing, obs)}};
  }
  if (node.is_bag()) {
    const auto& b = node.as_bag();
    std::vector<std::size_t> inst;
    std::vector<std::size_t> lengths;
    lengths.reserve(obs.size());
    for (std::size_t j : obs) {
      auto members = b.bags.bag(j);
      inst.insert(inst.end(), members.begin(), members.end());
      lengths.push_back(members.size());
    }
    BagData out{slice_impl(*b.child, inst), BagIndices::from_lengths(lengths), std::nullopt};
    if (b.weights) {
      std::vector<double> w;
      w.reserve(inst.size());
      for (std::size_t i : inst) w.push_back((*b.weights)[i]);
      out.weights = std::move(w);
    }
    return DataNode{std::move(out)};
  }
  const auto& p = node.as_product();
  ProductData out;
  out.keys = p.keys;
  out.n = obs.size();
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    out.children.push_back(slice_impl(p.children[i], obs));
    out.missing.push_back(gather_flags(p.missing[i], obs));
  }
  return DataNode{std::move(out)};
}

}  // namespace

DataNode slice(const DataNode& node, std::span<const std::size_t> obs) {
  const std::size_t n = nobs(node);
  std::vector<std::uint8_t> seen(n, 0);
  for (std::size_t j : obs) {
    if (j >= n) {
      throw StructureError("", "slice index " + std::to_string(j) + " out of range (nobs " +
                                   std::to_string(n) + ")");
    }
    if (seen[j]) throw StructureError("", "slice index " + std::to_string(j) + " repeated");
    seen[j] = 1;
  }
  return slice_impl(node, obs);
}

DataNode attach_weights(const DataNode& bag, std::vector<double> weights) {
  if (!bag.is_bag()) throw StructureError("", "attach_weights needs a bag node");
  const auto& b = bag.as_bag();
  return DataNode::bag(*b.child, b.bags, std::move(weights));
}

}  // namespace hmill
