#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hmill/box.hpp"
#include "hmill/matrix.hpp"

namespace hmill {

/// Bag membership in compressed form: bag b owns
/// indices[offsets[b] .. offsets[b+1]). Bags may be empty. Contiguous bags
/// (the usual output of extraction and merge) are just the special case
/// indices = 0, 1, 2, ...
class BagIndices {
 public:
  BagIndices() : offsets_{0} {}
  /// Consecutive ranges of the given lengths.
  static BagIndices from_lengths(std::span<const std::size_t> lengths);
  /// Arbitrary index lists.
  static BagIndices from_lists(const std::vector<std::vector<std::size_t>>& lists);

  std::size_t count() const noexcept { return offsets_.size() - 1; }
  std::size_t instance_count() const noexcept { return indices_.size(); }
  std::span<const std::size_t> bag(std::size_t b) const {
    return {indices_.data() + offsets_[b], offsets_[b + 1] - offsets_[b]};
  }
  std::size_t size(std::size_t b) const { return offsets_[b + 1] - offsets_[b]; }
  bool empty(std::size_t b) const { return offsets_[b + 1] == offsets_[b]; }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }

  std::vector<std::vector<std::size_t>> to_lists() const;

  /// True iff the bags partition 0..n-1.
  bool partitions(std::size_t n) const;

  friend bool operator==(const BagIndices&, const BagIndices&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> indices_;
};

struct DataNode;

/// Leaf observations as columns. Columns flagged in `missing` hold zeros and
/// are never read by a model; `missing` is empty when nothing is missing.
struct ArrayData {
  Matrix x;
  std::vector<std::uint8_t> missing;

  bool is_missing(std::size_t j) const { return !missing.empty() && missing[j] != 0; }
  friend bool operator==(const ArrayData&, const ArrayData&) = default;
};

/// One observation per bag; the bags index the child's observations.
/// `weights` (optional) holds one positive weight per child observation.
struct BagData {
  Box<DataNode> child;
  BagIndices bags;
  std::optional<std::vector<double>> weights;

  friend bool operator==(const BagData&, const BagData&) = default;
};

/// Heterogeneous keyed children sharing the observation count `n`.
/// Keys are sorted; `missing[i]` flags observations where child i is absent
/// (empty vector: never absent). A flagged observation still occupies a
/// placeholder column in the child so that observation counts line up.
struct ProductData {
  std::vector<std::string> keys;
  std::vector<DataNode> children;
  std::vector<std::vector<std::uint8_t>> missing;
  std::size_t n = 0;

  bool is_missing(std::size_t child, std::size_t j) const {
    return !missing[child].empty() && missing[child][j] != 0;
  }
  /// Index of `key` or npos.
  std::size_t find(const std::string& key) const;

  friend bool operator==(const ProductData&, const ProductData&) = default;
};

/// A (batch of) HMill sample tree(s).
struct DataNode {
  std::variant<ArrayData, BagData, ProductData> node;

  /// Validating constructors; throw StructureError on broken invariants.
  static DataNode array(Matrix x, std::vector<std::uint8_t> missing = {});
  static DataNode bag(DataNode child, BagIndices bags,
                      std::optional<std::vector<double>> weights = std::nullopt);
  /// Children are sorted by key; `missing` (if given) is aligned with `children`
  /// as passed. `n` is only consulted when there are no children.
  static DataNode product(std::vector<std::pair<std::string, DataNode>> children,
                          std::vector<std::vector<std::uint8_t>> missing = {},
                          std::size_t n = 0);

  bool is_array() const { return std::holds_alternative<ArrayData>(node); }
  bool is_bag() const { return std::holds_alternative<BagData>(node); }
  bool is_product() const { return std::holds_alternative<ProductData>(node); }
  const ArrayData& as_array() const { return std::get<ArrayData>(node); }
  const BagData& as_bag() const { return std::get<BagData>(node); }
  const ProductData& as_product() const { return std::get<ProductData>(node); }

  friend bool operator==(const DataNode&, const DataNode&) = default;
};

/// Number of observations held by the node.
std::size_t nobs(const DataNode& node);

/// Concatenate observations of structurally compatible nodes, in order.
/// Throws StructureError with the offending tree path on mismatch.
DataNode merge(std::span<const DataNode> nodes);
DataNode merge(const DataNode& a, const DataNode& b);

/// Observations `obs` (ordered, unique). Bag children keep only the instances
/// of kept bags, laid out contiguously.
DataNode slice(const DataNode& node, std::span<const std::size_t> obs);

/// Weighted copy of a bag node; throws on nonpositive or miscounted weights.
DataNode attach_weights(const DataNode& bag, std::vector<double> weights);

/// Throws StructureError (with path) unless `a` and `b` can be merged.
void check_compatible(const DataNode& a, const DataNode& b, const std::string& path = "");

/// Re-validates every invariant of a tree (used on deserialized data).
void validate(const DataNode& node, const std::string& path = "");

std::string child_path(const std::string& parent, const std::string& key);
std::string instance_path(const std::string& parent);

}  // namespace hmill
