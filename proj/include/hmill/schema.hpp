#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>

#include "json.hpp"

#include "hmill/box.hpp"

namespace hmill {

using Json = nlohmann::json;

enum class LeafKind { String, Number, Boolean };

std::string to_string(LeafKind k);

struct SchemaNode;

/// Position where nothing (or only null) has been observed yet.
struct EmptySchema {
  friend bool operator==(const EmptySchema&, const EmptySchema&) = default;
};

/// Scalar position. `uniques` holds canonical JSON text of at most U distinct
/// values: the U smallest (by that text) when `overflow` is set, which makes
/// inference independent of document order.
struct LeafSchema {
  LeafKind kind = LeafKind::Number;
  std::size_t updated = 0;
  std::set<std::string> uniques;
  bool overflow = false;

  friend bool operator==(const LeafSchema&, const LeafSchema&) = default;
};

/// Array position. The child counts every non-null element seen.
struct BagSchema {
  Box<SchemaNode> child;
  std::size_t updated = 0;
  std::size_t length_min = 0;
  std::size_t length_max = 0;

  friend bool operator==(const BagSchema&, const BagSchema&) = default;
};

struct SchemaEntry {
  Box<SchemaNode> child;
  std::size_t updated = 0;

  friend bool operator==(const SchemaEntry&, const SchemaEntry&) = default;
};

/// Object position. Keys absent from some documents are allowed.
struct ProductSchema {
  std::map<std::string, SchemaEntry> entries;
  std::size_t updated = 0;

  friend bool operator==(const ProductSchema&, const ProductSchema&) = default;
};

struct SchemaNode {
  std::variant<EmptySchema, LeafSchema, BagSchema, ProductSchema> node;

  bool is_empty() const { return std::holds_alternative<EmptySchema>(node); }
  bool is_leaf() const { return std::holds_alternative<LeafSchema>(node); }
  bool is_bag() const { return std::holds_alternative<BagSchema>(node); }
  bool is_product() const { return std::holds_alternative<ProductSchema>(node); }
  const LeafSchema& as_leaf() const { return std::get<LeafSchema>(node); }
  const BagSchema& as_bag() const { return std::get<BagSchema>(node); }
  const ProductSchema& as_product() const { return std::get<ProductSchema>(node); }

  std::size_t updated() const;

  friend bool operator==(const SchemaNode&, const SchemaNode&) = default;
};

struct SchemaOptions {
  std::size_t max_unique = 100;
};

/// Canonical text used for unique-value sets: numbers are normalized to
/// doubles so 1 and 1.0 coincide.
std::string canonical_value(const Json& scalar);

/// Streaming schema inference: a left fold over documents.
class SchemaBuilder {
 public:
  explicit SchemaBuilder(SchemaOptions options = {}) : options_(options) {}

  /// Folds one document in. On a kind conflict throws SchemaError naming the
  /// path; the builder is left unchanged in that case.
  void add(const Json& doc);

  const SchemaNode& schema() const noexcept { return root_; }
  std::size_t documents() const noexcept { return documents_; }

 private:
  SchemaOptions options_;
  SchemaNode root_;
  std::size_t documents_ = 0;
};

SchemaNode infer_schema(std::span<const Json> docs, SchemaOptions options = {});

/// Sum of two schemata; infer(A ++ B) == schema_merge(infer(A), infer(B)).
SchemaNode schema_merge(const SchemaNode& a, const SchemaNode& b,
                        SchemaOptions options = {});

struct MatchResult {
  bool ok = true;
  std::string path;
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

struct MatchOptions {
  bool ignore_extra_keys = false;
};

/// Does `doc` follow `schema`? null is a missing value and always matches;
/// empty arrays match any bag.
MatchResult matches(const Json& doc, const SchemaNode& schema, MatchOptions options = {});

/// Serialized form: {"format": "hmill-schema", "version": 1, "max_unique": U, "root": ...}.
Json schema_to_json(const SchemaNode& schema, SchemaOptions options = {});
SchemaNode schema_from_json(const Json& j, SchemaOptions* options = nullptr);

Json schema_node_to_json(const SchemaNode& node);
SchemaNode schema_node_from_json(const Json& j, const std::string& path = "");

}  // namespace hmill
