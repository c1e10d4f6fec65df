#include "hmill/schema.hpp"

#include <algorithm>

#include "hmill/datanode.hpp"
#include "hmill/error.hpp"

namespace hmill {

std::string to_string(LeafKind k) {
  switch (k) {
    case LeafKind::String: return "string";
    case LeafKind::Number: return "number";
    case LeafKind::Boolean: return "boolean";
  }
  return "number";
}

namespace {

LeafKind leaf_kind_from_string(const std::string& s, const std::string& path) {
  if (s == "string") return LeafKind::String;
  if (s == "number") return LeafKind::Number;
  if (s == "boolean") return LeafKind::Boolean;
  throw FormatError(StructureError::display(path) + ": unknown leaf kind '" + s + "'");
}

const char* json_kind(const Json& j) {
  if (j.is_object()) return "object";
  if (j.is_array()) return "array";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  return "null";
}

const char* schema_kind(const SchemaNode& s) {
  if (s.is_product()) return "object";
  if (s.is_bag()) return "array";
  if (s.is_leaf()) {
    switch (s.as_leaf().kind) {
      case LeafKind::String: return "string";
      case LeafKind::Number: return "number";
      case LeafKind::Boolean: return "boolean";
    }
  }
  return "nothing";
}

LeafKind scalar_kind(const Json& j) {
  if (j.is_string()) return LeafKind::String;
  if (j.is_boolean()) return LeafKind::Boolean;
  return LeafKind::Number;
}

void insert_unique(LeafSchema& leaf, std::string value, std::size_t cap) {
  if (leaf.uniques.contains(value)) return;
  if (leaf.uniques.size() < cap) {
    leaf.uniques.insert(std::move(value));
    return;
  }
  leaf.overflow = true;
  if (cap > 0 && value < *leaf.uniques.rbegin()) {
    leaf.uniques.insert(std::move(value));
    leaf.uniques.erase(std::prev(leaf.uniques.end()));
  }
}

void conflict(const std::string& path, const SchemaNode& s, const Json& doc) {
  throw SchemaError(path, std::string("kind conflict: schema has ") + schema_kind(s) +
                              ", document has " + json_kind(doc));
}

void update(SchemaNode& s, const Json& doc, const std::string& path,
            const SchemaOptions& opt) {
  if (doc.is_null()) return;
  if (doc.is_object()) {
    if (s.is_empty()) s.node = ProductSchema{};
    if (!s.is_product()) conflict(path, s, doc);
    auto& p = std::get<ProductSchema>(s.node);
    ++p.updated;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_null()) continue;
      auto& entry = p.entries[key];
      ++entry.updated;
      update(*entry.child, value, child_path(path, key), opt);
    }
  } else if (doc.is_array()) {
    if (s.is_empty()) s.node = BagSchema{SchemaNode{}, 0, doc.size(), doc.size()};
    if (!s.is_bag()) conflict(path, s, doc);
    auto& b = std::get<BagSchema>(s.node);
    b.length_min = b.updated == 0 ? doc.size() : std::min(b.length_min, doc.size());
    b.length_max = b.updated == 0 ? doc.size() : std::max(b.length_max, doc.size());
    ++b.updated;
    for (const auto& el : doc) update(*b.child, el, instance_path(path), opt);
  } else {
    const LeafKind kind = scalar_kind(doc);
    if (s.is_empty()) s.node = LeafSchema{kind, 0, {}, false};
    if (!s.is_leaf() || s.as_leaf().kind != kind) conflict(path, s, doc);
    auto& leaf = std::get<LeafSchema>(s.node);
    ++leaf.updated;
    insert_unique(leaf, canonical_value(doc), opt.max_unique);
  }
}

SchemaNode merge_nodes(const SchemaNode& a, const SchemaNode& b, const std::string& path,
                       const SchemaOptions& opt) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  if (a.node.index() != b.node.index() ||
      (a.is_leaf() && a.as_leaf().kind != b.as_leaf().kind)) {
    throw SchemaError(path, std::string("kind conflict: ") + schema_kind(a) + " vs " +
                                schema_kind(b));
  }
  if (a.is_leaf()) {
    LeafSchema out = a.as_leaf();
    const auto& lb = b.as_leaf();
    out.updated += lb.updated;
    out.overflow = out.overflow || lb.overflow;
    out.uniques.insert(lb.uniques.begin(), lb.uniques.end());
    while (out.uniques.size() > opt.max_unique) {
      out.overflow = true;
      out.uniques.erase(std::prev(out.uniques.end()));
    }
    return SchemaNode{std::move(out)};
  }
  if (a.is_bag()) {
    const auto& ba = a.as_bag();
    const auto& bb = b.as_bag();
    return SchemaNode{BagSchema{merge_nodes(*ba.child, *bb.child, instance_path(path), opt),
                                ba.updated + bb.updated,
                                std::min(ba.length_min, bb.length_min),
                                std::max(ba.length_max, bb.length_max)}};
  }
  ProductSchema out = a.as_product();
  const auto& pb = b.as_product();
  out.updated += pb.updated;
  for (const auto& [key, entry] : pb.entries) {
    auto it = out.entries.find(key);
    if (it == out.entries.end()) {
      out.entries.emplace(key, entry);
    } else {
      it->second.child = merge_nodes(*it->second.child, *entry.child, child_path(path, key), opt);
      it->second.updated += entry.updated;
    }
  }
  return SchemaNode{std::move(out)};
}

MatchResult fail(std::string path, std::string reason) {
  return MatchResult{false, std::move(path), std::move(reason)};
}

MatchResult match_impl(const Json& doc, const SchemaNode& s, const std::string& path,
                       const MatchOptions& opt) {
  if (doc.is_null()) return {};
  if (s.is_empty()) return fail(path, std::string("unexpected ") + json_kind(doc));
  if (doc.is_object()) {
    if (!s.is_product()) {
      return fail(path, std::string("expected ") + schema_kind(s) + ", got object");
    }
    const auto& entries = s.as_product().entries;
    for (const auto& [key, value] : doc.items()) {
      auto it = entries.find(key);
      if (it == entries.end()) {
        if (value.is_null() || opt.ignore_extra_keys) continue;
        return fail(child_path(path, key), "key not present in schema");
      }
      auto r = match_impl(value, *it->second.child, child_path(path, key), opt);
      if (!r) return r;
    }
    return {};
  }
  if (doc.is_array()) {
    if (!s.is_bag()) return fail(path, std::string("expected ") + schema_kind(s) + ", got array");
    for (const auto& el : doc) {
      auto r = match_impl(el, *s.as_bag().child, instance_path(path), opt);
      if (!r) return r;
    }
    return {};
  }
  if (!s.is_leaf() || s.as_leaf().kind != scalar_kind(doc)) {
    return fail(path, std::string("expected ") + schema_kind(s) + ", got " + json_kind(doc));
  }
  return {};
}

}  // namespace

std::size_t SchemaNode::updated() const {
  return std::visit(
      [](const auto& n) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(n)>, EmptySchema>) {
          return 0;
        } else {
          return n.updated;
        }
      },
      node);
}

std::string canonical_value(const Json& scalar) {
  if (scalar.is_number()) return Json(scalar.get<double>()).dump();
  return scalar.dump();
}

void SchemaBuilder::add(const Json& doc) {
  // Fold into a copy so that a conflict leaves the builder untouched.
  SchemaNode next = root_;
  update(next, doc, "", options_);
  root_ = std::move(next);
  ++documents_;
}

SchemaNode infer_schema(std::span<const Json> docs, SchemaOptions options) {
  SchemaNode root;
  for (const auto& d : docs) update(root, d, "", options);
  return root;
}

SchemaNode schema_merge(const SchemaNode& a, const SchemaNode& b, SchemaOptions options) {
  return merge_nodes(a, b, "", options);
}

MatchResult matches(const Json& doc, const SchemaNode& schema, MatchOptions options) {
  return match_impl(doc, schema, "", options);
}

// ---------------------------------------------------------------------------
// Serialization

Json schema_node_to_json(const SchemaNode& node) {
  if (node.is_empty()) return Json{{"type", "empty"}};
  if (node.is_leaf()) {
    const auto& l = node.as_leaf();
    Json uniques = Json::array();
    for (const auto& u : l.uniques) uniques.push_back(Json::parse(u));
    return Json{{"type", "leaf"},
                {"kind", to_string(l.kind)},
                {"updated", l.updated},
                {"uniques", std::move(uniques)},
                {"overflow", l.overflow}};
  }
  if (node.is_bag()) {
    const auto& b = node.as_bag();
    return Json{{"type", "bag"},
                {"updated", b.updated},
                {"length_min", b.length_min},
                {"length_max", b.length_max},
                {"child", schema_node_to_json(*b.child)}};
  }
  const auto& p = node.as_product();
  Json entries = Json::object();
  for (const auto& [key, entry] : p.entries) {
    entries[key] = Json{{"updated", entry.updated}, {"child", schema_node_to_json(*entry.child)}};
  }
  return Json{{"type", "product"}, {"updated", p.updated}, {"entries", std::move(entries)}};
}

namespace {

const Json& field(const Json& j, const char* name, const std::string& path) {
  if (!j.is_object() || !j.contains(name)) {
    throw FormatError(StructureError::display(path) + ": missing field '" + name + "'");
  }
  return j.at(name);
}

std::size_t count_field(const Json& j, const char* name, const std::string& path) {
  const Json& v = field(j, name, path);
  if (!v.is_number_unsigned()) {
    throw FormatError(StructureError::display(path) + ": field '" + name +
                      "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

SchemaNode schema_node_from_json(const Json& j, const std::string& path) {
  const Json& type = field(j, "type", path);
  if (!type.is_string()) throw FormatError(StructureError::display(path) + ": bad type tag");
  const auto t = type.get<std::string>();
  if (t == "empty") return SchemaNode{};
  if (t == "leaf") {
    LeafSchema l;
    l.kind = leaf_kind_from_string(field(j, "kind", path).get<std::string>(), path);
    l.updated = count_field(j, "updated", path);
    l.overflow = field(j, "overflow", path).get<bool>();
    for (const auto& u : field(j, "uniques", path)) l.uniques.insert(canonical_value(u));
    return SchemaNode{std::move(l)};
  }
  if (t == "bag") {
    return SchemaNode{BagSchema{schema_node_from_json(field(j, "child", path), instance_path(path)),
                                count_field(j, "updated", path),
                                count_field(j, "length_min", path),
                                count_field(j, "length_max", path)}};
  }
  if (t == "product") {
    ProductSchema p;
    p.updated = count_field(j, "updated", path);
    for (const auto& [key, e] : field(j, "entries", path).items()) {
      const auto cp = child_path(path, key);
      p.entries.emplace(key, SchemaEntry{schema_node_from_json(field(e, "child", cp), cp),
                                         count_field(e, "updated", cp)});
    }
    return SchemaNode{std::move(p)};
  }
  throw FormatError(StructureError::display(path) + ": unknown schema node type '" + t + "'");
}

Json schema_to_json(const SchemaNode& schema, SchemaOptions options) {
  return Json{{"format", "hmill-schema"},
              {"version", 1},
              {"max_unique", options.max_unique},
              {"root", schema_node_to_json(schema)}};
}

SchemaNode schema_from_json(const Json& j, SchemaOptions* options) try {
  if (!j.is_object() || j.value("format", "") != "hmill-schema") {
    throw FormatError("not an hmill schema document");
  }
  if (j.value("version", 0) != 1) {
    throw FormatError("unsupported schema version " + j.value("version", Json()).dump());
  }
  if (options) options->max_unique = count_field(j, "max_unique", "");
  return schema_node_from_json(field(j, "root", ""), "");
} catch (const Json::exception& e) {
  throw FormatError(std::string("malformed schema document: ") + e.what());
}

}  // namespace hmill
