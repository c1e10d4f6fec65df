#include "hmill/encode.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hmill/error.hpp"
#include "hmill/rng.hpp"

namespace hmill {

// ---------------------------------------------------------------------------
// Encoders

std::size_t encoder_dim(const Encoder& e) {
  return std::visit(
      [](const auto& enc) -> std::size_t {
        using T = std::decay_t<decltype(enc)>;
        if constexpr (std::is_same_v<T, OneHotEncoder>) {
          return enc.dim();
        } else if constexpr (std::is_same_v<T, TrigramEncoder>) {
          return enc.dims;
        } else {
          return 1;
        }
      },
      e);
}

std::uint64_t trigram_hash(unsigned char a, unsigned char b, unsigned char c) {
  const char bytes[3] = {static_cast<char>(a), static_cast<char>(b), static_cast<char>(c)};
  return mix64(fnv1a64(std::string_view(bytes, 3)));
}

std::vector<double> trigram_histogram(std::string_view s, std::size_t d, bool normalize) {
  std::vector<double> out(d, 0.0);
  if (s.empty() || d == 0) return out;
  std::string padded;
  padded.reserve(s.size() + 2);
  padded.push_back(static_cast<char>(kTrigramBegin));
  padded.append(s);
  padded.push_back(static_cast<char>(kTrigramEnd));
  const std::size_t windows = padded.size() - 2;
  for (std::size_t i = 0; i < windows; ++i) {
    const auto h = trigram_hash(static_cast<unsigned char>(padded[i]),
                                static_cast<unsigned char>(padded[i + 1]),
                                static_cast<unsigned char>(padded[i + 2]));
    out[h % d] += 1.0;
  }
  if (normalize) {
    for (double& v : out) v /= static_cast<double>(windows);
  }
  return out;
}

namespace {

[[noreturn]] void encode_conflict(const std::string& path, const char* want, const Json& v) {
  throw SchemaError(path, std::string("kind conflict: encoder expects ") + want + ", got " +
                              v.type_name());
}

}  // namespace

void encode_value(const Encoder& e, const Json& value, std::span<double> out,
                  const std::string& path) {
  std::fill(out.begin(), out.end(), 0.0);
  std::visit(
      [&](const auto& enc) {
        using T = std::decay_t<decltype(enc)>;
        if constexpr (std::is_same_v<T, OneHotEncoder>) {
          if (value.is_object() || value.is_array()) encode_conflict(path, "a scalar", value);
          const auto key = canonical_value(value);
          auto it = std::find(enc.vocabulary.begin(), enc.vocabulary.end(), key);
          if (it != enc.vocabulary.end()) {
            out[static_cast<std::size_t>(it - enc.vocabulary.begin())] = 1.0;
          } else if (enc.unknown == UnknownPolicy::ExtraSlot) {
            out[enc.vocabulary.size()] = 1.0;
          }
        } else if constexpr (std::is_same_v<T, TrigramEncoder>) {
          if (!value.is_string()) encode_conflict(path, "string", value);
          auto h = trigram_histogram(value.template get_ref<const std::string&>(), enc.dims,
                                     enc.normalize);
          std::copy(h.begin(), h.end(), out.begin());
        } else {
          if (!value.is_number()) encode_conflict(path, "number", value);
          const double x = value.template get<double>();
          if constexpr (std::is_same_v<T, IdentityEncoder>) {
            out[0] = x;
          } else if constexpr (std::is_same_v<T, Log1pEncoder>) {
            out[0] = std::copysign(std::log1p(std::abs(x)), x);
          } else {
            if (!(x > 0.0)) {
              throw SchemaError(path, "log(x)+1 encoding needs a positive value");
            }
            out[0] = std::log(x) + 1.0;
          }
        }
      },
      e);
}

// ---------------------------------------------------------------------------
// build_extractor

namespace {

struct BuildContext {
  const ExtractorPolicy& policy;
  std::set<std::string> excluded;
  std::set<std::string> found;
};

Encoder leaf_encoder(const LeafSchema& leaf, const ExtractorPolicy& policy) {
  switch (leaf.kind) {
    case LeafKind::Boolean:
      return OneHotEncoder{{"true", "false"}, UnknownPolicy::AllZeros};
    case LeafKind::Number:
      if (policy.numeric == NumericEncoding::Log1p) return Log1pEncoder{};
      return IdentityEncoder{};
    case LeafKind::String:
      if (!leaf.overflow && leaf.uniques.size() <= policy.categorical_max &&
          !leaf.uniques.empty()) {
        return OneHotEncoder{{leaf.uniques.begin(), leaf.uniques.end()}, policy.unknown};
      }
      return TrigramEncoder{policy.trigram_dims, policy.trigram_normalize};
  }
  return IdentityEncoder{};
}

std::optional<ExtractorNode> build_node(const SchemaNode& s, const std::string& path,
                                        BuildContext& ctx) {
  if (s.is_empty()) return std::nullopt;
  if (s.is_leaf()) {
    return ExtractorNode{LeafExtractor{s.as_leaf().kind, leaf_encoder(s.as_leaf(), ctx.policy)}};
  }
  if (s.is_bag()) {
    const auto cp = instance_path(path);
    if (ctx.excluded.contains(cp)) {
      ctx.found.insert(cp);
      return std::nullopt;
    }
    auto child = build_node(*s.as_bag().child, cp, ctx);
    if (!child) return std::nullopt;
    return ExtractorNode{BagExtractor{std::move(*child)}};
  }
  ProductExtractor p;
  for (const auto& [key, entry] : s.as_product().entries) {
    const auto cp = child_path(path, key);
    if (ctx.excluded.contains(cp)) {
      ctx.found.insert(cp);
      continue;
    }
    auto child = build_node(*entry.child, cp, ctx);
    if (!child) continue;
    p.keys.push_back(key);
    p.children.push_back(std::move(*child));
  }
  if (p.keys.empty()) return std::nullopt;
  return ExtractorNode{std::move(p)};
}

}  // namespace

ExtractorTree build_extractor(const SchemaNode& schema, const ExtractorPolicy& policy) {
  BuildContext ctx{policy, {policy.exclude_paths.begin(), policy.exclude_paths.end()}, {}};
  if (policy.label_path) ctx.excluded.insert(*policy.label_path);
  auto root = build_node(schema, "", ctx);
  for (const auto& p : ctx.excluded) {
    if (!ctx.found.contains(p)) throw SchemaError(p, "excluded path not found in schema");
  }
  if (!root) throw SchemaError("", "schema has no observed fields to extract");
  return ExtractorTree{std::move(*root), {ctx.excluded.begin(), ctx.excluded.end()}};
}

// ---------------------------------------------------------------------------
// extract

DataNode empty_like(const ExtractorNode& node) {
  if (node.is_leaf()) return DataNode{ArrayData{Matrix(encoder_dim(node.as_leaf().encoder), 0), {}}};
  if (node.is_bag()) return DataNode{BagData{empty_like(*node.as_bag().child), BagIndices{}, std::nullopt}};
  const auto& p = node.as_product();
  ProductData out;
  out.keys = p.keys;
  for (const auto& c : p.children) {
    out.children.push_back(empty_like(c));
    out.missing.emplace_back();
  }
  return DataNode{std::move(out)};
}

DataNode missing_placeholder(const ExtractorNode& node) {
  if (node.is_leaf()) {
    return DataNode{ArrayData{Matrix(encoder_dim(node.as_leaf().encoder), 1), {1}}};
  }
  if (node.is_bag()) {
    const std::size_t zero = 0;
    return DataNode{BagData{empty_like(*node.as_bag().child),
                            BagIndices::from_lengths(std::span(&zero, 1)), std::nullopt}};
  }
  const auto& p = node.as_product();
  ProductData out;
  out.keys = p.keys;
  out.n = 1;
  for (const auto& c : p.children) {
    out.children.push_back(missing_placeholder(c));
    out.missing.push_back({1});
  }
  return DataNode{std::move(out)};
}

namespace {

DataNode extract_node(const ExtractorNode& node, const Json& doc, const std::string& path) {
  if (doc.is_null()) return missing_placeholder(node);
  if (node.is_leaf()) {
    const auto& leaf = node.as_leaf();
    if (doc.is_object() || doc.is_array()) {
      throw SchemaError(path, std::string("kind conflict: expected ") + to_string(leaf.kind) +
                                  ", got " + doc.type_name());
    }
    Matrix x(encoder_dim(leaf.encoder), 1);
    encode_value(leaf.encoder, doc, x.data(), path);
    return DataNode{ArrayData{std::move(x), {}}};
  }
  if (node.is_bag()) {
    if (!doc.is_array()) {
      throw SchemaError(path, std::string("kind conflict: expected array, got ") + doc.type_name());
    }
    const auto& child = *node.as_bag().child;
    const auto cp = instance_path(path);
    const std::size_t k = doc.size();
    DataNode inner = empty_like(child);
    if (k > 0) {
      std::vector<DataNode> parts;
      parts.reserve(k);
      for (const auto& el : doc) parts.push_back(extract_node(child, el, cp));
      inner = merge(parts);
    }
    return DataNode{BagData{std::move(inner), BagIndices::from_lengths(std::span(&k, 1)), std::nullopt}};
  }
  if (!doc.is_object()) {
    throw SchemaError(path, std::string("kind conflict: expected object, got ") + doc.type_name());
  }
  const auto& p = node.as_product();
  ProductData out;
  out.keys = p.keys;
  out.n = 1;
  for (std::size_t i = 0; i < p.keys.size(); ++i) {
    auto it = doc.find(p.keys[i]);
    if (it == doc.end() || it->is_null()) {
      out.children.push_back(missing_placeholder(p.children[i]));
      out.missing.push_back({1});
    } else {
      out.children.push_back(extract_node(p.children[i], *it, child_path(path, p.keys[i])));
      out.missing.emplace_back();
    }
  }
  return DataNode{std::move(out)};
}

}  // namespace

DataNode extract(const ExtractorTree& extractor, const Json& doc) {
  return extract_node(extractor.root, doc, "");
}

DataNode extract_batch(const ExtractorTree& extractor, std::span<const Json> docs) {
  if (docs.empty()) return empty_like(extractor.root);
  std::vector<DataNode> parts;
  parts.reserve(docs.size());
  for (const auto& d : docs) parts.push_back(extract(extractor, d));
  return merge(parts);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json encoder_to_json(const Encoder& e) {
  return std::visit(
      [](const auto& enc) -> Json {
        using T = std::decay_t<decltype(enc)>;
        if constexpr (std::is_same_v<T, OneHotEncoder>) {
          return Json{{"type", "onehot"},
                      {"vocabulary", enc.vocabulary},
                      {"unknown", enc.unknown == UnknownPolicy::ExtraSlot ? "extra-slot" : "all-zeros"}};
        } else if constexpr (std::is_same_v<T, TrigramEncoder>) {
          return Json{{"type", "trigram"}, {"dims", enc.dims}, {"normalize", enc.normalize}};
        } else if constexpr (std::is_same_v<T, IdentityEncoder>) {
          return Json{{"type", "identity"}};
        } else if constexpr (std::is_same_v<T, Log1pEncoder>) {
          return Json{{"type", "log1p"}};
        } else {
          return Json{{"type", "logplus1"}};
        }
      },
      e);
}

Encoder encoder_from_json(const Json& j, const std::string& path) {
  const auto type = j.at("type").get<std::string>();
  if (type == "onehot") {
    OneHotEncoder e;
    e.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    const auto unknown = j.at("unknown").get<std::string>();
    if (unknown == "extra-slot") {
      e.unknown = UnknownPolicy::ExtraSlot;
    } else if (unknown == "all-zeros") {
      e.unknown = UnknownPolicy::AllZeros;
    } else {
      throw FormatError(StructureError::display(path) + ": unknown policy '" + unknown + "'");
    }
    return e;
  }
  if (type == "trigram") {
    TrigramEncoder e{j.at("dims").get<std::size_t>(), j.at("normalize").get<bool>()};
    if (e.dims == 0) throw FormatError(StructureError::display(path) + ": trigram dims must be >= 1");
    return e;
  }
  if (type == "identity") return IdentityEncoder{};
  if (type == "log1p") return Log1pEncoder{};
  if (type == "logplus1") return LogPlus1Encoder{};
  throw FormatError(StructureError::display(path) + ": unknown encoder '" + type + "'");
}

Json node_to_json(const ExtractorNode& n) {
  if (n.is_leaf()) {
    return Json{{"type", "leaf"},
                {"kind", to_string(n.as_leaf().kind)},
                {"encoder", encoder_to_json(n.as_leaf().encoder)}};
  }
  if (n.is_bag()) return Json{{"type", "bag"}, {"child", node_to_json(*n.as_bag().child)}};
  Json children = Json::object();
  const auto& p = n.as_product();
  for (std::size_t i = 0; i < p.keys.size(); ++i) children[p.keys[i]] = node_to_json(p.children[i]);
  return Json{{"type", "product"}, {"children", std::move(children)}};
}

ExtractorNode node_from_json(const Json& j, const std::string& path) {
  const auto type = j.at("type").get<std::string>();
  if (type == "leaf") {
    const auto kind = j.at("kind").get<std::string>();
    LeafKind k = kind == "string"    ? LeafKind::String
                 : kind == "boolean" ? LeafKind::Boolean
                 : kind == "number"  ? LeafKind::Number
                                     : throw FormatError(StructureError::display(path) +
                                                         ": unknown leaf kind '" + kind + "'");
    return ExtractorNode{LeafExtractor{k, encoder_from_json(j.at("encoder"), path)}};
  }
  if (type == "bag") {
    return ExtractorNode{BagExtractor{node_from_json(j.at("child"), instance_path(path))}};
  }
  if (type == "product") {
    ProductExtractor p;
    for (const auto& [key, child] : j.at("children").items()) {
      p.keys.push_back(key);
      p.children.push_back(node_from_json(child, child_path(path, key)));
    }
    return ExtractorNode{std::move(p)};
  }
  throw FormatError(StructureError::display(path) + ": unknown extractor node '" + type + "'");
}

}  // namespace

Json extractor_to_json(const ExtractorTree& tree) {
  return Json{{"root", node_to_json(tree.root)}, {"excluded_paths", tree.excluded_paths}};
}

ExtractorTree extractor_from_json(const Json& j) {
  try {
    return ExtractorTree{node_from_json(j.at("root"), ""),
                         j.at("excluded_paths").get<std::vector<std::string>>()};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed extractor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Labels

std::optional<Json> value_at_path(const Json& doc, const std::string& path) {
  const Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object()) return std::nullopt;
    auto it = cur->find(key);
    if (it == cur->end()) return std::nullopt;
    cur = &*it;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_null()) return std::nullopt;
  return *cur;
}

std::string label_text(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> classes) : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
}

LabelVocabulary LabelVocabulary::build(std::span<const Json> docs, const std::string& path) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto v = value_at_path(docs[i], path);
    if (!v) throw SchemaError(path, "label missing in document " + std::to_string(i));
    seen.insert(label_text(*v));
  }
  return LabelVocabulary({seen.begin(), seen.end()});
}

int LabelVocabulary::index_of(const std::string& label) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label) {
    throw UnknownLabelError("unknown label '" + label + "'");
  }
  return static_cast<int>(it - classes_.begin());
}

std::vector<int> extract_labels(std::span<const Json> docs, const std::string& path,
                                const LabelVocabulary& vocab) {
  std::vector<int> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto v = value_at_path(docs[i], path);
    if (!v) throw SchemaError(path, "label missing in document " + std::to_string(i));
    out.push_back(vocab.index_of(label_text(*v)));
  }
  return out;
}

}  // namespace hmill
