#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hmill/box.hpp"
#include "hmill/datanode.hpp"
#include "hmill/error.hpp"
#include "hmill/schema.hpp"

namespace hmill {

enum class UnknownPolicy { ExtraSlot, AllZeros };

/// One-hot over a frozen vocabulary of canonical values (see canonical_value).
struct OneHotEncoder {
  std::vector<std::string> vocabulary;
  UnknownPolicy unknown = UnknownPolicy::ExtraSlot;

  std::size_t dim() const {
    return vocabulary.size() + (unknown == UnknownPolicy::ExtraSlot ? 1 : 0);
  }
  friend bool operator==(const OneHotEncoder&, const OneHotEncoder&) = default;
};

/// Hashed byte-trigram histogram, see trigram_histogram.
struct TrigramEncoder {
  std::size_t dims = 2053;
  bool normalize = true;
  friend bool operator==(const TrigramEncoder&, const TrigramEncoder&) = default;
};

struct IdentityEncoder {
  friend bool operator==(const IdentityEncoder&, const IdentityEncoder&) = default;
};
/// sign(x) * log(1 + |x|)
struct Log1pEncoder {
  friend bool operator==(const Log1pEncoder&, const Log1pEncoder&) = default;
};
/// log(x) + 1, for counts and ratios that are >= 1 (or at least positive).
struct LogPlus1Encoder {
  friend bool operator==(const LogPlus1Encoder&, const LogPlus1Encoder&) = default;
};

using Encoder =
    std::variant<OneHotEncoder, TrigramEncoder, IdentityEncoder, Log1pEncoder, LogPlus1Encoder>;

std::size_t encoder_dim(const Encoder& e);

/// Writes the encoding of a non-null scalar into `out` (length encoder_dim).
/// Throws SchemaError at `path` when the value kind does not fit the encoder.
void encode_value(const Encoder& e, const Json& value, std::span<double> out,
                  const std::string& path = "");

/// Fixed 64-bit hash of one byte trigram (FNV-1a followed by splitmix64).
std::uint64_t trigram_hash(unsigned char a, unsigned char b, unsigned char c);

/// Begin/end padding bytes for trigram windows.
inline constexpr unsigned char kTrigramBegin = 0x02;
inline constexpr unsigned char kTrigramEnd = 0x03;

/// Histogram of the byte trigrams of kTrigramBegin + s + kTrigramEnd, each
/// counted in bucket trigram_hash % d; L1-normalized when `normalize`.
/// The empty string maps to the zero vector.
std::vector<double> trigram_histogram(std::string_view s, std::size_t d, bool normalize = true);

struct ExtractorNode;

struct LeafExtractor {
  LeafKind kind = LeafKind::Number;
  Encoder encoder;
  friend bool operator==(const LeafExtractor&, const LeafExtractor&) = default;
};

struct BagExtractor {
  Box<ExtractorNode> child;
  friend bool operator==(const BagExtractor&, const BagExtractor&) = default;
};

struct ProductExtractor {
  std::vector<std::string> keys;  // sorted
  std::vector<ExtractorNode> children;
  friend bool operator==(const ProductExtractor&, const ProductExtractor&) = default;
};

struct ExtractorNode {
  std::variant<LeafExtractor, BagExtractor, ProductExtractor> node;

  bool is_leaf() const { return std::holds_alternative<LeafExtractor>(node); }
  bool is_bag() const { return std::holds_alternative<BagExtractor>(node); }
  bool is_product() const { return std::holds_alternative<ProductExtractor>(node); }
  const LeafExtractor& as_leaf() const { return std::get<LeafExtractor>(node); }
  const BagExtractor& as_bag() const { return std::get<BagExtractor>(node); }
  const ProductExtractor& as_product() const { return std::get<ProductExtractor>(node); }

  friend bool operator==(const ExtractorNode&, const ExtractorNode&) = default;
};

/// Maps JSON documents to HMill sample trees.
struct ExtractorTree {
  ExtractorNode root;
  std::vector<std::string> excluded_paths;

  friend bool operator==(const ExtractorTree&, const ExtractorTree&) = default;
};

enum class NumericEncoding { Identity, Log1p };

struct ExtractorPolicy {
  std::size_t categorical_max = 100;
  std::size_t trigram_dims = 2053;
  bool trigram_normalize = true;
  NumericEncoding numeric = NumericEncoding::Identity;
  UnknownPolicy unknown = UnknownPolicy::ExtraSlot;
  std::vector<std::string> exclude_paths;
  /// Always excluded from features; must exist in the schema.
  std::optional<std::string> label_path;
};

/// Derives encoders from a schema. Positions where nothing was observed are
/// dropped (they carry no information). Throws SchemaError if an excluded or
/// label path is not in the schema or nothing is left to extract.
ExtractorTree build_extractor(const SchemaNode& schema, const ExtractorPolicy& policy = {});

/// One-observation sample tree for `doc`. Missing keys and nulls become
/// missing flags; keys not known to the extractor are ignored.
DataNode extract(const ExtractorTree& extractor, const Json& doc);
/// merge(extract(d1), ..., extract(dn)).
DataNode extract_batch(const ExtractorTree& extractor, std::span<const Json> docs);

/// A single fully missing observation shaped like `node`.
DataNode missing_placeholder(const ExtractorNode& node);
/// Zero observations shaped like `node`.
DataNode empty_like(const ExtractorNode& node);

Json extractor_to_json(const ExtractorTree& tree);
ExtractorTree extractor_from_json(const Json& j);

/// Value at a dotted path (objects only); nullopt when absent or null.
std::optional<Json> value_at_path(const Json& doc, const std::string& path);

/// Text form of a label value: strings verbatim, anything else as JSON.
std::string label_text(const Json& value);

class UnknownLabelError : public Error {
 public:
  using Error::Error;
};

/// Frozen, sorted class vocabulary.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> classes);

  /// Reads `path` from every document; throws SchemaError if any lacks it.
  static LabelVocabulary build(std::span<const Json> docs, const std::string& path);

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  /// Throws UnknownLabelError for values outside the vocabulary.
  int index_of(const std::string& label) const;

  friend bool operator==(const LabelVocabulary&, const LabelVocabulary&) = default;

 private:
  std::vector<std::string> classes_;
};

/// Class indices for every document (throws on missing or unknown labels).
std::vector<int> extract_labels(std::span<const Json> docs, const std::string& path,
                                const LabelVocabulary& vocab);

}  // namespace hmill
