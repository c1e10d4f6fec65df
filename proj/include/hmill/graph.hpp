#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hmill/datanode.hpp"
#include "hmill/rng.hpp"

namespace hmill {

/// Edges between a shared left vertex type (e.g. domains) and a right type
/// (e.g. clients). Ids are interned in first-seen order.
struct BipartiteRelation {
  std::string name;
  std::vector<std::string> left;
  std::vector<std::string> right;
  std::unordered_map<std::string, std::size_t> left_index;
  std::unordered_map<std::string, std::size_t> right_index;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (left, right), no duplicates
  std::vector<std::vector<std::size_t>> left_adj;          // sorted right indices
  std::vector<std::vector<std::size_t>> right_adj;         // sorted left indices

  /// False if the edge was already present.
  bool add_edge(const std::string& l, const std::string& r);
  std::optional<std::size_t> find_left(const std::string& id) const;
};

/// Reads `left<TAB>right` lines; blank lines and `#` comments are skipped.
/// Throws FormatError naming `source` and the line number on malformed lines.
BipartiteRelation parse_relation(std::istream& in, const std::string& name,
                                 const std::string& source = "<input>");
BipartiteRelation load_relation(const std::string& path, const std::string& name);

/// Right vertices inducing an edge: exact count plus the smallest `cap` ids.
struct WitnessSet {
  std::size_t count = 0;
  std::vector<std::size_t> sample;
};

/// One-mode projection onto the left vertices: u ~ v iff some right vertex
/// is adjacent to both.
struct TransformedGraph {
  std::size_t witness_cap = 64;
  std::vector<std::vector<std::size_t>> adj;  // sorted

  std::size_t vertex_count() const noexcept { return adj.size(); }
  std::size_t edge_count() const noexcept { return witnesses_.size(); }
  std::size_t degree(std::size_t v) const { return adj[v].size(); }
  bool has_edge(std::size_t u, std::size_t v) const;
  /// nullptr for non-edges.
  const WitnessSet* witnesses(std::size_t u, std::size_t v) const;
  /// (u, v) with u < v, ascending.
  std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;

  static std::uint64_t key(std::size_t u, std::size_t v);
  std::unordered_map<std::uint64_t, WitnessSet> witnesses_;
};

TransformedGraph transform(const BipartiteRelation& rel, std::size_t witness_cap = 64);

/// Known-malicious left vertices, optionally grouped into disjoint clusters.
struct Blacklist {
  std::vector<std::string> cluster_names;
  std::vector<std::vector<std::string>> clusters;
  std::unordered_set<std::string> members;

  bool contains(const std::string& id) const { return members.count(id) != 0; }
  std::size_t size() const noexcept { return members.size(); }
  /// Adds `id` to `cluster`; throws FormatError if it already sits elsewhere.
  void add(const std::string& cluster, const std::string& id);
};

/// One id per line (cluster "default"), or `cluster<TAB>id`.
Blacklist parse_blacklist(std::istream& in, const std::string& source = "<input>");
Blacklist load_blacklist(const std::string& path);

inline constexpr std::size_t kEdgeFeatureDim = 9;
inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

/// Untransformed numeric features of edge {v, u} (v is the vertex being
/// described): transformed degree of v, bipartite degrees of v and u, size of
/// the intersection and union of their bipartite neighborhoods, Jaccard
/// index, product of bipartite degrees. Throws Error for non-edges.
std::array<double, 7> raw_edge_features(const TransformedGraph& g, const BipartiteRelation& rel,
                                        std::size_t v, std::size_t u);

/// raw features mapped by x -> log(x) + 1, then one-hot [u not listed, u listed].
std::array<double, kEdgeFeatureDim> edge_features(const TransformedGraph& g,
                                                  const BipartiteRelation& rel, std::size_t v,
                                                  std::size_t u, bool u_listed);

/// A relation together with its projection.
struct RelationGraph {
  BipartiteRelation relation;
  TransformedGraph graph;
};

using ListedFn = std::function<bool(const std::string&)>;

/// Uniform sample of min(k, pool.size()) elements without replacement,
/// returned in ascending order.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                    Rng& rng);

/// One observation: a product with one weighted bag of edge features per
/// relation (keyed by relation name). Neighbors listed by `listed` are all
/// kept with weight 1; of the rest, min(K, count) are sampled uniformly with
/// weight count / min(K, count). A relation that does not know `v` yields a
/// missing child.
DataNode build_vertex_sample(const std::string& v, std::span<const RelationGraph> relations,
                             const ListedFn& listed, std::size_t K, std::uint64_t seed);

/// Neighborhoods split by edge type. Undirected graphs store both directions.
struct TypedGraph {
  std::size_t n = 0;
  std::vector<std::string> types;                             // sorted
  std::vector<std::vector<std::vector<std::size_t>>> adj;     // [type][vertex] -> sorted neighbors

  TypedGraph(std::size_t vertices, std::vector<std::string> edge_types);
  void add_edge(const std::string& type, std::size_t from, std::size_t to, bool directed = false);
  std::size_t type_index(const std::string& type) const;
  static TypedGraph from_transformed(const TransformedGraph& g, const std::string& type = "neighbors");
};

/// Returns a one-observation data node describing vertex v.
using PayloadFn = std::function<DataNode(std::size_t)>;

/// Depth-(k+1) sample: a product of payload(v) (key "payload") and one
/// weighted bag per edge type whose instances are the neighbors' samples one
/// level down; the deepest level holds payloads only. With exclude_feedback
/// the vertex a neighborhood was entered from is left out of it. Bags are
/// capped at K instances by uniform sampling with importance weights.
DataNode k_step_sample(const TypedGraph& g, std::size_t v, std::size_t k, bool exclude_feedback,
                       const PayloadFn& payload, std::size_t K, std::uint64_t seed);

}  // namespace hmill
