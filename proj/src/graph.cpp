#include "hmill/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hmill/error.hpp"

namespace hmill {

namespace {

std::size_t intern(std::vector<std::string>& ids, std::unordered_map<std::string, std::size_t>& index,
                   std::vector<std::vector<std::size_t>>& adj, const std::string& id) {
  auto [it, inserted] = index.emplace(id, ids.size());
  if (inserted) {
    ids.push_back(id);
    adj.emplace_back();
  }
  return it->second;
}

void insert_sorted(std::vector<std::size_t>& v, std::size_t x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

bool BipartiteRelation::add_edge(const std::string& l, const std::string& r) {
  const auto li = intern(left, left_index, left_adj, l);
  const auto ri = intern(right, right_index, right_adj, r);
  auto& la = left_adj[li];
  if (std::binary_search(la.begin(), la.end(), ri)) return false;
  insert_sorted(la, ri);
  insert_sorted(right_adj[ri], li);
  edges.emplace_back(li, ri);
  return true;
}

std::optional<std::size_t> BipartiteRelation::find_left(const std::string& id) const {
  auto it = left_index.find(id);
  if (it == left_index.end()) return std::nullopt;
  return it->second;
}

BipartiteRelation parse_relation(std::istream& in, const std::string& name, const std::string& source) {
  BipartiteRelation rel;
  rel.name = name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected 'left<TAB>right'");
    }
    rel.add_edge(line.substr(0, tab), line.substr(tab + 1));
  }
  return rel;
}

BipartiteRelation load_relation(const std::string& path, const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return parse_relation(in, name, path);
}

// ---------------------------------------------------------------------------

std::uint64_t TransformedGraph::key(std::size_t u, std::size_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

bool TransformedGraph::has_edge(std::size_t u, std::size_t v) const {
  return u != v && witnesses_.count(key(u, v)) != 0;
}

const WitnessSet* TransformedGraph::witnesses(std::size_t u, std::size_t v) const {
  if (u == v) return nullptr;
  auto it = witnesses_.find(key(u, v));
  return it == witnesses_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::size_t, std::size_t>> TransformedGraph::edge_list() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    for (auto v : adj[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

TransformedGraph transform(const BipartiteRelation& rel, std::size_t witness_cap) {
  if (rel.left.size() > 0xffffffffULL) throw Error("too many vertices for transformation");
  TransformedGraph g;
  g.witness_cap = witness_cap;
  g.adj.resize(rel.left.size());
  for (std::size_t b = 0; b < rel.right_adj.size(); ++b) {
    const auto& nb = rel.right_adj[b];
    for (std::size_t i = 0; i < nb.size(); ++i) {
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        auto& w = g.witnesses_[TransformedGraph::key(nb[i], nb[j])];
        if (w.count == 0) {
          g.adj[nb[i]].push_back(nb[j]);
          g.adj[nb[j]].push_back(nb[i]);
        }
        ++w.count;
        if (w.sample.size() < witness_cap) w.sample.push_back(b);
      }
    }
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
  return g;
}

// ---------------------------------------------------------------------------

void Blacklist::add(const std::string& cluster, const std::string& id) {
  auto it = std::find(cluster_names.begin(), cluster_names.end(), cluster);
  std::size_t ci = static_cast<std::size_t>(it - cluster_names.begin());
  if (it == cluster_names.end()) {
    cluster_names.push_back(cluster);
    clusters.emplace_back();
  }
  if (members.count(id)) {
    const auto& c = clusters[ci];
    if (std::find(c.begin(), c.end(), id) != c.end()) return;
    throw FormatError("blacklist id '" + id + "' appears in more than one cluster");
  }
  members.insert(id);
  clusters[ci].push_back(id);
}

Blacklist parse_blacklist(std::istream& in, const std::string& source) {
  Blacklist bl;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      bl.add("default", line);
      continue;
    }
    if (tab == 0 || tab + 1 == line.size() || line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected 'id' or 'cluster<TAB>id'");
    }
    try {
      bl.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const FormatError& e) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return bl;
}

Blacklist load_blacklist(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return parse_blacklist(in, path);
}

// ---------------------------------------------------------------------------

std::array<double, 7> raw_edge_features(const TransformedGraph& g, const BipartiteRelation& rel,
                                        std::size_t v, std::size_t u) {
  const WitnessSet* w = g.witnesses(u, v);
  if (!w) {
    throw Error("(" + rel.left.at(v) + ", " + rel.left.at(u) + ") is not an edge of the '" +
                rel.name + "' projection");
  }
  const double dv = static_cast<double>(rel.left_adj[v].size());
  const double du = static_cast<double>(rel.left_adj[u].size());
  const double inter = static_cast<double>(w->count);
  const double uni = dv + du - inter;
  return {static_cast<double>(g.degree(v)), dv, du, inter, uni, inter / uni, du * dv};
}

std::array<double, kEdgeFeatureDim> edge_features(const TransformedGraph& g,
                                                  const BipartiteRelation& rel, std::size_t v,
                                                  std::size_t u, bool u_listed) {
  const auto raw = raw_edge_features(g, rel, v, u);
  std::array<double, kEdgeFeatureDim> out{};
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::log(raw[i]) + 1.0;
  out[7] = u_listed ? 0.0 : 1.0;
  out[8] = u_listed ? 1.0 : 0.0;
  return out;
}

std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                    Rng& rng) {
  if (k >= pool.size()) {
    std::sort(pool.begin(), pool.end());
    return pool;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

namespace {

DataNode empty_feature_bag(std::size_t bags) {
  std::vector<std::size_t> lengths(bags, 0);
  return DataNode::bag(DataNode::array(Matrix(kEdgeFeatureDim, 0)), BagIndices::from_lengths(lengths),
                       std::vector<double>{});
}

}  // namespace

DataNode build_vertex_sample(const std::string& v, std::span<const RelationGraph> relations,
                             const ListedFn& listed, std::size_t K, std::uint64_t seed) {
  std::vector<std::pair<std::string, DataNode>> children;
  std::vector<std::vector<std::uint8_t>> missing;
  for (const auto& rg : relations) {
    const auto& rel = rg.relation;
    const auto vi = rel.find_left(v);
    if (!vi) {
      children.emplace_back(rel.name, empty_feature_bag(1));
      missing.push_back({1});
      continue;
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (auto u : rg.graph.adj[*vi]) (listed(rel.left[u]) ? positives : negatives).push_back(u);

    Rng rng(stream_seed(seed, v, rel.name));
    const auto chosen = sample_without_replacement(negatives, K, rng);
    const double neg_weight =
        chosen.empty() ? 1.0 : static_cast<double>(negatives.size()) / static_cast<double>(chosen.size());

    std::vector<std::pair<std::size_t, double>> inst;
    for (auto u : positives) inst.emplace_back(u, 1.0);
    for (auto u : chosen) inst.emplace_back(u, neg_weight);
    std::sort(inst.begin(), inst.end());

    Matrix x(kEdgeFeatureDim, inst.size());
    std::vector<double> weights;
    for (std::size_t c = 0; c < inst.size(); ++c) {
      const auto u = inst[c].first;
      const auto f = edge_features(rg.graph, rel, *vi, u, listed(rel.left[u]));
      x.set_col(c, f);
      weights.push_back(inst[c].second);
    }
    const std::size_t len = inst.size();
    children.emplace_back(rel.name, DataNode::bag(DataNode::array(std::move(x)),
                                                  BagIndices::from_lengths(std::span(&len, 1)),
                                                  std::move(weights)));
    missing.push_back({0});
  }
  return DataNode::product(std::move(children), std::move(missing), 1);
}

// ---------------------------------------------------------------------------

TypedGraph::TypedGraph(std::size_t vertices, std::vector<std::string> edge_types)
    : n(vertices), types(std::move(edge_types)) {
  std::sort(types.begin(), types.end());
  if (std::adjacent_find(types.begin(), types.end()) != types.end()) {
    throw Error("edge type names must be unique");
  }
  if (std::find(types.begin(), types.end(), "payload") != types.end()) {
    throw Error("'payload' is reserved and cannot name an edge type");
  }
  adj.assign(types.size(), std::vector<std::vector<std::size_t>>(n));
}

std::size_t TypedGraph::type_index(const std::string& type) const {
  auto it = std::lower_bound(types.begin(), types.end(), type);
  if (it == types.end() || *it != type) throw Error("unknown edge type '" + type + "'");
  return static_cast<std::size_t>(it - types.begin());
}

void TypedGraph::add_edge(const std::string& type, std::size_t from, std::size_t to, bool directed) {
  if (from >= n || to >= n) throw Error("edge endpoint out of range");
  auto& a = adj[type_index(type)];
  auto add = [](std::vector<std::size_t>& v, std::size_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  add(a[from], to);
  if (!directed) add(a[to], from);
}

TypedGraph TypedGraph::from_transformed(const TransformedGraph& g, const std::string& type) {
  TypedGraph t(g.vertex_count(), {type});
  t.adj[0] = g.adj;
  return t;
}

namespace {

struct KStep {
  const TypedGraph& g;
  std::size_t k;
  bool exclude_feedback;
  const PayloadFn& payload;
  std::size_t cap;
  std::uint64_t seed;
  DataNode payload_template;

  // Zero observations shaped like an instance at `depth`.
  DataNode empty_instance(std::size_t depth) const {
    std::vector<std::pair<std::string, DataNode>> children;
    children.emplace_back("payload", payload_template);
    if (depth < k) {
      for (const auto& t : g.types) {
        children.emplace_back(t, DataNode::bag(empty_instance(depth + 1), BagIndices(), std::vector<double>{}));
      }
    }
    return DataNode::product(std::move(children), {}, 0);
  }

  DataNode sample(std::size_t v, std::size_t depth, std::size_t parent) const {
    std::vector<std::pair<std::string, DataNode>> children;
    children.emplace_back("payload", payload(v));
    if (nobs(children.back().second) != 1) throw Error("vertex payload must hold one observation");
    if (depth < k) {
      for (std::size_t t = 0; t < g.types.size(); ++t) {
        std::vector<std::size_t> nbrs;
        for (auto u : g.adj[t][v]) {
          if (!(exclude_feedback && u == parent)) nbrs.push_back(u);
        }
        Rng rng(mix64(stream_seed(seed, std::to_string(v), g.types[t]) + depth));
        const auto chosen = sample_without_replacement(nbrs, cap, rng);
        const double w = chosen.empty() ? 1.0
                                        : static_cast<double>(nbrs.size()) / static_cast<double>(chosen.size());
        DataNode inst;
        if (chosen.empty()) {
          inst = empty_instance(depth + 1);
        } else {
          std::vector<DataNode> parts;
          parts.reserve(chosen.size());
          for (auto u : chosen) parts.push_back(sample(u, depth + 1, v));
          inst = merge(parts);
        }
        const std::size_t len = chosen.size();
        children.emplace_back(g.types[t], DataNode::bag(std::move(inst), BagIndices::from_lengths(std::span(&len, 1)),
                                                        std::vector<double>(len, w)));
      }
    }
    return DataNode::product(std::move(children), {}, 1);
  }
};

}  // namespace

DataNode k_step_sample(const TypedGraph& g, std::size_t v, std::size_t k, bool exclude_feedback,
                       const PayloadFn& payload, std::size_t K, std::uint64_t seed) {
  if (k < 1) throw Error("k-step sampling needs k >= 1");
  if (v >= g.n) throw Error("vertex out of range");
  const std::vector<std::size_t> none;
  KStep ks{g, k, exclude_feedback, payload, K, seed, slice(payload(v), none)};
  return ks.sample(v, 0, kUnlimited);
}

}  // namespace hmill
