#include "hmill/ptp.hpp"

#include <algorithm>
#include <unordered_map>

#include "hmill/error.hpp"

namespace hmill {

PtpGraph PtpGraph::from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw Error("edge endpoint out of range");
    if (a == b) continue;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  PtpGraph g;
  g.offsets.assign(1, 0);
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    g.neighbor.insert(g.neighbor.end(), a.begin(), a.end());
    const double w = a.empty() ? 0.0 : 1.0 / static_cast<double>(a.size());
    g.weight.insert(g.weight.end(), a.size(), w);
    g.offsets.push_back(g.neighbor.size());
  }
  g.reverse.resize(g.neighbor.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t s = g.offsets[j]; s < g.offsets[j + 1]; ++s) {
      const std::size_t i = g.neighbor[s];
      const auto first = g.neighbor.begin() + static_cast<std::ptrdiff_t>(g.offsets[i]);
      const auto last = g.neighbor.begin() + static_cast<std::ptrdiff_t>(g.offsets[i + 1]);
      g.reverse[s] = static_cast<std::size_t>(std::lower_bound(first, last, j) - g.neighbor.begin());
    }
  }
  return g;
}

PtpGraph ptp_graph_from_relations(std::span<const BipartiteRelation> relations,
                                  const std::vector<std::string>& left_ids, std::vector<std::string>* ids) {
  std::unordered_map<std::string, std::size_t> left;
  for (std::size_t i = 0; i < left_ids.size(); ++i) left.emplace(left_ids[i], i);
  std::vector<std::string> names = left_ids;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& rel : relations) {
    const std::size_t base = names.size();
    for (const auto& r : rel.right) names.push_back(rel.name + ":" + r);
    for (const auto& [li, ri] : rel.edges) {
      auto it = left.find(rel.left[li]);
      if (it == left.end()) continue;
      edges.emplace_back(it->second, base + ri);
    }
  }
  auto g = PtpGraph::from_edges(names.size(), edges);
  if (ids) *ids = std::move(names);
  return g;
}

std::vector<double> ptp(const PtpGraph& g, std::span<const std::size_t> seeds, std::size_t iters) {
  const std::size_t n = g.vertex_count();
  std::vector<double> p(n, 0.0);
  if (seeds.empty()) return p;
  for (auto s : seeds) {
    if (s >= n) throw Error("seed vertex out of range");
    p[s] = 1.0;
  }
  std::vector<double> msg(g.neighbor.size(), 0.0);  // slot (j, i): message i -> j
  std::vector<double> next_msg(msg.size());
  std::vector<double> next(n);
  for (std::size_t t = 0; t < iters; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t s = g.offsets[j]; s < g.offsets[j + 1]; ++s) {
        const std::size_t i = g.neighbor[s];
        const double m = g.weight[s] * (p[i] - msg[g.reverse[s]]);
        next_msg[s] = m;
        sum += m;
      }
      next[j] = sum;
    }
    msg.swap(next_msg);
    p.swap(next);
    for (auto s : seeds) p[s] = 1.0;
  }
  return p;
}

}  // namespace hmill
