#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmill/graph.hpp"

namespace hmill {

/// Undirected graph in adjacency form for threat propagation. Row j lists
/// neighbors i with the weight w_ji that j applies to what it receives from i.
struct PtpGraph {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbor;
  std::vector<double> weight;
  std::vector<std::size_t> reverse;  // slot of the opposite direction

  std::size_t vertex_count() const noexcept { return offsets.size() - 1; }

  /// Undirected edges; loops and repeated edges are dropped. Weights are
  /// 1 / deg(j) so every vertex's incoming weights sum to one.
  static PtpGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);
};

/// Bipartite union of relations: left ids are shared, right ids are kept
/// apart per relation. `ids` receives the vertex names (left ones first, in
/// the order given by `left_ids`); unknown left ids stay isolated.
PtpGraph ptp_graph_from_relations(std::span<const BipartiteRelation> relations,
                                  const std::vector<std::string>& left_ids,
                                  std::vector<std::string>* ids = nullptr);

/// Probabilistic threat propagation. Each iteration computes, for every
/// directed edge i -> j, msg(i->j) = w_ji (P(i) - msg_prev(j->i)) and sets
/// P(j) to the sum of its incoming messages; afterwards seeds are reset to 1.
/// Messages are those computed before the reset. No seeds: all zeros.
std::vector<double> ptp(const PtpGraph& g, std::span<const std::size_t> seeds, std::size_t iters = 20);

}  // namespace hmill
