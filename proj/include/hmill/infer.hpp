#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmill/graph.hpp"
#include "hmill/model.hpp"
#include "hmill/train.hpp"

namespace hmill {

struct GraphInferConfig {
  std::size_t K = 100;        // per-bag instance cap
  std::size_t k_steps = 1;    // 1: edge-feature bags; >1: unrolled neighborhoods
  std::size_t folds = 10;
  Prescription model;         // output_dim is forced to 2
  TrainConfig train;
  std::uint64_t seed = 0;
};

struct GraphInferResult {
  std::vector<std::string> vertices;  // sorted ids
  std::vector<double> scores;
  std::vector<int> labels;            // 1 for blacklisted vertices
  std::vector<std::vector<std::size_t>> folds;
  std::vector<ModelNode> models;      // one per fold; empty for PTP
};

/// Sorted union of the relations' left ids and `extra`.
std::vector<std::string> vertex_universe(std::span<const RelationGraph> relations,
                                         const std::vector<std::string>& extra = {});

/// One sample per vertex of `vertices`, listed-ness given by `listed`
/// (indices into `vertices`). A vertex never sees its own label.
std::vector<DataNode> graph_samples(std::span<const RelationGraph> relations,
                                    const std::vector<std::string>& vertices,
                                    const std::vector<std::uint8_t>& listed,
                                    const GraphInferConfig& cfg, std::uint64_t seed);

/// Learned inference under the k-fold blacklist protocol: per fold, a model
/// is trained to recognise the seed vertices and then scores every vertex.
GraphInferResult kfold_graph_inference(std::span<const RelationGraph> relations,
                                       const Blacklist& blacklist, const GraphInferConfig& cfg);

/// The same protocol with threat propagation on the bipartite union.
GraphInferResult kfold_ptp(std::span<const RelationGraph> relations, const Blacklist& blacklist,
                           std::size_t folds, std::size_t iters, std::uint64_t seed);

}  // namespace hmill
