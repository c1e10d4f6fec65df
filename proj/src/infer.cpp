#include "hmill/infer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hmill/error.hpp"
#include "hmill/io.hpp"
#include "hmill/metrics.hpp"
#include "hmill/ptp.hpp"

namespace hmill {

std::vector<std::string> vertex_universe(std::span<const RelationGraph> relations,
                                         const std::vector<std::string>& extra) {
  std::vector<std::string> ids = extra;
  for (const auto& rg : relations) ids.insert(ids.end(), rg.relation.left.begin(), rg.relation.left.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

namespace {

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < ids.size(); ++i) idx.emplace(ids[i], i);
  return idx;
}

struct Setup {
  std::vector<std::string> vertices;
  std::vector<int> labels;
  std::vector<std::vector<std::size_t>> clusters;
};

Setup make_setup(std::span<const RelationGraph> relations, const Blacklist& bl) {
  Setup s;
  std::vector<std::string> listed(bl.members.begin(), bl.members.end());
  s.vertices = vertex_universe(relations, listed);
  const auto idx = index_of(s.vertices);
  s.labels.assign(s.vertices.size(), 0);
  for (const auto& c : bl.clusters) {
    std::vector<std::size_t> members;
    for (const auto& id : c) {
      const auto v = idx.at(id);
      members.push_back(v);
      s.labels[v] = 1;
    }
    s.clusters.push_back(std::move(members));
  }
  return s;
}

}  // namespace

std::vector<DataNode> graph_samples(std::span<const RelationGraph> relations,
                                    const std::vector<std::string>& vertices,
                                    const std::vector<std::uint8_t>& listed,
                                    const GraphInferConfig& cfg, std::uint64_t seed) {
  const auto idx = index_of(vertices);
  std::vector<DataNode> out(vertices.size());

  if (cfg.k_steps <= 1) {
    parallel_for(vertices.size(), [&](std::size_t v) {
      const ListedFn fn = [&](const std::string& id) {
        auto it = idx.find(id);
        return it != idx.end() && it->second != v && listed[it->second] != 0;
      };
      out[v] = build_vertex_sample(vertices[v], relations, fn, cfg.K, seed);
    });
    return out;
  }

  std::vector<std::string> names;
  for (const auto& rg : relations) names.push_back(rg.relation.name);
  TypedGraph g(vertices.size(), names);
  std::vector<std::vector<double>> degree(vertices.size(), std::vector<double>(relations.size(), 0.0));
  for (std::size_t r = 0; r < relations.size(); ++r) {
    const auto& rel = relations[r].relation;
    const auto& tg = relations[r].graph;
    const auto t = g.type_index(rel.name);
    for (std::size_t a = 0; a < tg.adj.size(); ++a) {
      const auto va = idx.at(rel.left[a]);
      degree[va][r] = static_cast<double>(tg.adj[a].size());
      for (auto b : tg.adj[a]) g.adj[t][va].push_back(idx.at(rel.left[b]));
      std::sort(g.adj[t][va].begin(), g.adj[t][va].end());
    }
  }
  parallel_for(vertices.size(), [&](std::size_t root) {
    const PayloadFn payload = [&](std::size_t u) {
      Matrix x(relations.size() + 2, 1);
      for (std::size_t r = 0; r < relations.size(); ++r) x(r, 0) = std::log1p(degree[u][r]);
      const bool on = u != root && listed[u] != 0;
      x(relations.size(), 0) = on ? 0.0 : 1.0;
      x(relations.size() + 1, 0) = on ? 1.0 : 0.0;
      return DataNode::array(std::move(x));
    };
    out[root] = k_step_sample(g, root, cfg.k_steps, true, payload, cfg.K, mix64(seed + root));
  });
  return out;
}

GraphInferResult kfold_graph_inference(std::span<const RelationGraph> relations,
                                       const Blacklist& blacklist, const GraphInferConfig& cfg) {
  Setup s = make_setup(relations, blacklist);
  if (s.vertices.empty()) throw Error("no vertices to score");
  Rng rng = make_rng(cfg.seed, "folds");
  GraphInferResult res;
  res.models.resize(cfg.folds);
  const std::size_t n = s.vertices.size();
  auto score_fn = [&](const std::vector<std::size_t>& seeds, std::size_t fold) {
    std::vector<std::uint8_t> listed(n, 0);
    for (auto v : seeds) listed[v] = 1;
    const auto fold_seed = stream_seed(cfg.seed, "fold", std::to_string(fold));
    const auto samples = graph_samples(relations, s.vertices, listed, cfg, fold_seed);
    const DataNode data = merge(samples);
    std::vector<int> y(listed.begin(), listed.end());

    Prescription p = cfg.model;
    p.output_dim = 2;
    p.seed = fold_seed;
    ModelNode model = reflect_model(samples.front(), p);
    TrainConfig tc = cfg.train;
    tc.seed = fold_seed;
    train(model, data, y, tc);
    const Matrix probs = predict_proba(model, data);
    const auto row = probs.row(1);
    res.models[fold] = std::move(model);
    return std::vector<double>(row.begin(), row.end());
  };
  res.scores = kfold_blacklist_eval(n, s.clusters, cfg.folds, rng, score_fn, &res.folds);
  res.vertices = std::move(s.vertices);
  res.labels = std::move(s.labels);
  return res;
}

GraphInferResult kfold_ptp(std::span<const RelationGraph> relations, const Blacklist& blacklist,
                           std::size_t folds, std::size_t iters, std::uint64_t seed) {
  Setup s = make_setup(relations, blacklist);
  std::vector<BipartiteRelation> rels;
  for (const auto& rg : relations) rels.push_back(rg.relation);
  const PtpGraph g = ptp_graph_from_relations(rels, s.vertices);
  const std::size_t n = s.vertices.size();
  Rng rng = make_rng(seed, "folds");
  GraphInferResult res;
  res.scores = kfold_blacklist_eval(
      n, s.clusters, folds, rng,
      [&](const std::vector<std::size_t>& seeds, std::size_t) {
        auto p = ptp(g, seeds, iters);
        p.resize(n);
        return p;
      },
      &res.folds);
  res.vertices = std::move(s.vertices);
  res.labels = std::move(s.labels);
  return res;
}

}  // namespace hmill
